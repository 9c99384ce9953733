#include <algorithm>
#include <chrono>
#include <functional>
#include <limits>
#include <set>

#include "sct/error.hpp"
#include "sct/synthesis.hpp"

namespace sct {

std::string to_string(Strategy s) { return s == Strategy::network_first ? "network_first" : "ecu_first"; }

Strategy strategy_from_string(const std::string& s) {
  if (s == "network_first") return Strategy::network_first;
  if (s == "ecu_first") return Strategy::ecu_first;
  fail(ErrorCode::invalid_argument, "unknown strategy '" + s + "'");
}

namespace {

using Clock = std::chrono::steady_clock;

struct TxParams {
  Tick phi_s = 0, d_s = 0, phi_n = 0, d_n = 0, phi_c = 0, d_c = 0;
  std::optional<int> s_s, s_n, s_c;
};

class Decomposer {
 public:
  Decomposer(const SystemModel& sys, const DecomposeOptions& opt) : sys_(sys), opt_(opt), p_(sys.transactions.size()) {
    if (opt.limits.max_seconds < 0) fail(ErrorCode::invalid_argument, "negative time limit");
    for (const auto& tx : sys.transactions) {
      if (tx.bound() < 3) fail(ErrorCode::invalid_argument, "transaction " + tx.id + ": bound below 3 ticks");
      const bool sens_on_ecu = std::any_of(sys.ecus.begin(), sys.ecus.end(), [&](const Ecu& e) {
        return std::find(e.tasks.begin(), e.tasks.end(), tx.sens.id) != e.tasks.end();
      });
      if (!sens_on_ecu) fail(ErrorCode::schema, "sensing task " + tx.sens.id + " not mapped to an ECU");
    }
    for (const auto& tx : sys.transactions) {
      sens_ids_.insert(tx.sens.id);
      ctrl_ids_.insert(tx.ctrl.id);
    }
  }

  SynthesisResult run() {
    SynthesisResult res;
    {
      SystemModel open = sys_;
      for (auto& tx : open.transactions)
        for (SecureTask* t : {&tx.sens, &tx.net, &tx.ctrl}) {
          t->phi.reset();
          t->d.reset();
          if (!tx.policy.s) t->s.reset();
        }
      const auto pb = problem_from_system(open);
      res.stats.variables = free_slots(pb).size();
      res.stats.constraints = pb.couplings.size() + pb.resources.size();
    }
    const bool ok = opt_.strategy == Strategy::network_first ? network_first(res) : ecu_first(res);
    res.stats.nodes = nodes_;
    if (ok) {
      SynthesisResult tmp;
      tmp.status = SynthesisStatus::feasible;
      fill(tmp);
      const auto v = analyze_system(apply_solution(sys_, tmp));
      if (v.ok()) {
        res.status = SynthesisStatus::feasible;
        res.assignment = tmp.assignment;
        log(res, "verify", SynthesisStatus::feasible, "all resources pass");
      } else {
        res.status = SynthesisStatus::infeasible;
        res.failed_stage = "verify";
        log(res, "verify", SynthesisStatus::infeasible, "final demand re-check failed");
      }
    }
    res.stats.wall_seconds = elapsed();
    return res;
  }

 private:
  double elapsed() const { return std::chrono::duration<double>(Clock::now() - start_).count(); }
  bool expired() const { return opt_.limits.max_seconds > 0 && elapsed() > opt_.limits.max_seconds; }

  SearchLimits remaining() const {
    SearchLimits l = opt_.limits;
    if (l.max_seconds > 0) l.max_seconds = std::max(1e-3, l.max_seconds - elapsed());
    return l;
  }

  void log(SynthesisResult& res, const std::string& stage, SynthesisStatus st, const std::string& detail) {
    res.stages.push_back({stage, st, detail, elapsed() - stage_start_});
    stage_start_ = elapsed();
  }

  bool stop(SynthesisResult& res, const std::string& stage, SynthesisStatus st, const std::string& detail) {
    res.status = st;
    res.failed_stage = stage;
    log(res, stage, st, detail);
    return false;
  }

  void fill(SynthesisResult& res) const {
    for (std::size_t i = 0; i < p_.size(); ++i) {
      const auto& tx = sys_.transactions[i];
      const auto& q = p_[i];
      res.assignment[tx.sens.id] = {q.phi_s, q.d_s, q.s_s};
      res.assignment[tx.net.id] = {q.phi_n, q.d_n, q.s_n};
      res.assignment[tx.ctrl.id] = {q.phi_c, q.d_c, q.s_c};
    }
  }

  SystemModel current() const {
    SynthesisResult tmp;
    tmp.status = SynthesisStatus::feasible;
    fill(tmp);
    return apply_solution(sys_, tmp);
  }

  bool bus_ok(const SystemModel& m) const {
    return edf_nonpreemptive_schedulable(m.bus_messages(), m.c_max_nrt).ok();
  }

  // ECUs selected by pred, preemptive check each.
  bool ecus_ok(const SystemModel& m, const std::function<bool(const Ecu&)>& pred) const {
    for (const auto& e : m.ecus)
      if (pred(e) && !edf_preemptive_schedulable(m.ecu_tasks(e)).ok()) return false;
    return true;
  }

  bool has_any(const Ecu& e, const std::set<std::string>& ids) const {
    return std::any_of(e.tasks.begin(), e.tasks.end(), [&](const std::string& id) { return ids.count(id) > 0; });
  }

  // Smallest v in [lo, hi] with ok(v), assuming ok is monotone and ok(hi).
  static Tick lowest(Tick lo, Tick hi, const std::function<bool(Tick)>& ok) {
    while (lo < hi) {
      const Tick mid = lo + (hi - lo) / 2;
      if (ok(mid)) hi = mid;
      else lo = mid + 1;
    }
    return hi;
  }

  // Largest v in [lo, hi] with ok(v), assuming ok is monotone and ok(lo).
  static Tick highest(Tick lo, Tick hi, const std::function<bool(Tick)>& ok) {
    while (lo < hi) {
      const Tick mid = lo + (hi - lo + 1) / 2;
      if (ok(mid)) lo = mid;
      else hi = mid - 1;
    }
    return lo;
  }

  // Search over the free authentication offsets of one task per transaction
  // (member picks it) on the given resources of m; writes results to p_.
  bool choose_offsets(const SystemModel& m, bool on_bus, SynthesisResult& res, const std::string& stage) {
    SynthesisProblem pb;
    std::map<std::string, std::size_t> index;
    auto add = [&](const SecureTask& t) {
      if (index.count(t.id)) return index[t.id];
      index[t.id] = pb.tasks.size();
      pb.tasks.push_back(t);
      return pb.tasks.size() - 1;
    };
    if (on_bus) {
      SearchResource r{m.bus.id, {}, true, m.c_max_nrt};
      for (const auto& t : m.bus_messages()) r.tasks.push_back(add(t));
      pb.resources.push_back(r);
    } else {
      for (const auto& e : m.ecus) {
        SearchResource r{e.id, {}, false, 0};
        for (const auto& t : m.ecu_tasks(e)) r.tasks.push_back(add(t));
        pb.resources.push_back(r);
      }
    }
    std::vector<std::pair<std::size_t, std::size_t>> picked;  // (transaction, problem task)
    for (std::size_t i = 0; i < m.transactions.size(); ++i) {
      const auto& tx = m.transactions[i];
      if (tx.policy.s) continue;
      if (on_bus) {
        const std::size_t k = index.at(tx.net.id);
        pb.tasks[k].s.reset();
        pb.domains[tx.net.id].s = Bounds{tx.policy.f - 1, tx.policy.l - 1};
        picked.push_back({i, k});
      } else {
        const std::size_t ks = index.at(tx.sens.id);
        pb.tasks[ks].s.reset();
        picked.push_back({i, ks});
        if (index.count(tx.ctrl.id)) {
          const std::size_t kc = index.at(tx.ctrl.id);
          pb.tasks[kc].s.reset();
          pb.couplings.push_back({"s_" + tx.id, {{{kc, Field::s}, 1}, {{ks, Field::s}, -1}}, Sense::eq, tx.policy.f - 1});
        }
      }
    }
    const auto r = solve_feasibility(pb, remaining());
    nodes_ += r.stats.nodes;
    if (r.status != SynthesisStatus::feasible) {
      stop(res, stage, r.status, r.status == SynthesisStatus::timeout ? "offset search timed out"
                                                                      : "no authentication offsets satisfy the initial parameters");
      return false;
    }
    for (auto [i, k] : picked) {
      const int s = *r.assignment.at(pb.tasks[k].id).s;
      const int f = sys_.transactions[i].policy.f;
      set_offsets(i, on_bus ? s - f + 1 : s);
    }
    return true;
  }

  void set_offsets(std::size_t i, int s_sens) {
    const int f = sys_.transactions[i].policy.f;
    p_[i].s_s = s_sens;
    p_[i].s_n = s_sens + f - 1;
    p_[i].s_c = s_sens + f - 1;
  }

  void init_given_offsets() {
    for (std::size_t i = 0; i < p_.size(); ++i) {
      const auto& tx = sys_.transactions[i];
      if (tx.policy.s) set_offsets(i, *tx.policy.s);
      else set_offsets(i, 0);
    }
  }

  bool network_first(SynthesisResult& res) {
    init_given_offsets();
    for (std::size_t i = 0; i < p_.size(); ++i) {
      const auto& tx = sys_.transactions[i];
      p_[i].phi_n = 0;
      p_[i].d_n = std::min(tx.p, tx.bound() - 2);
      // placeholders so the ECU tasks are well formed
      p_[i].phi_s = 0;
      p_[i].d_s = 1;
      p_[i].phi_c = p_[i].d_n;
      p_[i].d_c = 1;
    }
    if (!bus_ok_with_free_offsets(res)) return false;
    for (std::size_t i = 0; i < p_.size(); ++i) {
      if (expired()) return stop(res, "network", SynthesisStatus::timeout, "time limit during deadline minimisation");
      p_[i].d_n = lowest(1, p_[i].d_n, [&](Tick d) {
        const Tick keep = p_[i].d_n;
        p_[i].d_n = d;
        const bool ok = bus_ok(current());
        p_[i].d_n = keep;
        return ok;
      });
    }
    log(res, "network", SynthesisStatus::feasible, "message deadlines minimised with synchronized release");

    Tick phi_hi = std::numeric_limits<Tick>::max();
    for (std::size_t i = 0; i < p_.size(); ++i) phi_hi = std::min(phi_hi, sys_.transactions[i].bound() - p_[i].d_n - 1);
    if (p_.empty()) phi_hi = 1;
    if (phi_hi < 1) return stop(res, "ecu", SynthesisStatus::infeasible, "no room for sensing and control deadlines");
    auto set_phi = [&](Tick shift) {
      for (std::size_t i = 0; i < p_.size(); ++i) {
        const auto& tx = sys_.transactions[i];
        p_[i].phi_s = 0;
        p_[i].d_s = std::min(shift, tx.p);
        p_[i].phi_n = shift;
        p_[i].phi_c = shift + p_[i].d_n;
        p_[i].d_c = std::min(tx.p, tx.bound() - p_[i].phi_c);
      }
    };
    auto sensing_only = [&](const Ecu& e) { return has_any(e, sens_ids_) && !has_any(e, ctrl_ids_); };
    auto control_only = [&](const Ecu& e) { return has_any(e, ctrl_ids_) && !has_any(e, sens_ids_); };
    auto check = [&](Tick shift, const std::function<bool(const Ecu&)>& pred) {
      set_phi(shift);
      return ecus_ok(current(), pred);
    };
    if (!check(phi_hi, sensing_only))
      return stop(res, "ecu", SynthesisStatus::infeasible, "sensing ECUs fail at the largest shift");
    const Tick lo = lowest(1, phi_hi, [&](Tick s) { return check(s, sensing_only); });
    if (!check(lo, control_only))
      return stop(res, "ecu", SynthesisStatus::infeasible, "control ECUs fail at the smallest sensing-feasible shift");
    const Tick hi = highest(lo, phi_hi, [&](Tick s) { return check(s, control_only); });
    for (Tick shift = lo; shift <= hi; ++shift) {
      if (expired()) return stop(res, "ecu", SynthesisStatus::timeout, "time limit during shift scan");
      set_phi(shift);
      const auto m = current();
      if (ecus_ok(m, [](const Ecu&) { return true; }) && bus_ok(m)) {
        log(res, "ecu", SynthesisStatus::feasible, "shift " + std::to_string(shift));
        return true;
      }
    }
    return stop(res, "ecu", SynthesisStatus::infeasible, "no common shift in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }

  bool bus_ok_with_free_offsets(SynthesisResult& res) {
    const auto m = current();
    bool any_free = std::any_of(sys_.transactions.begin(), sys_.transactions.end(),
                                [](const ControlTransaction& tx) { return !tx.policy.s; });
    if (any_free) return choose_offsets(m, true, res, "network");
    if (!bus_ok(m)) return stop(res, "network", SynthesisStatus::infeasible, "bus fails at maximal message deadlines");
    return true;
  }

  bool ecu_first(SynthesisResult& res) {
    init_given_offsets();
    for (std::size_t i = 0; i < p_.size(); ++i) {
      const auto& tx = sys_.transactions[i];
      p_[i].phi_s = 0;
      p_[i].d_s = std::min(tx.p, tx.bound() / 2);
      p_[i].phi_c = p_[i].d_s + 1;
      p_[i].d_c = std::min(tx.p, tx.bound() - p_[i].phi_c);
      p_[i].phi_n = p_[i].d_s;
      p_[i].d_n = 1;
    }
    bool any_free = std::any_of(sys_.transactions.begin(), sys_.transactions.end(),
                                [](const ControlTransaction& tx) { return !tx.policy.s; });
    if (any_free) {
      if (!choose_offsets(current(), false, res, "ecu")) return false;
    } else if (!ecus_ok(current(), [](const Ecu&) { return true; })) {
      return stop(res, "ecu", SynthesisStatus::infeasible, "ECUs fail at the initial parameters");
    }
    std::vector<std::size_t> order(p_.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    auto weight = [&](std::size_t i) {
      auto it = opt_.weights.find(sys_.transactions[i].id);
      return it == opt_.weights.end() ? 1.0 : it->second;
    };
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return weight(a) > weight(b); });
    auto all = [](const Ecu&) { return true; };
    for (auto i : order) {
      if (expired()) return stop(res, "ecu", SynthesisStatus::timeout, "time limit during parameter tuning");
      const auto& tx = sys_.transactions[i];
      p_[i].d_s = lowest(1, p_[i].d_s, [&](Tick d) {
        const Tick keep = p_[i].d_s;
        p_[i].d_s = d;
        const bool ok = ecus_ok(current(), all);
        p_[i].d_s = keep;
        return ok;
      });
      auto set_c = [&](Tick phi) {
        p_[i].phi_c = phi;
        p_[i].d_c = std::min(tx.p, tx.bound() - phi);
      };
      const Tick phi_c = highest(p_[i].phi_c, tx.bound() - 1, [&](Tick phi) {
        const Tick keep = p_[i].phi_c;
        set_c(phi);
        const bool ok = ecus_ok(current(), all);
        set_c(keep);
        return ok;
      });
      set_c(phi_c);
    }
    log(res, "ecu", SynthesisStatus::feasible, "sensing deadlines minimised, control offsets maximised");

    for (std::size_t i = 0; i < p_.size(); ++i) {
      p_[i].phi_n = p_[i].d_s;
      p_[i].d_n = std::min(sys_.transactions[i].p, p_[i].phi_c - p_[i].d_s);
    }
    if (!bus_ok(current())) return stop(res, "network", SynthesisStatus::infeasible, "bus fails with the remaining windows");
    log(res, "network", SynthesisStatus::feasible, "messages fill the windows between sensing and control");
    return true;
  }

  const SystemModel& sys_;
  const DecomposeOptions& opt_;
  std::vector<TxParams> p_;
  std::set<std::string> sens_ids_, ctrl_ids_;
  Clock::time_point start_ = Clock::now();
  double stage_start_ = 0.0;
  std::uint64_t nodes_ = 0;
};

}  // namespace

SynthesisResult synthesize_decomposed(const SystemModel& sys, const DecomposeOptions& opt) {
  return Decomposer(sys, opt).run();
}

}  // namespace sct
