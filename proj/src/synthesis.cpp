#include "sct/synthesis.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "sct/arith.hpp"
#include "sct/error.hpp"

namespace sct {

std::string to_string(SynthesisStatus s) {
  switch (s) {
    case SynthesisStatus::feasible: return "FEASIBLE";
    case SynthesisStatus::infeasible: return "INFEASIBLE";
    case SynthesisStatus::timeout: return "TIMEOUT";
  }
  return "?";
}

namespace {

std::optional<Tick> fixed_value(const SecureTask& t, Field f) {
  switch (f) {
    case Field::s: return t.s ? std::optional<Tick>(*t.s) : std::nullopt;
    case Field::phi: return t.phi;
    case Field::d: return t.d;
  }
  return std::nullopt;
}

void set_value(SecureTask& t, Field f, Tick v) {
  switch (f) {
    case Field::s: t.s = static_cast<int>(v); break;
    case Field::phi: t.phi = v; break;
    case Field::d: t.d = v; break;
  }
}

Tick resource_blocking(const SynthesisProblem& pb, const SearchResource& r) {
  if (!r.non_preemptive) return 0;
  Tick b = r.c_max_nrt;
  for (auto i : r.tasks) b = std::max(b, pb.tasks[i].c_ext);
  return b;
}

bool resource_ok(std::span<const SecureTask> tasks, Tick blocking, bool np) {
  if (tasks.empty()) return true;
  return demand_check(tasks, blocking, np ? VerdictStatus::rejected : VerdictStatus::not_schedulable).ok();
}

bool coupling_ok(const Coupling& c, const std::vector<SecureTask>& tasks) {
  Tick lhs = 0;
  for (const auto& [slot, coef] : c.terms) {
    auto v = fixed_value(tasks[slot.task], slot.field);
    if (!v) fail(ErrorCode::unset_parameter, "coupling " + c.name + " references an unset parameter");
    lhs += coef * *v;
  }
  return c.sense == Sense::eq ? lhs == c.rhs : c.sense == Sense::le ? lhs <= c.rhs : lhs >= c.rhs;
}

struct Deadline {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  SearchLimits limits;
  std::uint64_t nodes = 0;
  bool expired = false;

  bool tick() {
    ++nodes;
    if (limits.max_nodes && nodes > limits.max_nodes) expired = true;
    if (limits.max_seconds > 0 && (nodes & 63) == 0 && elapsed() > limits.max_seconds) expired = true;
    return !expired;
  }
  double elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

class Search {
 public:
  Search(const SynthesisProblem& pb, const SearchLimits& limits) : pb_(pb), slots_(free_slots(pb)) {
    clock_.limits = limits;
    tasks_ = pb.tasks;
    for (std::size_t k = 0; k < slots_.size(); ++k) {
      domains_.push_back(slot_domain(pb, slots_[k]));
      position_[key(slots_[k])] = k;
    }
    assigned_.assign(slots_.size(), false);
    task_resources_.resize(pb.tasks.size());
    for (std::size_t r = 0; r < pb.resources.size(); ++r) {
      for (auto i : pb.resources[r].tasks) task_resources_.at(i).push_back(r);
      blocking_.push_back(resource_blocking(pb, pb.resources[r]));
    }
    slot_couplings_.resize(slots_.size());
    for (std::size_t c = 0; c < pb.couplings.size(); ++c)
      for (const auto& [slot, coef] : pb.couplings[c].terms) {
        auto it = position_.find(key(slot));
        if (it != position_.end()) slot_couplings_[it->second].push_back(c);
      }
  }

  SynthesisResult run() {
    SynthesisResult res;
    res.stats.variables = slots_.size();
    res.stats.constraints = pb_.couplings.size() + pb_.resources.size();
    bool found = false;
    if (root_ok()) found = dfs(0);
    res.stats.nodes = clock_.nodes;
    res.stats.wall_seconds = clock_.elapsed();
    if (found) {
      res.status = SynthesisStatus::feasible;
      for (const auto& t : tasks_) res.assignment[t.id] = {*t.phi, *t.d, t.s};
    } else {
      res.status = clock_.expired ? SynthesisStatus::timeout : SynthesisStatus::infeasible;
    }
    return res;
  }

 private:
  static std::size_t key(Slot s) { return s.task * 3 + static_cast<std::size_t>(s.field); }

  Bounds current(Slot s) const {
    auto it = position_.find(key(s));
    if (it == position_.end() || assigned_[it->second]) {
      const auto v = fixed_value(tasks_[s.task], s.field);
      if (v) return {*v, *v};
      return slot_domain(pb_, s);
    }
    return domains_[it->second];
  }

  // Narrows the domain of slot k using each coupling it appears in.
  Bounds narrowed(std::size_t k) const {
    Bounds b = domains_[k];
    const Slot me = slots_[k];
    for (auto c_idx : slot_couplings_[k]) {
      const auto& c = pb_.couplings[c_idx];
      Tick coef = 0, lo = 0, hi = 0;
      for (const auto& [slot, a] : c.terms) {
        if (slot == me) {
          coef += a;
          continue;
        }
        const Bounds o = current(slot);
        lo += a >= 0 ? a * o.lo : a * o.hi;
        hi += a >= 0 ? a * o.hi : a * o.lo;
      }
      if (coef == 0) continue;
      // coef * v in [c.rhs - hi, c.rhs - lo] for eq, <= c.rhs - lo for le, >= c.rhs - hi for ge
      const bool upper = c.sense != Sense::ge;
      const bool lower = c.sense != Sense::le;
      auto clamp_le = [&](Tick rhs) {  // coef * v <= rhs
        if (coef > 0) b.hi = std::min(b.hi, floor_div(rhs, coef));
        else b.lo = std::max(b.lo, ceil_div(-rhs, -coef));
      };
      auto clamp_ge = [&](Tick rhs) {  // coef * v >= rhs
        if (coef > 0) b.lo = std::max(b.lo, ceil_div(rhs, coef));
        else b.hi = std::min(b.hi, floor_div(-rhs, -coef));
      };
      if (upper) clamp_le(c.rhs - lo);
      if (lower) clamp_ge(c.rhs - hi);
    }
    return b;
  }

  bool complete(std::size_t i) const { return tasks_[i].phi && tasks_[i].d; }

  bool resource_partial_ok(std::size_t r) const {
    const auto& res = pb_.resources[r];
    std::vector<SecureTask> subset;
    for (auto i : res.tasks) {
      if (!complete(i)) continue;
      SecureTask t = tasks_[i];
      if (t.l && !t.s) {
        t.l.reset();
        t.f = 1;
        t.c_ext = t.c_reg;
      }
      subset.push_back(std::move(t));
    }
    return resource_ok(subset, blocking_[r], res.non_preemptive);
  }

  bool root_ok() const {
    for (const auto& c : pb_.couplings) {
      Tick lo = 0, hi = 0;
      for (const auto& [slot, a] : c.terms) {
        const Bounds o = current(slot);
        lo += a >= 0 ? a * o.lo : a * o.hi;
        hi += a >= 0 ? a * o.hi : a * o.lo;
      }
      if (c.sense != Sense::ge && lo > c.rhs) return false;
      if (c.sense != Sense::le && hi < c.rhs) return false;
    }
    for (std::size_t r = 0; r < pb_.resources.size(); ++r)
      if (!resource_partial_ok(r)) return false;
    return true;
  }

  bool dfs(std::size_t k) {
    if (!clock_.tick()) return false;
    if (k == slots_.size()) return check_complete(pb_, tasks_);
    const Slot sl = slots_[k];
    const Bounds b = narrowed(k);
    for (Tick v = b.lo; v <= b.hi; ++v) {
      set_value(tasks_[sl.task], sl.field, v);
      assigned_[k] = true;
      bool ok = true;
      if (complete(sl.task))
        for (auto r : task_resources_[sl.task])
          if (!resource_partial_ok(r)) {
            ok = false;
            break;
          }
      if (ok && dfs(k + 1)) return true;
      if (clock_.expired) break;
    }
    assigned_[k] = false;
    unset(tasks_[sl.task], sl.field);
    return false;
  }

  static void unset(SecureTask& t, Field f) {
    switch (f) {
      case Field::s: t.s.reset(); break;
      case Field::phi: t.phi.reset(); break;
      case Field::d: t.d.reset(); break;
    }
  }

  const SynthesisProblem& pb_;
  std::vector<Slot> slots_;
  std::vector<Bounds> domains_;
  std::map<std::size_t, std::size_t> position_;
  std::vector<bool> assigned_;
  std::vector<SecureTask> tasks_;
  std::vector<std::vector<std::size_t>> task_resources_;
  std::vector<Tick> blocking_;
  std::vector<std::vector<std::size_t>> slot_couplings_;
  Deadline clock_;
};

void check_limits(const SearchLimits& l) {
  if (l.max_seconds < 0) fail(ErrorCode::invalid_argument, "negative time limit");
}

}  // namespace

Bounds slot_domain(const SynthesisProblem& pb, Slot slot) {
  const SecureTask& t = pb.tasks.at(slot.task);
  if (auto v = fixed_value(t, slot.field)) return {*v, *v};
  const auto dom_it = pb.domains.find(t.id);
  const TaskDomain dom = dom_it == pb.domains.end() ? TaskDomain{} : dom_it->second;
  switch (slot.field) {
    case Field::s: {
      if (!t.l) fail(ErrorCode::invalid_argument, "task " + t.id + ": s requested without l");
      return dom.s.value_or(Bounds{0, t.kind == TaskKind::sensing ? *t.l - t.f : *t.l - 1});
    }
    case Field::phi: {
      const auto b = pb.bounds.find(t.id);
      return dom.phi.value_or(Bounds{0, (b == pb.bounds.end() ? t.p : b->second) - 1});
    }
    case Field::d: return dom.d.value_or(Bounds{1, t.p});
  }
  return {};
}

std::vector<Slot> free_slots(const SynthesisProblem& pb) {
  std::vector<Slot> out;
  for (Field f : {Field::s, Field::phi, Field::d})
    for (std::size_t i = 0; i < pb.tasks.size(); ++i) {
      const auto& t = pb.tasks[i];
      if (f == Field::s && !t.l) continue;
      if (!fixed_value(t, f)) {
        const Bounds b = slot_domain(pb, {i, f});
        if (b.lo > b.hi) fail(ErrorCode::invalid_argument, "empty domain on task " + t.id);
        out.push_back({i, f});
      }
    }
  return out;
}

std::vector<SecureTask> with_values(const SynthesisProblem& pb, const std::vector<Slot>& slots,
                                    const std::vector<Tick>& values) {
  if (slots.size() != values.size()) fail(ErrorCode::invalid_argument, "slot/value count mismatch");
  auto tasks = pb.tasks;
  for (std::size_t k = 0; k < slots.size(); ++k) set_value(tasks.at(slots[k].task), slots[k].field, values[k]);
  return tasks;
}

bool check_complete(const SynthesisProblem& pb, const std::vector<SecureTask>& tasks) {
  for (const auto& c : pb.couplings)
    if (!coupling_ok(c, tasks)) return false;
  for (const auto& r : pb.resources) {
    std::vector<SecureTask> sub;
    for (auto i : r.tasks) sub.push_back(tasks.at(i));
    if (!resource_ok(sub, resource_blocking(pb, r), r.non_preemptive)) return false;
  }
  return true;
}

SynthesisProblem problem_from_system(const SystemModel& sys) {
  SynthesisProblem pb;
  std::map<std::string, std::size_t> index;
  auto push = [&](const SecureTask& t, std::optional<Tick> bound) {
    if (index.count(t.id)) fail(ErrorCode::schema, "duplicate task id " + t.id);
    index[t.id] = pb.tasks.size();
    pb.tasks.push_back(t);
    if (bound) pb.bounds[t.id] = *bound;
  };
  for (const auto& tx : sys.transactions)
    for (const SecureTask* t : {&tx.sens, &tx.net, &tx.ctrl}) push(*t, tx.bound());
  for (const auto& t : sys.background) push(t, std::nullopt);

  auto lookup = [&](const std::string& id, const std::string& where) {
    auto it = index.find(id);
    if (it == index.end()) fail(ErrorCode::schema, where + " maps unknown task " + id);
    return it->second;
  };
  for (const auto& ecu : sys.ecus) {
    SearchResource r{ecu.id, {}, false, 0};
    for (const auto& id : ecu.tasks) r.tasks.push_back(lookup(id, "ECU " + ecu.id));
    pb.resources.push_back(r);
  }
  SearchResource bus{sys.bus.id, {}, true, sys.c_max_nrt};
  for (const auto& id : sys.bus.messages) bus.tasks.push_back(lookup(id, "bus"));
  pb.resources.push_back(bus);

  for (const auto& tx : sys.transactions) {
    const std::size_t s = index[tx.sens.id], n = index[tx.net.id], c = index[tx.ctrl.id];
    pb.couplings.push_back({"prec_sn_" + tx.id, {{{s, Field::phi}, 1}, {{s, Field::d}, 1}, {{n, Field::phi}, -1}}, Sense::le, 0});
    pb.couplings.push_back({"prec_nc_" + tx.id, {{{n, Field::phi}, 1}, {{n, Field::d}, 1}, {{c, Field::phi}, -1}}, Sense::le, 0});
    pb.couplings.push_back({"e2e_" + tx.id, {{{c, Field::phi}, 1}, {{c, Field::d}, 1}}, Sense::le, tx.bound()});
    if (tx.sens.l && tx.net.l && tx.ctrl.l) {
      pb.couplings.push_back({"s_sn_" + tx.id, {{{n, Field::s}, 1}, {{s, Field::s}, -1}}, Sense::eq, tx.policy.f - 1});
      pb.couplings.push_back({"s_nc_" + tx.id, {{{c, Field::s}, 1}, {{n, Field::s}, -1}}, Sense::eq, 0});
    }
    if (!tx.sens.d && !tx.net.d && !tx.ctrl.d)
      pb.couplings.push_back({"dsum_" + tx.id, {{{s, Field::d}, 1}, {{n, Field::d}, 1}, {{c, Field::d}, 1}}, Sense::eq, tx.bound()});
  }
  return pb;
}

SynthesisResult solve_feasibility(const SynthesisProblem& pb, const SearchLimits& limits) {
  check_limits(limits);
  return Search(pb, limits).run();
}

SynthesisResult solve_feasibility(const MilpInstance& inst, const SearchLimits& limits) {
  check_limits(limits);
  const auto params = parameter_vars(inst);
  std::vector<Bounds> dom;
  for (int p : params) {
    const auto& v = inst.vars[p];
    if (!std::isfinite(v.lb) || !std::isfinite(v.ub))
      fail(ErrorCode::invalid_argument, "parameter " + v.name + " is unbounded");
    dom.push_back({static_cast<Tick>(std::ceil(v.lb)), static_cast<Tick>(std::floor(v.ub))});
  }
  Deadline clock;
  clock.limits = limits;
  std::map<std::string, Tick> values;
  bool found = false;
  auto dfs = [&](auto&& self, std::size_t k) -> bool {
    if (!clock.tick()) return false;
    if (k == params.size()) return !first_violation(inst, complete_assignment(inst, values)).has_value();
    const auto& name = inst.vars[params[k]].name;
    for (Tick v = dom[k].lo; v <= dom[k].hi; ++v) {
      values[name] = v;
      if (self(self, k + 1)) return true;
      if (clock.expired) break;
    }
    values.erase(name);
    return false;
  };
  found = dfs(dfs, 0);

  SynthesisResult res;
  const auto st = inst.stats();
  res.stats.variables = st.variables;
  res.stats.constraints = st.constraints;
  res.stats.pruned_variables = st.pruned_variables;
  res.stats.pruned_constraints = st.pruned_constraints;
  res.stats.nodes = clock.nodes;
  res.stats.wall_seconds = clock.elapsed();
  if (found) {
    res.status = SynthesisStatus::feasible;
    res.parameters = values;
  } else {
    res.status = clock.expired ? SynthesisStatus::timeout : SynthesisStatus::infeasible;
  }
  return res;
}

SystemModel apply_solution(const SystemModel& sys, const SynthesisResult& res) {
  if (res.status != SynthesisStatus::feasible) fail(ErrorCode::invalid_argument, "result is not FEASIBLE");
  SystemModel out = sys;
  auto write = [&](SecureTask& t) {
    auto it = res.assignment.find(t.id);
    if (it == res.assignment.end()) return;
    t.phi = it->second.phi;
    t.d = it->second.d;
    if (t.l) t.s = it->second.s;
  };
  for (auto& tx : out.transactions) {
    write(tx.sens);
    write(tx.net);
    write(tx.ctrl);
    if (tx.sens.s) tx.policy.s = *tx.sens.s;
  }
  for (auto& t : out.background) write(t);
  return out;
}

bool SystemVerdicts::ok() const {
  if (!bus.ok()) return false;
  for (const auto& [id, v] : ecus)
    if (!v.ok()) return false;
  return true;
}

SystemVerdicts analyze_system(const SystemModel& sys) {
  SystemVerdicts out;
  for (const auto& ecu : sys.ecus) out.ecus[ecu.id] = edf_preemptive_schedulable(sys.ecu_tasks(ecu));
  out.bus = edf_nonpreemptive_schedulable(sys.bus_messages(), sys.c_max_nrt);
  return out;
}

}  // namespace sct
