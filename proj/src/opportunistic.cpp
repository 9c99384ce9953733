#include "sct/opportunistic.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <random>
#include <set>
#include <tuple>

#include "sct/error.hpp"
#include "sct/synthesis.hpp"

namespace sct {

namespace {

// Idle time of one resource as disjoint [start, end) intervals.
class FreeTime {
 public:
  FreeTime() = default;

  static FreeTime from_trace(const Trace& trace) {
    FreeTime out;
    Tick idle_from = 0;
    bool idle = true;
    for (const auto& e : trace.events) {
      const bool begins = e.kind == EventKind::start || e.kind == EventKind::resume;
      const bool ends = e.kind == EventKind::complete || e.kind == EventKind::preempt;
      if (begins) {
        if (idle && e.time > idle_from) out.free_[idle_from] = e.time;
        idle = false;
      } else if (ends) {
        idle = true;
        idle_from = e.time;
      }
    }
    if (idle && trace.horizon > idle_from) out.free_[idle_from] = trace.horizon;
    return out;
  }

  // Earliest x >= ready with [x, x + c) inside one free interval and
  // x + c <= limit.
  std::optional<Tick> fit(Tick ready, Tick c, Tick limit) const {
    auto it = free_.upper_bound(ready);
    if (it != free_.begin()) --it;
    for (; it != free_.end() && it->first < limit; ++it) {
      const Tick x = std::max(it->first, ready);
      if (x + c <= it->second && x + c <= limit) return x;
    }
    return std::nullopt;
  }

  void take(Tick x, Tick c) {
    auto it = free_.upper_bound(x);
    --it;
    const Tick start = it->first, end = it->second;
    free_.erase(it);
    if (start < x) free_[start] = x;
    if (x + c < end) free_[x + c] = end;
  }

 private:
  std::map<Tick, Tick> free_;
};

double busy_fraction(const Trace& trace) {
  if (trace.horizon <= 0) return 0.0;
  Tick busy = 0, from = 0;
  bool on = false;
  for (const auto& e : trace.events) {
    if (e.kind == EventKind::start || e.kind == EventKind::resume) {
      if (!on) from = e.time;
      on = true;
    } else if (e.kind == EventKind::complete || e.kind == EventKind::preempt) {
      if (on) busy += e.time - from;
      on = false;
    }
  }
  if (on) busy += trace.horizon - from;
  return static_cast<double>(busy) / static_cast<double>(trace.horizon);
}

std::vector<TraceEvent> periodic_events(const Trace& trace, const std::set<std::string>& periodic) {
  std::vector<TraceEvent> out;
  for (const auto& e : trace.events)
    if (periodic.count(e.task)) out.push_back(e);
  return out;
}

const Ecu& ecu_of(const SystemModel& sys, const std::string& task) {
  for (const auto& e : sys.ecus)
    if (std::find(e.tasks.begin(), e.tasks.end(), task) != e.tasks.end()) return e;
  fail(ErrorCode::invalid_argument, "task " + task + " is not mapped to an ECU");
}

struct Candidate {
  std::size_t tx;
  std::int64_t job;
  Tick ready;     // sensing job completion
  Tick limit;     // end of the sensing job's period
  double reward;
};

struct Chain {
  Tick sign = 0, frame = 0, verify = 0, end = 0;
};

}  // namespace

std::vector<ExtraJob> sporadic_arrivals(const SporadicTrafficModel& m, Tick horizon) {
  std::vector<ExtraJob> out;
  if (m.bandwidth_cap <= 0.0 || m.frame_time <= 0 || horizon <= 0) return out;
  if (m.min_interarrival <= 0) fail(ErrorCode::invalid_argument, "sporadic minimum inter-arrival must be positive");
  if (m.bandwidth_cap > 1.0) fail(ErrorCode::invalid_argument, "sporadic bandwidth cap above 1");
  const auto streams = static_cast<int>(std::floor(
      m.bandwidth_cap * static_cast<double>(m.min_interarrival) / static_cast<double>(m.frame_time) + 1e-9));
  std::mt19937_64 rng(m.seed);
  std::uniform_real_distribution<double> slack(0.0, 0.5);
  for (int k = 0; k < streams; ++k) {
    const std::string id = "sporadic" + std::to_string(k);
    Tick t = static_cast<Tick>(std::floor(slack(rng) * 2.0 * static_cast<double>(m.min_interarrival)));
    for (std::int64_t j = 0; t < horizon; ++j) {
      out.push_back({id, j, t, m.frame_time});
      t += m.min_interarrival +
           static_cast<Tick>(std::floor(slack(rng) * static_cast<double>(m.min_interarrival)));
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const ExtraJob& a, const ExtraJob& b) { return a.release < b.release; });
  return out;
}

double compute_reward(Tick t, std::optional<Tick> prev_auth, Tick next_auth, Tick p,
                      const QoCCurve* curve, int f, double weight) {
  if (p <= 0) fail(ErrorCode::invalid_argument, "reward needs a positive period");
  if (t > next_auth || (prev_auth && t < *prev_auth))
    fail(ErrorCode::invalid_argument, "reward time outside the bracketing authentications");
  Tick gap = next_auth - t;
  if (prev_auth) gap = std::min(gap, t - *prev_auth);
  const auto dl = static_cast<int>(gap / p);
  if (dl == 0) return 0.0;
  if (!curve) return weight * dl;
  if (!curve->has_f(f) || dl < f) return 0.0;
  const auto v = curve->at(std::min(dl, curve->max_l(f)), f);
  return v ? weight * *v : 0.0;
}

double mean_gap(const std::vector<std::int64_t>& points, double fallback) {
  if (points.size() < 2) return fallback;
  return static_cast<double>(points.back() - points.front()) / static_cast<double>(points.size() - 1);
}

OpportunisticResult run_opportunistic(const SystemModel& sys, const SporadicTrafficModel& sporadic,
                                      const OpportunisticConfig& config) {
  const Tick horizon = config.horizon;
  if (horizon <= 0) fail(ErrorCode::invalid_argument, "horizon must be positive");
  if (!config.weights.empty() && config.weights.size() != sys.transactions.size())
    fail(ErrorCode::invalid_argument, "weight vector length does not match the transactions");
  if (!analyze_system(sys).ok()) fail(ErrorCode::infeasible_input, "baseline system is not schedulable");

  const auto msgs = sys.bus_messages();
  Tick blocking = sys.c_max_nrt;
  for (const auto& m : msgs) blocking = std::max(blocking, m.c_ext);
  if (sporadic.bandwidth_cap > 0.0 && sporadic.frame_time > blocking)
    fail(ErrorCode::invalid_argument, "sporadic frames longer than the bus blocking bound");

  // baseline
  const auto spor = sporadic_arrivals(sporadic, horizon);
  std::map<std::string, std::vector<SecureTask>> ecu_tasks;
  std::map<std::string, Trace> ecu_base;
  std::map<std::string, FreeTime> ecu_free;
  for (const auto& e : sys.ecus) {
    ecu_tasks[e.id] = sys.ecu_tasks(e);
    ecu_base[e.id] = simulate_ecu(ecu_tasks[e.id], horizon);
    ecu_free[e.id] = FreeTime::from_trace(ecu_base[e.id]);
  }
  const Trace bus_base = simulate_network(msgs, horizon, spor);
  if (bus_base.misses() > 0) fail(ErrorCode::infeasible_input, "bus misses deadlines under sporadic traffic");
  for (const auto& [id, tr] : ecu_base)
    if (tr.misses() > 0) fail(ErrorCode::infeasible_input, "ECU " + id + " misses deadlines");
  FreeTime bus_free = FreeTime::from_trace(bus_base);

  // candidates: unauthenticated sensing jobs whose measurement completed
  std::vector<Candidate> cands;
  std::vector<std::vector<std::int64_t>> points(sys.transactions.size());
  for (std::size_t i = 0; i < sys.transactions.size(); ++i) {
    const auto& tx = sys.transactions[i];
    const SecureTask& s = tx.sens;
    if (!s.phi || !s.d || !s.l || !s.s) continue;
    const Ecu& se = ecu_of(sys, s.id);
    std::map<std::int64_t, Tick> done;
    for (const auto& ev : ecu_base[se.id].events)
      if (ev.task == s.id && ev.kind == EventKind::complete) done[ev.job] = ev.time;
    const int l = *s.l;
    const double w = config.weights.empty() ? 1.0 : config.weights[i];
    const std::string key = tx.plant_id.empty() ? tx.id : tx.plant_id;
    const QoCCurve* curve = config.curves.count(key) ? &config.curves.at(key) : nullptr;
    for (std::int64_t q = 0; *s.phi + q * s.p < horizon; ++q) {
      if (q >= *s.s && (q - *s.s) % l == 0) points[i].push_back(q);
      if (s.is_extended_job(q) || !done.count(q)) continue;
      // nearest extended jobs around q
      std::optional<Tick> prev;
      for (std::int64_t k = q - 1; k >= 0 && k >= q - l; --k)
        if (s.is_extended_job(k)) {
          prev = *s.phi + k * s.p;
          break;
        }
      std::int64_t nk = q + 1;
      while (!s.is_extended_job(nk)) ++nk;
      const Tick r = *s.phi + q * s.p;
      const double reward = compute_reward(r, prev, *s.phi + nk * s.p, s.p, curve, s.f, w);
      cands.push_back({i, q, done[q], r + s.p, reward});
    }
  }

  auto plan = [&](const Candidate& c) -> std::optional<Chain> {
    const auto& tx = sys.transactions[c.tx];
    Chain ch;
    Tick t = c.ready;
    const Tick dsig = tx.sens.c_ext - tx.sens.c_reg;
    const Tick dmsg = tx.net.c_ext - tx.net.c_reg;
    const Tick dver = tx.ctrl.c_ext - tx.ctrl.c_reg;
    if (dsig > 0) {
      auto x = ecu_free[ecu_of(sys, tx.sens.id).id].fit(t, dsig, c.limit);
      if (!x) return std::nullopt;
      ch.sign = *x;
      t = *x + dsig;
    }
    if (dmsg > 0) {
      auto x = bus_free.fit(t, dmsg, c.limit);
      if (!x) return std::nullopt;
      ch.frame = *x;
      t = *x + dmsg;
    } else {
      ch.frame = t;
    }
    if (dver > 0) {
      auto x = ecu_free[ecu_of(sys, tx.ctrl.id).id].fit(t, dver, c.limit);
      if (!x) return std::nullopt;
      ch.verify = *x;
      t = *x + dver;
    }
    ch.end = t;
    return ch;
  };

  // bus arbitration: earliest slot, then highest reward, then lower index.
  // Free time only shrinks, so slots only move later; stale keys are
  // re-planned when popped.
  using Key = std::tuple<Tick, double, std::size_t, std::int64_t, std::size_t>;
  std::priority_queue<Key, std::vector<Key>, std::greater<Key>> queue;
  for (std::size_t k = 0; k < cands.size(); ++k)
    if (auto ch = plan(cands[k])) queue.emplace(ch->frame, -cands[k].reward, cands[k].tx, cands[k].job, k);

  OpportunisticResult out;
  std::map<std::string, std::vector<ExtraJob>> ecu_extra;
  std::vector<ExtraJob> bus_extra = spor;
  std::map<std::string, Tick> ecu_added;
  Tick bus_added = 0;
  while (!queue.empty()) {
    const Key top = queue.top();
    queue.pop();
    const Candidate& c = cands[std::get<4>(top)];
    const auto ch = plan(c);
    if (!ch) continue;
    if (ch->frame != std::get<0>(top)) {
      queue.emplace(ch->frame, -c.reward, c.tx, c.job, std::get<4>(top));
      continue;
    }
    const auto& tx = sys.transactions[c.tx];
    const Tick dsig = tx.sens.c_ext - tx.sens.c_reg;
    const Tick dmsg = tx.net.c_ext - tx.net.c_reg;
    const Tick dver = tx.ctrl.c_ext - tx.ctrl.c_reg;
    if (dsig > 0) {
      const std::string& e = ecu_of(sys, tx.sens.id).id;
      ecu_free[e].take(ch->sign, dsig);
      ecu_extra[e].push_back({"mac_sign:" + tx.id, c.job, ch->sign, dsig});
      ecu_added[e] += dsig;
    }
    if (dmsg > 0) {
      bus_free.take(ch->frame, dmsg);
      bus_extra.push_back({"mac:" + tx.id, c.job, ch->frame, dmsg});
      bus_added += dmsg;
    }
    if (dver > 0) {
      const std::string& e = ecu_of(sys, tx.ctrl.id).id;
      ecu_free[e].take(ch->verify, dver);
      ecu_extra[e].push_back({"mac_verify:" + tx.id, c.job, ch->verify, dver});
      ecu_added[e] += dver;
    }
    out.auths.push_back({tx.id, c.job, c.reward, ch->sign, ch->frame, ch->end});
  }
  std::sort(out.auths.begin(), out.auths.end(), [](const OpportunisticAuth& a, const OpportunisticAuth& b) {
    return std::tie(a.frame_start, a.transaction, a.job) < std::tie(b.frame_start, b.transaction, b.job);
  });

  // replay; periodic jobs must run exactly as in the baseline
  auto by_release = [](std::vector<ExtraJob>& v) {
    std::stable_sort(v.begin(), v.end(), [](const ExtraJob& a, const ExtraJob& b) { return a.release < b.release; });
  };
  by_release(bus_extra);
  std::set<std::string> periodic;
  for (const auto& m : msgs) periodic.insert(m.id);
  auto& met = out.metrics;
  out.traces.bus = simulate_network(msgs, horizon, bus_extra);
  if (periodic_events(out.traces.bus, periodic) != periodic_events(bus_base, periodic)) met.valid = false;
  for (const auto& e : sys.ecus) {
    by_release(ecu_extra[e.id]);
    std::set<std::string> ids(e.tasks.begin(), e.tasks.end());
    out.traces.ecus[e.id] = simulate_ecu(ecu_tasks[e.id], horizon, ecu_extra[e.id]);
    if (periodic_events(out.traces.ecus[e.id], ids) != periodic_events(ecu_base[e.id], ids)) met.valid = false;
    met.ecu_utilization_delta[e.id] = static_cast<double>(ecu_added[e.id]) / static_cast<double>(horizon);
  }
  met.periodic_misses = out.traces.misses();
  if (met.periodic_misses > 0) met.valid = false;

  Tick spor_work = 0;
  for (const auto& x : spor) spor_work += x.cost;
  const double h = static_cast<double>(horizon);
  met.sporadic_utilization = static_cast<double>(spor_work) / h;
  met.bus_utilization_before = busy_fraction(bus_base);
  met.bus_utilization_after = busy_fraction(out.traces.bus);
  met.bus_utilization_delta = static_cast<double>(bus_added) / h;

  for (std::size_t i = 0; i < sys.transactions.size(); ++i) {
    const auto& tx = sys.transactions[i];
    PlantMetrics pm;
    pm.plant_id = tx.plant_id;
    pm.l = tx.policy.l;
    pm.f = tx.policy.f;
    pm.periodic_blocks = points[i].size();
    auto all = points[i];
    for (const auto& a : out.auths)
      if (a.transaction == tx.id) {
        all.push_back(a.job);
        ++pm.opportunistic;
      }
    std::sort(all.begin(), all.end());
    pm.l_hat = mean_gap(all, static_cast<double>(pm.l));
    met.plants[tx.id] = pm;
  }
  return out;
}

}  // namespace sct
