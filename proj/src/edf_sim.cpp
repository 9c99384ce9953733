#include "sct/edf_sim.hpp"

#include <algorithm>
#include <limits>
#include <set>
#include <sstream>
#include <tuple>

#include "sct/error.hpp"

namespace sct {

namespace {

constexpr Tick kNever = std::numeric_limits<Tick>::max();

struct SimJob {
  const std::string* id;
  std::int64_t job;
  Tick release;
  Tick deadline;  // kNever for extra work
  Tick remaining;
  int cls;        // 0 periodic, 1 extra
  std::size_t index;
  bool started = false;
};

using Key = std::tuple<int, Tick, std::size_t, std::int64_t>;

Key key_of(const SimJob& j) {
  return {j.cls, j.cls == 0 ? j.deadline : j.release, j.index, j.job};
}

Trace simulate(std::span<const SecureTask> tasks, Tick horizon, std::span<const ExtraJob> extra,
               bool preemptive) {
  if (horizon < 0) fail(ErrorCode::invalid_argument, "negative simulation horizon");
  std::vector<SimJob> jobs;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const auto& t = tasks[i];
    if (!t.phi || !t.d || (t.l && !t.s))
      fail(ErrorCode::unset_parameter, "task " + t.id + ": parameters unset");
    for (std::int64_t q = 0;; ++q) {
      const Tick r = *t.phi + q * t.p;
      if (r >= horizon) break;
      jobs.push_back({&t.id, q, r, r + *t.d, t.job_cost(q), 0, i});
    }
  }
  for (std::size_t i = 0; i < extra.size(); ++i) {
    const auto& x = extra[i];
    if (x.cost <= 0) fail(ErrorCode::invalid_argument, "extra job " + x.id + " needs positive cost");
    if (x.release < horizon) jobs.push_back({&x.id, x.job, x.release, kNever, x.cost, 1, i});
  }
  std::stable_sort(jobs.begin(), jobs.end(), [](const SimJob& a, const SimJob& b) {
    return std::tie(a.release, a.cls, a.index, a.job) < std::tie(b.release, b.cls, b.index, b.job);
  });

  Trace trace;
  trace.horizon = horizon;
  auto emit = [&](Tick t, const SimJob& j, EventKind k) {
    trace.events.push_back({t, *j.id, j.job, k});
  };

  std::set<std::pair<Key, std::size_t>> ready;
  std::set<std::pair<Tick, std::size_t>> open_deadlines;
  std::size_t next_release = 0;
  std::optional<std::size_t> running;
  Tick now = 0;

  auto dispatch = [&](std::size_t id) {
    SimJob& j = jobs[id];
    emit(now, j, j.started ? EventKind::resume : EventKind::start);
    j.started = true;
    running = id;
  };

  while (true) {
    Tick next = kNever;
    if (next_release < jobs.size()) next = jobs[next_release].release;
    if (running) next = std::min(next, now + jobs[*running].remaining);
    if (!open_deadlines.empty()) next = std::min(next, open_deadlines.begin()->first);
    if (next == kNever || next > horizon) break;

    if (running) jobs[*running].remaining -= next - now;
    now = next;

    if (running && jobs[*running].remaining == 0) {
      const SimJob& j = jobs[*running];
      emit(now, j, EventKind::complete);
      if (j.cls == 0) open_deadlines.erase({j.deadline, *running});
      running.reset();
    }
    while (!open_deadlines.empty() && open_deadlines.begin()->first == now) {
      emit(now, jobs[open_deadlines.begin()->second], EventKind::deadline_miss);
      open_deadlines.erase(open_deadlines.begin());
    }
    while (next_release < jobs.size() && jobs[next_release].release == now) {
      const SimJob& j = jobs[next_release];
      emit(now, j, EventKind::release);
      ready.insert({key_of(j), next_release});
      if (j.cls == 0) open_deadlines.insert({j.deadline, next_release});
      ++next_release;
    }
    if (ready.empty()) continue;
    if (!running) {
      const std::size_t id = ready.begin()->second;
      ready.erase(ready.begin());
      dispatch(id);
    } else if (preemptive && ready.begin()->first < key_of(jobs[*running])) {
      const std::size_t id = ready.begin()->second;
      ready.erase(ready.begin());
      emit(now, jobs[*running], EventKind::preempt);
      ready.insert({key_of(jobs[*running]), *running});
      dispatch(id);
    }
  }
  return trace;
}

}  // namespace

const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::release: return "release";
    case EventKind::start: return "start";
    case EventKind::preempt: return "preempt";
    case EventKind::resume: return "resume";
    case EventKind::complete: return "complete";
    case EventKind::deadline_miss: return "deadline_miss";
  }
  return "release";
}

std::size_t Trace::misses() const {
  return static_cast<std::size_t>(std::count_if(events.begin(), events.end(), [](const TraceEvent& e) {
    return e.kind == EventKind::deadline_miss;
  }));
}

std::optional<TraceEvent> Trace::first_miss() const {
  for (const auto& e : events)
    if (e.kind == EventKind::deadline_miss) return e;
  return std::nullopt;
}

Trace simulate_ecu(std::span<const SecureTask> tasks, Tick horizon, std::span<const ExtraJob> extra) {
  return simulate(tasks, horizon, extra, true);
}

Trace simulate_network(std::span<const SecureTask> msgs, Tick horizon, std::span<const ExtraJob> extra) {
  return simulate(msgs, horizon, extra, false);
}

std::size_t SystemTraces::misses() const {
  std::size_t n = bus.misses();
  for (const auto& [id, tr] : ecus) n += tr.misses();
  return n;
}

SystemTraces simulate_system(const SystemModel& sys, Tick horizon) {
  SystemTraces out;
  for (const auto& ecu : sys.ecus) out.ecus[ecu.id] = simulate_ecu(sys.ecu_tasks(ecu), horizon);
  out.bus = simulate_network(sys.bus_messages(), horizon);
  return out;
}

TimingReport check_transaction_timing(const SystemModel& sys, const SystemTraces& traces) {
  TimingReport rep;
  for (const auto& ecu : sys.ecus)
    if (!traces.ecus.count(ecu.id)) fail(ErrorCode::invalid_argument, "missing trace for ECU " + ecu.id);

  std::map<std::pair<std::string, std::int64_t>, Tick> done;
  auto collect = [&](const Trace& tr) {
    for (const auto& e : tr.events)
      if (e.kind == EventKind::complete) done[{e.task, e.job}] = e.time;
  };
  for (const auto& [id, tr] : traces.ecus) collect(tr);
  collect(traces.bus);
  Tick horizon = traces.bus.horizon;
  for (const auto& [id, tr] : traces.ecus) horizon = std::min(horizon, tr.horizon);

  for (const auto& tx : sys.transactions) {
    const auto& s = tx.sens;
    const auto& n = tx.net;
    const auto& c = tx.ctrl;
    for (const SecureTask* t : {&s, &n, &c})
      if (!t->phi || !t->d) fail(ErrorCode::unset_parameter, "task " + t->id + ": parameters unset");
    auto add = [&](std::int64_t job, const std::string& what) {
      rep.violations.push_back({tx.id, job, what});
    };
    if (*n.phi < *s.phi + *s.d) add(-1, "message offset precedes sensing deadline");
    if (*c.phi < *n.phi + *n.d) add(-1, "control offset precedes message deadline");
    if (*c.phi + *c.d > tx.bound()) add(-1, "control deadline exceeds end-to-end bound");

    // Each stage must finish before the next one is released, and the chain
    // before the end-to-end bound. Only instants inside the horizon count.
    auto stage = [&](const SecureTask& from, std::int64_t q, Tick limit, const char* what) {
      if (limit > horizon) return;
      auto it = done.find({from.id, q});
      if (it == done.end() || it->second > limit) add(q, what);
    };
    for (std::int64_t q = 0; *s.phi + q * tx.p < horizon; ++q) {
      stage(s, q, *n.phi + q * tx.p, "sensing job not complete at message release");
      stage(n, q, *c.phi + q * tx.p, "message not delivered at control release");
      stage(c, q, q * tx.p + tx.bound(), "control job not complete within end-to-end bound");
    }
  }
  return rep;
}

std::string trace_csv(const Trace& trace) {
  std::ostringstream os;
  os << "time,task,job,event\n";
  for (const auto& e : trace.events) os << e.time << ',' << e.task << ',' << e.job << ',' << to_string(e.kind) << '\n';
  return os.str();
}

}  // namespace sct
