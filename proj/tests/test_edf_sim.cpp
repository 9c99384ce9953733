#include <random>
#include <set>

#include "doctest.h"
#include "fixtures.hpp"
#include "sct/demand.hpp"
#include "sct/edf_sim.hpp"
#include "sct/error.hpp"

using namespace sct;

namespace {

std::optional<Tick> event_time(const Trace& tr, const std::string& task, std::int64_t job, EventKind k) {
  for (const auto& e : tr.events)
    if (e.task == task && e.job == job && e.kind == k) return e.time;
  return std::nullopt;
}

// Replays a trace and checks that no pending job with a strictly earlier
// absolute deadline exists whenever a job (re)starts, and that the resource
// never idles while work is pending.
void check_edf_property(std::span<const SecureTask> tasks, const Trace& tr) {
  std::map<std::string, const SecureTask*> by_id;
  for (const auto& t : tasks) by_id[t.id] = &t;
  auto deadline = [&](const TraceEvent& e) { return *by_id[e.task]->phi + e.job * by_id[e.task]->p + *by_id[e.task]->d; };
  std::set<std::pair<std::string, std::int64_t>> pending;
  std::optional<std::pair<std::string, std::int64_t>> running;
  std::size_t i = 0;
  while (i < tr.events.size()) {
    const Tick now = tr.events[i].time;
    std::size_t j = i;
    for (; j < tr.events.size() && tr.events[j].time == now; ++j) {
      const auto& e = tr.events[j];
      const auto key = std::make_pair(e.task, e.job);
      switch (e.kind) {
        case EventKind::release: pending.insert(key); break;
        case EventKind::complete: pending.erase(key); running.reset(); break;
        case EventKind::preempt: running.reset(); break;
        case EventKind::start:
        case EventKind::resume: {
          const Tick mine = deadline(e);
          for (const auto& [id, q] : pending) {
            TraceEvent other{now, id, q, EventKind::release};
            CHECK(deadline(other) >= mine);
          }
          running = key;
          break;
        }
        case EventKind::deadline_miss: break;
      }
    }
    if (!pending.empty()) CHECK(running.has_value());
    i = j;
  }
}

}  // namespace

TEST_CASE("staggered center schedule has no misses and defers T2's extended frame") {
  auto tasks = fx::staggered_center();
  auto tr = simulate_ecu(tasks, 400);
  CHECK(tr.misses() == 0);
  auto start = event_time(tr, "T2", 1, EventKind::start);
  auto done = event_time(tr, "T2", 1, EventKind::complete);
  REQUIRE(start);
  REQUIRE(done);
  CHECK(*start >= 100);
  CHECK(*done <= 200);
  CHECK(tasks[1].job_cost(1) == 40);
  CHECK(tasks[1].job_cost(0) == 20);
  check_edf_property(tasks, tr);
}

TEST_CASE("single task with c > d misses at its deadline") {
  std::vector<SecureTask> v{fx::task("T", 5, 5, 10, 0, 3)};
  auto tr = simulate_ecu(v, 10);
  auto m = tr.first_miss();
  REQUIRE(m);
  CHECK(m->time == 3);
  // the late job still completes
  CHECK(event_time(tr, "T", 0, EventKind::complete) == 5);
}

TEST_CASE("overloaded staggered set misses within the hyperperiod") {
  CHECK(simulate_ecu(fx::staggered_left(), 200).misses() >= 1);
}

TEST_CASE("offset pair: M1 misses at 50 on the bus") {
  auto msgs = fx::offset_pair();
  auto tr = simulate_network(msgs, 100);
  CHECK(event_time(tr, "M2", 0, EventKind::start) == 10);
  CHECK(event_time(tr, "M2", 0, EventKind::complete) == 31);
  CHECK(event_time(tr, "M1", 0, EventKind::start) == 31);
  CHECK(event_time(tr, "M1", 0, EventKind::complete) == 51);
  auto m = tr.first_miss();
  REQUIRE(m);
  CHECK(m->task == "M1");
  CHECK(m->time == 50);
}

TEST_CASE("single message completes at phi + c") {
  std::vector<SecureTask> v{fx::task("M", 7, 7, 50, 3, 50, {}, 1, {}, TaskKind::message)};
  auto tr = simulate_network(v, 50);
  CHECK(event_time(tr, "M", 0, EventKind::complete) == 10);
}

TEST_CASE("non-preemptive blocking by a long low-urgency frame") {
  std::vector<SecureTask> v{fx::task("A", 50, 50, 1000, 0, 1000, {}, 1, {}, TaskKind::message),
                            fx::task("B", 5, 5, 1000, 1, 10, {}, 1, {}, TaskKind::message)};
  auto tr = simulate_network(v, 1000);
  CHECK(event_time(tr, "B", 0, EventKind::start) == 50);
  CHECK(event_time(tr, "B", 0, EventKind::deadline_miss) == 11);
  for (const auto& e : tr.events) {
    CHECK(e.kind != EventKind::preempt);
    CHECK(e.kind != EventKind::resume);
  }
  // the same pair on a preemptive resource: B preempts A
  auto pre = simulate_ecu(v, 1000);
  CHECK(pre.misses() == 0);
  CHECK(event_time(pre, "A", 0, EventKind::preempt) == 1);
}

TEST_CASE("extra work runs only in idle time") {
  std::vector<SecureTask> v{fx::task("T", 4, 4, 10, 0, 10)};
  std::vector<ExtraJob> x{{"X", 0, 0, 8}};
  auto tr = simulate_ecu(v, 20, x);
  CHECK(tr.misses() == 0);
  CHECK(event_time(tr, "X", 0, EventKind::start) == 4);
  CHECK(event_time(tr, "X", 0, EventKind::preempt) == 10);
  CHECK(event_time(tr, "X", 0, EventKind::complete) == 16);
  // on the bus an extra frame blocks a later periodic release
  std::vector<SecureTask> m{fx::task("M", 4, 4, 10, 1, 5, {}, 1, {}, TaskKind::message)};
  std::vector<ExtraJob> nrt{{"N", 0, 0, 6}};
  CHECK(simulate_network(m, 10, nrt).misses() == 1);
}

TEST_CASE("traces are deterministic and event-ordered") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<SecureTask> set;
    for (int i = 0; i < 4; ++i) set.push_back(fx::random_task(rng, i, true));
    auto a = simulate_ecu(set, 200);
    auto b = simulate_ecu(set, 200);
    CHECK(a == b);
    CHECK(trace_csv(a) == trace_csv(b));
    for (std::size_t i = 1; i < a.events.size(); ++i) CHECK(a.events[i - 1].time <= a.events[i].time);
    check_edf_property(set, a);
    auto n = simulate_network(set, 200);
    check_edf_property(set, n);
  }
}

TEST_CASE("trace CSV layout") {
  std::vector<SecureTask> v{fx::task("T", 2, 2, 10, 0, 10)};
  CHECK(trace_csv(simulate_ecu(v, 5)) == "time,task,job,event\n0,T,0,release\n0,T,0,start\n2,T,0,complete\n");
}

namespace {

SystemModel chain_system(Tick n_phi) {
  auto s = fx::task("s", 10, 20, 100, 0, 30, {}, 1, {}, TaskKind::sensing);
  auto n = fx::task("n", 10, 20, 100, n_phi, 30, {}, 1, {}, TaskKind::message);
  auto c = fx::task("c", 10, 20, 100, 60, 40, {}, 1, {}, TaskKind::control);
  SystemModel sys;
  sys.transactions.push_back(assemble_transaction("x", s, n, c, AuthPolicy{0, 1, 2}));
  sys.ecus = {{"E1", {"s"}}, {"E2", {"c"}}};
  sys.bus.messages = {"n"};
  return sys;
}

}  // namespace

TEST_CASE("check_transaction_timing") {
  auto good = chain_system(30);
  auto tr = simulate_system(good, 400);
  CHECK(tr.misses() == 0);
  CHECK(check_transaction_timing(good, tr).ok());

  // message released before the sensing deadline: flagged statically although
  // no deadline is missed
  auto broken = good;
  broken.transactions[0].net.phi = 20;
  auto tb = simulate_system(broken, 400);
  CHECK(tb.misses() == 0);
  auto rep = check_transaction_timing(broken, tb);
  CHECK_FALSE(rep.ok());
  CHECK(rep.violations[0].job == -1);

  SystemModel empty;
  CHECK(check_transaction_timing(empty, simulate_system(empty, 100)).ok());

  SystemTraces missing;
  CHECK_THROWS_AS(check_transaction_timing(good, missing), Error);
}

TEST_CASE("preemptive test is exact against simulation") {
  std::mt19937_64 rng(101);
  int sched = 0, unsched = 0, overloaded = 0;
  for (int trial = 0; trial < 700; ++trial) {
    std::vector<SecureTask> set;
    const int n = std::uniform_int_distribution<int>(2, 4)(rng);
    for (int i = 0; i < n; ++i) set.push_back(fx::random_task(rng, i, true, 3));
    auto v = edf_preemptive_schedulable(set);
    if (utilization(set) > 1.0) {
      ++overloaded;
      REQUIRE(v.witness);
      CHECK(v.status == VerdictStatus::not_schedulable);
      CHECK(simulate_ecu(set, v.witness->t2).misses() > 0);
      continue;
    }
    const auto tr = simulate_ecu(set, t_max(set));
    if (v.ok()) {
      ++sched;
      CHECK(tr.misses() == 0);
    } else {
      ++unsched;
      CHECK(tr.misses() > 0);
      auto first = tr.first_miss();
      REQUIRE(first);
      CHECK(first->time <= v.witness->t2);
    }
  }
  CHECK(sched + unsched >= 200);
  CHECK(sched >= 50);
  CHECK(unsched >= 50);
  MESSAGE("schedulable " << sched << ", not schedulable " << unsched << ", overloaded " << overloaded);
}

TEST_CASE("non-preemptive condition is sound against simulation") {
  std::mt19937_64 rng(202);
  int accepted = 0, rejected = 0;
  for (int trial = 0; trial < 1500; ++trial) {
    std::vector<SecureTask> set;
    const int n = std::uniform_int_distribution<int>(1, 4)(rng);
    for (int i = 0; i < n; ++i) set.push_back(fx::random_task(rng, i, true, 5));
    const Tick nrt = std::uniform_int_distribution<Tick>(0, 2)(rng);
    auto v = edf_nonpreemptive_schedulable(set, nrt);
    if (!v.ok()) {
      ++rejected;
      continue;
    }
    ++accepted;
    // worst-case blocking by a non-real-time frame at time 0 as well
    std::vector<ExtraJob> x;
    if (nrt > 0) x.push_back({"nrt", 0, 0, nrt});
    CHECK(simulate_network(set, t_max(set)).misses() == 0);
    CHECK(simulate_network(set, t_max(set), x).misses() == 0);
  }
  CHECK(accepted >= 200);
  MESSAGE("accepted " << accepted << ", rejected " << rejected);
}
