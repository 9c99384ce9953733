#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "sct/demand.hpp"
#include "sct/error.hpp"
#include "sct/milp.hpp"

using namespace sct;

namespace {

bool feasible(const MilpInstance& inst, const std::map<std::string, Tick>& params = {}) {
  const auto x = complete_assignment(inst, params);
  return !first_violation(inst, x).has_value();
}

// Smaller periods and patterns than fx::random_task to keep instances small.
SecureTask small_task(std::mt19937_64& rng, int i, Tick c_div) {
  static const Tick periods[] = {5, 10, 20};
  const Tick p = periods[std::uniform_int_distribution<int>(0, 2)(rng)];
  const Tick d = std::uniform_int_distribution<Tick>(1, p)(rng);
  const Tick phi = std::uniform_int_distribution<Tick>(0, p - 1)(rng);
  const Tick c = std::uniform_int_distribution<Tick>(1, std::max<Tick>(1, p / c_div))(rng);
  const Tick dc = std::uniform_int_distribution<Tick>(0, 2)(rng);
  const int l = std::uniform_int_distribution<int>(1, 2)(rng);
  const int f = std::uniform_int_distribution<int>(1, l)(rng);
  const int s = std::uniform_int_distribution<int>(0, l - f)(rng);
  const std::string id = "t" + std::to_string(i);
  return fx::task(id.c_str(), c, c + dc, p, phi, d, l, f, s);
}

}  // namespace

TEST_CASE("big-M and epsilon selection") {
  auto bm = choose_big_m_epsilon(500);
  CHECK(bm.m == doctest::Approx(1e4));
  CHECK(bm.epsilon == doctest::Approx(0.5));
  CHECK(choose_big_m_epsilon(1).m == doctest::Approx(10));
  // M * int_feas reaches 1: no room for epsilon
  CHECK_THROWS_AS(choose_big_m_epsilon(1e4), Error);
  try {
    choose_big_m_epsilon(1e4);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::infeasible_input);
  }
  // tighter tolerances give room again
  CHECK_NOTHROW(choose_big_m_epsilon(1e4, SolverTolerances{1e-7, 1e-9}));
}

TEST_CASE("LP text for a one-variable instance") {
  MilpInstance inst;
  Variable x;
  x.name = "x";
  x.kind = VarKind::binary;
  x.ub = 1;
  inst.add_var(x);
  inst.constraints.push_back({"c0", {{0, 1.0}}, Sense::le, 1.0});
  const std::string golden = "Minimize\nSubject To\n c0: x <= 1\nBinaries\n x\nEnd\n";
  CHECK(to_lp(inst) == golden);
  CHECK(to_lp(parse_lp(golden)) == golden);

  const auto path = std::filesystem::temp_directory_path() / "sct_test_one.lp";
  export_lp(inst, path.string());
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  CHECK(ss.str() == golden);
  std::filesystem::remove(path);
}

TEST_CASE("LP export is deterministic and round-trips") {
  auto tasks = fx::staggered_center(1);
  for (auto& t : tasks) t.s.reset();
  const auto a = encode_ecu(tasks);
  const auto b = encode_ecu(tasks);
  CHECK(to_lp(a) == to_lp(b));
  const auto back = parse_lp(to_lp(a));
  CHECK(to_lp(back) == to_lp(a));
  CHECK(back.vars.size() == a.vars.size());
  CHECK(back.constraints.size() == a.constraints.size());
  CHECK(a.find_var("s_T2") >= 0);
  CHECK(a.vars[a.find_var("s_T2")].kind == VarKind::integer);

  CHECK_THROWS_AS(parse_lp("Minimize\nSubject To\n c0: x <== 1\nEnd\n"), Error);
  CHECK(lp_name("a b-c.1") == "a_b_c_1");
}

TEST_CASE("fixed-parameter ECU instances agree with the demand test") {
  std::mt19937_64 rng(7);
  int yes = 0, no = 0;
  for (int trial = 0; trial < 120; ++trial) {
    std::vector<SecureTask> set;
    const int n = std::uniform_int_distribution<int>(1, 3)(rng);
    for (int i = 0; i < n; ++i) set.push_back(small_task(rng, i, 3));
    const auto inst = encode_ecu(set);
    CHECK(parameter_vars(inst).empty());
    const bool milp = feasible(inst);
    CHECK(milp == edf_preemptive_schedulable(set).ok());
    (milp ? yes : no)++;
  }
  CHECK(yes >= 20);
  CHECK(no >= 20);
  MESSAGE("feasible " << yes << ", infeasible " << no);
}

TEST_CASE("fixed-parameter network instances agree with the non-preemptive test") {
  std::mt19937_64 rng(8);
  int yes = 0, no = 0;
  for (int trial = 0; trial < 120; ++trial) {
    std::vector<SecureTask> set;
    const int n = std::uniform_int_distribution<int>(1, 3)(rng);
    for (int i = 0; i < n; ++i) set.push_back(small_task(rng, i, 6));
    const Tick nrt = std::uniform_int_distribution<Tick>(0, 2)(rng);
    const auto inst = encode_network(set, nrt);
    const bool milp = feasible(inst);
    CHECK(milp == edf_nonpreemptive_schedulable(set, nrt).ok());
    (milp ? yes : no)++;
  }
  CHECK(yes >= 20);
  CHECK(no >= 20);
  MESSAGE("feasible " << yes << ", infeasible " << no);
}

TEST_CASE("single free deadline: ECU needs d >= c, bus needs d >= 2c") {
  auto t = fx::task("T", 3, 3, 10, 0, 10);
  t.d.reset();
  std::vector<SecureTask> v{t};
  const auto ecu = encode_ecu(v);
  const auto bus = encode_network(v, 0);
  for (Tick d = 1; d <= 10; ++d) {
    CHECK(feasible(ecu, {{"d_T", d}}) == (d >= 3));
    CHECK(feasible(bus, {{"d_T", d}}) == (d >= 6));
  }
  CHECK_THROWS_AS(complete_assignment(ecu, {}), Error);
}

TEST_CASE("free authentication offsets on the staggered example") {
  // T3 due within the first period: T1 and T2 must not both authenticate there
  auto tasks = fx::staggered_center(1);
  tasks[2] = fx::task("T3", 2, 3, 20, 0, 10, 1, 1, 0);
  for (auto& t : tasks) t.s.reset();
  const auto inst = encode_ecu(tasks);
  const auto pruned = prune(inst);
  int feasible_count = 0;
  for (int s1 = 0; s1 <= 1; ++s1)
    for (int s2 = 0; s2 <= 1; ++s2) {
      std::map<std::string, Tick> p{{"s_T1", s1}, {"s_T2", s2}, {"s_T3", 0}};
      auto fixed = tasks;
      fixed[0].s = s1;
      fixed[1].s = s2;
      fixed[2].s = 0;
      const bool ref = edf_preemptive_schedulable(fixed).ok();
      CHECK(feasible(inst, p) == ref);
      CHECK(feasible(pruned, p) == ref);
      CHECK(ref == (s1 + s2 > 0));
      feasible_count += ref;
    }
  CHECK(feasible_count == 3);
  // every frame extended cannot be scheduled for any s
  auto left = fx::staggered_left(1);
  CHECK_FALSE(feasible(encode_ecu(left)));
}

TEST_CASE("overloaded resources give an infeasible instance") {
  std::vector<SecureTask> v{fx::task("A", 6, 6, 10, 0, 10), fx::task("B", 6, 6, 10, 0, 10)};
  v[0].d.reset();
  const auto inst = encode_ecu(v);
  for (Tick d = 1; d <= 10; ++d) CHECK_FALSE(feasible(inst, {{"d_A", d}}));
  CHECK(inst.find_var("d_A") >= 0);
  CHECK(to_lp(prune(inst)).find("util_ecu") != std::string::npos);
}

TEST_CASE("pruning preserves the feasible parameter set") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 25; ++trial) {
    std::vector<SecureTask> set;
    for (int i = 0; i < 2; ++i) set.push_back(small_task(rng, i, 3));
    set[0].phi.reset();
    set[1].d.reset();
    const auto inst = encode_ecu(set);
    const auto pruned = prune(inst);
    CHECK(pruned.stats().variables < inst.stats().variables);
    CHECK(pruned.pruned_variables == inst.vars.size() - pruned.vars.size());
    CHECK(parameter_vars(pruned).size() == 2);
    for (Tick phi = 0; phi < set[0].p; ++phi)
      for (Tick d = 1; d <= set[1].p; ++d) {
        std::map<std::string, Tick> p{{"phi_t0", phi}, {"d_t1", d}};
        auto fixed = set;
        fixed[0].phi = phi;
        fixed[1].d = d;
        const bool ref = edf_preemptive_schedulable(fixed).ok();
        CHECK(feasible(pruned, p) == ref);
        if (phi % 3 == 0) CHECK(feasible(inst, p) == ref);
      }
  }
}

TEST_CASE("system encoding adds precedence and shared authentication rows") {
  auto s = fx::task("s", 1, 2, 10, 0, 10, {}, 1, {}, TaskKind::sensing);
  auto n = fx::task("n", 1, 2, 10, 0, 10, {}, 1, {}, TaskKind::message);
  auto c = fx::task("c", 1, 2, 10, 0, 10, {}, 1, {}, TaskKind::control);
  for (auto* t : {&s, &n, &c}) {
    t->phi.reset();
    t->d.reset();
  }
  SystemModel sys;
  sys.transactions.push_back(assemble_transaction("x", s, n, c, AuthPolicy{0, 1, 2}));
  for (auto* t : {&sys.transactions[0].sens, &sys.transactions[0].net, &sys.transactions[0].ctrl}) t->s.reset();
  sys.ecus = {{"E1", {"s"}}, {"E2", {"c"}}};
  sys.bus.messages = {"n"};
  EncodeOptions opt;
  opt.blended_objective = true;
  const auto inst = encode_system(sys, opt);
  const auto lp = to_lp(inst);
  for (const char* row : {"prec_sn_x", "prec_nc_x", "e2e_x", "s_sn_x", "s_nc_x", "dsum_x"})
    CHECK(lp.find(row) != std::string::npos);
  REQUIRE(inst.objective);
  CHECK_FALSE(inst.objective->terms.empty());

  std::map<std::string, Tick> good{{"phi_s", 0}, {"d_s", 2}, {"phi_n", 2}, {"d_n", 4},
                                   {"phi_c", 6}, {"d_c", 4}, {"s_s", 0}, {"s_n", 0}, {"s_c", 0}};
  CHECK(feasible(inst, good));
  auto bad = good;
  bad["phi_n"] = 1;  // released before the sensing deadline
  CHECK_FALSE(feasible(inst, bad));
  bad = good;
  bad["s_c"] = 1;  // control task authenticates a different job
  CHECK_FALSE(feasible(inst, bad));
  bad = good;
  bad["d_n"] = 3;  // 1 + 2 below the blocking-inclusive demand, and sum != bound
  CHECK_FALSE(feasible(inst, bad));
}
