#include "doctest.h"
#include "fixtures.hpp"
#include "sct/demand.hpp"
#include "sct/error.hpp"

using namespace sct;

namespace {

std::vector<SecureTask> one(SecureTask t) { return {t}; }

using fx::random_task;

std::pair<std::int64_t, std::int64_t> enumerate(const SecureTask& t, Interval iv) {
  std::int64_t reg = 0, ext = 0;
  for (std::int64_t q = 0; *t.phi + q * t.p <= iv.t2; ++q) {
    const Tick a = *t.phi + q * t.p;
    if (a >= iv.t1 && a + *t.d <= iv.t2) {
      ++reg;
      if (t.l && t.is_extended_job(q)) ++ext;
    }
  }
  return {reg, ext};
}

}  // namespace

TEST_CASE("count_regular examples") {
  CHECK(count_regular(fx::task("T", 1, 1, 10, 0, 10), {0, 20}) == 2);
  CHECK(count_regular(fx::task("M1", 2, 2, 5, 2, 3), {2, 5}) == 1);
  CHECK(count_regular(fx::task("T", 1, 1, 5, 0, 3), {0, 2}) == 0);
  auto unset = fx::task("T", 1, 1, 5, 0, 3);
  unset.phi.reset();
  CHECK_THROWS_AS(count_regular(unset, {0, 2}), Error);
}

TEST_CASE("count_extended examples") {
  CHECK(count_extended(fx::task("T", 1, 2, 10, 0, 10, 2, 2, 0), {0, 40}) == 4);
  CHECK(count_extended(fx::task("T", 1, 1, 10, 0, 10), {0, 40}) == 0);
  CHECK(count_extended(fx::task("T", 1, 2, 10, 0, 10, 2, 1, 1), {0, 20}) == 1);
}

TEST_CASE("demand examples") {
  auto c = fx::staggered_center(1);
  CHECK(demand(c[0], {0, 20}) == 6);
  CHECK(demand(fx::task("B", 5, 5, 10, 0, 10), {0, 10}) == 5);
  CHECK(demand(c, {0, 20}) == 19);
  CHECK(demand(fx::staggered_center(10), {0, 200}) == 190);
}

TEST_CASE("testing sets") {
  auto ts = testing_sets(one(fx::task("T", 1, 1, 5, 0, 3)));
  CHECK(ts.t_max == 13);
  CHECK(ts.arrivals == std::vector<Tick>{0, 5, 10});
  CHECK(ts.deadlines == std::vector<Tick>{3, 8, 13});
  auto c = testing_sets(fx::staggered_center(1));
  CHECK(c.arrivals == std::vector<Tick>{0, 10, 20, 30, 40, 50, 60});
  CHECK_THROWS_AS(testing_sets(std::vector<SecureTask>{}), Error);
}

TEST_CASE("preemptive verdicts on the staggered example") {
  auto left = edf_preemptive_schedulable(fx::staggered_left());
  CHECK(left.status == VerdictStatus::not_schedulable);
  REQUIRE(left.witness);
  CHECK(left.demand > left.supply);
  CHECK(utilization(fx::staggered_left()) == doctest::Approx(1.15));
  CHECK(edf_preemptive_schedulable(fx::staggered_center()).status == VerdictStatus::schedulable);
  CHECK(edf_preemptive_schedulable(fx::staggered_right()).status == VerdictStatus::schedulable);
  CHECK(edf_preemptive_schedulable(std::vector<SecureTask>{}).status == VerdictStatus::schedulable);
}

TEST_CASE("non-preemptive condition on the offset pair") {
  auto v = edf_nonpreemptive_schedulable(fx::offset_pair(), 0);
  CHECK(v.status == VerdictStatus::rejected);
  REQUIRE(v.witness);
  CHECK(v.witness->t1 == 20);
  CHECK(v.witness->t2 == 50);
  CHECK(v.demand == 20);
  CHECK(v.supply == 30 - 21);
}

TEST_CASE("non-preemptive single message needs d >= 2c") {
  for (Tick d = 1; d <= 10; ++d) {
    auto v = edf_nonpreemptive_schedulable(one(fx::task("M", 3, 3, 10, 0, d)), 0);
    if (d >= 6) CHECK(v.status == VerdictStatus::schedulable);
    else CHECK(v.status == VerdictStatus::rejected);
  }
  CHECK(edf_nonpreemptive_schedulable(std::vector<SecureTask>{}, 5).ok());
}

TEST_CASE("sporadic non-preemptive test") {
  CHECK(edf_sporadic_np_schedulable(one(fx::task("M", 2, 2, 5, 0, 5)), 0).ok());
  auto over = edf_sporadic_np_schedulable(
      std::vector<SecureTask>{fx::task("a", 3, 3, 5, 0, 5), fx::task("b", 3, 3, 5, 0, 5)}, 0);
  CHECK(over.status == VerdictStatus::not_schedulable);

  auto stripped = fx::offset_pair();
  for (auto& m : stripped) m.phi = 0;
  auto v = edf_sporadic_np_schedulable(stripped, 0);
  CHECK(v.status == VerdictStatus::not_schedulable);
  REQUIRE(v.witness);
  CHECK(v.witness->t1 == 0);
  CHECK(v.witness->t2 == 30);

  CHECK_THROWS_AS(edf_sporadic_np_schedulable(fx::offset_pair(), 0), Error);
}

TEST_CASE("offset-extended legacy test accepts the offset pair") {
  CHECK(offset_extended_np_test(fx::offset_pair()).ok());
  CHECK(offset_extended_np_test(std::vector<SecureTask>{}).ok());
  CHECK(offset_extended_np_test(one(fx::task("M", 2, 2, 5, 0, 5))).ok());
}

TEST_CASE("apply_jitter") {
  auto t = fx::task("T", 1, 1, 10, 0, 10);
  std::vector<Tick> j{2};
  CHECK(*apply_jitter(one(t), j)[0].d == 8);
  std::vector<Tick> z{0};
  CHECK(apply_jitter(one(t), z)[0] == t);
  auto t3 = fx::task("T", 1, 1, 10, 0, 3);
  std::vector<Tick> j3{3};
  CHECK_THROWS_AS(apply_jitter(one(t3), j3), Error);
}

TEST_CASE("counting formulas match enumeration on testing-set intervals") {
  std::mt19937_64 rng(11);
  int checked = 0;
  for (int trial = 0; trial < 150; ++trial) {
    std::vector<SecureTask> set;
    const int n = std::uniform_int_distribution<int>(1, 3)(rng);
    for (int i = 0; i < n; ++i) set.push_back(random_task(rng, i, true));
    auto ts = testing_sets(set);
    for (Tick t1 : ts.arrivals)
      for (Tick t2 : ts.deadlines) {
        if (t1 >= t2) continue;
        for (const auto& t : set) {
          auto [reg, ext] = enumerate(t, {t1, t2});
          REQUIRE(count_regular(t, {t1, t2}) == reg);
          REQUIRE(count_extended(t, {t1, t2}) == ext);
          ++checked;
        }
      }
  }
  CHECK(checked > 1000);
}

TEST_CASE("demand is monotone under interval inclusion") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    auto t = random_task(rng, 0, true);
    std::uniform_int_distribution<Tick> pt(0, 150);
    Tick a = pt(rng), b = pt(rng);
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    Tick a2 = std::max<Tick>(0, a - pt(rng) / 3), b2 = b + pt(rng) / 3;
    CHECK(demand(t, {a, b}) <= demand(t, {a2, b2}));
  }
}

TEST_CASE("sweep verdicts agree with pairwise evaluation") {
  std::mt19937_64 rng(23);
  int failing = 0;
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<SecureTask> set;
    const int n = std::uniform_int_distribution<int>(1, 4)(rng);
    for (int i = 0; i < n; ++i) set.push_back(random_task(rng, i, trial % 2 == 0));
    auto fast = edf_preemptive_schedulable(set);
    auto slow = demand_check_reference(set, 0, VerdictStatus::not_schedulable);
    REQUIRE(fast.status == slow.status);
    CHECK(fast.witness == slow.witness);
    if (!fast.ok()) {
      ++failing;
      CHECK(fast.demand > fast.supply);
    }

    Tick b = 0;
    for (auto& t : set) b = std::max(b, t.c_ext);
    auto np = edf_nonpreemptive_schedulable(set, 0);
    auto np_ref = demand_check_reference(set, b, VerdictStatus::rejected);
    REQUIRE(np.status == np_ref.status);
    CHECK(np.witness == np_ref.witness);
  }
  CHECK(failing > 10);
}
