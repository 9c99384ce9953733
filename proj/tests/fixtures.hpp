#pragma once

#include <random>
#include <string>
#include <vector>

#include "sct/model.hpp"

namespace fx {

using sct::SecureTask;
using sct::TaskKind;
using sct::Tick;

inline SecureTask task(const char* id, Tick c_reg, Tick c_ext, Tick p, Tick phi, Tick d,
                       std::optional<int> l = {}, int f = 1, std::optional<int> s = {},
                       TaskKind kind = TaskKind::sensing) {
  SecureTask t;
  t.id = id;
  t.kind = kind;
  t.c_reg = c_reg;
  t.c_ext = c_ext;
  t.p = p;
  t.phi = phi;
  t.d = d;
  t.l = l;
  t.f = f;
  t.s = l ? s.value_or(0) : s;
  return t;
}

// Three-task ECU example; k ticks per time unit. Every frame extended.
inline std::vector<SecureTask> staggered_left(Tick k = 10) {
  return {task("T1", 2 * k, 4 * k, 10 * k, 0, 10 * k, 1, 1, 0),
          task("T2", 2 * k, 4 * k, 10 * k, 0, 10 * k, 1, 1, 0),
          task("T3", 5 * k, 7 * k, 20 * k, 0, 20 * k, 1, 1, 0)};
}

// T1 and T2 authenticate every other period, T2 deferred by one period.
inline std::vector<SecureTask> staggered_center(Tick k = 10) {
  return {task("T1", 2 * k, 4 * k, 10 * k, 0, 10 * k, 2, 1, 0),
          task("T2", 2 * k, 4 * k, 10 * k, 0, 10 * k, 2, 1, 1),
          task("T3", 5 * k, 7 * k, 20 * k, 0, 20 * k, 1, 1, 0)};
}

inline std::vector<SecureTask> staggered_right(Tick k = 10) {
  return {task("T1", 2 * k, 4 * k, 10 * k, 0, 10 * k, 1, 1, 0),
          task("T2", 2 * k, 4 * k, 10 * k, 0, 10 * k, 4, 1, 2),
          task("T3", 5 * k, 7 * k, 20 * k, 0, 20 * k, 2, 1, 0)};
}

// Offset message pair where the legacy offset test is wrong (10 ticks/unit).
inline std::vector<SecureTask> offset_pair() {
  return {task("M1", 20, 20, 50, 20, 30, {}, 1, {}, TaskKind::message),
          task("M2", 21, 21, 100, 10, 100, {}, 1, {}, TaskKind::message)};
}

// Random fully parameterized task, p <= 40 from a divisor-friendly set so the
// testing sets stay small enough for exhaustive pair checks. Larger c_div
// gives shorter WCETs relative to the period.
inline SecureTask random_task(std::mt19937_64& rng, int i, bool authenticated, Tick c_div = 4) {
  static const Tick periods[] = {2, 4, 5, 8, 10, 20, 40};
  const Tick p = periods[std::uniform_int_distribution<int>(0, 6)(rng)];
  const Tick d = std::uniform_int_distribution<Tick>(1, p)(rng);
  const Tick phi = std::uniform_int_distribution<Tick>(0, p)(rng);
  const Tick c = std::uniform_int_distribution<Tick>(1, std::max<Tick>(1, p / c_div))(rng);
  const Tick dc = std::uniform_int_distribution<Tick>(0, std::max<Tick>(1, p / (c_div + 2)))(rng);
  std::string id = "t" + std::to_string(i);
  if (!authenticated) return task(id.c_str(), c, c, p, phi, d);
  const int l = std::uniform_int_distribution<int>(1, 4)(rng);
  const int f = std::uniform_int_distribution<int>(1, l)(rng);
  const int s = std::uniform_int_distribution<int>(0, l - f)(rng);
  return task(id.c_str(), c, c + dc, p, phi, d, l, f, s);
}

}  // namespace fx
