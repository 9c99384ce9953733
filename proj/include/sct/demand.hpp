#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sct/model.hpp"

namespace sct {

struct Interval {
  Tick t1 = 0;
  Tick t2 = 0;
  bool operator==(const Interval&) const = default;
};

enum class VerdictStatus { schedulable, rejected, not_schedulable };

const char* to_string(VerdictStatus s);

struct Verdict {
  VerdictStatus status = VerdictStatus::schedulable;
  std::optional<Interval> witness;
  Tick demand = 0;   // demand inside the witness interval
  Tick supply = 0;   // t2 - t1 - blocking for that interval
  bool ok() const { return status == VerdictStatus::schedulable; }
};

/// Jobs with arrival >= t1 and deadline <= t2.
std::int64_t count_regular(const SecureTask& t, Interval iv);
/// Extended frames with arrival >= t1 and deadline <= t2; 0 when l is unset.
std::int64_t count_extended(const SecureTask& t, Interval iv);
/// c_reg * count_regular + delta_c * count_extended.
Tick demand(const SecureTask& t, Interval iv);
Tick demand(std::span<const SecureTask> tasks, Interval iv);

struct TestingSets {
  std::vector<Tick> arrivals;
  std::vector<Tick> deadlines;
  Tick t_max = 0;
};

TestingSets testing_sets(std::span<const SecureTask> tasks);

/// Long-run utilization counting extended frames at rate f/l.
double utilization(std::span<const SecureTask> tasks);

/// Exact preemptive EDF test on one ECU. NOT_SCHEDULABLE carries the
/// violating interval ending earliest (ties: the shortest one).
Verdict edf_preemptive_schedulable(std::span<const SecureTask> tasks);

/// Sufficient non-preemptive EDF test; blocking term is
/// max(max c_ext, c_max_nrt). Failure is REJECTED, not a proof of a miss.
Verdict edf_nonpreemptive_schedulable(std::span<const SecureTask> msgs, Tick c_max_nrt);

/// Demand condition with an explicit blocking term (0 for preemptive
/// resources), same sweep as the two tests above.
Verdict demand_check(std::span<const SecureTask> tasks, Tick blocking, VerdictStatus on_failure);

/// Slow pairwise evaluation of the same condition over the testing sets,
/// kept as an independent route for tests.
Verdict demand_check_reference(std::span<const SecureTask> tasks, Tick blocking,
                               VerdictStatus on_failure);

/// Exact test for sporadic (offset-free) messages with single WCET c_ext.
/// Throws Error(invalid_argument) if any message has a nonzero offset.
Verdict edf_sporadic_np_schedulable(std::span<const SecureTask> msgs, Tick c_max_nrt);

/// Legacy offset extension of the sporadic test (d replaced by d + phi).
/// Known to be unsound; kept to reproduce the counterexample.
Verdict offset_extended_np_test(std::span<const SecureTask> msgs, Tick c_max_nrt = 0);

/// Copies with d := d - j. Throws when j >= d or sizes differ.
std::vector<SecureTask> apply_jitter(std::span<const SecureTask> tasks,
                                     std::span<const Tick> jitters);

}  // namespace sct
