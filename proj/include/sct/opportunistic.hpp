#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sct/edf_sim.hpp"
#include "sct/model.hpp"

namespace sct {

/// Background frames competing for the bus. Arrivals come from independent
/// streams, each respecting the minimum inter-arrival time; the number of
/// streams is the largest that keeps the worst-case load under the cap.
struct SporadicTrafficModel {
  Tick min_interarrival = 0;
  Tick frame_time = 0;
  double bandwidth_cap = 0.0;
  std::uint64_t seed = 1;
};

/// Sporadic frames released before the horizon, in release order.
std::vector<ExtraJob> sporadic_arrivals(const SporadicTrafficModel& model, Tick horizon);

/// w * J(dl, f) with dl = floor(min(t - prev, next - t) / p). Without a
/// previous authentication only next - t counts. Zero when dl is 0 or the
/// curve has no entry for (dl, f); dl beyond the table uses its last entry.
/// Without a curve the reward is w * dl.
double compute_reward(Tick t, std::optional<Tick> prev_auth, Tick next_auth, Tick p,
                      const QoCCurve* curve, int f, double weight);

struct OpportunisticConfig {
  /// One weight per transaction, in system order; empty means all 1.
  std::vector<double> weights;
  /// Keyed by plant id (or transaction id when the plant id is empty).
  std::map<std::string, QoCCurve> curves;
  Tick horizon = 0;
};

struct PlantMetrics {
  std::string plant_id;
  int l = 1;
  int f = 1;
  double l_hat = 0.0;
  std::size_t periodic_blocks = 0;
  std::size_t opportunistic = 0;
};

struct OpportunisticMetrics {
  std::map<std::string, PlantMetrics> plants;  // by transaction id
  double sporadic_utilization = 0.0;
  double bus_utilization_before = 0.0;
  double bus_utilization_after = 0.0;
  double bus_utilization_delta = 0.0;
  std::map<std::string, double> ecu_utilization_delta;
  std::size_t periodic_misses = 0;
  /// False when the replay disturbed any periodic job.
  bool valid = true;
};

struct OpportunisticAuth {
  std::string transaction;
  std::int64_t job = 0;
  double reward = 0.0;
  Tick sign_start = 0;
  Tick frame_start = 0;
  Tick verify_end = 0;
};

struct OpportunisticResult {
  OpportunisticMetrics metrics;
  std::vector<OpportunisticAuth> auths;
  /// Replay with sporadic frames and the inserted MAC work.
  SystemTraces traces;
};

/// Inserts extra MACs for unauthenticated sensing jobs into idle time of
/// the sending ECU, bus and receiving ECU. Each piece fits one idle
/// interval of the baseline schedule, so periodic jobs run exactly as
/// before; the replay checks this. The whole chain must end within the
/// sensing job's period. Contention for the bus goes to the earliest slot,
/// then highest reward, then lower transaction index.
///
/// Throws Error(infeasible_input) when the system does not pass the demand
/// analysis or misses deadlines with the sporadic traffic, and
/// Error(invalid_argument) on a weight count mismatch, a non-positive
/// horizon, or sporadic frames longer than the bus blocking bound.
OpportunisticResult run_opportunistic(const SystemModel& sys, const SporadicTrafficModel& sporadic,
                                      const OpportunisticConfig& config);

/// Mean distance (in jobs) between consecutive authentication points, from
/// sorted job indices. Returns fallback with fewer than two points.
double mean_gap(const std::vector<std::int64_t>& points, double fallback);

}  // namespace sct
