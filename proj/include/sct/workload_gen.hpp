#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "sct/model.hpp"

namespace sct {

enum class PeriodColumn { ecu, bus };

struct PeriodShare {
  std::int64_t period_ms = 0;
  double share = 0.0;
};

/// Automotive benchmark period distribution after redistributing the
/// angle-synchronous and 1/2 ms workload. The 1000 ms row is ECU only.
std::span<const PeriodShare> period_table(PeriodColumn column);

std::int64_t sample_period_ms(std::mt19937_64& rng, PeriodColumn column);

/// Worst-case standard CAN frame with 64-bit payload and bit stuffing.
inline constexpr int kCanFrameBits = 135;

/// Worst-case frame duration in ticks, rounded up. Any payload up to 64 bits
/// occupies a full frame. Throws on rate <= 0 or payload outside [0, 64].
Tick frame_time(int payload_bits, double rate_bps, std::int64_t ticks_per_second);

/// n utilizations summing to total (UUniFast).
std::vector<double> uunifast(std::mt19937_64& rng, std::size_t n, double total);

struct GenSpec {
  int n_transactions = 10;
  int ecu_count = 4;
  double target_ecu_utilization = 0.5;
  double target_bus_utilization = 0.5;
  /// Fixed bus rate; when unset the rate is derived from the target.
  std::optional<double> bus_rate_bps;
  /// Fraction of tasks/messages belonging to control transactions.
  double qoc_share = 0.35;
  int l_min = 1, l_max = 5;
  int f_min = 1, f_max = 3;
  /// Authentication overhead on ECUs as a fraction of c_reg.
  double mac_cost_min = 0.1, mac_cost_max = 0.5;
  std::int64_t ticks_per_ms = 1000;
  std::uint64_t seed = 1;
};

/// Throws Error(invalid_argument) for malformed specs and
/// Error(infeasible_input) when a target cannot be reached.
void validate_gen_spec(const GenSpec& spec);

/// Synthetic system: transactions with phi/d/s unset, background tasks and
/// messages fully parameterized (phi = 0, d = p). Extended messages take a
/// second full frame for the MAC. Utilization (including authentication)
/// is within 0.02 of the targets on every ECU and the bus.
SystemModel generate(const GenSpec& spec);

struct CaseStudySpec {
  double ecu_utilization = 0.4;
  int ecu_count = 8;
  int background_tasks_per_ecu = 8;
  int background_frames = 70;
  /// Sensor frames at 20 ms beyond the three transaction messages.
  int extra_sensor_frames = 5;
  double bus_rate_bps = 1e6;
  std::int64_t ticks_per_ms = 1000;
  std::uint64_t seed = 7;
};

/// Three transactions at 20 ms (plants ACC l=5 f=3, LK l=10 f=2,
/// DM l=10 f=1) on ECUs 0..2, background load on all ECUs and the bus.
SystemModel case_study_system(const CaseStudySpec& spec = {});

}  // namespace sct
