#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sct/model.hpp"

namespace sct {

/// Discrete plant with observer-based feedback and a windowed residual
/// detector:
///   x+ = A x + B u + w,   y = C x + v,   y~ = y + a
///   xh+ = A xh + B u + L (y~ - C xh),   u = -K xh
///   g_k = sum over the last `window` steps of z' S^-1 z, z = y~ - C xh
/// with S = R when R is positive definite, identity otherwise.
struct PlantModel {
  std::string id;
  Eigen::MatrixXd A, B, C;
  Eigen::MatrixXd Q;  // process noise covariance (n x n), may be zero
  Eigen::MatrixXd R;  // measurement noise covariance (q x q), may be zero
  Eigen::MatrixXd L;  // observer gain (n x q)
  Eigen::MatrixXd K;  // feedback gain (m x n)
  int window = 1;
  double threshold = 1.0;
  Eigen::VectorXd x0;  // initial state; the estimate starts at zero

  int n() const { return static_cast<int>(A.rows()); }
};

/// Throws Error(invalid_argument) on inconsistent dimensions, a window
/// below 1, a non-positive threshold, or a non-symmetric/negative noise
/// covariance.
void validate_plant(const PlantModel& plant);

enum class AttackStrategy { none, greedy, random };

const char* to_string(AttackStrategy s);
AttackStrategy attack_strategy_from_string(const std::string& s);

struct AttackOptions {
  AttackStrategy strategy = AttackStrategy::greedy;
  /// Fraction of the threshold the attacker keeps in reserve.
  double margin = 0.0;
  /// Random draws only.
  std::uint64_t seed = 1;
};

struct ClosedLoopTrace {
  std::vector<Eigen::VectorXd> x, xhat, e, a;
  std::vector<double> e_norm, g;
  std::vector<bool> authenticated, alarm;
  int first_alarm = -1;
};

/// Step k is authenticated iff the policy's pattern marks job k extended;
/// without a policy nothing is authenticated. Noise is drawn from `seed`
/// independently of the attack, so runs with different strategies share
/// the same noise realization.
ClosedLoopTrace simulate_closed_loop(const PlantModel& plant, const std::optional<AuthPolicy>& policy,
                                     const AttackOptions& attack, int horizon, std::uint64_t seed);

/// Replays a given injection sequence. Throws Error(invalid_argument) when
/// any injection is nonzero at an authenticated step or has the wrong size.
ClosedLoopTrace simulate_closed_loop(const PlantModel& plant, const std::optional<AuthPolicy>& policy,
                                     const std::vector<Eigen::VectorXd>& injections, std::uint64_t seed);

bool authenticated_step(const AuthPolicy& policy, std::int64_t k);

/// Largest estimation error norm reached before the first alarm, over one
/// greedy run and samples - 1 random runs, taking the maximum over every
/// l' in [f, l] so the estimate is nondecreasing in l. A lower estimate of
/// the true bound. Throws Error(invalid_argument) when f > l, f < 1 or
/// samples < 1.
double estimate_qoc_bound(const PlantModel& plant, int l, int f, int samples, int horizon,
                          std::uint64_t seed);

/// Noise seed of sample i in the estimates above (shared across policies).
std::uint64_t sample_noise_seed(std::uint64_t seed, int i);

/// Estimate for one policy only (no maximum over shorter distances).
double estimate_qoc_bound_at(const PlantModel& plant, const AuthPolicy& policy, int samples,
                             int horizon, std::uint64_t seed);

/// Smallest k with rank [C; CA; ...; CA^(k-1)] = n.
int observability_index(const Eigen::MatrixXd& A, const Eigen::MatrixXd& C);

/// min(observability index, number of eigenvalues with |lambda| >= 1).
/// Zero means no block authentication is required. Throws
/// Error(invalid_argument) when (A, C) is not observable.
int minimal_block_length(const PlantModel& plant);

/// CSV with header k,authenticated,alarm,g,e_norm,x0..,e0..,a0..
std::string closed_loop_csv(const ClosedLoopTrace& trace);

}  // namespace sct
