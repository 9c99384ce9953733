#include "sct/qoc_sim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <random>
#include <sstream>

#include "sct/error.hpp"

namespace sct {

namespace {

constexpr double kTol = 1e-9;

using Eigen::MatrixXd;
using Eigen::VectorXd;

bool is_pd(const MatrixXd& m) {
  if (m.size() == 0) return false;
  Eigen::LLT<MatrixXd> llt(m);
  return llt.info() == Eigen::Success;
}

MatrixXd psd_sqrt(const MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(m);
  VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

void check_cov(const MatrixXd& m, Eigen::Index dim, const char* name) {
  if (m.rows() != dim || m.cols() != dim)
    fail(ErrorCode::invalid_argument, std::string(name) + " has the wrong dimensions");
  if (!m.isApprox(m.transpose(), 1e-12) && !(m - m.transpose()).isZero(1e-12))
    fail(ErrorCode::invalid_argument, std::string(name) + " is not symmetric");
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(m);
  if (es.eigenvalues().minCoeff() < -1e-12) fail(ErrorCode::invalid_argument, std::string(name) + " is not PSD");
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

// Shared state of one closed-loop run.
class Loop {
 public:
  Loop(const PlantModel& p, const std::optional<AuthPolicy>& pol, std::uint64_t seed)
      : p_(p), pol_(pol), noise_(seed) {
    validate_plant(p);
    const auto n = p.A.rows(), q = p.C.rows();
    s_inv_ = is_pd(p.R) ? MatrixXd(p.R.inverse()) : MatrixXd::Identity(q, q);
    q_sqrt_ = psd_sqrt(p.Q);
    r_sqrt_ = psd_sqrt(p.R);
    x_ = p.x0.size() == n ? p.x0 : VectorXd::Zero(n);
    xh_ = VectorXd::Zero(n);
  }

  bool auth(int k) const { return pol_ && authenticated_step(*pol_, k); }
  double energy(const VectorXd& z) const { return z.dot(s_inv_ * z); }

  // One step; choose(k, e, r0) returns the residual the attacker
  // wants the controller to see at an unauthenticated step.
  template <class Choose>
  void step(int k, ClosedLoopTrace& t, Choose&& choose) {
    const auto n = p_.A.rows(), q = p_.C.rows();
    VectorXd w = q_sqrt_ * normals(n);
    VectorXd v = r_sqrt_ * normals(q);
    const VectorXd e = x_ - xh_;
    const VectorXd r0 = p_.C * e + v;
    VectorXd a = VectorXd::Zero(q);
    if (!auth(k)) a = choose(k, e, r0) - r0;
    const VectorXd z = r0 + a;
    history_.push_back(energy(z));
    if (history_.size() > static_cast<std::size_t>(p_.window)) history_.pop_front();
    double g = 0;
    for (double h : history_) g += h;
    const bool alarm = g > p_.threshold * (1 + kTol) + kTol;
    t.x.push_back(x_);
    t.xhat.push_back(xh_);
    t.e.push_back(e);
    t.e_norm.push_back(e.norm());
    t.a.push_back(a);
    t.g.push_back(g);
    t.authenticated.push_back(auth(k));
    t.alarm.push_back(alarm);
    if (alarm && t.first_alarm < 0) t.first_alarm = k;
    const VectorXd u = -p_.K * xh_;
    x_ = p_.A * x_ + p_.B * u + w;
    xh_ = p_.A * xh_ + p_.B * u + p_.L * z;
  }

  const PlantModel& plant() const { return p_; }
  const std::optional<AuthPolicy>& policy() const { return pol_; }
  const std::deque<double>& history() const { return history_; }

 private:
  VectorXd normals(Eigen::Index n) {
    VectorXd out(n);
    for (Eigen::Index i = 0; i < n; ++i) out(i) = gauss_(noise_);
    return out;
  }

  const PlantModel& p_;
  std::optional<AuthPolicy> pol_;
  std::mt19937_64 noise_;
  std::normal_distribution<double> gauss_{0.0, 1.0};
  MatrixXd s_inv_, q_sqrt_, r_sqrt_;
  VectorXd x_, xh_;
  std::deque<double> history_;
};

// Noise-free look-ahead used by the attacker: after choosing residual z at
// step k, can it stay below the threshold through the end of the next
// authenticated block, steering the error back at unauthenticated steps?
class Attacker {
 public:
  Attacker(const Loop& loop, const AttackOptions& opt)
      : loop_(loop), p_(loop.plant()), opt_(opt), rng_(opt.seed) {
    svd_ = Eigen::JacobiSVD<MatrixXd>(p_.L, Eigen::ComputeThinU | Eigen::ComputeThinV);
  }

  VectorXd choose(int k, const VectorXd& e, const VectorXd& r0) {
    (void)r0;
    const double b = std::max(0.0, limit() - used_before());
    const auto q = p_.C.rows();
    if (b <= 0) return VectorXd::Zero(q);
    VectorXd d;
    if (opt_.strategy == AttackStrategy::random) {
      std::normal_distribution<double> g;
      d = VectorXd(q);
      for (Eigen::Index i = 0; i < q; ++i) d(i) = g(rng_);
    } else {
      d = -p_.L.transpose() * (p_.A * e);
    }
    if (d.norm() < 1e-12) d = svd_.matrixV().col(0);
    d.normalize();
    const double lmax = std::sqrt(b / loop_.energy(d));
    auto objective = [&](double lam) { return (p_.A * e - p_.L * (lam * d)).norm(); };
    auto ok = [&](double lam) { return stealthy(k, e, lam * d); };

    if (opt_.strategy == AttackStrategy::random) {
      std::uniform_real_distribution<double> u(-lmax, lmax);
      double lam = u(rng_);
      for (int i = 0; i < 20; ++i, lam *= 0.5)
        if (ok(lam)) return lam * d;
      return steer_back(e, b);
    }

    constexpr int kGrid = 40;
    std::vector<double> lams;
    std::vector<bool> feas;
    for (int i = 0; i <= kGrid; ++i) {
      lams.push_back(-lmax + 2 * lmax * i / kGrid);
      feas.push_back(ok(lams.back()));
    }
    std::optional<double> best;
    auto consider = [&](double lam) {
      if (!best || objective(lam) > objective(*best) + 1e-15) best = lam;
    };
    for (int i = 0; i <= kGrid; ++i) {
      if (feas[i]) consider(lams[i]);
      if (i > 0 && feas[i] != feas[i - 1]) {
        double lo = lams[i - 1], hi = lams[i];
        if (!feas[i - 1]) std::swap(lo, hi);  // lo feasible
        for (int it = 0; it < 60; ++it) {
          const double mid = 0.5 * (lo + hi);
          (ok(mid) ? lo : hi) = mid;
        }
        consider(lo);
      }
    }
    if (best) return *best * d;
    return steer_back(e, b);
  }

 private:
  double limit() const { return p_.threshold * (1.0 - opt_.margin); }

  // energy of the window - 1 most recent residuals
  double used_before() const {
    const auto& h = loop_.history();
    double used = 0;
    const std::size_t keep = static_cast<std::size_t>(p_.window) - 1;
    for (std::size_t i = h.size() > keep ? h.size() - keep : 0; i < h.size(); ++i) used += h[i];
    return used;
  }

  VectorXd steer_back(const VectorXd& e, double budget) const {
    VectorXd z = svd_.solve(p_.A * e);
    const double en = loop_.energy(z);
    if (en > budget) z *= std::sqrt(std::max(0.0, budget) / en);
    return z;
  }

  bool stealthy(int k, const VectorXd& e, const VectorXd& z) const {
    std::deque<double> h = loop_.history();
    auto push = [&](double en) {
      h.push_back(en);
      if (h.size() > static_cast<std::size_t>(p_.window)) h.pop_front();
      double g = 0;
      for (double x : h) g += x;
      return g <= limit();
    };
    if (!push(loop_.energy(z))) return false;
    if (!loop_.policy()) return true;
    VectorXd ee = p_.A * e - p_.L * z;
    bool seen_auth = false;
    for (int j = k + 1;; ++j) {
      const bool a = loop_.auth(j);
      if (seen_auth && !a) return true;
      VectorXd zj;
      if (a) {
        seen_auth = true;
        zj = p_.C * ee;
      } else {
        double used = 0;
        for (std::size_t i = h.size() >= static_cast<std::size_t>(p_.window) ? 1 : 0; i < h.size(); ++i)
          used += h[i];
        zj = steer_back(ee, std::max(0.0, limit() - used));
      }
      if (!push(loop_.energy(zj))) return false;
      ee = p_.A * ee - p_.L * zj;
    }
  }

  const Loop& loop_;
  const PlantModel& p_;
  AttackOptions opt_;
  std::mt19937_64 rng_;
  Eigen::JacobiSVD<MatrixXd> svd_;
};

double max_before_alarm(const ClosedLoopTrace& t) {
  double m = 0;
  for (std::size_t k = 0; k < t.e_norm.size(); ++k) {
    if (t.first_alarm >= 0 && static_cast<int>(k) > t.first_alarm) break;
    m = std::max(m, t.e_norm[k]);
  }
  return m;
}

}  // namespace

void validate_plant(const PlantModel& p) {
  const auto n = p.A.rows();
  if (n == 0 || p.A.cols() != n) fail(ErrorCode::invalid_argument, "A must be square and nonempty");
  const auto m = p.B.cols(), q = p.C.rows();
  if (p.B.rows() != n || m == 0) fail(ErrorCode::invalid_argument, "B must have n rows");
  if (p.C.cols() != n || q == 0) fail(ErrorCode::invalid_argument, "C must have n columns");
  if (p.L.rows() != n || p.L.cols() != q) fail(ErrorCode::invalid_argument, "L must be n x q");
  if (p.K.rows() != m || p.K.cols() != n) fail(ErrorCode::invalid_argument, "K must be m x n");
  check_cov(p.Q, n, "Q");
  check_cov(p.R, q, "R");
  if (p.window < 1) fail(ErrorCode::invalid_argument, "detector window must be at least 1");
  if (!(p.threshold > 0)) fail(ErrorCode::invalid_argument, "detector threshold must be positive");
  if (p.x0.size() != 0 && p.x0.size() != n) fail(ErrorCode::invalid_argument, "x0 must have n entries");
}

const char* to_string(AttackStrategy s) {
  switch (s) {
    case AttackStrategy::none: return "none";
    case AttackStrategy::greedy: return "greedy";
    case AttackStrategy::random: return "random";
  }
  return "none";
}

AttackStrategy attack_strategy_from_string(const std::string& s) {
  for (auto v : {AttackStrategy::none, AttackStrategy::greedy, AttackStrategy::random})
    if (s == to_string(v)) return v;
  fail(ErrorCode::invalid_argument, "unknown attack strategy " + s);
}

bool authenticated_step(const AuthPolicy& pol, std::int64_t k) {
  const std::int64_t s = pol.s.value_or(0);
  return k >= s && (k - s) % pol.l < pol.f;
}

ClosedLoopTrace simulate_closed_loop(const PlantModel& plant, const std::optional<AuthPolicy>& policy,
                                     const AttackOptions& attack, int horizon, std::uint64_t seed) {
  if (horizon < 0) fail(ErrorCode::invalid_argument, "negative horizon");
  Loop loop(plant, policy, seed);
  Attacker atk(loop, attack);
  ClosedLoopTrace t;
  for (int k = 0; k < horizon; ++k)
    loop.step(k, t, [&](int kk, const VectorXd& e, const VectorXd& r0) -> VectorXd {
      if (attack.strategy == AttackStrategy::none) return r0;
      return atk.choose(kk, e, r0);
    });
  return t;
}

ClosedLoopTrace simulate_closed_loop(const PlantModel& plant, const std::optional<AuthPolicy>& policy,
                                     const std::vector<VectorXd>& injections, std::uint64_t seed) {
  Loop loop(plant, policy, seed);
  const auto q = plant.C.rows();
  for (std::size_t k = 0; k < injections.size(); ++k) {
    if (injections[k].size() != q) fail(ErrorCode::invalid_argument, "injection has the wrong size");
    if (loop.auth(static_cast<int>(k)) && !injections[k].isZero(0))
      fail(ErrorCode::invalid_argument, "injection at authenticated step " + std::to_string(k));
  }
  ClosedLoopTrace t;
  for (std::size_t k = 0; k < injections.size(); ++k)
    loop.step(static_cast<int>(k), t,
              [&](int kk, const VectorXd&, const VectorXd& r0) -> VectorXd { return r0 + injections[kk]; });
  return t;
}

std::uint64_t sample_noise_seed(std::uint64_t seed, int i) { return mix(seed, 2 * static_cast<std::uint64_t>(i)); }

double estimate_qoc_bound_at(const PlantModel& plant, const AuthPolicy& policy, int samples, int horizon,
                             std::uint64_t seed) {
  if (samples < 1) fail(ErrorCode::invalid_argument, "samples must be at least 1");
  if (policy.f < 1 || policy.f > policy.l) fail(ErrorCode::invalid_argument, "need 1 <= f <= l");
  double best = 0;
  for (int i = 0; i < samples; ++i) {
    AttackOptions opt;
    opt.strategy = i == 0 ? AttackStrategy::greedy : AttackStrategy::random;
    opt.seed = mix(seed, 2 * static_cast<std::uint64_t>(i) + 1);
    best = std::max(best, max_before_alarm(simulate_closed_loop(plant, policy, opt, horizon,
                                                                sample_noise_seed(seed, i))));
  }
  return best;
}

double estimate_qoc_bound(const PlantModel& plant, int l, int f, int samples, int horizon, std::uint64_t seed) {
  if (f < 1 || f > l) fail(ErrorCode::invalid_argument, "need 1 <= f <= l");
  double best = 0;
  for (int ll = f; ll <= l; ++ll)
    best = std::max(best, estimate_qoc_bound_at(plant, AuthPolicy{0, f, ll}, samples, horizon, seed));
  return best;
}

int observability_index(const MatrixXd& A, const MatrixXd& C) {
  const auto n = A.rows();
  MatrixXd obs(0, n);
  MatrixXd block = C;
  for (Eigen::Index k = 1; k <= n; ++k) {
    obs.conservativeResize(obs.rows() + C.rows(), n);
    obs.bottomRows(C.rows()) = block;
    Eigen::FullPivLU<MatrixXd> lu(obs);
    lu.setThreshold(1e-9);
    if (lu.rank() == n) return static_cast<int>(k);
    block = block * A;
  }
  fail(ErrorCode::invalid_argument, "(A, C) is not observable");
}

int minimal_block_length(const PlantModel& plant) {
  const int psi = observability_index(plant.A, plant.C);
  Eigen::EigenSolver<MatrixXd> es(plant.A);
  int unstable = 0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
    if (std::abs(es.eigenvalues()(i)) >= 1.0 - 1e-12) ++unstable;
  return std::min(psi, unstable);
}

std::string closed_loop_csv(const ClosedLoopTrace& t) {
  std::ostringstream os;
  os.precision(12);
  const auto n = t.x.empty() ? 0 : t.x.front().size();
  const auto q = t.a.empty() ? 0 : t.a.front().size();
  os << "k,authenticated,alarm,g,e_norm";
  for (Eigen::Index i = 0; i < n; ++i) os << ",x" << i;
  for (Eigen::Index i = 0; i < n; ++i) os << ",e" << i;
  for (Eigen::Index i = 0; i < q; ++i) os << ",a" << i;
  os << "\n";
  for (std::size_t k = 0; k < t.x.size(); ++k) {
    os << k << ',' << int(t.authenticated[k]) << ',' << int(t.alarm[k]) << ',' << t.g[k] << ',' << t.e_norm[k];
    for (Eigen::Index i = 0; i < n; ++i) os << ',' << t.x[k](i);
    for (Eigen::Index i = 0; i < n; ++i) os << ',' << t.e[k](i);
    for (Eigen::Index i = 0; i < q; ++i) os << ',' << t.a[k](i);
    os << "\n";
  }
  return os.str();
}

}  // namespace sct
