#include "sct/demand.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "sct/error.hpp"

namespace sct {

namespace {

void require_params(const SecureTask& t) {
  if (!t.phi || !t.d)
    fail(ErrorCode::unset_parameter, "task " + t.id + ": offset or deadline unset");
  if (t.l && !t.s)
    fail(ErrorCode::unset_parameter, "task " + t.id + ": s unset");
}

void require_interval(Interval iv) {
  if (iv.t1 >= iv.t2)
    fail(ErrorCode::invalid_argument, "demand interval needs t1 < t2");
}

// Jobs of a strided sequence (first arrival a0, stride q, relative deadline d)
// with arrival >= t1 and deadline <= t2.
std::int64_t count_strided(Tick a0, Tick q, Tick d, Tick t1, Tick t2) {
  const std::int64_t last = floor_div(t2 - a0 - d, q);
  const std::int64_t first = std::max<std::int64_t>(0, ceil_div(t1 - a0, q));
  return std::max<std::int64_t>(0, last - first + 1);
}

struct Job {
  Tick arrival;
  Tick deadline;
  Tick cost;
};

std::vector<Job> jobs_up_to(std::span<const SecureTask> tasks, Tick horizon) {
  std::vector<Job> jobs;
  for (const auto& t : tasks) {
    for (std::int64_t q = 0;; ++q) {
      const Tick a = *t.phi + q * t.p;
      if (a + *t.d > horizon) break;
      jobs.push_back({a, a + *t.d, t.job_cost(q)});
    }
  }
  return jobs;
}

// Range add / range max over a fixed array, plus "leftmost index in range
// whose value exceeds a threshold".
class MaxTree {
 public:
  explicit MaxTree(const std::vector<Tick>& init) : n_(init.size()) {
    size_ = 1;
    while (size_ < n_) size_ <<= 1;
    mx_.assign(2 * size_, kNeg);
    lz_.assign(2 * size_, 0);
    for (std::size_t i = 0; i < n_; ++i) mx_[size_ + i] = init[i];
    for (std::size_t i = size_ - 1; i >= 1; --i) mx_[i] = std::max(mx_[2 * i], mx_[2 * i + 1]);
  }

  void add(std::size_t lo, std::size_t hi, Tick v) {
    if (lo < hi) add(1, 0, size_, lo, hi, v);
  }

  // Leftmost index in [lo, hi) with value > thr, or npos.
  std::size_t first_above(std::size_t lo, std::size_t hi, Tick thr) const {
    if (lo >= hi) return npos;
    return find(1, 0, size_, lo, hi, thr, 0);
  }

  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

 private:
  static constexpr Tick kNeg = std::numeric_limits<Tick>::min() / 4;

  void add(std::size_t node, std::size_t l, std::size_t r, std::size_t lo, std::size_t hi, Tick v) {
    if (hi <= l || r <= lo) return;
    if (lo <= l && r <= hi) {
      mx_[node] += v;
      lz_[node] += v;
      return;
    }
    const std::size_t m = (l + r) / 2;
    add(2 * node, l, m, lo, hi, v);
    add(2 * node + 1, m, r, lo, hi, v);
    mx_[node] = std::max(mx_[2 * node], mx_[2 * node + 1]) + lz_[node];
  }

  std::size_t find(std::size_t node, std::size_t l, std::size_t r, std::size_t lo, std::size_t hi,
                   Tick thr, Tick pending) const {
    if (hi <= l || r <= lo) return npos;
    if (mx_[node] + pending <= thr) return npos;
    if (r - l == 1) return l < n_ ? l : npos;
    const std::size_t m = (l + r) / 2;
    const Tick down = pending + lz_[node];
    std::size_t got = find(2 * node, l, m, lo, hi, thr, down);
    if (got != npos) return got;
    return find(2 * node + 1, m, r, lo, hi, thr, down);
  }

  std::size_t n_;
  std::size_t size_;
  std::vector<Tick> mx_;
  std::vector<Tick> lz_;
};

// Work per pattern period versus its length, exactly. Returns (W, L).
std::pair<__int128, __int128> pattern_load(std::span<const SecureTask> tasks) {
  const Tick L = pattern_period(tasks);
  __int128 w = 0;
  for (const auto& t : tasks) {
    w += static_cast<__int128>(t.c_reg) * (L / t.p);
    if (t.l) w += static_cast<__int128>(t.delta_c()) * t.f * (L / (t.p * *t.l));
  }
  return {w, L};
}

std::optional<Verdict> overload_verdict(std::span<const SecureTask> tasks, Tick blocking,
                                        VerdictStatus on_failure) {
  const auto [w, L] = pattern_load(tasks);
  if (w <= L) return std::nullopt;
  Tick phi_max = 0, d_max = 0;
  for (const auto& t : tasks) {
    phi_max = std::max(phi_max, *t.phi);
    d_max = std::max(d_max, *t.d);
  }
  // From phi_max + L on, every task is past its first authenticated block,
  // so k pattern periods of arrivals carry exactly k*W work and finish their
  // deadlines inside the window; k(W - L) > d_max + blocking overflows it.
  const __int128 k = (d_max + blocking) / (w - L) + 1;
  const Tick start = phi_max + static_cast<Tick>(L);
  Verdict v;
  v.status = on_failure;
  v.witness = Interval{start, static_cast<Tick>(start + k * L + d_max)};
  v.demand = demand(tasks, *v.witness);
  v.supply = v.witness->t2 - v.witness->t1 - blocking;
  return v;
}

Verdict sweep_check(std::span<const SecureTask> tasks, Tick blocking, VerdictStatus on_failure) {
  Verdict ok;
  if (tasks.empty()) return ok;
  for (const auto& t : tasks) require_params(t);
  if (auto v = overload_verdict(tasks, blocking, on_failure)) return *v;

  const TestingSets ts = testing_sets(tasks);
  std::vector<Job> jobs = jobs_up_to(tasks, ts.t_max);
  const auto& dl = ts.deadlines;
  std::vector<Tick> init(dl.size());
  for (std::size_t i = 0; i < dl.size(); ++i) init[i] = -dl[i];
  MaxTree tree(init);

  std::sort(jobs.begin(), jobs.end(),
            [](const Job& a, const Job& b) { return a.arrival > b.arrival; });
  auto index_of = [&](Tick t) {
    return static_cast<std::size_t>(std::lower_bound(dl.begin(), dl.end(), t) - dl.begin());
  };

  std::optional<Interval> best;
  std::size_t next = 0;
  Tick min_deadline = std::numeric_limits<Tick>::max();
  for (auto it = ts.arrivals.rbegin(); it != ts.arrivals.rend(); ++it) {
    const Tick t1 = *it;
    while (next < jobs.size() && jobs[next].arrival >= t1) {
      tree.add(index_of(jobs[next].deadline), dl.size(), jobs[next].cost);
      min_deadline = std::min(min_deadline, jobs[next].deadline);
      ++next;
    }
    if (min_deadline == std::numeric_limits<Tick>::max()) continue;
    const std::size_t lo = index_of(std::max(min_deadline, t1 + 1));
    std::size_t hi = dl.size();
    if (best) hi = std::min(hi, index_of(best->t2));  // only strictly earlier t2 can win
    const std::size_t hit = tree.first_above(lo, hi, -t1 - blocking);
    if (hit != MaxTree::npos) best = Interval{t1, dl[hit]};
  }
  if (!best) return ok;
  Verdict v;
  v.status = on_failure;
  v.witness = best;
  v.demand = demand(tasks, *best);
  v.supply = best->t2 - best->t1 - blocking;
  return v;
}

Tick max_blocking(std::span<const SecureTask> msgs, Tick c_max_nrt) {
  Tick b = c_max_nrt;
  for (const auto& m : msgs) b = std::max(b, m.c_ext);
  return b;
}

// Shared core of the sporadic test. d_eff gives the deadline used in place of d.
template <class DeadlineOf>
Verdict sporadic_core(std::span<const SecureTask> msgs, Tick c_max_nrt, DeadlineOf d_eff) {
  Verdict ok;
  if (msgs.empty()) return ok;
  Tick H = 1;
  for (const auto& m : msgs) H = checked_lcm(H, m.p);
  __int128 used = 0;
  for (const auto& m : msgs) used += static_cast<__int128>(m.c_ext) * (H / m.p);
  if (used > H) {
    Verdict v;
    v.status = VerdictStatus::not_schedulable;
    return v;
  }
  const Tick cm = max_blocking(msgs, c_max_nrt);
  Tick d_max = 0;
  for (const auto& m : msgs) d_max = std::max(d_max, d_eff(m));
  Tick tmax = d_max;
  if (used == H) {
    tmax = std::max(tmax, 2 * H + d_max);
  } else {
    // (cm + sum (1 - d/p) c) / (1 - U), scaled by H.
    __int128 num = static_cast<__int128>(cm) * H;
    for (const auto& m : msgs)
      num += static_cast<__int128>(m.c_ext) * H - static_cast<__int128>(d_eff(m)) * m.c_ext * (H / m.p);
    const __int128 den = H - used;
    __int128 q = num / den;
    if (num % den != 0 && num < 0) --q;
    if (q > tmax) tmax = static_cast<Tick>(q);
  }

  std::vector<Tick> ts;
  for (const auto& m : msgs)
    for (Tick t = d_eff(m); t <= tmax; t += m.p) ts.push_back(t);
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());

  for (Tick t : ts) {
    Tick load = cm;
    for (const auto& m : msgs)
      load += std::max<Tick>(0, floor_div(t - d_eff(m), m.p) + 1) * m.c_ext;
    if (load > t) {
      Verdict v;
      v.status = VerdictStatus::not_schedulable;
      v.witness = Interval{0, t};
      v.demand = load - cm;
      v.supply = t - cm;
      return v;
    }
  }
  return ok;
}

}  // namespace

const char* to_string(VerdictStatus s) {
  switch (s) {
    case VerdictStatus::schedulable: return "SCHEDULABLE";
    case VerdictStatus::rejected: return "REJECTED";
    case VerdictStatus::not_schedulable: return "NOT_SCHEDULABLE";
  }
  return "NOT_SCHEDULABLE";
}

std::int64_t count_regular(const SecureTask& t, Interval iv) {
  if (!t.phi || !t.d) fail(ErrorCode::unset_parameter, "task " + t.id + ": offset or deadline unset");
  require_interval(iv);
  return count_strided(*t.phi, t.p, *t.d, iv.t1, iv.t2);
}

std::int64_t count_extended(const SecureTask& t, Interval iv) {
  if (!t.l) return 0;
  require_params(t);
  require_interval(iv);
  std::int64_t n = 0;
  const Tick stride = t.p * *t.l;
  for (int m = 0; m < t.f; ++m)
    n += count_strided(*t.phi + (*t.s + m) * t.p, stride, *t.d, iv.t1, iv.t2);
  return n;
}

Tick demand(const SecureTask& t, Interval iv) {
  const Tick reg = t.c_reg * count_regular(t, iv);
  return t.l ? reg + t.delta_c() * count_extended(t, iv) : reg;
}

Tick demand(std::span<const SecureTask> tasks, Interval iv) {
  Tick sum = 0;
  for (const auto& t : tasks) sum += demand(t, iv);
  return sum;
}

TestingSets testing_sets(std::span<const SecureTask> tasks) {
  if (tasks.empty()) fail(ErrorCode::invalid_argument, "testing sets of an empty task set");
  TestingSets ts;
  ts.t_max = t_max(tasks);
  for (const auto& t : tasks) {
    for (Tick a = *t.phi; a <= ts.t_max; a += t.p) ts.arrivals.push_back(a);
    for (Tick a = *t.phi + *t.d; a <= ts.t_max; a += t.p) ts.deadlines.push_back(a);
  }
  for (auto* v : {&ts.arrivals, &ts.deadlines}) {
    std::sort(v->begin(), v->end());
    v->erase(std::unique(v->begin(), v->end()), v->end());
  }
  return ts;
}

double utilization(std::span<const SecureTask> tasks) {
  double u = 0.0;
  for (const auto& t : tasks) {
    u += static_cast<double>(t.c_reg) / static_cast<double>(t.p);
    if (t.l)
      u += static_cast<double>(t.delta_c()) * t.f / (static_cast<double>(t.p) * *t.l);
  }
  return u;
}

Verdict edf_preemptive_schedulable(std::span<const SecureTask> tasks) {
  return sweep_check(tasks, 0, VerdictStatus::not_schedulable);
}

Verdict edf_nonpreemptive_schedulable(std::span<const SecureTask> msgs, Tick c_max_nrt) {
  if (msgs.empty()) return {};
  return sweep_check(msgs, max_blocking(msgs, c_max_nrt), VerdictStatus::rejected);
}

Verdict demand_check(std::span<const SecureTask> tasks, Tick blocking, VerdictStatus on_failure) {
  return sweep_check(tasks, blocking, on_failure);
}

Verdict demand_check_reference(std::span<const SecureTask> tasks, Tick blocking,
                               VerdictStatus on_failure) {
  Verdict ok;
  if (tasks.empty()) return ok;
  for (const auto& t : tasks) require_params(t);
  if (auto v = overload_verdict(tasks, blocking, on_failure)) return *v;
  const TestingSets ts = testing_sets(tasks);
  for (Tick t2 : ts.deadlines) {
    for (auto it = ts.arrivals.rbegin(); it != ts.arrivals.rend(); ++it) {
      const Tick t1 = *it;
      if (t1 >= t2) continue;
      const Tick df = demand(tasks, {t1, t2});
      if (df > 0 && df > t2 - t1 - blocking) {
        Verdict v;
        v.status = on_failure;
        v.witness = Interval{t1, t2};
        v.demand = df;
        v.supply = t2 - t1 - blocking;
        return v;
      }
    }
  }
  return ok;
}

Verdict edf_sporadic_np_schedulable(std::span<const SecureTask> msgs, Tick c_max_nrt) {
  for (const auto& m : msgs) {
    if (!m.d) fail(ErrorCode::unset_parameter, "message " + m.id + ": deadline unset");
    if (m.phi.value_or(0) != 0)
      fail(ErrorCode::invalid_argument, "message " + m.id + ": sporadic test requires zero offsets");
  }
  return sporadic_core(msgs, c_max_nrt, [](const SecureTask& m) { return *m.d; });
}

Verdict offset_extended_np_test(std::span<const SecureTask> msgs, Tick c_max_nrt) {
  for (const auto& m : msgs)
    if (!m.phi || !m.d) fail(ErrorCode::unset_parameter, "message " + m.id + ": offset or deadline unset");
  return sporadic_core(msgs, c_max_nrt, [](const SecureTask& m) { return *m.d + *m.phi; });
}

std::vector<SecureTask> apply_jitter(std::span<const SecureTask> tasks, std::span<const Tick> jitters) {
  if (tasks.size() != jitters.size())
    fail(ErrorCode::invalid_argument, "one jitter value per task expected");
  std::vector<SecureTask> out(tasks.begin(), tasks.end());
  for (std::size_t i = 0; i < out.size(); ++i) {
    auto& t = out[i];
    if (!t.d) fail(ErrorCode::unset_parameter, "task " + t.id + ": deadline unset");
    if (jitters[i] < 0) fail(ErrorCode::invalid_argument, "task " + t.id + ": negative jitter");
    if (jitters[i] >= *t.d) fail(ErrorCode::invalid_argument, "task " + t.id + ": jitter not below deadline");
    *t.d -= jitters[i];
  }
  return out;
}

}  // namespace sct
