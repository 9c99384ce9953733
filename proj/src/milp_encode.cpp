#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "sct/error.hpp"
#include "sct/milp.hpp"

namespace sct {

namespace {

// A task parameter: either a constant or an integer variable, with bounds.
struct Param {
  LinExpr expr;
  Tick lo = 0;
  Tick hi = 0;
};

struct TaskParams {
  const SecureTask* task = nullptr;
  Param phi, d, s;
};

struct Point {
  LinExpr expr;
  Tick lo = 0;
  Tick hi = 0;
};

// One job (or extended frame) as arrival/deadline expressions.
struct JobExpr {
  LinExpr arrival;
  LinExpr deadline;
  Tick deadline_lo = 0;
};

class Encoder {
 public:
  explicit Encoder(const EncodeOptions& opt) : opt_(opt) {}

  MilpInstance inst;

  TaskParams& params_for(const SecureTask& t) {
    auto it = params_.find(t.id);
    if (it != params_.end()) return it->second;
    TaskParams tp;
    tp.task = &t;
    const TaskDomain dom = opt_.domains.count(t.id) ? opt_.domains.at(t.id) : TaskDomain{};
    const Tick bound = opt_.bounds.count(t.id) ? opt_.bounds.at(t.id) : t.p;
    tp.phi = make_param("phi_" + lp_name(t.id), t.phi, dom.phi.value_or(Bounds{0, bound - 1}));
    tp.d = make_param("d_" + lp_name(t.id), t.d, dom.d.value_or(Bounds{1, t.p}));
    if (t.l) {
      const Tick s_hi = t.kind == TaskKind::sensing ? *t.l - t.f : *t.l - 1;
      const std::optional<Tick> s = t.s ? std::optional<Tick>(*t.s) : std::nullopt;
      tp.s = make_param("s_" + lp_name(t.id), s, dom.s.value_or(Bounds{0, s_hi}));
    }
    return params_.emplace(t.id, tp).first->second;
  }

  // Demand condition for one resource; blocking < 0 marks a preemptive one.
  void encode_resource(std::span<const SecureTask> tasks, Tick blocking, const std::string& tag) {
    if (tasks.empty()) return;
    const bool np = blocking >= 0;
    std::vector<TaskParams*> tp;
    for (const auto& t : tasks) tp.push_back(&params_for(t));

    // Parameters do not change utilization; an overloaded resource gets an
    // unsatisfiable row so that the instance stays infeasible.
    const Tick L = pattern_period(tasks);
    __int128 w = 0;
    for (const auto& t : tasks) {
      w += static_cast<__int128>(t.c_reg) * (L / t.p);
      if (t.l) w += static_cast<__int128>(t.delta_c()) * t.f * (L / (t.p * *t.l));
    }
    if (w > L) inst.constraints.push_back({"util_" + tag, {}, Sense::le, -1.0});

    Tick phi_hi = 0, d_hi = 0;
    for (auto* p : tp) {
      phi_hi = std::max(phi_hi, p->phi.hi);
      d_hi = std::max(d_hi, p->d.hi);
    }
    const Tick horizon = phi_hi + d_hi + 2 * L;

    std::vector<Point> arr_pts, dl_pts;
    std::map<std::string, bool> seen_a, seen_d;
    for (auto* p : tp) {
      const Tick per = p->task->p;
      for (Tick k = 0; p->phi.lo + k * per <= horizon; ++k) {
        Point a{p->phi.expr, p->phi.lo + k * per, p->phi.hi + k * per};
        a.expr.constant += k * per;
        if (!seen_a[key(a.expr)]) {
          seen_a[key(a.expr)] = true;
          arr_pts.push_back(a);
        }
        Point dp{p->phi.expr, p->phi.lo + p->d.lo + k * per, p->phi.hi + p->d.hi + k * per};
        dp.expr.add(p->d.expr);
        dp.expr.constant += k * per;
        if (dp.lo <= horizon && !seen_d[key(dp.expr)]) {
          seen_d[key(dp.expr)] = true;
          dl_pts.push_back(dp);
        }
      }
    }
    Tick last_point = 0;
    for (const auto& p : dl_pts) last_point = std::max(last_point, p.hi);

    // Jobs per task, regular and extended, that can end before the last point.
    std::vector<std::vector<JobExpr>> reg(tp.size()), ext(tp.size());
    Tick total_work = 0;
    std::size_t total_jobs = 0;
    for (std::size_t i = 0; i < tp.size(); ++i) {
      const auto& t = *tp[i]->task;
      for (Tick h = 0; tp[i]->phi.lo + h * t.p + tp[i]->d.lo <= last_point; ++h) {
        JobExpr j;
        j.arrival = tp[i]->phi.expr;
        j.arrival.constant += h * t.p;
        j.deadline = j.arrival;
        j.deadline.add(tp[i]->d.expr);
        reg[i].push_back(j);
        total_work += t.c_ext;
      }
      total_jobs += reg[i].size();
      if (!t.l || t.delta_c() == 0) continue;
      const Tick stride = t.p * *t.l;
      for (int m = 0; m < t.f; ++m)
        for (Tick j = 0; tp[i]->phi.lo + (tp[i]->s.lo + m) * t.p + j * stride + tp[i]->d.lo <= last_point; ++j) {
          JobExpr e;
          e.arrival = tp[i]->phi.expr;
          e.arrival.add(tp[i]->s.expr, static_cast<double>(t.p));
          e.arrival.constant += m * t.p + j * stride;
          e.deadline = e.arrival;
          e.deadline.add(tp[i]->d.expr);
          ext[i].push_back(e);
        }
      total_jobs += ext[i].size();
    }

    const BigM bm = choose_big_m_epsilon(static_cast<double>(horizon + total_work + std::max<Tick>(blocking, 0)),
                                         opt_.tolerances);
    inst.big_m = std::max(inst.big_m, bm.m);
    inst.epsilon = bm.epsilon;
    const double M = bm.m, eps = bm.epsilon;

    // Deadline indicators: 1 iff deadline <= point. Arrival indicators:
    // 1 iff arrival < point.
    auto deadline_ind = [&](const std::string& name, const LinExpr& dl, const LinExpr& pt) {
      LinExpr diff = dl;
      diff.add(pt, -1.0);
      const int v = add_binary(name, DefKind::indicator, diff);
      add_row(name + "_u", diff, v, M, Sense::le, M);         // dl - t + M b <= M
      add_row(name + "_l", negate(diff), v, -M, Sense::le, -eps);  // t - dl - M b <= -eps
      return v;
    };
    auto arrival_ind = [&](const std::string& name, const LinExpr& arr, const LinExpr& pt) {
      LinExpr diff = arr;
      diff.add(pt, -1.0);
      LinExpr def = diff;
      def.constant += 1;
      const int v = add_binary(name, DefKind::indicator, def);
      add_row(name + "_u", diff, v, M, Sense::le, M - eps);   // arr - t + M g <= M - eps
      add_row(name + "_l", negate(diff), v, -M, Sense::le, 0);  // t - arr - M g <= 0
      return v;
    };

    // D[k][i], A[k][i]: sums of indicators per point and task (reg / ext).
    using Sums = std::vector<std::vector<LinExpr>>;
    Sums d_reg(dl_pts.size(), std::vector<LinExpr>(tp.size())), d_ext = d_reg;
    Sums a_reg(arr_pts.size(), std::vector<LinExpr>(tp.size())), a_ext = a_reg;
    for (std::size_t k = 0; k < dl_pts.size(); ++k)
      for (std::size_t i = 0; i < tp.size(); ++i) {
        for (std::size_t h = 0; h < reg[i].size(); ++h)
          d_reg[k][i].add(deadline_ind(name("b", tag, k, i, h), reg[i][h].deadline, dl_pts[k].expr), 1.0);
        for (std::size_t h = 0; h < ext[i].size(); ++h)
          d_ext[k][i].add(deadline_ind(name("a", tag, k, i, h), ext[i][h].deadline, dl_pts[k].expr), 1.0);
      }
    for (std::size_t k = 0; k < arr_pts.size(); ++k)
      for (std::size_t i = 0; i < tp.size(); ++i) {
        for (std::size_t h = 0; h < reg[i].size(); ++h)
          a_reg[k][i].add(arrival_ind(name("g", tag, k, i, h), reg[i][h].arrival, arr_pts[k].expr), 1.0);
        for (std::size_t h = 0; h < ext[i].size(); ++h)
          a_ext[k][i].add(arrival_ind(name("aA", tag, k, i, h), ext[i][h].arrival, arr_pts[k].expr), 1.0);
      }

    for (std::size_t k1 = 0; k1 < arr_pts.size(); ++k1)
      for (std::size_t k2 = 0; k2 < dl_pts.size(); ++k2) {
        const std::string pair = tag + "_" + std::to_string(k1) + "_" + std::to_string(k2);
        // e = 1 iff t1 <= t2
        LinExpr gap = dl_pts[k2].expr;
        gap.add(arr_pts[k1].expr, -1.0);
        const int e = add_binary("e_" + pair, DefKind::indicator, negate(gap));
        add_row("e_" + pair + "_u", negate(gap), e, M, Sense::le, M);     // t1 - t2 + M e <= M
        add_row("e_" + pair + "_l", gap, e, -M, Sense::le, -eps);         // t2 - t1 - M e <= -eps

        LinExpr lhs;  // demand + M e - (t2 - t1) [+ blocking z]
        LinExpr all_counts;
        for (std::size_t i = 0; i < tp.size(); ++i) {
          const auto& t = *tp[i]->task;
          auto count = [&](const char* prefix, const LinExpr& D, const LinExpr& A, std::size_t jobs, double cost) {
            if (jobs == 0) return;
            LinExpr def = D;
            def.add(A, -1.0);
            Variable v;
            v.name = std::string(prefix) + "_" + pair + "_" + std::to_string(i);
            v.kind = VarKind::continuous;
            v.lb = 0;
            v.ub = static_cast<double>(jobs);
            v.def = DefKind::count;
            v.expr = def;
            const int n = inst.add_var(v);
            LinExpr row = def;
            row.add(n, -1.0);
            push(v.name + "_c", row, Sense::le, 0);  // D - A - n <= 0
            lhs.add(n, cost);
            all_counts.add(n, 1.0);
          };
          count("n", d_reg[k2][i], a_reg[k1][i], reg[i].size(), static_cast<double>(t.c_reg));
          count("x", d_ext[k2][i], a_ext[k1][i], ext[i].size(), static_cast<double>(t.delta_c()));
        }
        lhs.add(e, M);
        lhs.add(gap, -1.0);
        if (np && blocking > 0) {
          const int z = add_binary("z_" + pair, DefKind::flag, all_counts);
          LinExpr zr = all_counts;
          zr.add(z, -static_cast<double>(std::max<std::size_t>(total_jobs + 1, 1)));
          push("z_" + pair + "_c", zr, Sense::le, 0);  // sum n - H z <= 0
          lhs.add(z, static_cast<double>(blocking));
        }
        push("dem_" + pair, lhs, Sense::le, M);
      }
  }

  void push(const std::string& name, const LinExpr& lhs, Sense sense, double rhs) {
    inst.constraints.push_back({name, lhs.terms, sense, rhs - lhs.constant});
  }

  const std::map<std::string, TaskParams>& params() const { return params_; }

 private:
  static std::string key(const LinExpr& e) {
    std::ostringstream os;
    auto terms = e.terms;
    std::sort(terms.begin(), terms.end(), [](const LinTerm& a, const LinTerm& b) { return a.var < b.var; });
    for (const auto& t : terms) os << t.var << '*' << t.coef << ';';
    os << e.constant;
    return os.str();
  }

  static LinExpr negate(const LinExpr& e) {
    LinExpr out;
    out.add(e, -1.0);
    return out;
  }

  static std::string name(const char* p, const std::string& tag, std::size_t k, std::size_t i, std::size_t h) {
    return std::string(p) + "_" + tag + "_" + std::to_string(k) + "_" + std::to_string(i) + "_" + std::to_string(h);
  }

  int add_binary(const std::string& nm, DefKind def, const LinExpr& expr) {
    Variable v;
    v.name = nm;
    v.kind = VarKind::binary;
    v.lb = 0;
    v.ub = 1;
    v.def = def;
    v.expr = expr;
    return inst.add_var(v);
  }

  void add_row(const std::string& nm, const LinExpr& base, int var, double coef, Sense s, double rhs) {
    LinExpr row = base;
    row.add(var, coef);
    push(nm, row, s, rhs);
  }

  Param make_param(const std::string& nm, const std::optional<Tick>& fixed, Bounds dom) {
    Param p;
    if (fixed) {
      p.expr.constant = static_cast<double>(*fixed);
      p.lo = p.hi = *fixed;
      return p;
    }
    if (dom.lo > dom.hi) fail(ErrorCode::invalid_argument, "empty domain for " + nm);
    Variable v;
    v.name = nm;
    v.kind = VarKind::integer;
    v.lb = static_cast<double>(dom.lo);
    v.ub = static_cast<double>(dom.hi);
    v.def = DefKind::parameter;
    p.expr.add(inst.add_var(v), 1.0);
    p.lo = dom.lo;
    p.hi = dom.hi;
    return p;
  }

  const EncodeOptions& opt_;
  std::map<std::string, TaskParams> params_;
};

void check_wcets(std::span<const SecureTask> tasks) {
  for (const auto& t : tasks)
    if (t.c_reg <= 0 || t.c_ext < t.c_reg || t.p <= 0)
      fail(ErrorCode::invalid_argument, "task " + t.id + ": missing or invalid WCETs/period");
}

}  // namespace

MilpInstance encode_ecu(std::span<const SecureTask> tasks, const EncodeOptions& opt) {
  check_wcets(tasks);
  Encoder enc(opt);
  enc.encode_resource(tasks, -1, "ecu");
  if (enc.inst.big_m == 0) enc.inst.epsilon = 0.5;
  return enc.inst;
}

MilpInstance encode_network(std::span<const SecureTask> msgs, Tick c_max_nrt, const EncodeOptions& opt) {
  check_wcets(msgs);
  Encoder enc(opt);
  Tick b = c_max_nrt;
  for (const auto& m : msgs) b = std::max(b, m.c_ext);
  enc.encode_resource(msgs, b, "bus");
  if (enc.inst.big_m == 0) enc.inst.epsilon = 0.5;
  return enc.inst;
}

MilpInstance encode_system(const SystemModel& sys, const EncodeOptions& opt_in) {
  EncodeOptions opt = opt_in;
  for (const auto& tx : sys.transactions)
    for (const SecureTask* t : {&tx.sens, &tx.net, &tx.ctrl})
      if (!opt.bounds.count(t->id)) opt.bounds[t->id] = tx.bound();
  Encoder enc(opt);
  std::vector<std::vector<SecureTask>> per_ecu;
  for (const auto& ecu : sys.ecus) per_ecu.push_back(sys.ecu_tasks(ecu));
  const auto msgs = sys.bus_messages();
  for (const auto& v : per_ecu) check_wcets(v);
  check_wcets(msgs);
  // Parameters are created once per task id, so the same variable appears in
  // every row that mentions the task.
  for (std::size_t i = 0; i < per_ecu.size(); ++i) enc.encode_resource(per_ecu[i], -1, lp_name(sys.ecus[i].id));
  Tick b = sys.c_max_nrt;
  for (const auto& m : msgs) b = std::max(b, m.c_ext);
  enc.encode_resource(msgs, b, lp_name(sys.bus.id));

  Objective obj;
  for (const auto& tx : sys.transactions) {
    const auto& s = enc.params_for(tx.sens);
    const auto& n = enc.params_for(tx.net);
    const auto& c = enc.params_for(tx.ctrl);
    const std::string id = lp_name(tx.id);
    LinExpr r1 = s.phi.expr;  // phi_s + d_s - phi_n <= 0
    r1.add(s.d.expr).add(n.phi.expr, -1.0);
    enc.push("prec_sn_" + id, r1, Sense::le, 0);
    LinExpr r2 = n.phi.expr;  // phi_n + d_n - phi_c <= 0
    r2.add(n.d.expr).add(c.phi.expr, -1.0);
    enc.push("prec_nc_" + id, r2, Sense::le, 0);
    LinExpr r3 = c.phi.expr;  // phi_c + d_c <= bound
    r3.add(c.d.expr);
    enc.push("e2e_" + id, r3, Sense::le, static_cast<double>(tx.bound()));
    if (tx.sens.l && tx.net.l && tx.ctrl.l) {
      LinExpr t1 = n.s.expr;  // s_n - s_s = f - 1
      t1.add(s.s.expr, -1.0);
      enc.push("s_sn_" + id, t1, Sense::eq, tx.policy.f - 1);
      LinExpr t2 = c.s.expr;  // s_c - s_n = 0
      t2.add(n.s.expr, -1.0);
      enc.push("s_nc_" + id, t2, Sense::eq, 0);
    }
    const bool all_free = !s.d.expr.terms.empty() && !n.d.expr.terms.empty() && !c.d.expr.terms.empty();
    if (all_free) {
      LinExpr sum = s.d.expr;
      sum.add(n.d.expr).add(c.d.expr);
      enc.push("dsum_" + id, sum, Sense::eq, static_cast<double>(tx.bound()));
    }
    if (opt.blended_objective) {
      const double w = opt.weights.count(tx.id) ? opt.weights.at(tx.id) : 1.0;
      for (const auto& t : s.d.expr.terms) obj.terms.push_back({t.var, w * t.coef});
      for (const auto& t : c.phi.expr.terms) obj.terms.push_back({t.var, -w * t.coef});
    }
  }
  if (opt.blended_objective && !obj.terms.empty()) enc.inst.objective = obj;
  if (enc.inst.big_m == 0) enc.inst.epsilon = 0.5;
  return enc.inst;
}

}  // namespace sct
