#include "sct/milp.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "sct/error.hpp"

namespace sct {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string num(double v) {
  if (std::isinf(v)) return v > 0 ? "+inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

struct Range {
  double lo;
  double hi;
};

Range range_of(const LinExpr& e, const std::vector<Range>& r) {
  Range out{e.constant, e.constant};
  for (const auto& t : e.terms) {
    const Range v = r[t.var];
    if (t.coef >= 0) {
      out.lo += t.coef * v.lo;
      out.hi += t.coef * v.hi;
    } else {
      out.lo += t.coef * v.hi;
      out.hi += t.coef * v.lo;
    }
  }
  return out;
}

// Value of a defined variable given the rest of the point.
double defined_value(const Variable& v, std::span<const double> x) {
  const double e = v.expr.eval(x);
  switch (v.def) {
    case DefKind::indicator: return e <= 0 ? 1.0 : 0.0;
    case DefKind::count: return std::max(0.0, e);
    case DefKind::flag: return e > 0 ? 1.0 : 0.0;
    default: return 0.0;
  }
}

}  // namespace

LinExpr& LinExpr::add(int var, double coef) {
  if (coef == 0.0) return *this;
  for (auto& t : terms)
    if (t.var == var) {
      t.coef += coef;
      if (t.coef == 0.0) terms.erase(terms.begin() + (&t - terms.data()));
      return *this;
    }
  terms.push_back({var, coef});
  return *this;
}

LinExpr& LinExpr::add(const LinExpr& other, double scale) {
  for (const auto& t : other.terms) add(t.var, t.coef * scale);
  constant += other.constant * scale;
  return *this;
}

double LinExpr::eval(std::span<const double> x) const {
  double v = constant;
  for (const auto& t : terms) v += t.coef * x[t.var];
  return v;
}

int MilpInstance::add_var(Variable v) {
  vars.push_back(std::move(v));
  return static_cast<int>(vars.size() - 1);
}

int MilpInstance::find_var(const std::string& name) const {
  for (std::size_t i = 0; i < vars.size(); ++i)
    if (vars[i].name == name) return static_cast<int>(i);
  return -1;
}

MilpStats MilpInstance::stats() const {
  MilpStats s;
  s.variables = vars.size();
  for (const auto& v : vars) {
    if (v.kind == VarKind::binary) ++s.binaries;
    if (v.kind == VarKind::integer) ++s.integers;
  }
  s.constraints = constraints.size();
  s.pruned_variables = pruned_variables;
  s.pruned_constraints = pruned_constraints;
  return s;
}

BigM choose_big_m_epsilon(double scale, const SolverTolerances& tol) {
  if (!(tol.int_feas > 0) || !(tol.constr_feas > 0))
    fail(ErrorCode::invalid_argument, "solver tolerances must be positive");
  if (!(scale >= 1)) scale = 1;
  const double m = std::pow(10.0, std::ceil(std::log10(scale)) + 1);
  const double lo = m * tol.int_feas + tol.constr_feas;
  const double hi = 1 - m * tol.int_feas - tol.constr_feas;
  if (!(lo < hi)) {
    std::ostringstream os;
    os << "no epsilon satisfies " << num(lo) << " < eps < " << num(hi) << " for M = " << num(m)
       << "; use a coarser time resolution or tighter solver tolerances";
    fail(ErrorCode::infeasible_input, os.str());
  }
  return {m, (lo + hi) / 2};
}

std::vector<int> parameter_vars(const MilpInstance& inst) {
  std::vector<int> out;
  for (std::size_t i = 0; i < inst.vars.size(); ++i)
    if (inst.vars[i].def == DefKind::parameter) out.push_back(static_cast<int>(i));
  return out;
}

std::vector<double> complete_assignment(const MilpInstance& inst,
                                        const std::map<std::string, Tick>& params) {
  std::vector<double> x(inst.vars.size(), 0.0);
  for (std::size_t i = 0; i < inst.vars.size(); ++i) {
    const auto& v = inst.vars[i];
    switch (v.def) {
      case DefKind::parameter:
      case DefKind::free: {
        auto it = params.find(v.name);
        if (it == params.end()) fail(ErrorCode::unset_parameter, "no value for variable " + v.name);
        x[i] = static_cast<double>(it->second);
        break;
      }
      default: x[i] = defined_value(v, x); break;
    }
  }
  return x;
}

std::optional<std::string> first_violation(const MilpInstance& inst, std::span<const double> x,
                                           double tol) {
  if (x.size() != inst.vars.size()) return std::string("assignment size mismatch");
  for (std::size_t i = 0; i < inst.vars.size(); ++i) {
    const auto& v = inst.vars[i];
    if (x[i] < v.lb - tol || x[i] > v.ub + tol) return "bound of " + v.name;
    if (v.kind != VarKind::continuous && std::abs(x[i] - std::round(x[i])) > tol)
      return "integrality of " + v.name;
  }
  for (const auto& c : inst.constraints) {
    double lhs = 0;
    for (const auto& t : c.terms) lhs += t.coef * x[t.var];
    const bool ok = c.sense == Sense::le   ? lhs <= c.rhs + tol
                    : c.sense == Sense::ge ? lhs >= c.rhs - tol
                                           : std::abs(lhs - c.rhs) <= tol;
    if (!ok) return c.name;
  }
  return std::nullopt;
}

MilpInstance prune(const MilpInstance& inst) {
  const std::size_t n = inst.vars.size();
  std::vector<Range> r(n);
  std::vector<std::optional<double>> fixed(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& v = inst.vars[i];
    if (v.def == DefKind::parameter || v.def == DefKind::free) {
      r[i] = {v.lb, v.ub};
      if (v.lb == v.ub) fixed[i] = v.lb;
      continue;
    }
    const Range e = range_of(v.expr, r);
    switch (v.def) {
      case DefKind::indicator:
        if (e.hi <= 0) fixed[i] = 1.0;
        else if (e.lo > 0) fixed[i] = 0.0;
        break;
      case DefKind::count:
        if (std::max(0.0, e.lo) == std::max(0.0, e.hi)) fixed[i] = std::max(0.0, e.lo);
        break;
      case DefKind::flag:
        if (e.lo > 0) fixed[i] = 1.0;
        else if (e.hi <= 0) fixed[i] = 0.0;
        break;
      default: break;
    }
    if (fixed[i]) r[i] = {*fixed[i], *fixed[i]};
    else if (v.def == DefKind::count) r[i] = {std::max(0.0, e.lo), std::min(v.ub, std::max(0.0, e.hi))};
    else r[i] = {v.lb, v.ub};
  }

  // Parameters stay even when fixed so that assignments keep their shape.
  MilpInstance out;
  out.big_m = inst.big_m;
  out.epsilon = inst.epsilon;
  out.objective = inst.objective;
  std::vector<int> remap(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& v = inst.vars[i];
    if (fixed[i] && v.def != DefKind::parameter && v.def != DefKind::free) {
      ++out.pruned_variables;
      continue;
    }
    remap[i] = static_cast<int>(out.vars.size());
    out.vars.push_back(v);
  }
  auto rewrite = [&](const std::vector<LinTerm>& terms, double& constant) {
    std::vector<LinTerm> res;
    for (const auto& t : terms) {
      if (remap[t.var] < 0) constant += t.coef * *fixed[t.var];
      else res.push_back({remap[t.var], t.coef});
    }
    return res;
  };
  for (auto& v : out.vars) v.expr.terms = rewrite(v.expr.terms, v.expr.constant);
  if (out.objective) {
    double ignored = 0;
    out.objective->terms = rewrite(out.objective->terms, ignored);
  }

  std::vector<Range> nr;
  for (std::size_t i = 0; i < n; ++i)
    if (remap[i] >= 0) nr.push_back(r[i]);
  for (const auto& c : inst.constraints) {
    double constant = 0;
    Constraint nc{c.name, rewrite(c.terms, constant), c.sense, c.rhs};
    nc.rhs -= constant;
    LinExpr lhs;
    lhs.terms = nc.terms;
    const Range e = range_of(lhs, nr);
    const bool redundant = nc.sense == Sense::le   ? e.hi <= nc.rhs
                           : nc.sense == Sense::ge ? e.lo >= nc.rhs
                                                   : (e.lo == e.hi && e.lo == nc.rhs);
    if (redundant) {
      ++out.pruned_constraints;
      continue;
    }
    out.constraints.push_back(std::move(nc));
  }
  out.pruned_variables += inst.pruned_variables;
  out.pruned_constraints += inst.pruned_constraints;
  return out;
}

std::string lp_name(const std::string& id) {
  std::string s;
  for (char ch : id) s += (std::isalnum(static_cast<unsigned char>(ch)) || ch == '_') ? ch : '_';
  if (s.empty() || std::isdigit(static_cast<unsigned char>(s[0]))) s = "v" + s;
  return s;
}

namespace {

void write_terms(std::ostringstream& os, const MilpInstance& inst, const std::vector<LinTerm>& terms) {
  bool first = true;
  for (const auto& t : terms) {
    double c = t.coef;
    if (first) {
      if (c < 0) {
        os << "- ";
        c = -c;
      }
    } else {
      os << (c < 0 ? " - " : " + ");
      c = std::abs(c);
    }
    if (c != 1.0) os << num(c) << ' ';
    os << inst.vars[t.var].name;
    first = false;
  }
  if (first) os << "0 " << (inst.vars.empty() ? "x" : inst.vars[0].name);
}

}  // namespace

std::string to_lp(const MilpInstance& inst) {
  std::ostringstream os;
  const bool minimize = !inst.objective || inst.objective->minimize;
  os << (minimize ? "Minimize" : "Maximize") << '\n';
  if (inst.objective && !inst.objective->terms.empty()) {
    os << " obj: ";
    write_terms(os, inst, inst.objective->terms);
    os << '\n';
  }
  os << "Subject To\n";
  for (std::size_t i = 0; i < inst.constraints.size(); ++i) {
    const auto& c = inst.constraints[i];
    os << ' ' << (c.name.empty() ? "c" + std::to_string(i) : c.name) << ": ";
    if (c.terms.empty() && !inst.vars.empty()) {
      os << "0 " << inst.vars[0].name;
    } else {
      write_terms(os, inst, c.terms);
    }
    os << (c.sense == Sense::le ? " <= " : c.sense == Sense::ge ? " >= " : " = ") << num(c.rhs) << '\n';
  }
  bool any_bounds = false;
  for (const auto& v : inst.vars)
    if (v.kind != VarKind::binary) any_bounds = true;
  if (any_bounds) {
    os << "Bounds\n";
    for (const auto& v : inst.vars) {
      if (v.kind == VarKind::binary) continue;
      if (std::isinf(v.ub)) os << ' ' << v.name << " >= " << num(v.lb) << '\n';
      else os << ' ' << num(v.lb) << " <= " << v.name << " <= " << num(v.ub) << '\n';
    }
  }
  auto section = [&](VarKind kind, const char* title) {
    bool any = false;
    for (const auto& v : inst.vars)
      if (v.kind == kind) {
        if (!any) os << title << '\n';
        any = true;
        os << ' ' << v.name << '\n';
      }
  };
  section(VarKind::integer, "Generals");
  section(VarKind::binary, "Binaries");
  os << "End\n";
  return os.str();
}

void export_lp(const MilpInstance& inst, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::io, "cannot open " + path + " for writing");
  out << to_lp(inst);
  if (!out) fail(ErrorCode::io, "write to " + path + " failed");
}

namespace {

double parse_num(const std::string& tok) {
  if (tok == "+inf" || tok == "inf" || tok == "+infinity") return kInf;
  if (tok == "-inf" || tok == "-infinity") return -kInf;
  double v = 0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
    fail(ErrorCode::parse, "bad number '" + tok + "' in LP text");
  return v;
}

bool is_number(const std::string& tok) {
  if (tok.empty()) return false;
  const char c = tok[0];
  return std::isdigit(static_cast<unsigned char>(c)) || c == '.' || tok == "+inf" || tok == "-inf" ||
         ((c == '-' || c == '+') && tok.size() > 1);
}

}  // namespace

MilpInstance parse_lp(const std::string& text) {
  MilpInstance inst;
  std::map<std::string, int> index;
  auto var = [&](const std::string& name) {
    auto it = index.find(name);
    if (it != index.end()) return it->second;
    Variable v;
    v.name = name;
    v.kind = VarKind::continuous;
    v.lb = 0;
    v.ub = kInf;
    const int id = inst.add_var(v);
    index[name] = id;
    return id;
  };
  // terms like "- 3 x + y"; returns the terms, stops at a sense token
  auto parse_terms = [&](std::vector<std::string>& toks, std::size_t& i) {
    std::vector<LinTerm> terms;
    double sign = 1, coef = 1;
    bool have_coef = false;
    for (; i < toks.size(); ++i) {
      const auto& t = toks[i];
      if (t == "<=" || t == ">=" || t == "=") break;
      if (t == "+") { sign = 1; continue; }
      if (t == "-") { sign = -1; continue; }
      if (is_number(t)) { coef = parse_num(t); have_coef = true; continue; }
      const double c = sign * (have_coef ? coef : 1.0);
      const int id = var(t);
      if (c != 0.0) terms.push_back({id, c});
      sign = 1;
      coef = 1;
      have_coef = false;
    }
    return terms;
  };

  enum class Sec { none, obj, st, bounds, generals, binaries, end } sec = Sec::none;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string trimmed = line;
    trimmed.erase(0, trimmed.find_first_not_of(' '));
    if (trimmed.empty() || trimmed[0] == '\\') continue;
    if (trimmed == "Minimize" || trimmed == "Maximize") {
      sec = Sec::obj;
      inst.objective = Objective{trimmed == "Minimize", {}};
      continue;
    }
    if (trimmed == "Subject To") { sec = Sec::st; continue; }
    if (trimmed == "Bounds") { sec = Sec::bounds; continue; }
    if (trimmed == "Generals") { sec = Sec::generals; continue; }
    if (trimmed == "Binaries") { sec = Sec::binaries; continue; }
    if (trimmed == "End") { sec = Sec::end; continue; }

    std::string name;
    if (auto colon = trimmed.find(':'); colon != std::string::npos && (sec == Sec::obj || sec == Sec::st)) {
      name = trimmed.substr(0, colon);
      trimmed = trimmed.substr(colon + 1);
    }
    std::vector<std::string> toks;
    std::istringstream ts(trimmed);
    for (std::string t; ts >> t;) toks.push_back(t);
    std::size_t i = 0;
    switch (sec) {
      case Sec::obj: inst.objective->terms = parse_terms(toks, i); break;
      case Sec::st: {
        Constraint c;
        c.name = name;
        c.terms = parse_terms(toks, i);
        if (i + 1 >= toks.size()) fail(ErrorCode::parse, "constraint without sense: " + line);
        c.sense = toks[i] == "<=" ? Sense::le : toks[i] == ">=" ? Sense::ge : Sense::eq;
        c.rhs = parse_num(toks[i + 1]);
        // "0 x" placeholders carry no terms
        std::erase_if(c.terms, [](const LinTerm& t) { return t.coef == 0.0; });
        inst.constraints.push_back(std::move(c));
        break;
      }
      case Sec::bounds:
        if (toks.size() == 5 && toks[1] == "<=" && toks[3] == "<=") {
          auto& v = inst.vars[var(toks[2])];
          v.lb = parse_num(toks[0]);
          v.ub = parse_num(toks[4]);
        } else if (toks.size() == 3 && toks[1] == ">=") {
          auto& v = inst.vars[var(toks[0])];
          v.lb = parse_num(toks[2]);
          v.ub = kInf;
        } else {
          fail(ErrorCode::parse, "unsupported bound line: " + line);
        }
        break;
      case Sec::generals:
        for (const auto& t : toks) inst.vars[var(t)].kind = VarKind::integer;
        break;
      case Sec::binaries:
        for (const auto& t : toks) {
          auto& v = inst.vars[var(t)];
          v.kind = VarKind::binary;
          v.lb = 0;
          v.ub = 1;
        }
        break;
      default: fail(ErrorCode::parse, "text outside any section: " + line);
    }
  }
  if (sec != Sec::end) fail(ErrorCode::parse, "LP text has no End marker");
  if (inst.objective && inst.objective->terms.empty() && inst.objective->minimize) inst.objective.reset();
  return inst;
}

}  // namespace sct
