#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sct/model.hpp"

namespace sct {

enum class VarKind { binary, integer, continuous };
enum class Sense { le, ge, eq };

struct LinTerm {
  int var = 0;
  double coef = 0.0;
  bool operator==(const LinTerm&) const = default;
};

/// Sum of coef * var plus a constant.
struct LinExpr {
  std::vector<LinTerm> terms;
  double constant = 0.0;

  LinExpr& add(int var, double coef);
  LinExpr& add(const LinExpr& other, double scale = 1.0);
  double eval(std::span<const double> x) const;
  bool operator==(const LinExpr&) const = default;
};

/// How a variable's value follows from the parameters. Used to complete a
/// parameter assignment into a full point and by bound propagation.
enum class DefKind {
  free,       // no definition (imported instances)
  parameter,  // offset, deadline or authentication offset
  indicator,  // 1 iff expr <= 0
  count,      // max(0, expr)
  flag,       // 1 iff expr > 0
};

struct Variable {
  std::string name;
  VarKind kind = VarKind::continuous;
  double lb = 0.0;
  double ub = 0.0;
  DefKind def = DefKind::free;
  LinExpr expr;  // for indicator/count/flag
};

struct Constraint {
  std::string name;
  std::vector<LinTerm> terms;
  Sense sense = Sense::le;
  double rhs = 0.0;
};

struct Objective {
  bool minimize = true;
  std::vector<LinTerm> terms;
};

struct MilpStats {
  std::size_t variables = 0;
  std::size_t binaries = 0;
  std::size_t integers = 0;
  std::size_t constraints = 0;
  std::size_t pruned_variables = 0;
  std::size_t pruned_constraints = 0;
};

struct MilpInstance {
  std::vector<Variable> vars;
  std::vector<Constraint> constraints;
  std::optional<Objective> objective;
  double big_m = 0.0;
  double epsilon = 0.0;
  std::size_t pruned_variables = 0;
  std::size_t pruned_constraints = 0;

  int add_var(Variable v);
  int find_var(const std::string& name) const;  // -1 when absent
  MilpStats stats() const;
};

struct SolverTolerances {
  double int_feas = 1e-5;
  double constr_feas = 1e-6;
};

struct BigM {
  double m = 0.0;
  double epsilon = 0.0;
};

/// M = 10^(ceil(log10 scale) + 1); epsilon is the midpoint of
/// (M*d_int + d_constr, 1 - M*d_int - d_constr). Throws Error(infeasible_input)
/// when that interval is empty.
BigM choose_big_m_epsilon(double scale, const SolverTolerances& tol = {});

struct Bounds {
  Tick lo = 0;
  Tick hi = 0;
  bool operator==(const Bounds&) const = default;
};

/// Domains for parameters left unset on the tasks. Defaults: phi in
/// [0, bound - 1], d in [1, p], s in [0, l - f] for sensing tasks and
/// [0, l - 1] otherwise. bound is the task's end-to-end bound (default p).
struct TaskDomain {
  std::optional<Bounds> phi;
  std::optional<Bounds> d;
  std::optional<Bounds> s;
};

struct EncodeOptions {
  std::map<std::string, TaskDomain> domains;
  std::map<std::string, Tick> bounds;  // per-task end-to-end bound for phi domains
  SolverTolerances tolerances;
  /// Minimise sensing deadlines and maximise control offsets.
  bool blended_objective = false;
  std::map<std::string, double> weights;  // per transaction, default 1
};

/// Preemptive demand condition over variable testing points for one ECU.
/// Unset phi/d/s on the tasks become integer variables.
MilpInstance encode_ecu(std::span<const SecureTask> tasks, const EncodeOptions& opt = {});

/// Non-preemptive variant: right-hand side lowered by the blocking term when
/// the interval carries demand.
MilpInstance encode_network(std::span<const SecureTask> msgs, Tick c_max_nrt,
                            const EncodeOptions& opt = {});

/// All resources of a system in one instance, plus precedence, shared s and
/// the end-to-end deadline sum for transactions whose three deadlines are free.
MilpInstance encode_system(const SystemModel& sys, const EncodeOptions& opt = {});

/// Removes indicator, count, flag and ordering variables whose value is fixed
/// by the parameter bounds, substituting constants; drops constraints that
/// become trivially satisfied. The feasible parameter set is unchanged.
MilpInstance prune(const MilpInstance& inst);

/// Value of every variable given the parameter variables (by name). Throws
/// when a parameter is missing.
std::vector<double> complete_assignment(const MilpInstance& inst,
                                        const std::map<std::string, Tick>& params);

/// Name of the first violated constraint or bound, or nullopt.
std::optional<std::string> first_violation(const MilpInstance& inst, std::span<const double> x,
                                           double tol = 1e-7);

/// Parameter variables in declaration order.
std::vector<int> parameter_vars(const MilpInstance& inst);

/// CPLEX LP text; byte-identical for identical instances.
std::string to_lp(const MilpInstance& inst);
void export_lp(const MilpInstance& inst, const std::string& path);
/// Reads the subset of the LP format written by to_lp.
MilpInstance parse_lp(const std::string& text);

/// Name-safe version of a task id for variable names.
std::string lp_name(const std::string& id);

}  // namespace sct
