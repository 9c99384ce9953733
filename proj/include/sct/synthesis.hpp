#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sct/demand.hpp"
#include "sct/milp.hpp"
#include "sct/model.hpp"

namespace sct {

enum class SynthesisStatus { feasible, infeasible, timeout };
std::string to_string(SynthesisStatus s);  // "FEASIBLE", ...

struct ParamAssignment {
  Tick phi = 0;
  Tick d = 0;
  std::optional<int> s;
  bool operator==(const ParamAssignment&) const = default;
};

struct SynthesisStats {
  std::size_t variables = 0;
  std::size_t constraints = 0;
  std::size_t pruned_variables = 0;
  std::size_t pruned_constraints = 0;
  std::uint64_t nodes = 0;
  double wall_seconds = 0.0;
};

struct StageLog {
  std::string stage;
  SynthesisStatus status = SynthesisStatus::infeasible;
  std::string detail;
  double seconds = 0.0;
};

struct SynthesisResult {
  SynthesisStatus status = SynthesisStatus::infeasible;
  std::map<std::string, ParamAssignment> assignment;  // by task id
  std::map<std::string, Tick> parameters;             // MILP-form solves: by variable name
  SynthesisStats stats;
  std::vector<StageLog> stages;
  std::string failed_stage;  // empty unless INFEASIBLE/TIMEOUT in a decomposed run
};

/// 0 means unlimited.
struct SearchLimits {
  std::uint64_t max_nodes = 0;
  double max_seconds = 0.0;
};

enum class Field { s = 0, phi = 1, d = 2 };

/// Reference to one parameter of one task of a SynthesisProblem.
struct Slot {
  std::size_t task = 0;
  Field field = Field::phi;
  bool operator==(const Slot&) const = default;
};

/// sum coef * slot (<= or =) rhs
struct Coupling {
  std::string name;
  std::vector<std::pair<Slot, Tick>> terms;
  Sense sense = Sense::le;
  Tick rhs = 0;
};

struct SearchResource {
  std::string id;
  std::vector<std::size_t> tasks;
  bool non_preemptive = false;
  Tick c_max_nrt = 0;
};

/// Search form: tasks with unset phi/d/s are free over their domains
/// (defaults as for the MILP encoding).
struct SynthesisProblem {
  std::vector<SecureTask> tasks;
  std::map<std::string, TaskDomain> domains;
  std::map<std::string, Tick> bounds;  // phi domain upper end + 1, default p
  std::vector<SearchResource> resources;
  std::vector<Coupling> couplings;
};

/// Effective domain of one slot (fixed values give a single point).
Bounds slot_domain(const SynthesisProblem& pb, Slot slot);

/// Free slots in search order: all s, then all phi, then all d, each by
/// task index. The search returns the lexicographically smallest feasible
/// vector in this order.
std::vector<Slot> free_slots(const SynthesisProblem& pb);

/// Tasks of pb with the given values filled in.
std::vector<SecureTask> with_values(const SynthesisProblem& pb, const std::vector<Slot>& slots,
                                    const std::vector<Tick>& values);

/// True when the complete parameter vector satisfies every coupling and
/// every resource's demand condition.
bool check_complete(const SynthesisProblem& pb, const std::vector<SecureTask>& tasks);

/// Every resource of the system (ECUs preemptive, bus non-preemptive) and
/// the transaction couplings: precedence, end-to-end bound, shared
/// authentication offset, deadline sum when all three deadlines are free.
SynthesisProblem problem_from_system(const SystemModel& sys);

/// Depth-first search with bound propagation on the couplings and demand
/// checks on resources whose tasks are fully assigned.
SynthesisResult solve_feasibility(const SynthesisProblem& pb, const SearchLimits& limits = {});

/// Enumerates the parameter variables of an instance in declaration order;
/// leaves are checked with complete_assignment and first_violation.
SynthesisResult solve_feasibility(const MilpInstance& inst, const SearchLimits& limits = {});

enum class Strategy { network_first, ecu_first };
std::string to_string(Strategy s);
Strategy strategy_from_string(const std::string& s);

struct DecomposeOptions {
  Strategy strategy = Strategy::network_first;
  SearchLimits limits;
  /// ecu_first: transactions are tuned in descending weight order (default 1).
  std::map<std::string, double> weights;
};

/// Two-stage synthesis; parameters already set on transaction tasks are
/// overwritten except for s given in the policy.
SynthesisResult synthesize_decomposed(const SystemModel& sys, const DecomposeOptions& opt = {});

/// Copy of the system with the result's parameters written to the tasks.
SystemModel apply_solution(const SystemModel& sys, const SynthesisResult& res);

struct SystemVerdicts {
  std::map<std::string, Verdict> ecus;
  Verdict bus;
  bool ok() const;
};

/// Demand verdicts for every ECU (preemptive) and the bus (non-preemptive).
SystemVerdicts analyze_system(const SystemModel& sys);

}  // namespace sct
