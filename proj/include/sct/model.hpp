#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sct/arith.hpp"

namespace sct {

enum class TaskKind { sensing, message, control, background };

const char* to_string(TaskKind kind);
TaskKind task_kind_from_string(const std::string& s);

/// A security-aware task or message. Each job is either a regular frame
/// (c_reg) or an extended frame carrying authentication overhead (c_ext).
/// Extended frames follow the periodic block pattern given by (l, f, s):
/// job q is extended iff q >= s and (q - s) mod l < f.
struct SecureTask {
  std::string id;
  TaskKind kind = TaskKind::background;
  Tick c_reg = 0;
  Tick c_ext = 0;
  Tick p = 0;
  std::optional<Tick> phi;
  std::optional<Tick> d;
  std::optional<int> l;  // nullopt: never authenticated
  int f = 1;
  std::optional<int> s;

  bool authenticated() const { return l.has_value(); }
  Tick delta_c() const { return c_ext - c_reg; }
  bool fully_parameterized() const {
    return phi && d && (!authenticated() || s.has_value());
  }
  /// Requires s when authenticated.
  bool is_extended_job(std::int64_t q) const;
  Tick job_cost(std::int64_t q) const {
    return is_extended_job(q) ? c_ext : c_reg;
  }
  bool operator==(const SecureTask&) const = default;
};

/// Periodic cumulative authentication policy: blocks of f consecutive
/// authenticated samples, one block every l periods, first block deferred by
/// s periods. s may be left open for synthesis.
struct AuthPolicy {
  std::optional<int> s;
  int f = 1;
  int l = 1;
  bool operator==(const AuthPolicy&) const = default;
};

struct ControlTransaction {
  std::string id;
  Tick p = 0;
  SecureTask sens;
  SecureTask net;
  SecureTask ctrl;
  AuthPolicy policy;
  std::string plant_id;
  /// Sampling-to-actuation bound; defaults to the period.
  std::optional<Tick> e2e_bound;

  Tick bound() const { return e2e_bound.value_or(p); }
  bool operator==(const ControlTransaction&) const = default;
};

struct Ecu {
  std::string id;
  std::vector<std::string> tasks;
  bool operator==(const Ecu&) const = default;
};

struct Bus {
  std::string id = "bus";
  std::vector<std::string> messages;
  std::optional<double> rate_bps;
  bool operator==(const Bus&) const = default;
};

struct SystemModel {
  std::int64_t ticks_per_unit = 10;
  std::string time_unit = "unit";
  std::vector<Ecu> ecus;
  Bus bus;
  std::vector<ControlTransaction> transactions;
  std::vector<SecureTask> background;
  Tick c_max_nrt = 0;

  /// Looks a task up among transaction members and background tasks.
  const SecureTask* find_task(const std::string& id) const;
  std::vector<SecureTask> ecu_tasks(const Ecu& ecu) const;
  std::vector<SecureTask> bus_messages() const;
  /// Returns a copy with the given task replaced (matched by id).
  SystemModel with_task(const SecureTask& t) const;
  bool operator==(const SystemModel&) const = default;
};

struct ValidationReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

ValidationReport validate_task(const SecureTask& t);

/// Checks structural invariants of a transaction (periods, policy fields,
/// derived s values and precedence when set).
ValidationReport validate_transaction(const ControlTransaction& tx);

/// Task and transaction invariants plus the mapping rules: every task on
/// exactly one ECU, every message on the bus, transaction members mapped to
/// the right resource kind.
ValidationReport validate_system(const SystemModel& sys);

/// Derives l/f/s on the three members from the policy. Throws
/// Error(invalid_argument) when the transaction invariants cannot hold.
ControlTransaction assemble_transaction(std::string id, SecureTask sens,
                                        SecureTask net, SecureTask ctrl,
                                        AuthPolicy policy,
                                        std::string plant_id = {},
                                        std::optional<Tick> e2e_bound = {});

/// Same as above, re-deriving from an existing transaction.
ControlTransaction assemble_transaction(const ControlTransaction& tx);

Tick hyperperiod(std::span<const SecureTask> tasks);

/// Period after which the regular and extended job pattern of all tasks
/// repeats: lcm over p and l*p.
Tick pattern_period(std::span<const SecureTask> tasks);

/// max phi + max d + 2 * pattern_period. Throws when phi or d is unset.
Tick t_max(std::span<const SecureTask> tasks);

class QoCCurve {
 public:
  QoCCurve() = default;
  /// Entries keyed by (l, f). Throws Error(schema) when an entry has f > l,
  /// a negative value, or the table decreases in l for some f.
  QoCCurve(std::string plant_id, std::map<std::pair<int, int>, double> entries);

  const std::string& plant_id() const { return plant_id_; }
  std::optional<double> at(int l, int f) const;
  bool has_f(int f) const;
  int max_l(int f) const;
  const std::map<std::pair<int, int>, double>& entries() const { return entries_; }

 private:
  std::string plant_id_;
  std::map<std::pair<int, int>, double> entries_;
};

/// Largest tabulated l with J(l, f) <= bound, or nullopt when even the
/// smallest tabulated l exceeds it.
std::optional<int> policy_from_qoc(const QoCCurve& curve, int f, double bound);

}  // namespace sct
