#include "sct/model.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "sct/error.hpp"

namespace sct {

const char* to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::sensing: return "sensing";
    case TaskKind::message: return "message";
    case TaskKind::control: return "control";
    case TaskKind::background: return "background";
  }
  return "background";
}

TaskKind task_kind_from_string(const std::string& s) {
  if (s == "sensing") return TaskKind::sensing;
  if (s == "message") return TaskKind::message;
  if (s == "control") return TaskKind::control;
  if (s == "background") return TaskKind::background;
  fail(ErrorCode::schema, "unknown task kind '" + s + "'");
}

bool SecureTask::is_extended_job(std::int64_t q) const {
  if (!l) return false;
  if (!s) fail(ErrorCode::unset_parameter, "task " + id + ": s is unset");
  if (q < *s) return false;
  return (q - *s) % *l < f;
}

const SecureTask* SystemModel::find_task(const std::string& id) const {
  for (const auto& tx : transactions) {
    if (tx.sens.id == id) return &tx.sens;
    if (tx.net.id == id) return &tx.net;
    if (tx.ctrl.id == id) return &tx.ctrl;
  }
  for (const auto& t : background)
    if (t.id == id) return &t;
  return nullptr;
}

std::vector<SecureTask> SystemModel::ecu_tasks(const Ecu& ecu) const {
  std::vector<SecureTask> out;
  out.reserve(ecu.tasks.size());
  for (const auto& id : ecu.tasks) {
    const SecureTask* t = find_task(id);
    if (!t) fail(ErrorCode::schema, "ECU " + ecu.id + " maps unknown task " + id);
    out.push_back(*t);
  }
  return out;
}

std::vector<SecureTask> SystemModel::bus_messages() const {
  std::vector<SecureTask> out;
  out.reserve(bus.messages.size());
  for (const auto& id : bus.messages) {
    const SecureTask* t = find_task(id);
    if (!t) fail(ErrorCode::schema, "bus maps unknown message " + id);
    out.push_back(*t);
  }
  return out;
}

SystemModel SystemModel::with_task(const SecureTask& t) const {
  SystemModel out = *this;
  for (auto& tx : out.transactions) {
    if (tx.sens.id == t.id) { tx.sens = t; return out; }
    if (tx.net.id == t.id) { tx.net = t; return out; }
    if (tx.ctrl.id == t.id) { tx.ctrl = t; return out; }
  }
  for (auto& b : out.background)
    if (b.id == t.id) { b = t; return out; }
  fail(ErrorCode::invalid_argument, "no task with id " + t.id);
}

ValidationReport validate_task(const SecureTask& t) {
  ValidationReport r;
  auto add = [&](const std::string& msg) { r.violations.push_back(t.id + ": " + msg); };
  if (t.c_reg <= 0) add("c_reg must be positive");
  if (t.c_ext < t.c_reg) add("c_ext below c_reg");
  if (t.p <= 0) add("period must be positive");
  if (t.d) {
    if (*t.d < 1) add("deadline below 1 tick");
    if (*t.d > t.p) add("deadline exceeds period");
  }
  if (t.phi && *t.phi < 0) add("negative offset");
  if (!t.l) {
    if (t.c_ext != t.c_reg) add("extended WCET without authentication");
  } else {
    const int l = *t.l;
    if (l < 1) add("l below 1");
    if (t.f < 1) add("f below 1");
    if (t.f > l) add("f > l");
    if (t.s) {
      if (*t.s < 0) add("negative s");
      if (t.kind == TaskKind::sensing && *t.s > l - t.f) add("s > l - f");
      else if (*t.s > l - 1) add("s > l - 1");
    }
  }
  return r;
}

ValidationReport validate_transaction(const ControlTransaction& tx) {
  ValidationReport r;
  auto add = [&](const std::string& msg) { r.violations.push_back(tx.id + ": " + msg); };
  for (const SecureTask* t : {&tx.sens, &tx.net, &tx.ctrl}) {
    auto sub = validate_task(*t);
    r.violations.insert(r.violations.end(), sub.violations.begin(), sub.violations.end());
  }
  if (tx.sens.kind != TaskKind::sensing) add("sensing member has kind " + std::string(to_string(tx.sens.kind)));
  if (tx.net.kind != TaskKind::message) add("network member has kind " + std::string(to_string(tx.net.kind)));
  if (tx.ctrl.kind != TaskKind::control) add("control member has kind " + std::string(to_string(tx.ctrl.kind)));
  if (tx.sens.p != tx.p || tx.net.p != tx.p || tx.ctrl.p != tx.p) add("member periods differ from transaction period");
  const auto& pol = tx.policy;
  if (pol.l < 1) add("policy l below 1");
  if (pol.f < 1) add("policy f below 1");
  if (pol.f > pol.l) add("policy f > l");
  if (pol.s && (*pol.s < 0 || *pol.s > pol.l - pol.f)) add("policy s outside [0, l - f]");
  for (const SecureTask* t : {&tx.sens, &tx.net, &tx.ctrl})
    if (t->l != pol.l) add(t->id + " l differs from policy");
  if (tx.sens.f != pol.f) add("sensing f differs from policy");
  if (tx.net.f != 1 || tx.ctrl.f != 1) add("message/control f must be 1");
  if (pol.s) {
    if (tx.sens.s != pol.s) add("sensing s differs from policy");
    const int shifted = *pol.s + pol.f - 1;
    if (tx.net.s != shifted || tx.ctrl.s != shifted) add("message/control s must equal s + f - 1");
  }
  if (tx.e2e_bound && *tx.e2e_bound < 1) add("end-to-end bound below 1 tick");
  if (tx.sens.phi && tx.sens.d && tx.net.phi && *tx.net.phi < *tx.sens.phi + *tx.sens.d)
    add("message offset precedes sensing deadline");
  if (tx.net.phi && tx.net.d && tx.ctrl.phi && *tx.ctrl.phi < *tx.net.phi + *tx.net.d)
    add("control offset precedes message deadline");
  if (tx.ctrl.phi && tx.ctrl.d && *tx.ctrl.phi + *tx.ctrl.d > tx.bound())
    add("control deadline exceeds end-to-end bound");
  return r;
}

ValidationReport validate_system(const SystemModel& sys) {
  ValidationReport r;
  auto add = [&](const std::string& msg) { r.violations.push_back(msg); };
  if (sys.ticks_per_unit <= 0) add("resolution must be positive");
  if (sys.c_max_nrt < 0) add("c_max_nrt must be non-negative");

  std::set<std::string> ids;
  auto note_id = [&](const std::string& id) {
    if (!ids.insert(id).second) add("duplicate task id " + id);
  };
  for (const auto& tx : sys.transactions) {
    auto sub = validate_transaction(tx);
    r.violations.insert(r.violations.end(), sub.violations.begin(), sub.violations.end());
    note_id(tx.sens.id);
    note_id(tx.net.id);
    note_id(tx.ctrl.id);
  }
  for (const auto& t : sys.background) {
    auto sub = validate_task(t);
    r.violations.insert(r.violations.end(), sub.violations.begin(), sub.violations.end());
    note_id(t.id);
    if (t.kind != TaskKind::background) add(t.id + ": background list holds a " + to_string(t.kind) + " task");
  }

  std::map<std::string, int> placements;
  std::set<std::string> on_ecu;
  for (const auto& ecu : sys.ecus)
    for (const auto& id : ecu.tasks) {
      ++placements[id];
      on_ecu.insert(id);
    }
  std::set<std::string> on_bus;
  for (const auto& id : sys.bus.messages) {
    ++placements[id];
    on_bus.insert(id);
  }
  for (const auto& [id, n] : placements) {
    if (!ids.count(id)) add("resource maps unknown task " + id);
    if (n > 1) add(id + " is mapped more than once");
  }
  for (const auto& id : ids)
    if (!placements.count(id)) add(id + " is not mapped to any resource");
  for (const auto& tx : sys.transactions) {
    if (!on_ecu.count(tx.sens.id)) add(tx.sens.id + ": sensing task must run on an ECU");
    if (!on_ecu.count(tx.ctrl.id)) add(tx.ctrl.id + ": control task must run on an ECU");
    if (!on_bus.count(tx.net.id)) add(tx.net.id + ": message must be on the bus");
  }
  return r;
}

ControlTransaction assemble_transaction(std::string id, SecureTask sens, SecureTask net,
                                        SecureTask ctrl, AuthPolicy policy,
                                        std::string plant_id,
                                        std::optional<Tick> e2e_bound) {
  if (sens.p != net.p || net.p != ctrl.p)
    fail(ErrorCode::invalid_argument, "transaction " + id + ": member periods differ");
  if (policy.l < 1 || policy.f < 1 || policy.f > policy.l)
    fail(ErrorCode::invalid_argument, "transaction " + id + ": policy needs 1 <= f <= l");
  if (!policy.s && sens.s) policy.s = sens.s;
  if (policy.s && sens.s && *policy.s != *sens.s)
    fail(ErrorCode::invalid_argument, "transaction " + id + ": sensing s conflicts with policy");
  if (policy.s && (*policy.s < 0 || *policy.s > policy.l - policy.f))
    fail(ErrorCode::invalid_argument, "transaction " + id + ": s > l - f for the sensing task");

  sens.kind = TaskKind::sensing;
  net.kind = TaskKind::message;
  ctrl.kind = TaskKind::control;
  sens.l = net.l = ctrl.l = policy.l;
  sens.f = policy.f;
  net.f = ctrl.f = 1;
  if (policy.s) {
    const int shifted = *policy.s + policy.f - 1;
    for (SecureTask* t : {&net, &ctrl})
      if (t->s && *t->s != shifted)
        fail(ErrorCode::invalid_argument, "transaction " + id + ": " + t->id + " s conflicts with policy");
    sens.s = policy.s;
    net.s = ctrl.s = shifted;
  } else {
    sens.s.reset();
    net.s.reset();
    ctrl.s.reset();
  }

  ControlTransaction tx{std::move(id), sens.p, std::move(sens), std::move(net), std::move(ctrl),
                        policy, std::move(plant_id), e2e_bound};
  auto report = validate_transaction(tx);
  if (!report.ok()) {
    std::ostringstream os;
    os << "transaction " << tx.id << " violates invariants:";
    for (const auto& v : report.violations) os << "\n  " << v;
    fail(ErrorCode::invalid_argument, os.str());
  }
  return tx;
}

ControlTransaction assemble_transaction(const ControlTransaction& tx) {
  return assemble_transaction(tx.id, tx.sens, tx.net, tx.ctrl, tx.policy, tx.plant_id, tx.e2e_bound);
}

Tick hyperperiod(std::span<const SecureTask> tasks) {
  if (tasks.empty()) fail(ErrorCode::invalid_argument, "hyperperiod of an empty task set");
  Tick h = 1;
  for (const auto& t : tasks) h = checked_lcm(h, t.p);
  return h;
}

Tick pattern_period(std::span<const SecureTask> tasks) {
  Tick h = hyperperiod(tasks);
  for (const auto& t : tasks)
    if (t.l) h = checked_lcm(h, t.p * *t.l);
  return h;
}

Tick t_max(std::span<const SecureTask> tasks) {
  if (tasks.empty()) fail(ErrorCode::invalid_argument, "t_max of an empty task set");
  Tick max_phi = 0, max_d = 0;
  for (const auto& t : tasks) {
    if (!t.phi || !t.d) fail(ErrorCode::unset_parameter, "task " + t.id + ": offset or deadline unset");
    max_phi = std::max(max_phi, *t.phi);
    max_d = std::max(max_d, *t.d);
  }
  return max_phi + max_d + 2 * pattern_period(tasks);
}

QoCCurve::QoCCurve(std::string plant_id, std::map<std::pair<int, int>, double> entries)
    : plant_id_(std::move(plant_id)), entries_(std::move(entries)) {
  std::map<int, double> last_by_f;
  for (const auto& [key, value] : entries_) {
    const auto [l, f] = key;
    if (f < 1 || l < f)
      fail(ErrorCode::schema, "curve " + plant_id_ + ": entry (l=" + std::to_string(l) +
                                  ", f=" + std::to_string(f) + ") needs 1 <= f <= l");
    if (!(value >= 0.0))
      fail(ErrorCode::schema, "curve " + plant_id_ + ": negative or NaN value");
  }
  // map order is (l, f); check monotonicity per f in increasing l.
  for (const auto& [key, value] : entries_) {
    const auto [l, f] = key;
    auto it = last_by_f.find(f);
    if (it != last_by_f.end() && value < it->second)
      fail(ErrorCode::schema, "curve " + plant_id_ + ": J decreases in l at l=" +
                                  std::to_string(l) + ", f=" + std::to_string(f));
    last_by_f[f] = value;
  }
}

std::optional<double> QoCCurve::at(int l, int f) const {
  auto it = entries_.find({l, f});
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

bool QoCCurve::has_f(int f) const {
  return std::any_of(entries_.begin(), entries_.end(),
                     [f](const auto& e) { return e.first.second == f; });
}

int QoCCurve::max_l(int f) const {
  int best = 0;
  for (const auto& [key, v] : entries_)
    if (key.second == f) best = std::max(best, key.first);
  return best;
}

std::optional<int> policy_from_qoc(const QoCCurve& curve, int f, double bound) {
  if (!curve.has_f(f))
    fail(ErrorCode::invalid_argument, "curve " + curve.plant_id() + " has no entries for f=" + std::to_string(f));
  std::optional<int> best;
  for (const auto& [key, value] : curve.entries()) {
    if (key.second != f) continue;
    if (value <= bound) best = key.first;
    else break;  // nondecreasing in l
  }
  return best;
}

}  // namespace sct
