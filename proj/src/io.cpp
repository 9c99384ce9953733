#include "sct/io.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "sct/error.hpp"

namespace sct {

namespace {

using Json = nlohmann::ordered_json;

Json parse_doc(std::string_view text, const char* what) {
  Json j;
  try {
    j = Json::parse(text.begin(), text.end());
  } catch (const Json::parse_error& e) {
    fail(ErrorCode::parse, std::string(what) + ": " + e.what());
  }
  if (!j.is_object()) fail(ErrorCode::schema, std::string(what) + ": top level must be an object");
  if (!j.contains("schema_version")) fail(ErrorCode::schema, std::string(what) + ": schema_version missing");
  if (!j["schema_version"].is_number_integer() || j["schema_version"].get<int>() != kSchemaVersion)
    fail(ErrorCode::schema, std::string(what) + ": unsupported schema_version " + j["schema_version"].dump());
  return j;
}

Json new_doc() {
  Json j;
  j["schema_version"] = kSchemaVersion;
  return j;
}

// Wraps json type errors into schema errors.
template <class F>
auto guarded(const char* what, F&& f) {
  try {
    return f();
  } catch (const Json::exception& e) {
    fail(ErrorCode::schema, std::string(what) + ": " + e.what());
  }
}

const Json& need(const Json& j, const char* key) {
  if (!j.contains(key)) fail(ErrorCode::schema, std::string("missing field '") + key + "'");
  return j.at(key);
}

template <class T>
std::optional<T> opt(const Json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

SecureTask task_from(const Json& j, TaskKind fallback) {
  SecureTask t;
  t.id = need(j, "id").get<std::string>();
  t.kind = j.contains("kind") ? task_kind_from_string(j["kind"].get<std::string>()) : fallback;
  t.c_reg = need(j, "c_reg").get<Tick>();
  t.c_ext = j.value("c_ext", t.c_reg);
  t.p = need(j, "p").get<Tick>();
  t.phi = opt<Tick>(j, "phi");
  t.d = opt<Tick>(j, "d");
  t.l = opt<int>(j, "l");
  t.f = j.value("f", 1);
  t.s = opt<int>(j, "s");
  return t;
}

Json task_to(const SecureTask& t, bool with_policy) {
  Json j;
  j["id"] = t.id;
  j["kind"] = to_string(t.kind);
  j["c_reg"] = t.c_reg;
  j["c_ext"] = t.c_ext;
  j["p"] = t.p;
  if (t.phi) j["phi"] = *t.phi;
  if (t.d) j["d"] = *t.d;
  if (with_policy && t.l) {
    j["l"] = *t.l;
    j["f"] = t.f;
    if (t.s) j["s"] = *t.s;
  }
  return j;
}

Json matrix_to(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

Eigen::MatrixXd matrix_from(const Json& j, const char* name) {
  if (!j.is_array() || j.empty()) fail(ErrorCode::schema, std::string(name) + " must be a nonempty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    if (!j[r].is_array() || static_cast<Eigen::Index>(j[r].size()) != cols)
      fail(ErrorCode::schema, std::string(name) + " rows differ in length");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

SynthesisStatus status_from(const std::string& s) {
  for (auto v : {SynthesisStatus::feasible, SynthesisStatus::infeasible, SynthesisStatus::timeout})
    if (to_string(v) == s) return v;
  fail(ErrorCode::schema, "unknown synthesis status " + s);
}

Json verdict_to(const Verdict& v) {
  Json j;
  j["status"] = to_string(v.status);
  if (v.witness) {
    j["witness"] = Json::array({v.witness->t1, v.witness->t2});
    j["demand"] = v.demand;
    j["supply"] = v.supply;
  }
  return j;
}

}  // namespace

SystemModel parse_system(std::string_view text) {
  const Json j = parse_doc(text, "system");
  return guarded("system", [&] {
    SystemModel sys;
    sys.ticks_per_unit = j.value("ticks_per_unit", Tick{10});
    sys.time_unit = j.value("time_unit", std::string("unit"));
    sys.c_max_nrt = j.value("c_max_nrt", Tick{0});
    for (const auto& e : j.value("ecus", Json::array()))
      sys.ecus.push_back({need(e, "id").get<std::string>(), e.value("tasks", std::vector<std::string>{})});
    if (j.contains("bus")) {
      const auto& b = j["bus"];
      sys.bus.id = b.value("id", std::string("bus"));
      sys.bus.messages = b.value("messages", std::vector<std::string>{});
      sys.bus.rate_bps = opt<double>(b, "rate_bps");
    }
    for (const auto& t : j.value("transactions", Json::array())) {
      const auto& pol = need(t, "policy");
      AuthPolicy policy{opt<int>(pol, "s"), pol.value("f", 1), need(pol, "l").get<int>()};
      auto sens = task_from(need(t, "sensing"), TaskKind::sensing);
      auto net = task_from(need(t, "message"), TaskKind::message);
      auto ctrl = task_from(need(t, "control"), TaskKind::control);
      const Tick p = t.value("period", sens.p);
      if (sens.p != p || net.p != p || ctrl.p != p)
        fail(ErrorCode::schema, "transaction " + need(t, "id").get<std::string>() + ": member periods differ");
      for (SecureTask* m : {&sens, &net, &ctrl}) m->s.reset();
      try {
        sys.transactions.push_back(assemble_transaction(need(t, "id").get<std::string>(), sens, net, ctrl, policy,
                                                        t.value("plant_id", std::string()),
                                                        opt<Tick>(t, "e2e_bound")));
      } catch (const Error& e) {
        fail(ErrorCode::schema, e.what());
      }
    }
    for (const auto& t : j.value("background", Json::array()))
      sys.background.push_back(task_from(t, TaskKind::background));
    return sys;
  });
}

std::string dump_system(const SystemModel& sys) {
  Json j = new_doc();
  j["ticks_per_unit"] = sys.ticks_per_unit;
  j["time_unit"] = sys.time_unit;
  j["c_max_nrt"] = sys.c_max_nrt;
  j["ecus"] = Json::array();
  for (const auto& e : sys.ecus) j["ecus"].push_back({{"id", e.id}, {"tasks", e.tasks}});
  j["bus"] = {{"id", sys.bus.id}, {"messages", sys.bus.messages}};
  if (sys.bus.rate_bps) j["bus"]["rate_bps"] = *sys.bus.rate_bps;
  j["transactions"] = Json::array();
  for (const auto& tx : sys.transactions) {
    Json t;
    t["id"] = tx.id;
    t["period"] = tx.p;
    if (!tx.plant_id.empty()) t["plant_id"] = tx.plant_id;
    if (tx.e2e_bound) t["e2e_bound"] = *tx.e2e_bound;
    t["policy"] = {{"l", tx.policy.l}, {"f", tx.policy.f}};
    if (tx.policy.s) t["policy"]["s"] = *tx.policy.s;
    t["sensing"] = task_to(tx.sens, false);
    t["message"] = task_to(tx.net, false);
    t["control"] = task_to(tx.ctrl, false);
    j["transactions"].push_back(t);
  }
  j["background"] = Json::array();
  for (const auto& t : sys.background) j["background"].push_back(task_to(t, true));
  return j.dump(2) + "\n";
}

std::map<std::string, QoCCurve> parse_curves(std::string_view text) {
  const Json j = parse_doc(text, "curves");
  return guarded("curves", [&] {
    std::map<std::string, std::map<std::pair<int, int>, double>> raw;
    for (const auto& c : need(j, "curves")) {
      const auto id = need(c, "plant_id").get<std::string>();
      const int f = need(c, "f").get<int>();
      for (const auto& pt : need(c, "points")) {
        if (!pt.is_array() || pt.size() != 2) fail(ErrorCode::schema, "curve points must be [l, J] pairs");
        raw[id][{pt[0].get<int>(), f}] = pt[1].get<double>();
      }
    }
    std::map<std::string, QoCCurve> out;
    for (auto& [id, entries] : raw) out.emplace(id, QoCCurve(id, std::move(entries)));
    return out;
  });
}

std::string dump_curves(const std::map<std::string, QoCCurve>& curves) {
  Json j = new_doc();
  j["curves"] = Json::array();
  for (const auto& [id, c] : curves) {
    std::map<int, Json> by_f;
    for (const auto& [key, v] : c.entries()) {
      if (!by_f.count(key.second)) by_f[key.second] = Json::array();
      by_f[key.second].push_back(Json::array({key.first, v}));
    }
    for (auto& [f, pts] : by_f) j["curves"].push_back({{"plant_id", id}, {"f", f}, {"points", pts}});
  }
  return j.dump(2) + "\n";
}

std::vector<PlantModel> parse_plants(std::string_view text) {
  const Json j = parse_doc(text, "plants");
  return guarded("plants", [&] {
    std::vector<PlantModel> out;
    for (const auto& pj : need(j, "plants")) {
      PlantModel p;
      p.id = need(pj, "id").get<std::string>();
      p.A = matrix_from(need(pj, "A"), "A");
      p.B = matrix_from(need(pj, "B"), "B");
      p.C = matrix_from(need(pj, "C"), "C");
      p.L = matrix_from(need(pj, "L"), "L");
      p.K = matrix_from(need(pj, "K"), "K");
      p.Q = pj.contains("Q") ? matrix_from(pj["Q"], "Q") : Eigen::MatrixXd::Zero(p.A.rows(), p.A.rows());
      p.R = pj.contains("R") ? matrix_from(pj["R"], "R") : Eigen::MatrixXd::Zero(p.C.rows(), p.C.rows());
      p.window = need(pj, "window").get<int>();
      p.threshold = need(pj, "threshold").get<double>();
      if (pj.contains("x0")) {
        const auto v = pj["x0"].get<std::vector<double>>();
        p.x0 = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
      } else {
        p.x0 = Eigen::VectorXd::Zero(p.A.rows());
      }
      try {
        validate_plant(p);
      } catch (const Error& e) {
        fail(ErrorCode::schema, "plant " + p.id + ": " + e.what());
      }
      out.push_back(std::move(p));
    }
    return out;
  });
}

std::string dump_plants(const std::vector<PlantModel>& plants) {
  Json j = new_doc();
  j["plants"] = Json::array();
  for (const auto& p : plants) {
    Json pj;
    pj["id"] = p.id;
    pj["A"] = matrix_to(p.A);
    pj["B"] = matrix_to(p.B);
    pj["C"] = matrix_to(p.C);
    pj["Q"] = matrix_to(p.Q);
    pj["R"] = matrix_to(p.R);
    pj["L"] = matrix_to(p.L);
    pj["K"] = matrix_to(p.K);
    pj["window"] = p.window;
    pj["threshold"] = p.threshold;
    pj["x0"] = std::vector<double>(p.x0.data(), p.x0.data() + p.x0.size());
    j["plants"].push_back(pj);
  }
  return j.dump(2) + "\n";
}

SynthesisResult parse_solution(std::string_view text) {
  const Json j = parse_doc(text, "solution");
  return guarded("solution", [&] {
    SynthesisResult r;
    r.status = status_from(need(j, "status").get<std::string>());
    r.failed_stage = j.value("failed_stage", std::string());
    const Json assignment = j.value("assignment", Json::object());
    for (const auto& [id, a] : assignment.items())
      r.assignment[id] = ParamAssignment{need(a, "phi").get<Tick>(), need(a, "d").get<Tick>(), opt<int>(a, "s")};
    const Json parameters = j.value("parameters", Json::object());
    for (const auto& [name, v] : parameters.items()) r.parameters[name] = v.get<Tick>();
    if (j.contains("stats")) {
      const auto& s = j["stats"];
      r.stats.variables = s.value("variables", std::size_t{0});
      r.stats.constraints = s.value("constraints", std::size_t{0});
      r.stats.pruned_variables = s.value("pruned_variables", std::size_t{0});
      r.stats.pruned_constraints = s.value("pruned_constraints", std::size_t{0});
      r.stats.nodes = s.value("nodes", std::uint64_t{0});
    }
    for (const auto& s : j.value("stages", Json::array()))
      r.stages.push_back({need(s, "stage").get<std::string>(), status_from(need(s, "status").get<std::string>()),
                          s.value("detail", std::string()), 0.0});
    return r;
  });
}

std::string dump_solution(const SynthesisResult& r) {
  Json j = new_doc();
  j["status"] = to_string(r.status);
  if (!r.failed_stage.empty()) j["failed_stage"] = r.failed_stage;
  j["assignment"] = Json::object();
  for (const auto& [id, a] : r.assignment) {
    Json aj = {{"phi", a.phi}, {"d", a.d}};
    if (a.s) aj["s"] = *a.s;
    j["assignment"][id] = aj;
  }
  if (!r.parameters.empty()) j["parameters"] = r.parameters;
  j["stats"] = {{"variables", r.stats.variables},
                {"constraints", r.stats.constraints},
                {"pruned_variables", r.stats.pruned_variables},
                {"pruned_constraints", r.stats.pruned_constraints},
                {"nodes", r.stats.nodes}};
  j["stages"] = Json::array();
  for (const auto& s : r.stages)
    j["stages"].push_back({{"stage", s.stage}, {"status", to_string(s.status)}, {"detail", s.detail}});
  return j.dump(2) + "\n";
}

std::string dump_verdicts(const SystemVerdicts& v) {
  Json j = new_doc();
  j["ok"] = v.ok();
  j["ecus"] = Json::object();
  for (const auto& [id, verdict] : v.ecus) j["ecus"][id] = verdict_to(verdict);
  j["bus"] = verdict_to(v.bus);
  return j.dump(2) + "\n";
}

OpportunisticRun parse_opportunistic_config(std::string_view text) {
  const Json j = parse_doc(text, "opportunistic config");
  return guarded("opportunistic config", [&] {
    OpportunisticRun run;
    run.config.horizon = need(j, "horizon").get<Tick>();
    run.config.weights = j.value("weights", std::vector<double>{});
    if (j.contains("sporadic")) {
      const auto& s = j["sporadic"];
      run.sporadic.min_interarrival = need(s, "min_interarrival").get<Tick>();
      run.sporadic.frame_time = need(s, "frame_time").get<Tick>();
      run.sporadic.bandwidth_cap = need(s, "bandwidth_cap").get<double>();
      run.sporadic.seed = s.value("seed", std::uint64_t{1});
    }
    return run;
  });
}

std::string dump_opportunistic(const OpportunisticResult& r) {
  const auto& m = r.metrics;
  Json j = new_doc();
  j["valid"] = m.valid;
  j["periodic_misses"] = m.periodic_misses;
  j["plants"] = Json::object();
  for (const auto& [id, p] : m.plants)
    j["plants"][id] = {{"plant_id", p.plant_id}, {"l", p.l},
                       {"f", p.f},               {"l_hat", p.l_hat},
                       {"periodic_blocks", p.periodic_blocks}, {"opportunistic", p.opportunistic}};
  j["sporadic_utilization"] = m.sporadic_utilization;
  j["bus_utilization_before"] = m.bus_utilization_before;
  j["bus_utilization_after"] = m.bus_utilization_after;
  j["bus_utilization_delta"] = m.bus_utilization_delta;
  j["ecu_utilization_delta"] = m.ecu_utilization_delta;
  j["authentications"] = Json::array();
  for (const auto& a : r.auths)
    j["authentications"].push_back({{"transaction", a.transaction},
                                    {"job", a.job},
                                    {"reward", a.reward},
                                    {"sign_start", a.sign_start},
                                    {"frame_start", a.frame_start},
                                    {"verify_end", a.verify_end}});
  return j.dump(2) + "\n";
}

std::string dump_simulation(const SystemTraces& traces, const TimingReport& timing) {
  Json j = new_doc();
  auto resource = [](const Trace& t) {
    Json r = {{"horizon", t.horizon}, {"misses", t.misses()}};
    if (auto m = t.first_miss()) r["first_miss"] = {{"time", m->time}, {"task", m->task}, {"job", m->job}};
    return r;
  };
  j["misses"] = traces.misses();
  j["ecus"] = Json::object();
  for (const auto& [id, t] : traces.ecus) j["ecus"][id] = resource(t);
  j["bus"] = resource(traces.bus);
  j["timing_violations"] = Json::array();
  for (const auto& v : timing.violations)
    j["timing_violations"].push_back({{"transaction", v.transaction}, {"job", v.job}, {"what", v.what}});
  return j.dump(2) + "\n";
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io, "cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::io, "cannot write " + path);
  out << text;
  if (!out) fail(ErrorCode::io, "write failed for " + path);
}

}  // namespace sct
