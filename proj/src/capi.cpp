#include "sct.h"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <sstream>
#include <string>

#include "json.hpp"
#include "sct/error.hpp"
#include "sct/io.hpp"
#include "sct/milp.hpp"
#include "sct/workload_gen.hpp"

struct sct_system {
  sct::SystemModel model;
};

namespace {

thread_local std::string last_error;

sct_status code_of(sct::ErrorCode c) {
  switch (c) {
    case sct::ErrorCode::invalid_argument: return SCT_ERR_INVALID_ARGUMENT;
    case sct::ErrorCode::unset_parameter: return SCT_ERR_UNSET_PARAMETER;
    case sct::ErrorCode::parse: return SCT_ERR_PARSE;
    case sct::ErrorCode::schema: return SCT_ERR_SCHEMA;
    case sct::ErrorCode::io: return SCT_ERR_IO;
    case sct::ErrorCode::infeasible_input: return SCT_ERR_INFEASIBLE_INPUT;
  }
  return SCT_ERR_INTERNAL;
}

template <class F>
sct_status guard(F&& f) {
  last_error.clear();
  try {
    f();
    return SCT_OK;
  } catch (const sct::Error& e) {
    last_error = e.what();
    return code_of(e.code());
  } catch (const std::exception& e) {
    last_error = e.what();
    return SCT_ERR_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  if (!p) sct::fail(sct::ErrorCode::invalid_argument, std::string(what) + " is null");
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void put(char** out, const std::string& s) {
  if (out) *out = dup(s);
}

sct_system* wrap(sct::SystemModel m) { return new sct_system{std::move(m)}; }

sct::Tick system_t_max(const sct::SystemModel& sys) {
  sct::Tick h = 0;
  for (const auto& e : sys.ecus) {
    const auto tasks = sys.ecu_tasks(e);
    if (!tasks.empty()) h = std::max(h, sct::t_max(tasks));
  }
  const auto msgs = sys.bus_messages();
  if (!msgs.empty()) h = std::max(h, sct::t_max(msgs));
  return h;
}

std::string csv_with_resource(const std::string& resource, const sct::Trace& t) {
  std::istringstream in(sct::trace_csv(t));
  std::string line, out;
  std::getline(in, line);  // header
  while (std::getline(in, line)) out += resource + "," + line + "\n";
  return out;
}

const sct::PlantModel& find_plant(const std::vector<sct::PlantModel>& plants, const std::string& id) {
  for (const auto& p : plants)
    if (p.id == id) return p;
  sct::fail(sct::ErrorCode::invalid_argument, "no plant '" + id + "'");
}

}  // namespace

extern "C" {

const char* sct_version(void) { return "1.0.0"; }

const char* sct_last_error(void) { return last_error.c_str(); }

const char* sct_status_name(sct_status s) {
  switch (s) {
    case SCT_OK: return "ok";
    case SCT_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case SCT_ERR_UNSET_PARAMETER: return "unset_parameter";
    case SCT_ERR_PARSE: return "parse";
    case SCT_ERR_SCHEMA: return "schema";
    case SCT_ERR_IO: return "io";
    case SCT_ERR_INFEASIBLE_INPUT: return "infeasible_input";
    case SCT_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

void sct_string_free(char* s) { std::free(s); }

sct_status sct_system_parse(const char* json, sct_system** out) {
  return guard([&] {
    need(json, "json");
    need(out, "out");
    *out = wrap(sct::parse_system(json));
  });
}

sct_status sct_system_load(const char* path, sct_system** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = wrap(sct::parse_system(sct::read_file(path)));
  });
}

void sct_system_free(sct_system* sys) { delete sys; }

sct_status sct_system_to_json(const sct_system* sys, char** json) {
  return guard([&] {
    need(sys, "system");
    need(json, "json");
    *json = dup(sct::dump_system(sys->model));
  });
}

int64_t sct_system_ticks_per_unit(const sct_system* sys) { return sys ? sys->model.ticks_per_unit : 0; }

size_t sct_system_transaction_count(const sct_system* sys) { return sys ? sys->model.transactions.size() : 0; }

sct_status sct_validate(const sct_system* sys, int* ok, char** report) {
  return guard([&] {
    need(sys, "system");
    const auto r = sct::validate_system(sys->model);
    if (ok) *ok = r.ok() ? 1 : 0;
    nlohmann::ordered_json j;
    j["schema_version"] = sct::kSchemaVersion;
    j["ok"] = r.ok();
    j["violations"] = r.violations;
    put(report, j.dump(2) + "\n");
  });
}

sct_status sct_analyze(const sct_system* sys, int* schedulable, char** report) {
  return guard([&] {
    need(sys, "system");
    const auto v = sct::analyze_system(sys->model);
    if (schedulable) *schedulable = v.ok() ? 1 : 0;
    put(report, sct::dump_verdicts(v));
  });
}

sct_status sct_synthesize(const sct_system* sys, const char* strategy, double max_seconds, int* feasible,
                          char** solution, sct_system** solved) {
  return guard([&] {
    need(sys, "system");
    sct::DecomposeOptions opt;
    if (strategy) {
      std::string s = strategy;
      std::replace(s.begin(), s.end(), '-', '_');
      opt.strategy = sct::strategy_from_string(s);
    }
    if (max_seconds > 0) opt.limits.max_seconds = max_seconds;
    const auto r = sct::synthesize_decomposed(sys->model, opt);
    const bool ok = r.status == sct::SynthesisStatus::feasible;
    if (feasible) *feasible = ok ? 1 : 0;
    put(solution, sct::dump_solution(r));
    if (solved) *solved = ok ? wrap(sct::apply_solution(sys->model, r)) : nullptr;
  });
}

sct_status sct_export_lp(const sct_system* sys, char** lp) {
  return guard([&] {
    need(sys, "system");
    need(lp, "lp");
    *lp = dup(sct::to_lp(sct::encode_system(sys->model)));
  });
}

sct_status sct_simulate(const sct_system* sys, int64_t horizon, size_t* misses, char** report,
                        char** trace_csv) {
  return guard([&] {
    need(sys, "system");
    const sct::Tick h = horizon > 0 ? horizon : system_t_max(sys->model);
    const auto traces = sct::simulate_system(sys->model, h);
    const auto timing = sct::check_transaction_timing(sys->model, traces);
    if (misses) *misses = traces.misses() + timing.violations.size();
    put(report, sct::dump_simulation(traces, timing));
    if (trace_csv) {
      std::string csv = "resource,time,task,job,event\n";
      for (const auto& [id, t] : traces.ecus) csv += csv_with_resource(id, t);
      csv += csv_with_resource(sys->model.bus.id, traces.bus);
      *trace_csv = dup(csv);
    }
  });
}

sct_status sct_opportunistic(const sct_system* sys, const char* config, const char* curves, int* valid,
                             char** report) {
  return guard([&] {
    need(sys, "system");
    need(config, "config");
    auto run = sct::parse_opportunistic_config(config);
    if (curves) run.config.curves = sct::parse_curves(curves);
    const auto r = sct::run_opportunistic(sys->model, run.sporadic, run.config);
    if (valid) *valid = r.metrics.valid && r.metrics.periodic_misses == 0 ? 1 : 0;
    put(report, sct::dump_opportunistic(r));
  });
}

sct_gen_spec sct_gen_spec_default(void) {
  const sct::GenSpec d;
  return sct_gen_spec{d.n_transactions, d.ecu_count, d.target_ecu_utilization, d.target_bus_utilization,
                      d.ticks_per_ms, d.seed};
}

sct_status sct_generate(const sct_gen_spec* spec, sct_system** out) {
  return guard([&] {
    need(spec, "spec");
    need(out, "out");
    sct::GenSpec g;
    g.n_transactions = spec->n_transactions;
    g.ecu_count = spec->ecu_count;
    g.target_ecu_utilization = spec->ecu_utilization;
    g.target_bus_utilization = spec->bus_utilization;
    g.ticks_per_ms = spec->ticks_per_ms;
    g.seed = spec->seed;
    *out = wrap(sct::generate(g));
  });
}

sct_status sct_case_study(int64_t ticks_per_ms, uint64_t seed, sct_system** out) {
  return guard([&] {
    need(out, "out");
    sct::CaseStudySpec c;
    if (ticks_per_ms > 0) c.ticks_per_ms = ticks_per_ms;
    c.seed = seed;
    *out = wrap(sct::case_study_system(c));
  });
}

sct_status sct_qoc_estimate(const char* plants, const char* plant_id, int l_max, int f, int samples,
                            int horizon, uint64_t seed, char** report) {
  return guard([&] {
    need(plants, "plants");
    need(report, "report");
    const auto all = sct::parse_plants(plants);
    if (f < 1 || l_max < f) sct::fail(sct::ErrorCode::invalid_argument, "need 1 <= f <= l_max");
    nlohmann::ordered_json j;
    j["schema_version"] = sct::kSchemaVersion;
    j["f"] = f;
    j["samples"] = samples;
    j["horizon"] = horizon;
    j["seed"] = seed;
    j["plants"] = nlohmann::ordered_json::array();
    for (const auto& p : all) {
      if (plant_id && p.id != plant_id) continue;
      nlohmann::ordered_json pj;
      pj["id"] = p.id;
      try {
        pj["minimal_block_length"] = sct::minimal_block_length(p);
      } catch (const sct::Error&) {
        pj["minimal_block_length"] = nullptr;
      }
      pj["points"] = nlohmann::ordered_json::array();
      for (int l = f; l <= l_max; ++l)
        pj["points"].push_back({l, sct::estimate_qoc_bound(p, l, f, samples, horizon, seed)});
      j["plants"].push_back(pj);
    }
    if (j["plants"].empty()) sct::fail(sct::ErrorCode::invalid_argument, "no plant matched");
    *report = dup(j.dump(2) + "\n");
  });
}

sct_status sct_qoc_trajectory(const char* plants, const char* plant_id, int l, int f, int s, const char* strategy,
                              int horizon, uint64_t seed, char** csv) {
  return guard([&] {
    need(plants, "plants");
    need(plant_id, "plant_id");
    need(csv, "csv");
    const auto all = sct::parse_plants(plants);
    const auto& p = find_plant(all, plant_id);
    std::optional<sct::AuthPolicy> policy;
    if (l > 0) policy = sct::AuthPolicy{s, f, l};
    sct::AttackOptions attack;
    if (strategy) attack.strategy = sct::attack_strategy_from_string(strategy);
    attack.seed = seed;
    *csv = dup(sct::closed_loop_csv(sct::simulate_closed_loop(p, policy, attack, horizon, seed)));
  });
}

}  // extern "C"
