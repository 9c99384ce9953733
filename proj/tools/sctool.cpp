// Command-line front end over the C interface. Every command writes its
// results into --out and prints one summary line. Exit codes: 0 success,
// 1 negative verdict (not schedulable, infeasible, misses), 2 usage or
// input errors.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "sct.h"

namespace fs = std::filesystem;

namespace {

struct InputError {
  std::string message;
};

struct Owned {
  char* p = nullptr;
  ~Owned() { sct_string_free(p); }
  std::string str() const { return p ? p : ""; }
};

struct SystemHandle {
  sct_system* p = nullptr;
  ~SystemHandle() { sct_system_free(p); }
};

void check(sct_status s, const std::string& what) {
  if (s != SCT_OK) throw InputError{what + ": " + sct_status_name(s) + ": " + sct_last_error()};
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError{"cannot open " + path};
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

struct Options {
  std::string system, curves, plants, config, out = ".";
  std::string strategy = "network-first";
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> resolution, horizon;
  double time_limit = 0;
  // generate
  int transactions = 10, ecus = 4;
  double ecu_util = 0.5, bus_util = 0.5;
  bool case_study = false;
  // qoc-estimate
  std::string plant;
  int l_max = 10, f = 1, samples = 20;
  bool trajectory = false;
};

fs::path out_file(const Options& o, const std::string& name) {
  fs::create_directories(o.out);
  return fs::path(o.out) / name;
}

void emit(const Options& o, const std::string& name, const std::string& text) {
  const auto path = out_file(o, name);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError{"cannot write " + path.string()};
  out << text;
}

void load(const Options& o, SystemHandle& sys) {
  if (o.system.empty()) throw InputError{"--system is required"};
  check(sct_system_load(o.system.c_str(), &sys.p), "loading " + o.system);
  if (o.resolution && *o.resolution != sct_system_ticks_per_unit(sys.p))
    throw InputError{"--resolution " + std::to_string(*o.resolution) + " does not match the system's ticks_per_unit " +
                     std::to_string(sct_system_ticks_per_unit(sys.p))};
}

int cmd_validate(const Options& o) {
  SystemHandle sys;
  load(o, sys);
  int ok = 0;
  Owned report;
  check(sct_validate(sys.p, &ok, &report.p), "validate");
  emit(o, "validation.json", report.str());
  std::cout << "validate: " << (ok ? "OK" : "INVALID") << '\n';
  return ok ? 0 : 1;
}

int cmd_analyze(const Options& o) {
  SystemHandle sys;
  load(o, sys);
  int ok = 0;
  Owned report;
  check(sct_analyze(sys.p, &ok, &report.p), "analyze");
  emit(o, "analysis.json", report.str());
  std::cout << "analyze: " << (ok ? "SCHEDULABLE" : "NOT_SCHEDULABLE") << '\n';
  return ok ? 0 : 1;
}

int cmd_synthesize(const Options& o) {
  SystemHandle sys, solved;
  load(o, sys);
  int feasible = 0;
  Owned solution;
  check(sct_synthesize(sys.p, o.strategy.c_str(), o.time_limit, &feasible, &solution.p, &solved.p), "synthesize");
  emit(o, "solution.json", solution.str());
  if (feasible) {
    Owned text;
    check(sct_system_to_json(solved.p, &text.p), "synthesize");
    emit(o, "solved_system.json", text.str());
  }
  const auto status = nlohmann::json::parse(solution.str()).value("status", std::string("?"));
  std::cout << "synthesize: " << status << '\n';
  return feasible ? 0 : 1;
}

int cmd_export_lp(const Options& o) {
  SystemHandle sys;
  load(o, sys);
  Owned lp;
  check(sct_export_lp(sys.p, &lp.p), "export-lp");
  emit(o, "system.lp", lp.str());
  std::cout << "export-lp: " << out_file(o, "system.lp").string() << '\n';
  return 0;
}

int cmd_simulate(const Options& o) {
  SystemHandle sys;
  load(o, sys);
  std::size_t misses = 0;
  Owned report, csv;
  check(sct_simulate(sys.p, o.horizon.value_or(0), &misses, &report.p, &csv.p), "simulate");
  emit(o, "simulation.json", report.str());
  emit(o, "trace.csv", csv.str());
  std::cout << "simulate: " << misses << " misses\n";
  return misses == 0 ? 0 : 1;
}

int cmd_opportunistic(const Options& o) {
  SystemHandle sys;
  load(o, sys);
  nlohmann::json cfg;
  if (!o.config.empty()) {
    try {
      cfg = nlohmann::json::parse(slurp(o.config));
    } catch (const nlohmann::json::parse_error& e) {
      throw InputError{o.config + ": " + e.what()};
    }
  } else {
    cfg = {{"schema_version", 1}};
  }
  if (o.horizon) cfg["horizon"] = *o.horizon;
  if (o.seed && cfg.contains("sporadic") && cfg["sporadic"].is_object()) cfg["sporadic"]["seed"] = *o.seed;
  const std::string curves = o.curves.empty() ? std::string() : slurp(o.curves);
  int valid = 0;
  Owned report;
  check(sct_opportunistic(sys.p, cfg.dump().c_str(), o.curves.empty() ? nullptr : curves.c_str(), &valid, &report.p),
        "opportunistic");
  emit(o, "opportunistic.json", report.str());
  const auto r = nlohmann::json::parse(report.str());
  std::cout << "opportunistic: " << (valid ? "valid" : "INVALID");
  for (const auto& [id, p] : r["plants"].items()) std::cout << ' ' << id << " l_hat=" << p["l_hat"].get<double>();
  std::cout << '\n';
  return valid ? 0 : 1;
}

int cmd_generate(const Options& o) {
  SystemHandle sys;
  const std::uint64_t seed = o.seed.value_or(1);
  const std::int64_t tpm = o.resolution.value_or(1000);
  if (tpm <= 0) throw InputError{"--resolution must be positive"};
  if (o.case_study) {
    check(sct_case_study(tpm, seed, &sys.p), "generate");
  } else {
    auto spec = sct_gen_spec_default();
    spec.n_transactions = o.transactions;
    spec.ecu_count = o.ecus;
    spec.ecu_utilization = o.ecu_util;
    spec.bus_utilization = o.bus_util;
    spec.ticks_per_ms = tpm;
    spec.seed = seed;
    check(sct_generate(&spec, &sys.p), "generate");
  }
  Owned text;
  check(sct_system_to_json(sys.p, &text.p), "generate");
  emit(o, "system.json", text.str());
  std::cout << "generate: " << sct_system_transaction_count(sys.p) << " transactions, seed " << seed << '\n';
  return 0;
}

int cmd_qoc_estimate(const Options& o) {
  if (o.plants.empty()) throw InputError{"--plants is required"};
  const auto plants = slurp(o.plants);
  const std::uint64_t seed = o.seed.value_or(1);
  const int horizon = static_cast<int>(o.horizon.value_or(200));
  Owned report;
  check(sct_qoc_estimate(plants.c_str(), o.plant.empty() ? nullptr : o.plant.c_str(), o.l_max, o.f, o.samples,
                         horizon, seed, &report.p),
        "qoc-estimate");
  emit(o, "qoc_estimate.json", report.str());
  const auto r = nlohmann::json::parse(report.str());
  std::cout << "qoc-estimate:";
  for (const auto& p : r["plants"]) {
    const auto id = p["id"].get<std::string>();
    std::cout << ' ' << id << " J(" << o.l_max << ',' << o.f << ")=" << p["points"].back()[1].get<double>();
    if (o.trajectory) {
      Owned csv;
      check(sct_qoc_trajectory(plants.c_str(), id.c_str(), o.l_max, o.f, 0, "greedy", horizon, seed, &csv.p),
            "qoc-estimate");
      emit(o, "trajectory_" + id + ".csv", csv.str());
    }
  }
  std::cout << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scheduling and intermittent authentication toolkit"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* c) {
    c->add_option("--system", o.system, "System JSON")->check(CLI::ExistingFile);
    c->add_option("--resolution", o.resolution, "Ticks per time unit (must match the system)");
    c->add_option("--out", o.out, "Output directory");
  };

  auto* validate = app.add_subcommand("validate", "Structural checks");
  common(validate);
  auto* analyze = app.add_subcommand("analyze", "Demand verdicts per ECU and bus");
  common(analyze);
  auto* synth = app.add_subcommand("synthesize", "Decomposed parameter synthesis");
  common(synth);
  synth->add_option("--strategy", o.strategy, "network-first or ecu-first")
      ->check(CLI::IsMember({"network-first", "ecu-first"}));
  synth->add_option("--time-limit", o.time_limit, "Search time limit in seconds, 0 for none");
  auto* lp = app.add_subcommand("export-lp", "Write the whole-system MILP");
  common(lp);
  auto* sim = app.add_subcommand("simulate", "EDF simulation and transaction timing");
  common(sim);
  sim->add_option("--horizon", o.horizon, "Ticks, default the feasibility bound");
  auto* opp = app.add_subcommand("opportunistic", "Opportunistic authentication in idle time");
  common(opp);
  opp->add_option("--config", o.config, "Opportunistic run JSON")->check(CLI::ExistingFile);
  opp->add_option("--curves", o.curves, "QoC curves JSON")->check(CLI::ExistingFile);
  opp->add_option("--horizon", o.horizon, "Ticks, overrides the config");
  opp->add_option("--seed", o.seed, "Sporadic traffic seed, overrides the config");
  auto* gen = app.add_subcommand("generate", "Synthetic or case-study system");
  gen->add_option("--seed", o.seed, "Generator seed");
  gen->add_option("--resolution", o.resolution, "Ticks per millisecond");
  gen->add_option("--out", o.out, "Output directory");
  gen->add_option("--transactions", o.transactions, "Control transactions");
  gen->add_option("--ecus", o.ecus, "ECU count");
  gen->add_option("--ecu-util", o.ecu_util, "Target utilization per ECU");
  gen->add_option("--bus-util", o.bus_util, "Target bus utilization");
  gen->add_flag("--case-study", o.case_study, "Three-plant case-study system");
  auto* qoc = app.add_subcommand("qoc-estimate", "Empirical QoC degradation bounds");
  qoc->add_option("--plants", o.plants, "Plant JSON")->check(CLI::ExistingFile);
  qoc->add_option("--plant", o.plant, "Only this plant id");
  qoc->add_option("--seed", o.seed, "Noise and attack seed");
  qoc->add_option("--horizon", o.horizon, "Steps per run");
  qoc->add_option("--l-max", o.l_max, "Largest inter-authentication distance");
  qoc->add_option("--f", o.f, "Block length");
  qoc->add_option("--samples", o.samples, "Runs per policy");
  qoc->add_flag("--trajectory", o.trajectory, "Also write one greedy trajectory CSV per plant");
  qoc->add_option("--out", o.out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (validate->parsed()) return cmd_validate(o);
    if (analyze->parsed()) return cmd_analyze(o);
    if (synth->parsed()) return cmd_synthesize(o);
    if (lp->parsed()) return cmd_export_lp(o);
    if (sim->parsed()) return cmd_simulate(o);
    if (opp->parsed()) return cmd_opportunistic(o);
    if (gen->parsed()) return cmd_generate(o);
    if (qoc->parsed()) return cmd_qoc_estimate(o);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.message << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
