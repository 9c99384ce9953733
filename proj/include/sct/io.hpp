#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "sct/edf_sim.hpp"
#include "sct/model.hpp"
#include "sct/opportunistic.hpp"
#include "sct/qoc_sim.hpp"
#include "sct/synthesis.hpp"

namespace sct {

/// Every document carries "schema_version"; readers reject other versions
/// with Error(schema) and malformed JSON with Error(parse). All times are
/// integer ticks; "ticks_per_unit" and "time_unit" say what a tick is.
inline constexpr int kSchemaVersion = 1;

/// system.json
///   { schema_version, ticks_per_unit, time_unit, c_max_nrt,
///     ecus: [{id, tasks: [ids]}],
///     bus: {id, messages: [ids], rate_bps?},
///     transactions: [{id, period, plant_id?, e2e_bound?,
///                     policy: {l, f, s?}, sensing, message, control}],
///     background: [task] }
///   task: {id, kind?, c_reg, c_ext?, p, phi?, d?, l?, f?, s?}
/// Transaction members take l/f/s from the policy (s + f - 1 for message
/// and control), so those fields are ignored on members.
SystemModel parse_system(std::string_view text);
std::string dump_system(const SystemModel& sys);

/// curves.json
///   { schema_version, curves: [{plant_id, f, points: [[l, J], ...]}] }
/// Several entries may share a plant id (one per f).
std::map<std::string, QoCCurve> parse_curves(std::string_view text);
std::string dump_curves(const std::map<std::string, QoCCurve>& curves);

/// plants.json
///   { schema_version, plants: [{id, A, B, C, Q?, R?, L, K, window,
///                               threshold, x0?}] }
/// Matrices are row-major nested arrays; Q and R default to zero.
std::vector<PlantModel> parse_plants(std::string_view text);
std::string dump_plants(const std::vector<PlantModel>& plants);

/// solution.json: status, failed_stage, assignment {task: {phi, d, s?}},
/// parameters, stats (without wall time) and the stage log (without
/// durations), so identical runs write identical files.
SynthesisResult parse_solution(std::string_view text);
std::string dump_solution(const SynthesisResult& r);

/// Analysis report: per-resource status, witness [t1, t2], demand, supply.
std::string dump_verdicts(const SystemVerdicts& v);

/// Opportunistic run configuration
///   { schema_version, horizon, weights?: [..],
///     sporadic?: {min_interarrival, frame_time, bandwidth_cap, seed} }
struct OpportunisticRun {
  SporadicTrafficModel sporadic;
  OpportunisticConfig config;
};
OpportunisticRun parse_opportunistic_config(std::string_view text);
std::string dump_opportunistic(const OpportunisticResult& r);

/// Simulation report: misses per resource, first miss, timing violations.
std::string dump_simulation(const SystemTraces& traces, const TimingReport& timing);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& text);

}  // namespace sct
