#include "doctest.h"
#include "sct/error.hpp"
#include "sct/io.hpp"
#include "sct/workload_gen.hpp"

using namespace sct;

namespace {

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::io;
}

}  // namespace

TEST_CASE("system round trip") {
  const auto sys = case_study_system();
  const auto text = dump_system(sys);
  const auto back = parse_system(text);
  CHECK(back == sys);
  CHECK(dump_system(back) == text);

  GenSpec spec;
  spec.n_transactions = 6;
  spec.seed = 3;
  const auto gen = generate(spec);
  CHECK(parse_system(dump_system(gen)) == gen);
}

TEST_CASE("solved system round trip keeps parameters") {
  const auto sys = case_study_system();
  const auto res = synthesize_decomposed(sys);
  REQUIRE(res.status == SynthesisStatus::feasible);
  const auto solved = apply_solution(sys, res);
  CHECK(parse_system(dump_system(solved)) == solved);

  const auto text = dump_solution(res);
  const auto back = parse_solution(text);
  CHECK(back.status == res.status);
  CHECK(back.assignment == res.assignment);
  CHECK(back.stats.nodes == res.stats.nodes);
  CHECK(back.stages.size() == res.stages.size());
  CHECK(dump_solution(back) == text);
  CHECK(text.find("seconds") == std::string::npos);
}

TEST_CASE("minimal system document uses defaults") {
  const auto sys = parse_system(R"({
    "schema_version": 1, "ticks_per_unit": 1000, "time_unit": "ms",
    "ecus": [{"id": "E1", "tasks": ["s", "c"]}, {"id": "E2", "tasks": ["b"]}],
    "bus": {"messages": ["n"]},
    "transactions": [{"id": "t", "period": 100, "policy": {"l": 4, "f": 2, "s": 1},
      "sensing": {"id": "s", "c_reg": 10, "c_ext": 20, "p": 100},
      "message": {"id": "n", "c_reg": 5, "c_ext": 10, "p": 100},
      "control": {"id": "c", "c_reg": 10, "c_ext": 15, "p": 100}}],
    "background": [{"id": "b", "c_reg": 3, "p": 50}]})");
  REQUIRE(sys.transactions.size() == 1);
  const auto& tx = sys.transactions[0];
  CHECK(tx.sens.l == 4);
  CHECK(tx.sens.s == 1);
  CHECK(tx.net.s == 2);
  CHECK(tx.net.f == 1);
  CHECK(tx.ctrl.s == 2);
  CHECK(sys.background[0].kind == TaskKind::background);
  CHECK(sys.background[0].c_ext == 3);
  CHECK_FALSE(sys.background[0].l.has_value());
  CHECK(sys.bus.id == "bus");
  CHECK(sys.c_max_nrt == 0);
}

TEST_CASE("schema and parse errors") {
  CHECK(code_of([] { parse_system("{not json"); }) == ErrorCode::parse);
  CHECK(code_of([] { parse_system(R"({"schema_version": 2})"); }) == ErrorCode::schema);
  CHECK(code_of([] { parse_system(R"({"ecus": []})"); }) == ErrorCode::schema);
  CHECK(code_of([] { parse_system("[1, 2]"); }) == ErrorCode::schema);
  CHECK(code_of([] { parse_system(R"({"schema_version": 1, "ecus": [{"tasks": []}]})"); }) ==
        ErrorCode::schema);
  CHECK(code_of([] { parse_system(R"({"schema_version": 1, "ticks_per_unit": "ten"})"); }) ==
        ErrorCode::schema);
  CHECK(code_of([] {
          parse_system(R"({"schema_version": 1, "background": [{"id": "b", "kind": "gpu", "c_reg": 1, "p": 2}]})");
        }) == ErrorCode::schema);
  CHECK(code_of([] { parse_curves(R"({"schema_version": 1, "curves": [{"plant_id": "a", "f": 1, "points": [[1]]}]})"); }) ==
        ErrorCode::schema);
  CHECK(code_of([] { parse_plants(R"({"schema_version": 1, "plants": [{"id": "p"}]})"); }) == ErrorCode::schema);
  CHECK(code_of([] { parse_opportunistic_config(R"({"schema_version": 1})"); }) == ErrorCode::schema);
  CHECK(code_of([] { read_file("/nonexistent/dir/file.json"); }) == ErrorCode::io);
}

TEST_CASE("curves round trip") {
  std::map<std::string, QoCCurve> curves;
  curves.emplace("ACC", QoCCurve("ACC", {{{2, 2}, 0.34904}, {{3, 2}, 0.4}, {{3, 3}, 0.3}}));
  curves.emplace("DM", QoCCurve("DM", {{{2, 1}, 0.25131}}));
  const auto text = dump_curves(curves);
  const auto back = parse_curves(text);
  REQUIRE(back.size() == 2);
  CHECK(back.at("ACC").entries() == curves.at("ACC").entries());
  CHECK(back.at("DM").entries() == curves.at("DM").entries());
  CHECK(dump_curves(back) == text);
}

TEST_CASE("plants round trip") {
  PlantModel p;
  p.id = "two";
  p.A.resize(2, 2);
  p.A << 1.1, 0.1, 0.0, 0.95;
  p.B.resize(2, 1);
  p.B << 0.0, 1.0;
  p.C.resize(1, 2);
  p.C << 1.0, 0.0;
  p.L.resize(2, 1);
  p.L << 0.9, 0.0;
  p.K.resize(1, 2);
  p.K << 2.0, 0.5;
  p.Q = Eigen::MatrixXd::Identity(2, 2) * 1e-3;
  p.R = Eigen::MatrixXd::Identity(1, 1) * 1e-2;
  p.window = 4;
  p.threshold = 30;
  p.x0 = Eigen::VectorXd::Zero(2);
  const auto back = parse_plants(dump_plants({p}));
  REQUIRE(back.size() == 1);
  CHECK(back[0].A == p.A);
  CHECK(back[0].C == p.C);
  CHECK(back[0].Q == p.Q);
  CHECK(back[0].K == p.K);
  CHECK(back[0].window == 4);
  CHECK(back[0].x0 == p.x0);

  // Q, R and x0 may be omitted
  const auto minimal = parse_plants(R"({"schema_version": 1, "plants": [{"id": "s",
    "A": [[1.2]], "B": [[1]], "C": [[1]], "L": [[1]], "K": [[0.5]], "window": 1, "threshold": 1}]})");
  CHECK(minimal[0].Q.isZero(0));
  CHECK(minimal[0].R.rows() == 1);
  CHECK(minimal[0].x0.size() == 1);
}

TEST_CASE("opportunistic config") {
  const auto run = parse_opportunistic_config(R"({"schema_version": 1, "horizon": 1000000,
    "weights": [1, 2, 3],
    "sporadic": {"min_interarrival": 10000, "frame_time": 135, "bandwidth_cap": 0.05, "seed": 11}})");
  CHECK(run.config.horizon == 1000000);
  CHECK(run.config.weights == std::vector<double>{1, 2, 3});
  CHECK(run.sporadic.frame_time == 135);
  CHECK(run.sporadic.seed == 11);
}

TEST_CASE("verdict report") {
  const auto sys = case_study_system();
  const auto solved = apply_solution(sys, synthesize_decomposed(sys));
  const auto text = dump_verdicts(analyze_system(solved));
  CHECK(text.find("\"ok\": true") != std::string::npos);
  CHECK(text.find("\"schema_version\": 1") != std::string::npos);
}

TEST_CASE("shipped data files load") {
  const std::string dir = SCT_DATA_DIR;
  for (const char* name : {"staggered_left", "staggered_center", "staggered_right", "offset_pair"}) {
    CAPTURE(name);
    const auto sys = parse_system(read_file(dir + "/" + name + ".json"));
    CHECK(sys.background.size() >= 2);
    CHECK(validate_system(sys).ok());
  }
  const auto curves = parse_curves(read_file(dir + "/qoc_curves.json"));
  CHECK(curves.size() == 3);
  CHECK(parse_plants(read_file(dir + "/plants.json")).size() == 2);
  CHECK(parse_opportunistic_config(read_file(dir + "/opportunistic.json")).config.weights.size() == 3);
}
