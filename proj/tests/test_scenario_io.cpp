#include <filesystem>
#include <fstream>
#include <sstream>

#include <doctest.h>
#include <json.hpp>

#include "coopmatch/errors.hpp"
#include "coopmatch/scenario_io.hpp"

using namespace coopmatch;
namespace fs = std::filesystem;

namespace {

const fs::path kScenarioDir{COOPMATCH_SCENARIO_DIR};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("coopmatch_test_" + name);
  fs::remove_all(dir);
  return dir;
}

nlohmann::json paper_doc() { return nlohmann::json::parse(slurp(kScenarioDir / "paper_fig2a.json")); }

}  // namespace

TEST_CASE("bundled scenarios equal the built-in example") {
  CHECK(load_scenario(kScenarioDir / "paper_fig2a.json") == paper_scenario(PaperInput::ramp));
  CHECK(load_scenario(kScenarioDir / "paper_fig2b.json") == paper_scenario(PaperInput::sinusoid));
  CHECK_FALSE(paper_scenario(PaperInput::ramp) == paper_scenario(PaperInput::sinusoid));
}

TEST_CASE("normalized scenario round trip") {
  for (auto law : {ControlLaw::full_order, ControlLaw::reduced_order, ControlLaw::adaptive, ControlLaw::saturated}) {
    const auto scn = paper_scenario(PaperInput::sinusoid, law, 9);
    const OutputSpec out{"elsewhere", "t.csv", "s.json"};
    const auto doc = scenario_to_json(scn, out);
    const auto back = parse_scenario(doc);
    CHECK(back.scenario == scn);
    CHECK(back.output == out);
    CHECK(scenario_to_json(back.scenario, back.output) == doc);
  }

  SUBCASE("custom agents, explicit initial state, table input") {
    auto scn = paper_scenario(PaperInput::ramp, ControlLaw::full_order);
    scn.agents[0] = AgentModel("custom", 2, Matrix(0, 0), {}, Polynomial::parse("-0.3*x1 + x2^2"));
    scn.input_policy = LeaderInputPolicy::table({0.0, 1.0}, {0.5, -0.5});
    const auto resolved = resolve_initial_state(scn);
    scn.initial.mode = InitialConditions::Mode::explicit_values;
    scn.initial.w0 = resolved.w0;
    scn.initial.agents = resolved.agents;
    const auto back = parse_scenario(scenario_to_json(scn)).scenario;
    CHECK(back == scn);
  }
}

TEST_CASE("assumption violations are rejected at load time") {
  SUBCASE("leader edge to agent 3 removed") {
    auto doc = paper_doc();
    auto& edges = doc["graph"]["edges"];
    for (auto it = edges.begin(); it != edges.end(); ++it) {
      if ((*it)["from"] == 0 && (*it)["to"] == 3) {
        edges.erase(it);
        break;
      }
    }
    CHECK_THROWS_WITH_AS(parse_scenario(doc), doctest::Contains("Assumption 1"), ValidationError);
  }
  SUBCASE("agent with a three-step chain") {
    auto doc = paper_doc();
    doc["agents"][2] = {{"name", "triple"}, {"nx", 3}, {"A0", nlohmann::json::array()}, {"f", nlohmann::json::array()},
                        {"g", "x1"}};
    CHECK_THROWS_WITH_AS(parse_scenario(doc), doctest::Contains("Assumption 2"), ValidationError);
  }
}

TEST_CASE("parse errors name the offending field") {
  SUBCASE("not JSON") { CHECK_THROWS_AS(parse_scenario_text("{ nope"), ParseError); }
  SUBCASE("unknown law") {
    auto doc = paper_doc();
    doc["controller"]["law"] = "pid";
    CHECK_THROWS_WITH_AS(parse_scenario(doc), doctest::Contains("controller.law"), ParseError);
  }
  SUBCASE("bad polynomial") {
    auto doc = paper_doc();
    doc["agents"][0] = {{"name", "x"}, {"nx", 2}, {"A0", nlohmann::json::array()}, {"f", nlohmann::json::array()},
                        {"g", "x1 +* x2"}};
    CHECK_THROWS_AS(parse_scenario(doc), ParseError);
  }
  SUBCASE("wrong type") {
    auto doc = paper_doc();
    doc["sim"]["dt"] = "small";
    CHECK_THROWS_WITH_AS(parse_scenario(doc), doctest::Contains("sim.dt"), ParseError);
  }
  SUBCASE("missing section") {
    auto doc = paper_doc();
    doc.erase("leader");
    CHECK_THROWS_WITH_AS(parse_scenario(doc), doctest::Contains("leader"), ParseError);
  }
  SUBCASE("missing file") { CHECK_THROWS_AS(load_scenario("/nonexistent/scenario.json"), ParseError); }
}

TEST_CASE("trace header") {
  auto scn = paper_scenario(PaperInput::ramp, ControlLaw::adaptive);
  scn.t_final = 0.01;
  const auto header = trace_header(run(scn));
  CHECK(header.rfind("t,w1,w2,v,y_r,a1_x1,a1_x2,a1_u,a1_e,a1_theta,", 0) == 0);
  CHECK(header.find("a2_z1,a2_x1,a2_chain2,a2_xi1,a2_u,a2_e,a2_theta") != std::string::npos);
}

TEST_CASE("run and export") {
  auto scn = paper_scenario(PaperInput::ramp, ControlLaw::reduced_order);
  scn.t_final = 10.0;
  const auto dir = scratch("export");
  const auto report = run_and_export(scn, dir, {0.2, 0.05});
  CHECK(report.exit_code == 0);
  CHECK(fs::exists(dir / "trace.csv"));
  CHECK(fs::exists(dir / "scenario.json"));
  const auto summary = nlohmann::json::parse(slurp(dir / "summary.json"));
  CHECK(summary["status"] == report.status);
  CHECK(summary.contains("synthesis"));
  CHECK(load_scenario(dir / "scenario.json") == scn);

  SUBCASE("same seed gives byte-identical traces") {
    const auto again = scratch("export_again");
    (void)run_and_export(scn, again);
    CHECK(slurp(dir / "trace.csv") == slurp(again / "trace.csv"));
  }
  SUBCASE("tolerance miss") {
    auto short_run = scn;
    short_run.t_final = 0.5;
    const auto r = run_and_export(short_run, scratch("export_miss"), {0.2, 1e-12});
    CHECK(r.exit_code == 1);
  }
}

TEST_CASE("blow-up is reported with its time") {
  Scenario scn;
  scn.name = "unstable";
  scn.graph = Digraph::empty(2).with_edge(0, 1, 1.0);
  scn.leader = LeaderModel({1.0}, 1.0);
  scn.agents = {AgentModel("integrator", 1, Matrix(0, 0), {}, Polynomial())};
  scn.controller.law = ControlLaw::reduced_order;
  scn.dt = 1e-2;
  const auto dir = scratch("blowup");
  const auto report = run_and_export(scn, dir);
  CHECK(report.exit_code == 2);
  REQUIRE(report.divergence_time);
  CHECK(*report.divergence_time > 0.0);
  CHECK(*report.divergence_time < scn.t_final);
  const auto summary = nlohmann::json::parse(slurp(dir / "summary.json"));
  CHECK(summary["divergence_time"].get<double>() == *report.divergence_time);
}
