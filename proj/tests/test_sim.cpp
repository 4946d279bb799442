#include <cmath>

#include <doctest.h>

#include "coopmatch/errors.hpp"
#include "coopmatch/scenario_io.hpp"
#include "coopmatch/sim.hpp"

using namespace coopmatch;

namespace {

Scenario short_example(PaperInput input, ControlLaw law, double t_final, std::uint64_t seed = 1) {
  auto scn = paper_scenario(input, law, seed);
  scn.t_final = t_final;
  return scn;
}

double max_abs_error(const SimTrace& trace) {
  double worst = 0.0;
  for (const auto& a : trace.agents) worst = std::max(worst, a.e.cwiseAbs().maxCoeff());
  return worst;
}

// One scalar integrator agent following a scalar leader ẇ = s w + v.
Scenario scalar_scenario(double s, ControlLaw law) {
  Scenario scn;
  scn.name = "scalar";
  scn.graph = Digraph::empty(2).with_edge(0, 1, 1.0);
  scn.leader = LeaderModel({s}, 1.0);
  scn.agents = {AgentModel("integrator", 1, Matrix(0, 0), {}, Polynomial())};
  scn.controller.law = law;
  scn.initial.mode = InitialConditions::Mode::explicit_values;
  scn.initial.w0 = Vector::Constant(1, 1.0);
  scn.initial.agents = {{Vector(), Vector::Constant(1, -1.0), Vector(), Vector(), Vector::Constant(1, 2.0), 0.0}};
  scn.t_final = 5.0;
  scn.dt = 1e-3;
  return scn;
}

}  // namespace

TEST_CASE("trace layout") {
  const auto trace = run(short_example(PaperInput::sinusoid, ControlLaw::full_order, 0.05));
  CHECK(trace.size() == 51);
  CHECK(trace.times(0) == 0.0);
  CHECK(trace.times(50) == doctest::Approx(0.05).epsilon(1e-15));
  REQUIRE(trace.agents.size() == 3);
  CHECK(trace.agents[0].eta.rows() == 51);
  CHECK(trace.agents[0].theta.size() == 0);
  CHECK(trace.agents[1].z.cols() == 1);
  CHECK(trace.agents[2].chain_ext.cols() == 0);
  CHECK(trace.agents[1].chain_ext.cols() == 1);
  for (const auto& a : trace.agents) CHECK((a.e - (a.y - trace.y_r)).isZero(0.0));
}

TEST_CASE("perfect start stays on the matched manifold") {
  for (auto law : {ControlLaw::full_order, ControlLaw::reduced_order, ControlLaw::saturated, ControlLaw::adaptive}) {
    // Laws that never read v keep the manifold only under a zero leader input.
    const auto input = uses_leader_input(law) ? PaperInput::sinusoid : PaperInput::ramp;
    auto scn = short_example(input, law, 5.0);
    scn.initial.mode = InitialConditions::Mode::perfect_start;
    scn.initial.w0 = (Vector(2) << 1.0, 0.5).finished();
    const auto trace = run(scn);
    const double bound = law == ControlLaw::adaptive ? 10.0 * scn.dt : 10.0 * scn.dt * scn.dt;
    CHECK_MESSAGE(max_abs_error(trace) < bound, to_string(law));
  }
}

TEST_CASE("runs are deterministic for a fixed seed") {
  const auto scn = short_example(PaperInput::ramp, ControlLaw::adaptive, 1.0, 4);
  const auto a = run(scn);
  const auto b = run(scn);
  CHECK(same(a.w, b.w));
  for (std::size_t i = 0; i < a.agents.size(); ++i) {
    CHECK(same(a.agents[i].x, b.agents[i].x));
    CHECK(same(a.agents[i].theta, b.agents[i].theta));
  }
  const auto c = run(short_example(PaperInput::ramp, ControlLaw::adaptive, 1.0, 5));
  CHECK_FALSE(same(a.w, c.w));
}

TEST_CASE("the leader trajectory does not depend on the followers") {
  const auto a = run(short_example(PaperInput::sinusoid, ControlLaw::full_order, 2.0));
  const auto b = run(short_example(PaperInput::sinusoid, ControlLaw::reduced_order, 2.0));
  CHECK(same(a.w, b.w));
  CHECK(same(a.v, b.v));
}

TEST_CASE("adaptive gains never decrease without leakage") {
  const auto trace = run(short_example(PaperInput::sinusoid, ControlLaw::adaptive, 5.0, 2));
  for (const auto& a : trace.agents) {
    REQUIRE(a.theta.size() == static_cast<Eigen::Index>(trace.size()));
    for (Eigen::Index k = 1; k < a.theta.size(); ++k) CHECK(a.theta(k) >= a.theta(k - 1));
  }
}

TEST_CASE("initial-condition draws do not depend on the law") {
  const auto a = resolve_initial_state(paper_scenario(PaperInput::ramp, ControlLaw::full_order, 3));
  const auto b = resolve_initial_state(paper_scenario(PaperInput::ramp, ControlLaw::adaptive, 3));
  CHECK(same(a.w0, b.w0));
  for (std::size_t i = 0; i < a.agents.size(); ++i) {
    CHECK(same(a.agents[i].x, b.agents[i].x));
    CHECK(same(a.agents[i].xi, b.agents[i].xi));
    REQUIRE(b.agents[i].theta);
    CHECK(*b.agents[i].theta >= 0.0);
  }
}

TEST_CASE("observer convergence fit") {
  SUBCASE("scalar leader") {
    const auto trace = run(scalar_scenario(0.0, ControlLaw::full_order));
    const auto fits = observer_convergence(trace);
    REQUIRE(fits.size() == 1);
    CHECK_FALSE(fits[0].converged_at_start);
    CHECK(fits[0].lambda0 > 0.0);
    CHECK(fits[0].r_squared >= 0.99);
  }
  SUBCASE("already converged") {
    auto scn = scalar_scenario(0.0, ControlLaw::full_order);
    scn.initial.agents[0].eta = scn.initial.w0;
    const auto fits = observer_convergence(run(scn));
    REQUIRE(fits.size() == 1);
    CHECK(fits[0].converged_at_start);
  }
  SUBCASE("no observer") {
    CHECK_THROWS_AS(observer_convergence(run(scalar_scenario(0.0, ControlLaw::reduced_order))), NotApplicable);
  }
}

TEST_CASE("tracking report") {
  auto scn = short_example(PaperInput::sinusoid, ControlLaw::reduced_order, 1.0);
  scn.initial.mode = InitialConditions::Mode::perfect_start;
  scn.initial.w0 = Vector::Zero(2);
  const auto trace = run(scn);
  const auto report = tracking_report(trace, 0.2);
  CHECK(report.max_tail_error() < 1e-12);
  CHECK(report.tail_start == doctest::Approx(0.8));
  CHECK_THROWS_AS(tracking_report(trace, 0.0), InvalidParameter);
  CHECK_THROWS_AS(tracking_report(trace, 1.5), InvalidParameter);
}

TEST_CASE("exponentially growing leader trips the blow-up guard") {
  auto scn = scalar_scenario(1.0, ControlLaw::reduced_order);
  scn.t_final = 30.0;
  scn.dt = 1e-2;
  try {
    (void)run(scn);
    FAIL("expected NumericBlowup");
  } catch (const NumericBlowup& ex) {
    // |w| = e^t crosses 1e9 near t = 20.7
    CHECK(ex.time() == doctest::Approx(std::log(1e9)).epsilon(0.01));
    CHECK(ex.norm() > kBlowupThreshold);
  }
}

TEST_CASE("scenario validation") {
  auto scn = paper_scenario(PaperInput::ramp);
  CHECK_NOTHROW(validate_scenario(scn));

  auto disconnected = scn;
  disconnected.graph = scn.graph.without_edge(0, 3);
  CHECK_THROWS_WITH_AS(validate_scenario(disconnected), doctest::Contains("Assumption 1"), ValidationError);

  auto deep = scn;
  deep.agents[2] = AgentModel("triple", 3, Matrix(0, 0), {}, Polynomial());
  CHECK_THROWS_WITH_AS(validate_scenario(deep), doctest::Contains("Assumption 2"), ValidationError);

  auto coarse = scn;
  coarse.dt = 1e-2;
  CHECK_THROWS_AS(validate_scenario(coarse), ValidationError);
  coarse.controller.law = ControlLaw::saturated;
  CHECK_NOTHROW(validate_scenario(coarse));

  auto priv = paper_scenario(PaperInput::sinusoid, ControlLaw::full_order);
  priv.input_policy.private_input = true;
  CHECK_THROWS_AS(validate_scenario(priv), ValidationError);
  priv.controller.law = ControlLaw::adaptive;
  CHECK_NOTHROW(validate_scenario(priv));

  auto miscount = scn;
  miscount.agents.pop_back();
  CHECK_THROWS_AS(validate_scenario(miscount), ValidationError);
}

TEST_CASE("RK4 converges at fourth order") {
  // Smooth law on a short horizon; compare y at t = 1 over three step sizes.
  const auto final_outputs = [](double dt) {
    auto scn = short_example(PaperInput::sinusoid, ControlLaw::reduced_order, 1.0);
    scn.dt = dt;
    const auto trace = run(scn);
    Vector y(3);
    for (int i = 0; i < 3; ++i) y(i) = trace.agents[static_cast<std::size_t>(i)].y(trace.agents[0].y.size() - 1);
    return y;
  };
  const Vector a = final_outputs(0.04);
  const Vector b = final_outputs(0.02);
  const Vector c = final_outputs(0.01);
  const double ratio = (a - b).norm() / (b - c).norm();
  CHECK(ratio > 12.0);
  CHECK(ratio < 20.0);
}
