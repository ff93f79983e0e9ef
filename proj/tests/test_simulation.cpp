#include <doctest.h>

#include <cmath>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "mcperm/bernoulli.hpp"
#include "mcperm/errors.hpp"
#include "mcperm/rng.hpp"
#include "mcperm/simulation.hpp"

using namespace mcperm;

namespace {

Scenario parse(const std::string& text) {
  std::istringstream in(text);
  return parse_scenario(in);
}

BernoulliDesign default_design() { return BernoulliDesign(15, 0.16, Level::ratio(1, 20)); }

}  // namespace

TEST_CASE("scenario defaults") {
  const Scenario mean = Scenario::defaults(ScenarioId::MeanShift);
  CHECK(mean.n1 == 20);
  CHECK(mean.n2 == 20);
  CHECK(mean.delta == 0.55);
  CHECK(mean.statistic.kind == StatisticKind::MeanDifference);

  const Scenario mmd = Scenario::defaults(ScenarioId::MMDShift);
  CHECK(mmd.n1 == 25);
  CHECK(mmd.dim == 5);
  CHECK(mmd.delta == 0.35);
  CHECK(mmd.statistic.kind == StatisticKind::MMDUnbiased);

  const Scenario hsic = Scenario::defaults(ScenarioId::HSICQuadratic);
  CHECK(hsic.n == 50);
  CHECK(hsic.sigma_eps == 2.5);
  CHECK(hsic.statistic.kind == StatisticKind::HSIC);

  const Scenario energy = Scenario::defaults(ScenarioId::EnergyScale);
  CHECK(energy.sigma_alt == 1.8);
  CHECK(energy.statistic.kind == StatisticKind::EnergyDistance);

  const Scenario bern = Scenario::defaults(ScenarioId::BernoulliDesign);
  CHECK(bern.n == 15);
  CHECK(bern.p1 == 0.16);
}

TEST_CASE("scenario ids round trip") {
  for (auto id : {ScenarioId::MeanShift, ScenarioId::MMDShift, ScenarioId::HSICQuadratic,
                  ScenarioId::EnergyScale, ScenarioId::BernoulliDesign}) {
    CHECK(parse_scenario_id(to_string(id)) == id);
  }
  CHECK_THROWS_AS(parse_scenario_id("t_test"), ValidationError);
}

TEST_CASE("scenario files parse and format losslessly") {
  const Scenario s = parse(
      "# shifted normals\n"
      "scenario = mean_shift\n"
      "n1 = 12   # treated\n"
      "n2 = 9\n"
      "delta = 0.8\n"
      "sides = two\n");
  CHECK(s.id == ScenarioId::MeanShift);
  CHECK(s.n1 == 12);
  CHECK(s.n2 == 9);
  CHECK(s.delta == 0.8);
  CHECK(s.statistic.sides == Sidedness::TwoSided);
  CHECK_FALSE(s.null_variant);

  for (auto id : {ScenarioId::MeanShift, ScenarioId::MMDShift, ScenarioId::HSICQuadratic,
                  ScenarioId::EnergyScale, ScenarioId::BernoulliDesign}) {
    for (bool null_variant : {false, true}) {
      const Scenario original = Scenario::defaults(id, null_variant);
      const std::string text = format_scenario(original);
      const Scenario back = parse(text);
      CHECK(format_scenario(back) == text);
      CHECK(back.null_variant == null_variant);
    }
  }
}

TEST_CASE("scenario parse errors") {
  CHECK_THROWS_AS(parse(""), ValidationError);
  CHECK_THROWS_AS(parse("n1 = 5\nscenario = mean_shift\n"), ValidationError);
  CHECK_THROWS_AS(parse("scenario = mean_shift\nn1 = 5\nn1 = 6\n"), ValidationError);
  CHECK_THROWS_AS(parse("scenario = mean_shift\ncolour = blue\n"), ValidationError);
  CHECK_THROWS_AS(parse("scenario = mean_shift\nn1 5\n"), ValidationError);
  CHECK_THROWS_AS(parse("scenario = mean_shift\nn1 = five\n"), ValidationError);
  CHECK_THROWS_AS(parse("scenario = mean_shift\nsides = both\n"), ValidationError);
  CHECK_THROWS_AS(parse("scenario = mean_shift\nstatistic = hsic\n"), ValidationError);
  CHECK_THROWS_AS(parse("scenario = mmd_shift\nstatistic = mean_diff\n"), ValidationError);
}

TEST_CASE("scenario validation") {
  Scenario s = Scenario::defaults(ScenarioId::EnergyScale);
  s.sigma_alt = 0.0;
  CHECK_THROWS_AS(s.validate(), ValidationError);
  s.sigma_alt = -1.0;
  CHECK_THROWS_AS(s.validate(), ValidationError);

  Scenario m = Scenario::defaults(ScenarioId::MeanShift);
  m.n1 = 1;
  CHECK_THROWS_AS(m.validate(), ValidationError);
  CHECK_THROWS_AS(generate(m, 1), ValidationError);

  Scenario h = Scenario::defaults(ScenarioId::HSICQuadratic);
  h.sigma_eps = -0.1;
  CHECK_THROWS_AS(h.validate(), ValidationError);

  Scenario b = Scenario::defaults(ScenarioId::BernoulliDesign);
  b.p1 = 1.0;
  CHECK_THROWS_AS(b.validate(), ValidationError);
  b.p1 = 0.3;
  b.n = 1;
  CHECK_THROWS_AS(b.validate(), ValidationError);
}

TEST_CASE("generate: shapes and determinism") {
  const Scenario null_mean = Scenario::defaults(ScenarioId::MeanShift, true);
  const PermutationProblem a = generate(null_mean, 42);
  CHECK(a.first().size() == 20);
  CHECK(a.second().size() == 20);
  CHECK(a.first().dim() == 1);
  CHECK(a.first().values() == generate(null_mean, 42).first().values());
  CHECK(a.first().values() != generate(null_mean, 43).first().values());

  const PermutationProblem mmd = generate(Scenario::defaults(ScenarioId::MMDShift), 7);
  CHECK(mmd.first().size() == 25);
  CHECK(mmd.first().dim() == 5);

  const PermutationProblem bern = generate(Scenario::defaults(ScenarioId::BernoulliDesign), 3);
  CHECK(bern.first().size() == 15);
  for (double v : bern.first().values()) CHECK((v == 0.0 || v == 1.0));
  for (double v : bern.second().values()) CHECK(v == 0.0);

  Scenario noiseless = Scenario::defaults(ScenarioId::HSICQuadratic);
  noiseless.sigma_eps = 0.0;
  const PermutationProblem hsic = generate(noiseless, 11);
  REQUIRE(hsic.first().size() == 50);
  for (std::size_t i = 0; i < 50; ++i) {
    const double x = hsic.first()[i][0];
    CHECK(hsic.second()[i][0] == x * x);
  }
}

TEST_CASE("estimate_power: Bernoulli design below the first aligned budget") {
  // k_B = 0 for B < 19 at alpha = 1/20, so nothing can reject.
  const Scenario s = Scenario::defaults(ScenarioId::BernoulliDesign);
  const PowerEstimate est = estimate_power(s, Level::ratio(1, 20), 18, 500, 5);
  CHECK(est.rejections == 0);
  CHECK(est.power == 0.0);
  CHECK(est.std_error == 0.0);
}

TEST_CASE("estimate_power agrees with the closed form at B = 39") {
  const Scenario s = Scenario::defaults(ScenarioId::BernoulliDesign);
  const std::int64_t n_sim = 10000;
  const PowerEstimate est = estimate_power(s, Level::ratio(1, 20), 39, n_sim, 2024);
  const double target = mc_power_closed_form(default_design(), 39);
  const double se = std::sqrt(target * (1.0 - target) / static_cast<double>(n_sim));
  CHECK(std::fabs(est.power - target) <= 3.0 * se);
  CHECK(est.std_error == doctest::Approx(std::sqrt(est.power * (1 - est.power) / n_sim)));
  CHECK(est.randomized_power >= est.power);
}

TEST_CASE("estimate_power does not depend on the worker count") {
  const Scenario s = Scenario::defaults(ScenarioId::MeanShift);
  const Level alpha = Level::ratio(1, 20);
  const PowerEstimate one = estimate_power(s, alpha, 19, 400, 77, {1});
  for (unsigned w : {2u, 3u, 8u}) {
    const PowerEstimate many = estimate_power(s, alpha, 19, 400, 77, {w});
    CHECK(many.rejections == one.rejections);
    CHECK(many.randomized_rejections == one.randomized_rejections);
  }
}

TEST_CASE("estimate_power edge cases") {
  const Scenario s = Scenario::defaults(ScenarioId::MeanShift);
  const Level alpha = Level::ratio(1, 20);
  const PowerEstimate single = estimate_power(s, alpha, 19, 1, 9);
  CHECK((single.power == 0.0 || single.power == 1.0));
  CHECK(single.std_error == 0.0);
  CHECK_THROWS_AS(estimate_power(s, alpha, 19, 0, 9), ValidationError);
  CHECK_THROWS_AS(estimate_power(s, alpha, 0, 10, 9), ValidationError);
}

TEST_CASE("replication failures report the first failing index") {
  // MMD with the median heuristic on mostly-zero binary data: the median
  // pairwise distance is zero for many replications.
  Scenario s = Scenario::defaults(ScenarioId::BernoulliDesign);
  s.n = 3;
  s.p1 = 0.3;
  s.statistic.kind = StatisticKind::MMDUnbiased;
  const Level alpha = Level::ratio(1, 20);

  std::int64_t expected = -1;
  for (std::int64_t r = 0; r < 200 && expected < 0; ++r) {
    try {
      const std::uint64_t seed = replication_seed(1, 19, r);
      const StatisticEvaluator evaluator(generate(s, seed));
      monte_carlo_test(evaluator, 19, derive_seed(seed, Stream::Test), true);
    } catch (const std::exception&) {
      expected = r;
    }
  }
  REQUIRE(expected >= 0);
  for (unsigned w : {1u, 4u}) {
    try {
      estimate_power(s, alpha, 19, 200, 1, {w});
      FAIL("expected a ReplicationError");
    } catch (const ReplicationError& e) {
      CHECK(e.replication() == expected);
    }
  }
}

TEST_CASE("power_sweep shows the sawtooth between aligned and plateau budgets") {
  const Scenario s = Scenario::defaults(ScenarioId::BernoulliDesign);
  const Level alpha = Level::ratio(1, 20);
  const std::int64_t n_sim = 10000;
  const std::vector<std::int64_t> budgets{19, 25, 38, 39};
  const SimulationReport report = power_sweep(s, alpha, budgets, n_sim, 31);
  REQUIRE(report.estimates.size() == budgets.size());
  CHECK(report.budgets == budgets);
  CHECK(report.level_text == "1/20");

  // (higher, lower) pairs; the closed-form gap decides whether a pair is
  // resolvable at this n_sim.
  const std::vector<std::pair<std::size_t, std::size_t>> pairs{{0, 1}, {3, 2}};
  int tested = 0;
  for (const auto& [hi, lo] : pairs) {
    const double p_hi = mc_power_closed_form(default_design(), budgets[hi]);
    const double p_lo = mc_power_closed_form(default_design(), budgets[lo]);
    const double combined =
        std::sqrt((p_hi * (1 - p_hi) + p_lo * (1 - p_lo)) / static_cast<double>(n_sim));
    if (p_hi - p_lo <= 3.0 * combined) continue;
    ++tested;
    CHECK(report.estimates[hi].power - report.estimates[lo].power > 2.0 * combined);
  }
  CHECK(tested == 2);
}

TEST_CASE("power_sweep reruns are identical") {
  const Scenario s = Scenario::defaults(ScenarioId::EnergyScale);
  const Level alpha = Level::ratio(1, 20);
  const auto budgets = default_sweep_budgets(alpha, 40);
  CHECK(budgets == std::vector<std::int64_t>{19, 20, 39, 40});
  const SimulationReport a = power_sweep(s, alpha, budgets, 200, 8);
  const SimulationReport b = power_sweep(s, alpha, budgets, 200, 8);
  REQUIRE(a.estimates.size() == b.estimates.size());
  for (std::size_t i = 0; i < a.estimates.size(); ++i) {
    CHECK(a.estimates[i].rejections == b.estimates[i].rejections);
    CHECK(a.estimates[i].randomized_rejections == b.estimates[i].randomized_rejections);
    CHECK(a.estimates[i].budget == budgets[i]);
  }
  CHECK_THROWS_AS(power_sweep(s, alpha, {}, 10, 1), ValidationError);
  CHECK_THROWS_AS(power_sweep(s, alpha, {19, 0}, 10, 1), ValidationError);
}
