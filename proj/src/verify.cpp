#include "mcperm/verify.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <iterator>
#include <set>
#include <sstream>

#include <boost/math/distributions/chi_squared.hpp>
#include <nlohmann/json.hpp>

#include "mcperm/bernoulli.hpp"
#include "mcperm/binomial.hpp"
#include "mcperm/engine.hpp"
#include "mcperm/rng.hpp"
#include "mcperm/simulation.hpp"
#include "mcperm/threshold.hpp"

namespace mcperm::verify {
namespace {

constexpr double kCase1ExactPower = 0.209218;
constexpr double kCase2ExactPower = 0.370668;
constexpr std::uint64_t kVerifySeed = 20240611;

std::string fmt(double x, int digits = 10) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, x);
  return buf;
}

BernoulliDesign design(std::int64_t n) { return BernoulliDesign(n, 0.16, Level::ratio(1, 20)); }

CheckResult constants_check(const std::string& id, std::int64_t n, std::int64_t s_lo,
                            double lo_min, double lo_max, double hi_min, double hi_max,
                            double target_power) {
  CheckResult r;
  r.id = id;
  const BernoulliDesign d = design(n);
  const double q_lo = exceedance_prob(n, s_lo);
  const double q_hi = exceedance_prob(n, s_lo + 1);
  const double power = exact_power(d);
  const double err = std::abs(power - target_power);
  r.target = "q(" + std::to_string(s_lo) + ") in [" + fmt(lo_min) + ", " + fmt(lo_max) + "], q(" +
             std::to_string(s_lo + 1) + ") in [" + fmt(hi_min) + ", " + fmt(hi_max) +
             "], exact power " + fmt(target_power);
  r.tolerance = "1e-6 on exact power";
  r.observed = err;
  const bool q_ok = q_lo >= lo_min && q_lo <= lo_max && q_hi >= hi_min && q_hi <= hi_max;
  r.passed = q_ok && err <= 1e-6;
  r.detail = "q(" + std::to_string(s_lo) + ")=" + fmt(q_lo) + " q(" + std::to_string(s_lo + 1) +
             ")=" + fmt(q_hi) + " exact_power=" + fmt(power);
  return r;
}

CheckResult check_case1() {
  auto r = constants_check("1", 15, 3, 0.1120, 0.1122, 0.0497, 0.0499, kCase1ExactPower);
  r.name = "Bernoulli design n=15 constants";
  return r;
}

CheckResult check_case2() {
  auto r = constants_check("2", 25, 4, 0.0548, 0.0550, 0.0250, 0.0252, kCase2ExactPower);
  r.name = "Bernoulli design n=25 constants";
  return r;
}

CheckResult check_maxima() {
  CheckResult r;
  r.id = "3";
  r.name = "strict local maxima equal aligned budgets on [2, 500]";
  r.target = "aligned_budgets(0.05, 500)";
  r.tolerance = "exact set equality";
  const Level alpha = Level::ratio(1, 20);
  const auto expected = aligned_budgets(alpha, 500);
  std::int64_t mismatches = 0;
  std::ostringstream detail;
  for (std::int64_t n : {15, 25}) {
    const auto curve = power_curve(design(n), 2, 500, 1);
    const auto maxima = strict_local_maxima(curve);
    std::vector<std::int64_t> diff;
    std::set_symmetric_difference(maxima.begin(), maxima.end(), expected.begin(), expected.end(),
                                  std::back_inserter(diff));
    mismatches += static_cast<std::int64_t>(diff.size());
    detail << "n=" << n << ": " << maxima.size() << " maxima, " << diff.size() << " mismatches; ";
  }
  r.observed = static_cast<double>(mismatches);
  r.passed = mismatches == 0;
  r.detail = detail.str();
  return r;
}

CheckResult check_decrease() {
  CheckResult r;
  r.id = "4";
  r.name = "plateau power decrease identity and bound on [2, 2000]";
  r.target = "decrease = Pow(B) - Pow(B+1) and decrease <= (2 pi (B+1))^-1/2 sqrt(a/(1-a))";
  r.tolerance = "1e-12 on the identity";
  const Level alpha = Level::ratio(1, 20);
  double worst_identity = 0.0;
  double worst_ratio = 0.0;
  std::int64_t plateaus = 0;
  std::int64_t bound_violations = 0;
  for (std::int64_t n : {15, 25}) {
    const BernoulliDesign d = design(n);
    std::vector<double> pow(2002);
    for (std::int64_t b = 2; b <= 2001; ++b) pow[b] = mc_power_closed_form(d, b);
    for (std::int64_t b = 2; b <= 2000; ++b) {
      if (step_type(b + 1, alpha) != StepType::Plateau) continue;
      ++plateaus;
      const double dec = power_decrease(d, b);
      worst_identity = std::max(worst_identity, std::abs(dec - (pow[b] - pow[b + 1])));
      const double bound = decrease_bound(b, alpha.value());
      worst_ratio = std::max(worst_ratio, dec / bound);
      if (dec > bound) ++bound_violations;
    }
  }
  r.observed = worst_identity;
  r.passed = worst_identity <= 1e-12 && bound_violations == 0;
  r.detail = std::to_string(plateaus) + " plateaus; max identity gap " + fmt(worst_identity) +
             "; max decrease/bound " + fmt(worst_ratio) + "; bound violations " +
             std::to_string(bound_violations);
  return r;
}

CheckResult convergence_check(std::int64_t n, std::int64_t budget, double target, double tol) {
  CheckResult r;
  const double power = mc_power_closed_form(design(n), budget);
  r.target = "Pow(" + std::to_string(budget) + ") vs exact power " + fmt(target);
  r.tolerance = fmt(tol);
  r.observed = std::abs(power - target);
  r.passed = r.observed <= tol;
  r.detail = "n=" + std::to_string(n) + " Pow=" + fmt(power, 12) + " gap=" + fmt(r.observed);
  return r;
}

CheckResult check_convergence_fast() {
  auto r = convergence_check(25, 10'000, kCase2ExactPower, 5e-3);
  r.id = "5a";
  r.name = "convergence n=25 at B=1e4";
  return r;
}

CheckResult check_convergence_full() {
  auto r = convergence_check(15, 5'000'000, kCase1ExactPower, 2e-3);
  r.id = "5b";
  r.name = "convergence n=15 at B=5e6 (incomplete beta path)";
  return r;
}

// Bernoulli dataset: s successes among n treated, all-zero control.
PermutationProblem bernoulli_dataset(std::int64_t n, std::int64_t s) {
  std::vector<double> treated(static_cast<std::size_t>(n), 0.0);
  std::fill_n(treated.begin(), s, 1.0);
  std::vector<double> control(static_cast<std::size_t>(n), 0.0);
  return PermutationProblem::two_sample(PointSet::scalars(std::move(treated)),
                                        PointSet::scalars(std::move(control)), StatisticSpec{});
}

// Label subsets of size n (out of 2n) that keep all s successes on the treated side.
Fraction brute_force_exceedance(std::int64_t n, std::int64_t s) {
  const std::uint32_t units = static_cast<std::uint32_t>(2 * n);
  const std::uint32_t success_mask = (1u << s) - 1u;  // successes are pooled units 0..s-1
  std::uint64_t hits = 0;
  std::uint64_t total = 0;
  for (std::uint32_t m = 0; m < (1u << units); ++m) {
    if (std::popcount(m) != n) continue;
    ++total;
    if ((m & success_mask) == success_mask) ++hits;
  }
  return Fraction::reduced(hits, total);
}

CheckResult check_oracle() {
  CheckResult r;
  r.id = "6";
  r.name = "exceedance formula equals exhaustive enumeration, n in {2..5}";
  r.target = "q(s) as exact rationals";
  r.tolerance = "exact equality";
  std::int64_t mismatches = 0;
  std::int64_t cases = 0;
  std::ostringstream detail;
  for (std::int64_t n = 2; n <= 5; ++n) {
    for (std::int64_t s = 0; s <= n; ++s) {
      ++cases;
      const Fraction formula = exceedance_fraction(n, s);
      const Fraction brute = brute_force_exceedance(n, s);
      const Fraction enumerated = exact_p_value_enumerated(bernoulli_dataset(n, s));
      if (!(formula == brute) || !(formula == enumerated)) {
        ++mismatches;
        detail << "n=" << n << " s=" << s << ": formula " << to_string(formula) << " brute "
               << to_string(brute) << " enumerated " << to_string(enumerated) << "; ";
      }
    }
  }
  r.observed = static_cast<double>(mismatches);
  r.passed = mismatches == 0;
  r.detail = std::to_string(cases) + " cases, " + std::to_string(mismatches) + " mismatches. " +
             detail.str();
  return r;
}

CheckResult check_validity() {
  CheckResult r;
  r.id = "7";
  r.name = "null validity of the four statistics at B in {19, 99}";
  r.target = "P(p_B <= 0.05) <= 0.0565; randomized rate in 0.05 +- 0.0065";
  r.tolerance = "0.0565 / 0.0065";
  const Level alpha = Level::ratio(1, 20);
  const std::int64_t n_sim = 10'000;
  double worst_excess = -1.0;
  bool ok = true;
  std::ostringstream detail;
  for (ScenarioId id : {ScenarioId::MeanShift, ScenarioId::MMDShift, ScenarioId::HSICQuadratic,
                        ScenarioId::EnergyScale}) {
    const Scenario scenario = Scenario::defaults(id, true);
    for (std::int64_t b : {19, 99}) {
      const PowerEstimate e = estimate_power(scenario, alpha, b, n_sim, kVerifySeed);
      const bool pass = e.power <= 0.0565 && std::abs(e.randomized_power - 0.05) <= 0.0065;
      ok = ok && pass;
      worst_excess = std::max(worst_excess, e.power - 0.0565);
      detail << to_string(id) << " B=" << b << ": rate " << fmt(e.power, 5) << ", randomized "
             << fmt(e.randomized_power, 5) << (pass ? "" : " FAIL") << "; ";
    }
  }
  r.observed = worst_excess + 0.0565;
  r.passed = ok;
  r.detail = detail.str();
  return r;
}

// Chi-square statistic after merging tail bins until every expected count is >= 5.
std::pair<double, int> pooled_chi_square(const std::vector<double>& observed,
                                         const std::vector<double>& expected) {
  std::vector<double> obs;
  std::vector<double> exp;
  double o = 0.0;
  double e = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    o += observed[i];
    e += expected[i];
    if (e >= 5.0) {
      obs.push_back(o);
      exp.push_back(e);
      o = e = 0.0;
    }
  }
  if (e > 0.0 || o > 0.0) {
    if (exp.empty()) {
      obs.push_back(o);
      exp.push_back(e);
    } else {
      obs.back() += o;
      exp.back() += e;
    }
  }
  double stat = 0.0;
  for (std::size_t i = 0; i < obs.size(); ++i) stat += (obs[i] - exp[i]) * (obs[i] - exp[i]) / exp[i];
  return {stat, static_cast<int>(obs.size()) - 1};
}

CheckResult check_binomial_law() {
  CheckResult r;
  r.id = "8";
  r.name = "exceedance count follows Binomial(B, q) on an enumerable problem";
  r.target = "mean within 3 SE; chi-square GOF p >= 0.001";
  r.tolerance = "3 SE / 0.001";
  const auto problem = PermutationProblem::two_sample(PointSet::scalars({0.3, 1.2, -0.4, 2.1}),
                                                      PointSet::scalars({0.8, -1.0, 0.5, 1.7}),
                                                      StatisticSpec{});
  const double q = exceedance_oracle(problem).value();
  const std::int64_t budget = 49;
  const std::int64_t seeds = 10'000;
  const StatisticEvaluator evaluator(problem);
  std::vector<double> counts(static_cast<std::size_t>(budget + 1), 0.0);
  double total = 0.0;
  for (std::int64_t i = 0; i < seeds; ++i) {
    const auto outcome =
        monte_carlo_test(evaluator, budget, derive_seed(kVerifySeed, static_cast<std::uint64_t>(i)), false);
    counts[static_cast<std::size_t>(outcome.exceedance_count)] += 1.0;
    total += static_cast<double>(outcome.exceedance_count);
  }
  const double mean = total / static_cast<double>(seeds);
  const double expected_mean = static_cast<double>(budget) * q;
  const double se = std::sqrt(static_cast<double>(budget) * q * (1.0 - q) / static_cast<double>(seeds));
  const double z = (mean - expected_mean) / se;

  std::vector<double> expected(counts.size());
  const BinomialLaw law(budget, q);
  for (std::int64_t k = 0; k <= budget; ++k)
    expected[static_cast<std::size_t>(k)] = static_cast<double>(seeds) * binomial_pmf(k, law);
  const auto [stat, df] = pooled_chi_square(counts, expected);
  const double p_gof = boost::math::cdf(
      boost::math::complement(boost::math::chi_squared_distribution<double>(df), stat));

  r.observed = p_gof;
  r.passed = std::abs(z) <= 3.0 && p_gof >= 0.001;
  r.detail = "q=" + fmt(q) + " B=" + std::to_string(budget) + " mean=" + fmt(mean, 6) +
             " expected=" + fmt(expected_mean, 6) + " z=" + fmt(z, 4) +
             " chi2=" + fmt(stat, 6) + " df=" + std::to_string(df) + " p=" + fmt(p_gof, 4);
  return r;
}

CheckResult check_simulation() {
  CheckResult r;
  r.id = "9";
  r.name = "simulated Bernoulli power matches closed form at B in {19, 20, 39, 40}";
  r.target = "closed-form Pow(B)";
  r.tolerance = "4 SE, SE = sqrt(Pow (1 - Pow) / n_sim)";
  const Scenario scenario = Scenario::defaults(ScenarioId::BernoulliDesign);
  const BernoulliDesign d = design(15);
  const Level alpha = Level::ratio(1, 20);
  const std::int64_t n_sim = 10'000;
  double worst_z = 0.0;
  std::ostringstream detail;
  for (std::int64_t b : {19, 20, 39, 40}) {
    const double closed = mc_power_closed_form(d, b);
    const PowerEstimate e = estimate_power(scenario, alpha, b, n_sim, kVerifySeed);
    const double se = std::sqrt(closed * (1.0 - closed) / static_cast<double>(n_sim));
    const double z = (e.power - closed) / se;
    worst_z = std::max(worst_z, std::abs(z));
    detail << "B=" << b << ": simulated " << fmt(e.power, 5) << " closed " << fmt(closed, 6)
           << " z=" << fmt(z, 3) << "; ";
  }
  r.observed = worst_z;
  r.passed = worst_z <= 4.0;
  r.detail = detail.str();
  return r;
}

std::string_view scope_name(Scope scope) { return scope == Scope::Fast ? "fast" : "full"; }

}  // namespace

const std::vector<Check>& acceptance_checks() {
  static const std::vector<Check> checks = {
      {"1", "Bernoulli design n=15 constants", Scope::Fast, 1.0, check_case1},
      {"2", "Bernoulli design n=25 constants", Scope::Fast, 1.0, check_case2},
      {"3", "local maxima at aligned budgets", Scope::Fast, 10.0, check_maxima},
      {"4", "plateau decrease identity and bound", Scope::Fast, 30.0, check_decrease},
      {"5a", "convergence n=25 at B=1e4", Scope::Fast, 5.0, check_convergence_fast},
      {"5b", "convergence n=15 at B=5e6", Scope::Full, 120.0, check_convergence_full},
      {"6", "exceedance oracle equivalence", Scope::Fast, 10.0, check_oracle},
      {"7", "null validity", Scope::Full, 600.0, check_validity},
      {"8", "conditional binomial law", Scope::Fast, 60.0, check_binomial_law},
      {"9", "simulation vs closed form", Scope::Full, 120.0, check_simulation},
  };
  return checks;
}

std::vector<CheckResult> run_checks(Scope scope, const std::optional<std::string>& only) {
  std::vector<CheckResult> results;
  for (const Check& check : acceptance_checks()) {
    if (only) {
      // "5" selects both parts of a split check.
      const bool part = check.id.size() == only->size() + 1 && check.id.starts_with(*only) &&
                        std::isalpha(static_cast<unsigned char>(check.id.back()));
      if (check.id != *only && !part) continue;
    }
    if (check.scope == Scope::Full && scope == Scope::Fast) continue;
    const auto start = std::chrono::steady_clock::now();
    CheckResult result;
    try {
      result = check.run();
    } catch (const std::exception& e) {
      result.passed = false;
      result.detail = std::string("exception: ") + e.what();
    }
    result.id = check.id;
    if (result.name.empty()) result.name = check.name;
    result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.time_limit_seconds = check.time_limit_seconds;
    if (result.seconds > check.time_limit_seconds) {
      result.passed = false;
      result.detail += " [runtime " + fmt(result.seconds, 4) + " s exceeds " +
                       fmt(check.time_limit_seconds, 4) + " s]";
    }
    results.push_back(std::move(result));
  }
  return results;
}

std::string report_json(const std::vector<CheckResult>& results, Scope scope) {
  nlohmann::ordered_json checks = nlohmann::ordered_json::array();
  bool all = true;
  for (const auto& r : results) {
    all = all && r.passed;
    checks.push_back({{"id", r.id},
                      {"name", r.name},
                      {"passed", r.passed},
                      {"target", r.target},
                      {"tolerance", r.tolerance},
                      {"observed", r.observed},
                      {"detail", r.detail},
                      {"seconds", r.seconds},
                      {"time_limit_seconds", r.time_limit_seconds}});
  }
  nlohmann::ordered_json report = {{"scope", scope_name(scope)},
                                   {"passed", all},
                                   {"checks", std::move(checks)}};
  return report.dump(2) + "\n";
}

std::string summary_line(const CheckResult& r) {
  return std::string(r.passed ? "PASS" : "FAIL") + " criterion " + r.id + ": " + r.name +
         " | observed " + fmt(r.observed, 6) + " | " + r.detail + " (" + fmt(r.seconds, 3) + " s)";
}

}  // namespace mcperm::verify
