#include "mcperm/simulation.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <thread>

#include "mcperm/errors.hpp"
#include "mcperm/rng.hpp"
#include "mcperm/threshold.hpp"

namespace mcperm {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string format_double(double v) {
  char buf[32];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

double parse_double(std::string_view key, std::string_view text) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(v)) {
    throw ValidationError("key '" + std::string(key) + "' expects a number, got '" +
                          std::string(text) + "'");
  }
  return v;
}

std::int64_t parse_int(std::string_view key, std::string_view text) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ValidationError("key '" + std::string(key) + "' expects an integer, got '" +
                          std::string(text) + "'");
  }
  return v;
}

bool parse_bool(std::string_view key, std::string_view text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ValidationError("key '" + std::string(key) + "' expects true or false, got '" +
                        std::string(text) + "'");
}

PointSet gaussian_points(Rng& rng, std::int64_t count, std::int64_t dim, double mean, double sd) {
  std::vector<double> v(static_cast<std::size_t>(count * dim));
  for (double& x : v) x = rng.normal(mean, sd);
  return PointSet(static_cast<std::size_t>(dim), std::move(v));
}

PointSet bernoulli_points(Rng& rng, std::int64_t count, double p) {
  std::vector<double> v(static_cast<std::size_t>(count));
  for (double& x : v) x = rng.bernoulli(p) ? 1.0 : 0.0;
  return PointSet::scalars(std::move(v));
}

}  // namespace

std::string_view to_string(ScenarioId id) {
  switch (id) {
    case ScenarioId::MeanShift:
      return "mean_shift";
    case ScenarioId::MMDShift:
      return "mmd_shift";
    case ScenarioId::HSICQuadratic:
      return "hsic_quadratic";
    case ScenarioId::EnergyScale:
      return "energy_scale";
    case ScenarioId::BernoulliDesign:
      return "bernoulli";
  }
  return "unknown";
}

ScenarioId parse_scenario_id(std::string_view text) {
  for (auto id : {ScenarioId::MeanShift, ScenarioId::MMDShift, ScenarioId::HSICQuadratic,
                  ScenarioId::EnergyScale, ScenarioId::BernoulliDesign}) {
    if (text == to_string(id)) return id;
  }
  throw ValidationError("unknown scenario '" + std::string(text) +
                        "' (expected mean_shift, mmd_shift, hsic_quadratic, energy_scale or "
                        "bernoulli)");
}

Scenario Scenario::defaults(ScenarioId id, bool null_variant) {
  Scenario s;
  s.id = id;
  s.null_variant = null_variant;
  switch (id) {
    case ScenarioId::MeanShift:
      s.statistic.kind = StatisticKind::MeanDifference;
      break;
    case ScenarioId::MMDShift:
      s.n1 = s.n2 = 25;
      s.dim = 5;
      s.delta = 0.35;
      s.statistic.kind = StatisticKind::MMDUnbiased;
      break;
    case ScenarioId::HSICQuadratic:
      s.n = 50;
      s.statistic.kind = StatisticKind::HSIC;
      break;
    case ScenarioId::EnergyScale:
      s.statistic.kind = StatisticKind::EnergyDistance;
      break;
    case ScenarioId::BernoulliDesign:
      s.n = 15;
      s.p1 = 0.16;
      s.statistic.kind = StatisticKind::MeanDifference;
      break;
  }
  return s;
}

void Scenario::validate() const {
  auto fail = [this](const std::string& msg) {
    throw ValidationError(std::string(to_string(id)) + ": " + msg);
  };
  switch (id) {
    case ScenarioId::MeanShift:
    case ScenarioId::MMDShift:
    case ScenarioId::EnergyScale:
      if (n1 < 2 || n2 < 2) fail("sample sizes must be >= 2");
      if (dim < 1) fail("dimension must be >= 1");
      if (!std::isfinite(delta)) fail("delta must be finite");
      if (!(sigma_alt > 0.0) || !std::isfinite(sigma_alt)) fail("sigma_alt must be positive");
      break;
    case ScenarioId::HSICQuadratic:
      if (n < 2) fail("n must be >= 2");
      if (!(sigma_eps >= 0.0) || !std::isfinite(sigma_eps)) fail("sigma_eps must be >= 0");
      break;
    case ScenarioId::BernoulliDesign:
      if (n < 2) fail("n must be >= 2");
      if (!(p1 > 0.0 && p1 < 1.0)) fail("p1 must lie in (0,1)");
      break;
  }
  if (statistic.bandwidth.kind == BandwidthRule::Kind::Fixed && !(statistic.bandwidth.value > 0.0)) {
    fail("bandwidth must be positive");
  }
  if (id == ScenarioId::HSICQuadratic) {
    if (statistic.kind != StatisticKind::HSIC) fail("independence scenarios use the hsic statistic");
    return;
  }
  if (statistic.kind == StatisticKind::HSIC) fail("hsic needs the hsic_quadratic scenario");
  const std::int64_t d = id == ScenarioId::BernoulliDesign ? 1 : dim;
  if (statistic.kind == StatisticKind::MeanDifference && d != 1) {
    fail("mean_diff needs one-dimensional data");
  }
}

Scenario parse_scenario(std::istream& in) {
  Scenario scenario;
  bool have_id = false;
  std::set<std::string> seen;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = line;
    if (auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      throw ValidationError("line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key(trim(view.substr(0, eq)));
    const std::string_view value = trim(view.substr(eq + 1));
    if (!seen.insert(key).second) {
      throw ValidationError("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
    if (key == "scenario") {
      if (have_id) throw ValidationError("duplicate scenario key");
      const bool null_variant = scenario.null_variant;
      scenario = Scenario::defaults(parse_scenario_id(value), null_variant);
      have_id = true;
      continue;
    }
    if (!have_id) {
      throw ValidationError("line " + std::to_string(line_no) +
                            ": 'scenario' must be the first key");
    }
    if (key == "null") {
      scenario.null_variant = parse_bool(key, value);
    } else if (key == "n1") {
      scenario.n1 = parse_int(key, value);
    } else if (key == "n2") {
      scenario.n2 = parse_int(key, value);
    } else if (key == "delta") {
      scenario.delta = parse_double(key, value);
    } else if (key == "dim") {
      scenario.dim = parse_int(key, value);
    } else if (key == "sigma_eps") {
      scenario.sigma_eps = parse_double(key, value);
    } else if (key == "sigma_alt") {
      scenario.sigma_alt = parse_double(key, value);
    } else if (key == "n") {
      scenario.n = parse_int(key, value);
    } else if (key == "p1") {
      scenario.p1 = parse_double(key, value);
    } else if (key == "statistic") {
      scenario.statistic.kind = parse_statistic_kind(value);
    } else if (key == "bandwidth") {
      scenario.statistic.bandwidth = BandwidthRule::parse(value);
    } else if (key == "sides") {
      if (value == "one") {
        scenario.statistic.sides = Sidedness::OneSided;
      } else if (value == "two") {
        scenario.statistic.sides = Sidedness::TwoSided;
      } else {
        throw ValidationError("key 'sides' expects one or two");
      }
    } else {
      throw ValidationError("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
  }
  if (!have_id) throw ValidationError("scenario file has no 'scenario' key");
  scenario.validate();
  return scenario;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open scenario file '" + path + "'");
  return parse_scenario(in);
}

std::string format_scenario(const Scenario& s) {
  std::ostringstream out;
  out << "scenario = " << to_string(s.id) << "\n";
  out << "null = " << (s.null_variant ? "true" : "false") << "\n";
  switch (s.id) {
    case ScenarioId::MeanShift:
    case ScenarioId::MMDShift:
      out << "n1 = " << s.n1 << "\nn2 = " << s.n2 << "\ndim = " << s.dim
          << "\ndelta = " << format_double(s.delta) << "\n";
      break;
    case ScenarioId::EnergyScale:
      out << "n1 = " << s.n1 << "\nn2 = " << s.n2 << "\ndim = " << s.dim
          << "\nsigma_alt = " << format_double(s.sigma_alt) << "\n";
      break;
    case ScenarioId::HSICQuadratic:
      out << "n = " << s.n << "\nsigma_eps = " << format_double(s.sigma_eps) << "\n";
      break;
    case ScenarioId::BernoulliDesign:
      out << "n = " << s.n << "\np1 = " << format_double(s.p1) << "\n";
      break;
  }
  out << "statistic = " << to_string(s.statistic.kind) << "\n";
  out << "bandwidth = " << s.statistic.bandwidth.to_string() << "\n";
  out << "sides = " << (s.statistic.sides == Sidedness::TwoSided ? "two" : "one") << "\n";
  return out.str();
}

PermutationProblem generate(const Scenario& scenario, std::uint64_t seed) {
  scenario.validate();
  Rng rng(derive_seed(seed, Stream::Data));
  const Scenario& s = scenario;
  switch (s.id) {
    case ScenarioId::MeanShift:
    case ScenarioId::MMDShift: {
      const double shift = s.null_variant ? 0.0 : s.delta;
      PointSet x = gaussian_points(rng, s.n1, s.dim, shift, 1.0);
      PointSet y = gaussian_points(rng, s.n2, s.dim, 0.0, 1.0);
      return PermutationProblem::two_sample(std::move(x), std::move(y), s.statistic);
    }
    case ScenarioId::EnergyScale: {
      const double scale = s.null_variant ? 1.0 : s.sigma_alt;
      PointSet x = gaussian_points(rng, s.n1, s.dim, 0.0, 1.0);
      PointSet y = gaussian_points(rng, s.n2, s.dim, 0.0, scale);
      return PermutationProblem::two_sample(std::move(x), std::move(y), s.statistic);
    }
    case ScenarioId::HSICQuadratic: {
      std::vector<double> x(static_cast<std::size_t>(s.n));
      std::vector<double> y(static_cast<std::size_t>(s.n));
      for (double& v : x) v = rng.normal();
      for (std::size_t i = 0; i < y.size(); ++i) {
        const double driver = s.null_variant ? rng.normal() : x[i];
        y[i] = driver * driver + s.sigma_eps * rng.normal();
      }
      return PermutationProblem::paired(PointSet::scalars(std::move(x)),
                                        PointSet::scalars(std::move(y)), s.statistic);
    }
    case ScenarioId::BernoulliDesign: {
      PointSet treated = bernoulli_points(rng, s.n, s.p1);
      PointSet control = s.null_variant
                             ? bernoulli_points(rng, s.n, s.p1)
                             : PointSet::scalars(std::vector<double>(static_cast<std::size_t>(s.n), 0.0));
      return PermutationProblem::two_sample(std::move(treated), std::move(control), s.statistic);
    }
  }
  throw ValidationError("unknown scenario");
}

std::uint64_t replication_seed(std::uint64_t master_seed, std::int64_t budget,
                               std::int64_t replication) {
  return derive_seed(derive_seed(master_seed, static_cast<std::uint64_t>(budget)),
                     static_cast<std::uint64_t>(replication));
}

PowerEstimate estimate_power(const Scenario& scenario, const Level& alpha, std::int64_t budget,
                             std::int64_t n_sim, std::uint64_t master_seed,
                             SimulationOptions options) {
  if (n_sim < 1) throw ValidationError("n_sim must be >= 1");
  if (budget < 1) throw ValidationError("budget must be >= 1");
  scenario.validate();

  unsigned workers = options.workers == 0 ? std::max(1u, std::thread::hardware_concurrency())
                                          : options.workers;
  workers = static_cast<unsigned>(std::min<std::int64_t>(workers, n_sim));

  struct Tally {
    std::int64_t rejections = 0;
    std::int64_t randomized = 0;
    std::int64_t failed_at = std::numeric_limits<std::int64_t>::max();
    std::exception_ptr error;
  };
  std::vector<Tally> tallies(workers);

  auto work = [&](unsigned w) {
    Tally& t = tallies[w];
    for (std::int64_t r = w; r < n_sim; r += workers) {
      try {
        const std::uint64_t seed = replication_seed(master_seed, budget, r);
        const StatisticEvaluator evaluator(generate(scenario, seed));
        const TestOutcome outcome =
            monte_carlo_test(evaluator, budget, derive_seed(seed, Stream::Test), true);
        t.rejections += rejects(outcome, alpha) ? 1 : 0;
        t.randomized += rejects_randomized(outcome, alpha) ? 1 : 0;
      } catch (...) {
        t.failed_at = r;
        t.error = std::current_exception();
        return;
      }
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
  }

  const auto first_failure = std::min_element(
      tallies.begin(), tallies.end(), [](const Tally& a, const Tally& b) { return a.failed_at < b.failed_at; });
  if (first_failure->error) {
    try {
      std::rethrow_exception(first_failure->error);
    } catch (const std::exception& e) {
      throw ReplicationError(first_failure->failed_at, e.what());
    }
  }

  PowerEstimate est;
  est.budget = budget;
  for (const Tally& t : tallies) {
    est.rejections += t.rejections;
    est.randomized_rejections += t.randomized;
  }
  const double n = static_cast<double>(n_sim);
  est.power = static_cast<double>(est.rejections) / n;
  est.std_error = std::sqrt(est.power * (1.0 - est.power) / n);
  est.randomized_power = static_cast<double>(est.randomized_rejections) / n;
  est.randomized_std_error = std::sqrt(est.randomized_power * (1.0 - est.randomized_power) / n);
  return est;
}

std::vector<std::int64_t> default_sweep_budgets(const Level& alpha, std::int64_t max_budget) {
  std::vector<std::int64_t> budgets;
  for (std::int64_t b : aligned_budgets(alpha, max_budget)) {
    budgets.push_back(b);
    budgets.push_back(b + 1);
  }
  return budgets;
}

SimulationReport power_sweep(const Scenario& scenario, const Level& alpha,
                             const std::vector<std::int64_t>& budgets, std::int64_t n_sim,
                             std::uint64_t master_seed, SimulationOptions options) {
  if (budgets.empty()) throw ValidationError("budget list is empty");
  for (std::int64_t b : budgets) {
    if (b < 1) throw ValidationError("every budget must be >= 1");
  }
  const auto start = std::chrono::steady_clock::now();
  SimulationReport report;
  report.scenario = scenario;
  report.level = alpha.value();
  report.level_text = alpha.to_string();
  report.budgets = budgets;
  report.n_sim = n_sim;
  report.master_seed = master_seed;
  report.estimates.reserve(budgets.size());
  for (std::int64_t b : budgets) {
    report.estimates.push_back(estimate_power(scenario, alpha, b, n_sim, master_seed, options));
  }
  report.elapsed = std::chrono::steady_clock::now() - start;
  return report;
}

}  // namespace mcperm
