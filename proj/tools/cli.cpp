#include "cli.hpp"

#include <charconv>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>

#include "mcperm/bernoulli.hpp"
#include "mcperm/binomial.hpp"
#include "mcperm/engine.hpp"
#include "mcperm/errors.hpp"
#include "mcperm/level.hpp"
#include "mcperm/rng.hpp"
#include "mcperm/simulation.hpp"
#include "mcperm/threshold.hpp"
#include "mcperm/verify.hpp"
#include "table.hpp"

#ifndef MCPERM_VERSION
#define MCPERM_VERSION "unknown"
#endif

namespace mcperm::cli {
namespace {

using json = nlohmann::ordered_json;

struct BudgetRange {
  std::int64_t from = 0;
  std::int64_t to = 0;
};

BudgetRange parse_budget_range(const std::string& text) {
  const auto dots = text.find("..");
  auto parse = [&](std::string_view s) {
    std::int64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
      throw CLI::ValidationError("--budget-range", "expected A..B, got '" + text + "'");
    }
    return v;
  };
  if (dots == std::string::npos) {
    throw CLI::ValidationError("--budget-range", "expected A..B, got '" + text + "'");
  }
  const std::string_view view(text);
  BudgetRange r{parse(view.substr(0, dots)), parse(view.substr(dots + 2))};
  if (r.from < 1 || r.from > r.to) {
    throw CLI::ValidationError("--budget-range", "need 1 <= A <= B, got '" + text + "'");
  }
  return r;
}

const CLI::Validator kLevelText(
    [](std::string& text) -> std::string {
      try {
        (void)Level::parse(text);
        return {};
      } catch (const std::exception& e) {
        return e.what();
      }
    },
    "LEVEL", "level");

const CLI::Validator kBudgetRangeText(
    [](std::string& text) -> std::string {
      try {
        (void)parse_budget_range(text);
        return {};
      } catch (const CLI::ValidationError& e) {
        return e.what();
      }
    },
    "A..B", "budget range");

// Options shared by every table-producing command.
struct Output {
  std::string format = "csv";
  std::string path;

  void attach(CLI::App* app) {
    app->add_option("--format", format, "Output format")
        ->check(CLI::IsMember({"csv", "json"}))
        ->capture_default_str();
    app->add_option("--out", path, "Write results to this file instead of stdout");
  }
};

// Thrown for I/O problems; reported with exit code 1.
struct IoFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void emit(const std::string& text, const std::string& path, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw IoFailure("cannot open '" + path + "' for writing");
  file << text;
  if (!file.flush()) throw IoFailure("failed writing '" + path + "'");
}

json make_meta(const std::string& command, std::optional<std::uint64_t> seed, json config) {
  json meta = {{"version", MCPERM_VERSION}, {"command", command}};
  meta["seed"] = seed ? json(*seed) : json(nullptr);
  meta["config"] = std::move(config);
  return meta;
}

void write_table(const Table& table, const Output& output, const json& meta, std::ostream& out) {
  emit(output.format == "json" ? to_json(table, meta).dump(2) + "\n" : to_csv(table), output.path,
       out);
}

json level_json(const Level& level) {
  return {{"text", level.to_string()}, {"value", level.value()}};
}

// format_scenario's "key = value" lines as a JSON object.
json scenario_json(const Scenario& s) {
  json obj = json::object();
  std::istringstream lines(format_scenario(s));
  std::string line;
  while (std::getline(lines, line)) {
    const auto eq = line.find(" = ");
    if (eq != std::string::npos) obj[line.substr(0, eq)] = line.substr(eq + 3);
  }
  return obj;
}

// ---- plan -----------------------------------------------------------------

struct PlanArgs {
  std::string alpha = "0.05";
  std::int64_t min_budget = 1;
  std::int64_t count = 5;
  Output output;
};

int cmd_plan(const PlanArgs& a, std::ostream& out) {
  const Level level = Level::parse(a.alpha);
  Table table{{"B", "k_B", "decrease_bound"}, {}};
  std::int64_t b = a.min_budget;
  for (std::int64_t i = 0; i < a.count; ++i) {
    b = next_aligned_budget(level, b);
    table.add_row({b, critical_count(b, level), decrease_bound(b, level.value())});
    ++b;
  }
  const json config = {{"alpha", level_json(level)}, {"min_budget", a.min_budget}, {"count", a.count}};
  write_table(table, a.output, make_meta("plan", std::nullopt, config), out);
  return kExitOk;
}

// ---- exact-power ----------------------------------------------------------

struct DesignArgs {
  std::int64_t n = 15;
  double p1 = 0.16;
  std::string alpha = "0.05";

  void attach(CLI::App* app) {
    app->add_option("--alpha", alpha, "Significance level, decimal or p/q")
        ->check(kLevelText)
        ->capture_default_str();
    app->add_option("--n", n, "Group size of the Bernoulli design")
        ->check(CLI::Range(std::int64_t{1}, std::int64_t{100000}))
        ->capture_default_str();
    app->add_option("--p1", p1, "Treated success probability")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
  }
  json config() const {
    return {{"n", n}, {"p1", p1}, {"alpha", level_json(Level::parse(alpha))}};
  }
};

struct ExactPowerArgs {
  DesignArgs design;
  std::optional<std::int64_t> budget;
  Output output;
};

int cmd_exact_power(const ExactPowerArgs& a, std::ostream& out) {
  const BernoulliDesign design(a.design.n, a.design.p1, Level::parse(a.design.alpha));
  const RejectionThreshold t = rejection_threshold(design);
  Table table{{"n", "p1", "alpha", "s_star", "exact_power", "B", "power", "tolerance_sensitive"}, {}};
  Cell b_cell;
  Cell pow_cell;
  if (a.budget) {
    b_cell = *a.budget;
    pow_cell = mc_power_closed_form(design, *a.budget);
  }
  table.add_row({a.design.n, a.design.p1, design.level().to_string(), t.min_successes,
                 exact_power(design), b_cell, pow_cell, t.tolerance_sensitive});
  json config = a.design.config();
  config["budget"] = a.budget ? json(*a.budget) : json(nullptr);
  write_table(table, a.output, make_meta("exact-power", std::nullopt, config), out);
  return kExitOk;
}

// ---- curve ----------------------------------------------------------------

struct CurveArgs {
  DesignArgs design;
  std::string range = "1..500";
  std::int64_t stride = 1;
  unsigned workers = 0;
  Output output;
};

int cmd_curve(const CurveArgs& a, std::ostream& out) {
  const Level level = Level::parse(a.design.alpha);
  const BernoulliDesign design(a.design.n, a.design.p1, level);
  const BudgetRange range = parse_budget_range(a.range);
  const PowerCurve curve = power_curve(design, range.from, range.to, a.stride, a.workers);
  Table table{{"B", "power", "exact_power", "is_aligned", "step_type"}, {}};
  for (const PowerPoint& p : curve.points) {
    table.add_row({p.budget, p.power, *curve.exact_power, is_local_max_index(p.budget, level),
                   std::string(to_string(threshold_profile(p.budget, level).step_from_previous))});
  }
  json config = a.design.config();
  config["budget_range"] = {range.from, range.to};
  config["stride"] = a.stride;
  write_table(table, a.output, make_meta("curve", std::nullopt, config), out);
  return kExitOk;
}

// ---- test -----------------------------------------------------------------

struct TestArgs {
  std::string scenario_path;
  std::string data_path;
  std::string alpha = "0.05";
  std::int64_t budget = 99;
  std::uint64_t seed = 1;
  std::string statistic = "mean_diff";
  std::string bandwidth = "median";
  std::string sides = "one";
  Output output;
};

// CSV with header "group,v1[,v2...]"; group is 1 or 2.
PermutationProblem read_two_sample_csv(const std::string& path, const StatisticSpec& spec) {
  std::ifstream in(path);
  if (!in) throw IoFailure("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(path + ": empty file");
  std::size_t dim = 0;
  for (char c : line) dim += c == ',' ? 1 : 0;
  if (dim == 0) throw ValidationError(path + ": header needs a group column and at least one value column");
  std::vector<double> groups[2];
  std::int64_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != dim + 1) {
      throw ValidationError(path + ":" + std::to_string(line_no) + ": expected " +
                            std::to_string(dim + 1) + " fields");
    }
    int g = 0;
    if (fields[0] == "1") g = 1;
    if (fields[0] == "2") g = 2;
    if (g == 0) throw ValidationError(path + ":" + std::to_string(line_no) + ": group must be 1 or 2");
    for (std::size_t j = 1; j <= dim; ++j) {
      double v = 0.0;
      const std::string& f = fields[j];
      const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc{} || ptr != f.data() + f.size() || f.empty()) {
        throw ValidationError(path + ":" + std::to_string(line_no) + ": bad number '" + f + "'");
      }
      groups[g - 1].push_back(v);
    }
  }
  return PermutationProblem::two_sample(PointSet(dim, std::move(groups[0])),
                                        PointSet(dim, std::move(groups[1])), spec);
}

int cmd_test(const TestArgs& a, std::ostream& out) {
  const Level level = Level::parse(a.alpha);
  json config = {{"alpha", level_json(level)}, {"budget", a.budget}};
  std::optional<PermutationProblem> problem;
  if (!a.scenario_path.empty()) {
    const Scenario scenario = load_scenario(a.scenario_path);
    problem = generate(scenario, a.seed);
    config["scenario"] = scenario_json(scenario);
  } else {
    StatisticSpec spec;
    spec.kind = parse_statistic_kind(a.statistic);
    spec.bandwidth = BandwidthRule::parse(a.bandwidth);
    spec.sides = a.sides == "two" ? Sidedness::TwoSided : Sidedness::OneSided;
    problem = read_two_sample_csv(a.data_path, spec);
    config["data"] = a.data_path;
    config["statistic"] = a.statistic;
    config["bandwidth"] = spec.bandwidth.to_string();
    config["sides"] = a.sides;
  }
  const StatisticEvaluator evaluator(*problem);
  const TestOutcome o = monte_carlo_test(evaluator, a.budget, derive_seed(a.seed, Stream::Test), true);
  Table table{{"statistic", "observed", "B", "exceedances", "ties", "p_value", "randomized_p_value",
               "uniform_draw", "k_B", "reject", "reject_randomized"},
              {}};
  table.add_row({std::string(to_string(problem->statistic().kind)), o.observed_statistic, o.budget,
                 o.exceedance_count, o.tie_count, o.p_value, *o.randomized_p_value, *o.uniform_draw,
                 critical_count(a.budget, level), rejects(o, level), rejects_randomized(o, level)});
  write_table(table, a.output, make_meta("test", a.seed, config), out);
  return kExitOk;
}

// ---- simulate -------------------------------------------------------------

struct SimulateArgs {
  std::string scenario_path;
  std::string preset;
  bool null_variant = false;
  std::string alpha = "0.05";
  std::vector<std::int64_t> budgets;
  std::string range;
  std::int64_t stride = 1;
  std::int64_t max_budget = 100;
  std::int64_t n_sim = 1000;
  std::uint64_t seed = 1;
  unsigned workers = 0;
  Output output;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out, std::ostream& err) {
  const Level level = Level::parse(a.alpha);
  Scenario scenario = a.scenario_path.empty()
                          ? Scenario::defaults(parse_scenario_id(a.preset), a.null_variant)
                          : load_scenario(a.scenario_path);
  std::vector<std::int64_t> budgets = a.budgets;
  if (!a.range.empty()) {
    const BudgetRange r = parse_budget_range(a.range);
    for (std::int64_t b = r.from; b <= r.to; b += a.stride) budgets.push_back(b);
  }
  if (budgets.empty()) budgets = default_sweep_budgets(level, a.max_budget);

  const SimulationReport report =
      power_sweep(scenario, level, budgets, a.n_sim, a.seed, SimulationOptions{a.workers});
  Table table{{"B", "power", "std_error", "randomized_power", "randomized_std_error", "rejections",
               "n_sim"},
              {}};
  for (const PowerEstimate& e : report.estimates) {
    table.add_row({e.budget, e.power, e.std_error, e.randomized_power, e.randomized_std_error,
                   e.rejections, report.n_sim});
  }
  const json config = {{"alpha", level_json(level)},
                       {"scenario", scenario_json(scenario)},
                       {"budgets", budgets},
                       {"n_sim", a.n_sim}};
  write_table(table, a.output, make_meta("simulate", a.seed, config), out);
  err << "simulated " << budgets.size() << " budgets x " << a.n_sim << " replications in "
      << format_double(report.elapsed.count()) << " s\n";
  return kExitOk;
}

// ---- verify ---------------------------------------------------------------

struct VerifyArgs {
  std::string scope = "fast";
  std::string path;
};

int cmd_verify(const VerifyArgs& a, std::ostream& out, std::ostream& err) {
  const auto scope = a.scope == "full" ? verify::Scope::Full : verify::Scope::Fast;
  const auto results = verify::run_checks(scope);
  bool all = true;
  for (const auto& r : results) {
    err << verify::summary_line(r) << "\n";
    all = all && r.passed;
  }
  emit(verify::report_json(results, scope), a.path, out);
  if (!all) {
    err << "failed checks:";
    for (const auto& r : results) {
      if (!r.passed) err << " " << r.id << " (" << r.name << ")";
    }
    err << "\n";
  }
  return all ? kExitOk : kExitFailure;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Monte Carlo permutation test budgets: planning, power and verification", "mcperm"};
  app.set_version_flag("--version", MCPERM_VERSION);
  app.require_subcommand(1);

  PlanArgs plan;
  auto* plan_cmd = app.add_subcommand("plan", "List aligned budgets with k_B and the decrease bound");
  plan_cmd->add_option("--alpha", plan.alpha, "Significance level, decimal or p/q")
      ->check(kLevelText)
      ->capture_default_str();
  plan_cmd->add_option("-B,--budget", plan.min_budget, "Smallest budget to consider")
      ->check(CLI::Range(std::int64_t{1}, kClosedFormMaxBudget))
      ->capture_default_str();
  plan_cmd->add_option("--count", plan.count, "Number of aligned budgets to list")
      ->check(CLI::Range(std::int64_t{1}, std::int64_t{100000}))
      ->capture_default_str();
  plan.output.attach(plan_cmd);

  ExactPowerArgs exact;
  auto* exact_cmd = app.add_subcommand("exact-power", "Exact permutation power of the Bernoulli design");
  exact.design.attach(exact_cmd);
  exact_cmd->add_option("-B,--budget", exact.budget, "Also report the Monte Carlo power at this budget")
      ->check(CLI::Range(std::int64_t{1}, kClosedFormMaxBudget));
  exact.output.attach(exact_cmd);

  CurveArgs curve;
  auto* curve_cmd = app.add_subcommand("curve", "Closed-form power curve of the Bernoulli design");
  curve.design.attach(curve_cmd);
  curve_cmd->add_option("--budget-range", curve.range, "Budgets A..B")
      ->check(kBudgetRangeText)
      ->capture_default_str();
  curve_cmd->add_option("--stride", curve.stride, "Grid spacing; aligned budgets are always included")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  curve_cmd->add_option("--workers", curve.workers, "Worker threads (0 = all cores)");
  curve.output.attach(curve_cmd);

  TestArgs test;
  auto* test_cmd = app.add_subcommand("test", "Run one Monte Carlo permutation test");
  auto* scen_opt = test_cmd->add_option("--scenario", test.scenario_path,
                                        "Scenario file; one dataset is drawn with --seed")
                       ->check(CLI::ExistingFile);
  auto* data_opt = test_cmd->add_option("--data", test.data_path,
                                        "Two-sample CSV with header group,v1[,v2...]; group is 1 or 2")
                       ->check(CLI::ExistingFile);
  scen_opt->excludes(data_opt);
  test_cmd->add_option("--alpha", test.alpha, "Significance level, decimal or p/q")
      ->check(kLevelText)
      ->capture_default_str();
  test_cmd->add_option("-B,--budget", test.budget, "Number of permutation draws")
      ->check(CLI::Range(std::int64_t{1}, std::int64_t{100'000'000}))
      ->capture_default_str();
  test_cmd->add_option("--seed", test.seed, "Master seed")->capture_default_str();
  test_cmd->add_option("--statistic", test.statistic, "Statistic for --data")
      ->check(CLI::IsMember({"mean_diff", "mmd", "energy"}))
      ->capture_default_str();
  test_cmd->add_option("--bandwidth", test.bandwidth, "Kernel bandwidth: median or a positive number")
      ->capture_default_str();
  test_cmd->add_option("--sides", test.sides, "Mean difference sidedness")
      ->check(CLI::IsMember({"one", "two"}))
      ->capture_default_str();
  test.output.attach(test_cmd);

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Estimate power over a budget sweep");
  auto* sim_scen = sim_cmd->add_option("--scenario", sim.scenario_path, "Scenario file")
                       ->check(CLI::ExistingFile);
  auto* sim_preset = sim_cmd->add_option("--preset", sim.preset, "Built-in scenario with default parameters")
                         ->check(CLI::IsMember({"mean_shift", "mmd_shift", "hsic_quadratic",
                                                "energy_scale", "bernoulli"}));
  sim_scen->excludes(sim_preset);
  sim_cmd->add_flag("--null", sim.null_variant, "Use the preset's null variant");
  sim_cmd->add_option("--alpha", sim.alpha, "Significance level, decimal or p/q")
      ->check(kLevelText)
      ->capture_default_str();
  auto* sim_budget = sim_cmd->add_option("-B,--budget", sim.budgets, "Budget (repeatable)")
                         ->check(CLI::Range(std::int64_t{1}, std::int64_t{100'000'000}));
  auto* sim_range = sim_cmd->add_option("--budget-range", sim.range, "Budgets A..B")->check(kBudgetRangeText);
  sim_budget->excludes(sim_range);
  sim_cmd->add_option("--stride", sim.stride, "Spacing for --budget-range")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sim_cmd->add_option("--max-budget", sim.max_budget,
                      "Default sweep: aligned budgets up to this value and their successors")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sim_cmd->add_option("--n-sim", sim.n_sim, "Replications per budget")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sim_cmd->add_option("--seed", sim.seed, "Master seed")->capture_default_str();
  sim_cmd->add_option("--workers", sim.workers, "Worker threads (0 = all cores)");
  sim.output.attach(sim_cmd);

  VerifyArgs ver;
  auto* verify_cmd = app.add_subcommand("verify", "Run the acceptance checks and write a JSON report");
  verify_cmd->add_option("--scope", ver.scope, "fast skips the long-running checks")
      ->check(CLI::IsMember({"fast", "full"}))
      ->capture_default_str();
  verify_cmd->add_option("--out", ver.path, "Write the JSON report to this file");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
    if (test_cmd->parsed() && test.scenario_path.empty() && test.data_path.empty()) {
      throw CLI::RequiredError("test needs --scenario or --data");
    }
    if (sim_cmd->parsed() && sim.scenario_path.empty() && sim.preset.empty()) {
      throw CLI::RequiredError("simulate needs --scenario or --preset");
    }
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (plan_cmd->parsed()) return cmd_plan(plan, out);
    if (exact_cmd->parsed()) return cmd_exact_power(exact, out);
    if (curve_cmd->parsed()) return cmd_curve(curve, out);
    if (test_cmd->parsed()) return cmd_test(test, out);
    if (sim_cmd->parsed()) return cmd_simulate(sim, out, err);
    if (verify_cmd->parsed()) return cmd_verify(ver, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace mcperm::cli
