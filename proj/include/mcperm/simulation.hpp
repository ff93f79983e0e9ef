#pragma once

#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "mcperm/engine.hpp"
#include "mcperm/level.hpp"
#include "mcperm/statistics.hpp"

namespace mcperm {

enum class ScenarioId { MeanShift, MMDShift, HSICQuadratic, EnergyScale, BernoulliDesign };

std::string_view to_string(ScenarioId id);
/// "mean_shift" | "mmd_shift" | "hsic_quadratic" | "energy_scale" | "bernoulli"
ScenarioId parse_scenario_id(std::string_view text);

/// Data-generating setup plus the statistic used to test it. Defaults follow
/// the standard benchmark designs:
///   MeanShift      N(delta, 1)^n1 vs N(0, 1)^n2, n1 = n2 = 20, delta = 0.55, mean difference
///   MMDShift       N(delta 1_d, I_d) vs N(0, I_d), n1 = n2 = 25, d = 5, delta = 0.35, MMD
///   HSICQuadratic  X ~ N(0,1), Y = X^2 + eps, eps ~ N(0, sigma_eps^2), n = 50, sigma_eps = 2.5, HSIC
///   EnergyScale    N(0, 1)^n1 vs N(0, sigma_alt^2)^n2, n1 = n2 = 20, sigma_alt = 1.8, energy
///   BernoulliDesign  treated Bernoulli(p1)^n vs all-zero control, n = 15, p1 = 0.16, mean difference
///
/// With null_variant set the alternative is switched off: delta = 0, sigma_alt = 1,
/// Y built from an independent copy of X, and for the Bernoulli design both
/// groups draw Bernoulli(p1).
struct Scenario {
  ScenarioId id = ScenarioId::MeanShift;
  bool null_variant = false;

  std::int64_t n1 = 20;
  std::int64_t n2 = 20;
  double delta = 0.55;
  std::int64_t dim = 1;
  double sigma_eps = 2.5;
  double sigma_alt = 1.8;
  std::int64_t n = 15;
  double p1 = 0.16;

  StatisticSpec statistic;

  /// Scenario with the benchmark defaults for `id` and its matching statistic.
  static Scenario defaults(ScenarioId id, bool null_variant = false);

  /// Throws ValidationError on unusable parameters.
  void validate() const;
};

/// Reads `key = value` lines ('#' starts a comment). Keys: scenario, null, n1,
/// n2, delta, dim, sigma_eps, sigma_alt, n, p1, statistic, bandwidth, sides.
/// `scenario` must come first; unknown keys are errors.
Scenario parse_scenario(std::istream& in);
Scenario load_scenario(const std::string& path);
/// Inverse of parse_scenario, listing every key relevant to the scenario id.
std::string format_scenario(const Scenario& scenario);

/// One dataset from the scenario, wrapped with its statistic and scheme.
PermutationProblem generate(const Scenario& scenario, std::uint64_t seed);

/// Seed of replication `replication` for `budget`.
std::uint64_t replication_seed(std::uint64_t master_seed, std::int64_t budget,
                               std::int64_t replication);

struct PowerEstimate {
  std::int64_t budget = 0;
  double power = 0.0;
  double std_error = 0.0;
  /// Rejection rate of the randomized p-value on the same replications.
  double randomized_power = 0.0;
  double randomized_std_error = 0.0;
  std::int64_t rejections = 0;
  std::int64_t randomized_rejections = 0;
};

struct SimulationOptions {
  /// 0 uses the hardware concurrency. Results never depend on it.
  unsigned workers = 0;
};

/// Fraction of n_sim replications (fresh data, fresh permutations) with p_B <= alpha.
PowerEstimate estimate_power(const Scenario& scenario, const Level& alpha, std::int64_t budget,
                             std::int64_t n_sim, std::uint64_t master_seed,
                             SimulationOptions options = {});

struct SimulationReport {
  Scenario scenario;
  double level = 0.0;
  std::string level_text;
  std::vector<std::int64_t> budgets;
  std::int64_t n_sim = 0;
  std::uint64_t master_seed = 0;
  std::vector<PowerEstimate> estimates;
  std::chrono::duration<double> elapsed{0.0};
};

/// Default sweep: every aligned budget up to max_budget followed by its
/// successor (the first plateau budget after the peak).
std::vector<std::int64_t> default_sweep_budgets(const Level& alpha, std::int64_t max_budget);

/// estimate_power for each budget; each budget has its own replication seeds.
SimulationReport power_sweep(const Scenario& scenario, const Level& alpha,
                             const std::vector<std::int64_t>& budgets, std::int64_t n_sim,
                             std::uint64_t master_seed, SimulationOptions options = {});

}  // namespace mcperm
