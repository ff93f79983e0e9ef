#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "mcperm/level.hpp"
#include "mcperm/statistics.hpp"

namespace mcperm {

/// How the null-invariance group acts on the data.
///  - TwoSampleRelabel: uniformly random reassignment of the pooled points to
///    two groups of the original sizes (label subsets, not raw permutations).
///  - PairedShuffleY: uniformly random permutation of the y coordinates with x held fixed.
enum class PermutationScheme { TwoSampleRelabel, PairedShuffleY };

std::string_view to_string(PermutationScheme scheme);

class PermutationProblem {
 public:
  /// Two-sample problem; the statistic must be mean_diff, mmd or energy.
  static PermutationProblem two_sample(PointSet first, PointSet second, StatisticSpec statistic);
  /// Independence problem on pairs (x_i, y_i); the statistic must be hsic.
  static PermutationProblem paired(PointSet x, PointSet y, StatisticSpec statistic);

  PermutationScheme scheme() const { return scheme_; }
  const StatisticSpec& statistic() const { return statistic_; }
  /// First sample (two-sample) or the x coordinates (paired).
  const PointSet& first() const { return first_; }
  /// Second sample (two-sample) or the y coordinates (paired).
  const PointSet& second() const { return second_; }

 private:
  PermutationProblem(PointSet first, PointSet second, StatisticSpec statistic,
                     PermutationScheme scheme);

  PointSet first_;
  PointSet second_;
  StatisticSpec statistic_;
  PermutationScheme scheme_;
};

/// Statistic with everything that does not depend on the group element
/// precomputed (pairwise kernel or distance tables, frozen bandwidths).
///
/// Values are summed in a fixed pooled-index order, so two group elements that
/// induce the same labeling always produce bit-identical statistics; exact
/// equality is therefore a meaningful tie test.
class StatisticEvaluator {
 public:
  explicit StatisticEvaluator(const PermutationProblem& problem);

  PermutationScheme scheme() const { return scheme_; }
  /// Number of units the group acts on (pooled size, or number of pairs).
  std::size_t units() const { return units_; }
  /// Size of the first group under TwoSampleRelabel.
  std::size_t first_size() const { return first_size_; }

  /// Statistic when unit i belongs to the first group iff in_first[i] != 0.
  double relabeled(std::span<const std::uint8_t> in_first) const;
  /// Statistic when pair i is (x_i, y_{order[i]}).
  double shuffled(std::span<const std::size_t> order) const;
  /// Statistic on the observed data, through the same path as the group elements.
  double observed() const { return observed_; }

  /// Bandwidths actually used (0 when the statistic has none).
  double bandwidth_first() const { return bandwidth_first_; }
  double bandwidth_second() const { return bandwidth_second_; }

 private:
  double pair_value(std::size_t i, std::size_t j) const { return table_[i * units_ + j]; }

  PermutationScheme scheme_;
  StatisticKind kind_;
  Sidedness sides_;
  std::size_t units_ = 0;
  std::size_t first_size_ = 0;
  std::vector<double> scalars_;  // mean difference: pooled values
  std::vector<double> table_;    // kernel / distance table, or centered x Gram (HSIC)
  std::vector<double> table_y_;  // HSIC: y Gram
  double bandwidth_first_ = 0.0;
  double bandwidth_second_ = 0.0;
  double observed_ = 0.0;
};

struct TestOutcome {
  /// (1 + exceedance_count) / (budget + 1)
  double p_value = 1.0;
  /// p_value - u * tie_count / (budget + 1), when requested.
  std::optional<double> randomized_p_value;
  /// The uniform u used for the randomized p-value.
  std::optional<double> uniform_draw;
  /// Number of drawn elements with T(permuted) >= T(observed).
  std::int64_t exceedance_count = 0;
  /// 1 + number of drawn elements with T(permuted) == T(observed).
  std::int64_t tie_count = 1;
  std::int64_t budget = 0;
  std::uint64_t seed = 0;
  double observed_statistic = 0.0;
};

/// Monte Carlo p-value with B group elements drawn uniformly with replacement.
/// Deterministic in (problem, budget, seed).
TestOutcome mc_p_value(const PermutationProblem& problem, std::int64_t budget, std::uint64_t seed);

/// As mc_p_value, with the randomized p-value filled in. The permutation draws
/// are identical to mc_p_value for the same seed.
TestOutcome randomized_p_value(const PermutationProblem& problem, std::int64_t budget,
                               std::uint64_t seed);

/// Shared implementation on a prepared evaluator.
TestOutcome monte_carlo_test(const StatisticEvaluator& evaluator, std::int64_t budget,
                             std::uint64_t seed, bool randomize);

/// p_B <= alpha, decided through the equivalent integer event R_B <= k_B.
bool rejects(const TestOutcome& outcome, const Level& level);
/// p_B^rand <= alpha. Requires a randomized outcome.
bool rejects_randomized(const TestOutcome& outcome, const Level& level);

/// Largest group that exact enumeration will walk.
inline constexpr std::uint64_t kMaxEnumeratedGroup = 1'000'000;

/// |G| for the problem's scheme (label subsets for two-sample problems);
/// nullopt when it exceeds 64 bits.
std::optional<std::uint64_t> group_cardinality(const PermutationProblem& problem);

struct EnumerationResult {
  std::uint64_t exceeding = 0;  // elements with T(permuted) >= T(observed)
  std::uint64_t group_size = 0;
  Fraction fraction() const { return Fraction::reduced(exceeding, group_size); }
  double value() const { return static_cast<double>(exceeding) / static_cast<double>(group_size); }
};

/// Exhaustive walk of the group. Throws CapacityError beyond kMaxEnumeratedGroup.
EnumerationResult enumerate_exceedances(const PermutationProblem& problem);

/// Full-group permutation p-value, as an exact fraction.
Fraction exact_p_value_enumerated(const PermutationProblem& problem);

/// Single-draw exceedance probability q(X) by enumeration. Numerically the same
/// sum as the exact p-value.
Fraction exceedance_oracle(const PermutationProblem& problem);

}  // namespace mcperm
