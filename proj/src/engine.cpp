#include "mcperm/engine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "mcperm/errors.hpp"
#include "mcperm/rng.hpp"
#include "mcperm/threshold.hpp"

namespace mcperm {

namespace {

double resolve_bandwidth(const BandwidthRule& rule, const PointSet& data) {
  return rule.kind == BandwidthRule::Kind::Fixed ? rule.value : median_heuristic_bandwidth(data);
}

std::vector<double> pair_table(const PointSet& pooled, StatisticKind kind, double bandwidth) {
  const std::size_t n = pooled.size();
  std::vector<double> table(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      table[i * n + j] = kind == StatisticKind::MMDUnbiased
                             ? gaussian_kernel(pooled[i], pooled[j], bandwidth)
                             : euclidean_distance(pooled[i], pooled[j]);
    }
  }
  return table;
}

std::vector<double> gram(const PointSet& s, double bandwidth) {
  return pair_table(s, StatisticKind::MMDUnbiased, bandwidth);
}

void center_in_place(std::vector<double>& k, std::size_t n) {
  std::vector<double> row_mean(n, 0.0);
  double grand = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) row_mean[i] += k[i * n + j];
    grand += row_mean[i];
    row_mean[i] /= static_cast<double>(n);
  }
  grand /= static_cast<double>(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) k[i * n + j] += grand - row_mean[i] - row_mean[j];
  }
}

// C(n, k), or nullopt past 64 bits.
std::optional<std::uint64_t> checked_choose(std::uint64_t n, std::uint64_t k) {
  k = std::min(k, n - k);
  unsigned __int128 c = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    c = c * (n - k + i) / i;
    if (c > UINT64_MAX) return std::nullopt;
  }
  return static_cast<std::uint64_t>(c);
}

std::optional<std::uint64_t> checked_factorial(std::uint64_t n) {
  unsigned __int128 f = 1;
  for (std::uint64_t i = 2; i <= n; ++i) {
    f *= i;
    if (f > UINT64_MAX) return std::nullopt;
  }
  return static_cast<std::uint64_t>(f);
}

}  // namespace

std::string_view to_string(PermutationScheme scheme) {
  return scheme == PermutationScheme::TwoSampleRelabel ? "two_sample_relabel" : "paired_shuffle_y";
}

PermutationProblem::PermutationProblem(PointSet first, PointSet second, StatisticSpec statistic,
                                       PermutationScheme scheme)
    : first_(std::move(first)), second_(std::move(second)), statistic_(statistic), scheme_(scheme) {}

PermutationProblem PermutationProblem::two_sample(PointSet first, PointSet second,
                                                  StatisticSpec statistic) {
  if (first.empty() || second.empty()) throw ValidationError("both samples must be non-empty");
  if (first.dim() != second.dim()) {
    throw ValidationError("samples must have equal element dimension");
  }
  switch (statistic.kind) {
    case StatisticKind::MeanDifference:
      if (first.dim() != 1) throw ValidationError("mean difference needs scalar samples");
      break;
    case StatisticKind::MMDUnbiased:
      if (first.size() < 2 || second.size() < 2) {
        throw ValidationError("unbiased MMD needs at least two points per sample");
      }
      break;
    case StatisticKind::EnergyDistance:
      break;
    case StatisticKind::HSIC:
      throw ValidationError("HSIC is an independence statistic; use a paired problem");
  }
  return PermutationProblem(std::move(first), std::move(second), statistic,
                            PermutationScheme::TwoSampleRelabel);
}

PermutationProblem PermutationProblem::paired(PointSet x, PointSet y, StatisticSpec statistic) {
  if (statistic.kind != StatisticKind::HSIC) {
    throw ValidationError("paired problems use the HSIC statistic");
  }
  if (x.size() != y.size()) throw ValidationError("paired samples must have equal length");
  if (x.size() < 2) throw ValidationError("paired problems need at least two pairs");
  return PermutationProblem(std::move(x), std::move(y), statistic,
                            PermutationScheme::PairedShuffleY);
}

StatisticEvaluator::StatisticEvaluator(const PermutationProblem& problem)
    : scheme_(problem.scheme()), kind_(problem.statistic().kind), sides_(problem.statistic().sides) {
  const auto& rule = problem.statistic().bandwidth;
  if (scheme_ == PermutationScheme::PairedShuffleY) {
    units_ = problem.first().size();
    bandwidth_first_ = resolve_bandwidth(rule, problem.first());
    bandwidth_second_ = resolve_bandwidth(rule, problem.second());
    table_ = gram(problem.first(), bandwidth_first_);
    center_in_place(table_, units_);
    table_y_ = gram(problem.second(), bandwidth_second_);
    std::vector<std::size_t> identity(units_);
    std::iota(identity.begin(), identity.end(), std::size_t{0});
    observed_ = shuffled(identity);
    return;
  }
  const PointSet pooled = problem.first().concat(problem.second());
  units_ = pooled.size();
  first_size_ = problem.first().size();
  if (kind_ == StatisticKind::MeanDifference) {
    scalars_ = pooled.values();
  } else {
    if (kind_ == StatisticKind::MMDUnbiased) {
      bandwidth_first_ = bandwidth_second_ = resolve_bandwidth(rule, pooled);
    }
    table_ = pair_table(pooled, kind_, bandwidth_first_);
  }
  std::vector<std::uint8_t> mask(units_, 0);
  std::fill_n(mask.begin(), first_size_, std::uint8_t{1});
  observed_ = relabeled(mask);
}

double StatisticEvaluator::relabeled(std::span<const std::uint8_t> in_first) const {
  const double m = static_cast<double>(first_size_);
  const double n = static_cast<double>(units_ - first_size_);
  if (kind_ == StatisticKind::MeanDifference) {
    double sx = 0.0;
    double sy = 0.0;
    for (std::size_t i = 0; i < units_; ++i) (in_first[i] ? sx : sy) += scalars_[i];
    const double diff = sx / m - sy / n;
    return sides_ == Sidedness::TwoSided ? std::fabs(diff) : diff;
  }
  double within_first = 0.0;
  double within_second = 0.0;
  double across = 0.0;
  for (std::size_t i = 0; i < units_; ++i) {
    const bool a = in_first[i] != 0;
    for (std::size_t j = i + 1; j < units_; ++j) {
      const double v = pair_value(i, j);
      if (a != (in_first[j] != 0)) {
        across += v;
      } else if (a) {
        within_first += v;
      } else {
        within_second += v;
      }
    }
  }
  if (kind_ == StatisticKind::MMDUnbiased) {
    return 2.0 * within_first / (m * (m - 1.0)) + 2.0 * within_second / (n * (n - 1.0)) -
           2.0 * across / (m * n);
  }
  return 2.0 * across / (m * n) - 2.0 * within_first / (m * m) - 2.0 * within_second / (n * n);
}

double StatisticEvaluator::shuffled(std::span<const std::size_t> order) const {
  double total = 0.0;
  for (std::size_t i = 0; i < units_; ++i) {
    const double* krow = table_.data() + i * units_;
    const double* lrow = table_y_.data() + order[i] * units_;
    for (std::size_t j = 0; j < units_; ++j) total += krow[j] * lrow[order[j]];
  }
  return total / static_cast<double>(units_ * units_);
}

TestOutcome monte_carlo_test(const StatisticEvaluator& evaluator, std::int64_t budget,
                             std::uint64_t seed, bool randomize) {
  if (budget < 1) throw DomainError("Monte Carlo budget must be >= 1");
  TestOutcome out;
  out.budget = budget;
  out.seed = seed;
  out.observed_statistic = evaluator.observed();

  Rng rng(derive_seed(seed, Stream::Permutations));
  const std::size_t units = evaluator.units();
  std::vector<std::size_t> order(units);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<std::uint8_t> mask(units, 0);
  const double observed = evaluator.observed();
  const bool relabel = evaluator.scheme() == PermutationScheme::TwoSampleRelabel;
  const std::size_t shuffled_prefix = relabel ? evaluator.first_size() : units - 1;

  std::int64_t exceed = 0;
  std::int64_t ties = 1;
  for (std::int64_t b = 0; b < budget; ++b) {
    // Partial Fisher-Yates: the first `shuffled_prefix` slots become a uniform draw.
    for (std::size_t i = 0; i < shuffled_prefix; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.below(units - i));
      std::swap(order[i], order[j]);
    }
    double value = 0.0;
    if (relabel) {
      std::fill(mask.begin(), mask.end(), std::uint8_t{0});
      for (std::size_t i = 0; i < shuffled_prefix; ++i) mask[order[i]] = 1;
      value = evaluator.relabeled(mask);
    } else {
      value = evaluator.shuffled(order);
    }
    if (value >= observed) {
      ++exceed;
      if (value == observed) ++ties;
    }
  }
  out.exceedance_count = exceed;
  out.tie_count = ties;
  const double denom = static_cast<double>(budget) + 1.0;
  out.p_value = static_cast<double>(1 + exceed) / denom;
  if (randomize) {
    Rng u_rng(derive_seed(seed, Stream::Randomization));
    const double u = u_rng.open_unit();
    out.uniform_draw = u;
    out.randomized_p_value = out.p_value - u * static_cast<double>(ties) / denom;
  }
  return out;
}

TestOutcome mc_p_value(const PermutationProblem& problem, std::int64_t budget, std::uint64_t seed) {
  return monte_carlo_test(StatisticEvaluator(problem), budget, seed, false);
}

TestOutcome randomized_p_value(const PermutationProblem& problem, std::int64_t budget,
                               std::uint64_t seed) {
  return monte_carlo_test(StatisticEvaluator(problem), budget, seed, true);
}

bool rejects(const TestOutcome& outcome, const Level& level) {
  return outcome.exceedance_count <= critical_count(outcome.budget, level);
}

bool rejects_randomized(const TestOutcome& outcome, const Level& level) {
  if (!outcome.randomized_p_value) {
    throw PreconditionError("outcome carries no randomized p-value");
  }
  return *outcome.randomized_p_value <= level.value();
}

std::optional<std::uint64_t> group_cardinality(const PermutationProblem& problem) {
  if (problem.scheme() == PermutationScheme::PairedShuffleY) {
    return checked_factorial(problem.first().size());
  }
  const std::uint64_t pooled = problem.first().size() + problem.second().size();
  return checked_choose(pooled, problem.first().size());
}

EnumerationResult enumerate_exceedances(const PermutationProblem& problem) {
  const auto cardinality = group_cardinality(problem);
  if (!cardinality || *cardinality > kMaxEnumeratedGroup) {
    throw CapacityError("group too large to enumerate (limit " +
                        std::to_string(kMaxEnumeratedGroup) +
                        " elements); use the Monte Carlo p-value instead");
  }
  const StatisticEvaluator evaluator(problem);
  const double observed = evaluator.observed();
  const std::size_t units = evaluator.units();
  EnumerationResult out;
  out.group_size = *cardinality;

  if (problem.scheme() == PermutationScheme::PairedShuffleY) {
    std::vector<std::size_t> order(units);
    std::iota(order.begin(), order.end(), std::size_t{0});
    do {
      if (evaluator.shuffled(order) >= observed) ++out.exceeding;
    } while (std::next_permutation(order.begin(), order.end()));
    return out;
  }

  const std::size_t k = evaluator.first_size();
  std::vector<std::size_t> chosen(k);
  std::iota(chosen.begin(), chosen.end(), std::size_t{0});
  std::vector<std::uint8_t> mask(units, 0);
  while (true) {
    std::fill(mask.begin(), mask.end(), std::uint8_t{0});
    for (std::size_t i : chosen) mask[i] = 1;
    if (evaluator.relabeled(mask) >= observed) ++out.exceeding;
    // Next k-subset in lexicographic order.
    std::size_t i = k;
    while (i > 0 && chosen[i - 1] == units - k + i - 1) --i;
    if (i == 0) break;
    ++chosen[i - 1];
    for (std::size_t j = i; j < k; ++j) chosen[j] = chosen[j - 1] + 1;
  }
  return out;
}

Fraction exact_p_value_enumerated(const PermutationProblem& problem) {
  return enumerate_exceedances(problem).fraction();
}

Fraction exceedance_oracle(const PermutationProblem& problem) {
  return enumerate_exceedances(problem).fraction();
}

}  // namespace mcperm
