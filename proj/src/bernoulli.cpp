#include "mcperm/bernoulli.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <thread>

#include "mcperm/binomial.hpp"
#include "mcperm/errors.hpp"

namespace mcperm {

namespace {

constexpr double kWeightSumTolerance = 1e-12;
constexpr double kThresholdToleranceBand = 1e-12;

std::uint64_t exact_choose_u64(std::int64_t n, std::int64_t k) {
  k = std::min(k, n - k);
  unsigned __int128 c = 1;
  for (std::int64_t i = 1; i <= k; ++i) {
    c = c * static_cast<unsigned __int128>(n - k + i) / static_cast<unsigned __int128>(i);
  }
  return static_cast<std::uint64_t>(c);
}

void require_success_index(std::int64_t n, std::int64_t s) {
  if (n < 1) throw DomainError("group size must be positive");
  if (s < 0 || s > n) {
    throw DomainError("success count s=" + std::to_string(s) + " outside [0, " +
                      std::to_string(n) + "]");
  }
}

void require_budget_range(std::int64_t budget) {
  if (budget < 1) throw DomainError("budget must be >= 1");
  if (budget > kClosedFormMaxBudget) {
    throw UnsupportedRangeError("closed-form power supports B <= " +
                                std::to_string(kClosedFormMaxBudget) + ", got " +
                                std::to_string(budget));
  }
}

}  // namespace

BernoulliDesign::BernoulliDesign(std::int64_t group_size, double treated_success_prob, Level level)
    : group_size_(group_size), treated_success_prob_(treated_success_prob), level_(level) {
  if (group_size < 1) throw DomainError("group size must be positive");
  if (!(treated_success_prob > 0.0 && treated_success_prob < 1.0)) {
    throw DomainError("treated success probability must lie in (0,1)");
  }
  const BinomialLaw law(group_size, treated_success_prob);
  weights_.reserve(static_cast<std::size_t>(group_size + 1));
  exceedance_.reserve(static_cast<std::size_t>(group_size + 1));
  double total = 0.0;
  for (std::int64_t s = 0; s <= group_size; ++s) {
    weights_.push_back(binomial_pmf(s, law));
    exceedance_.push_back(exceedance_prob(group_size, s));
    total += weights_.back();
  }
  if (std::fabs(total - 1.0) > kWeightSumTolerance) {
    throw NumericError("binomial success weights sum to " + std::to_string(total));
  }
}

double exceedance_prob(std::int64_t n, std::int64_t s) {
  require_success_index(n, s);
  if (s == 0) return 1.0;
  if (n <= kExactExceedanceMaxGroup) return exceedance_fraction(n, s).value();
  return std::exp(log_choose(2 * n - s, n - s) - log_choose(2 * n, n));
}

Fraction exceedance_fraction(std::int64_t n, std::int64_t s) {
  require_success_index(n, s);
  if (n > kExactExceedanceMaxGroup) {
    throw CapacityError("exact exceedance fractions need n <= " +
                        std::to_string(kExactExceedanceMaxGroup));
  }
  return Fraction::reduced(exact_choose_u64(2 * n - s, n - s), exact_choose_u64(2 * n, n));
}

RejectionThreshold rejection_threshold(const BernoulliDesign& design) {
  const std::int64_t n = design.group_size();
  RejectionThreshold out;
  out.min_successes = n + 1;
  const auto& exact_level = design.level().exact();
  if (exact_level && n <= kExactExceedanceMaxGroup) {
    out.exact_arithmetic = true;
    const auto total = static_cast<unsigned __int128>(exact_choose_u64(2 * n, n));
    for (std::int64_t s = 0; s <= n; ++s) {
      const auto hits = static_cast<unsigned __int128>(exact_choose_u64(2 * n - s, n - s));
      if (hits * exact_level->den <= total * exact_level->num) {
        out.min_successes = s;
        break;
      }
    }
    return out;
  }
  const double alpha = design.level().value();
  const auto& table = design.exceedance_table();
  for (std::int64_t s = 0; s <= n; ++s) {
    const double q = table[static_cast<std::size_t>(s)];
    // Inside the band the comparison counts as a tie, which rejects.
    if (std::fabs(q - alpha) <= kThresholdToleranceBand) out.tolerance_sensitive = true;
    if (q <= alpha + kThresholdToleranceBand) {
      out.min_successes = s;
      break;
    }
  }
  return out;
}

std::int64_t exact_rejection_threshold(const BernoulliDesign& design) {
  return rejection_threshold(design).min_successes;
}

double exact_power(const BernoulliDesign& design) {
  const std::int64_t threshold = exact_rejection_threshold(design);
  if (threshold > design.group_size()) return 0.0;
  const BinomialLaw law(design.group_size(), design.treated_success_prob());
  return 1.0 - binomial_cdf(threshold - 1, law);
}

double mc_power_closed_form(const BernoulliDesign& design, std::int64_t budget) {
  require_budget_range(budget);
  const std::int64_t k = critical_count(budget, design.level());
  if (k < 0) return 0.0;
  const auto& weights = design.success_weights();
  const auto& table = design.exceedance_table();
  double power = 0.0;
  for (std::size_t s = 0; s < weights.size(); ++s) {
    power += weights[s] * binomial_cdf(k, BinomialLaw(budget, table[s]));
  }
  return std::clamp(power, 0.0, 1.0);
}

double power_decrease(const BernoulliDesign& design, std::int64_t budget) {
  require_budget_range(budget);
  if (step_type(budget + 1, design.level()) != StepType::Plateau) {
    throw PreconditionError("power_decrease needs a plateau at B+1 = " +
                            std::to_string(budget + 1) + ", but the step there is a jump");
  }
  const std::int64_t k = critical_count(budget, design.level());
  if (k < 0) return 0.0;
  const auto& weights = design.success_weights();
  const auto& table = design.exceedance_table();
  double decrease = 0.0;
  for (std::size_t s = 0; s < weights.size(); ++s) {
    decrease += weights[s] * table[s] * binomial_pmf(k, BinomialLaw(budget, table[s]));
  }
  return decrease;
}

PowerCurve power_curve(const BernoulliDesign& design, std::int64_t from, std::int64_t to,
                       std::int64_t stride, unsigned workers) {
  if (from < 1 || from > to) {
    throw DomainError("budget range must satisfy 1 <= from <= to");
  }
  if (stride < 1) throw DomainError("stride must be positive");
  require_budget_range(to);

  std::vector<std::int64_t> budgets;
  for (std::int64_t b = from; b <= to; b += stride) budgets.push_back(b);
  for (std::int64_t b : aligned_budgets(design.level(), to)) {
    if (b >= from) budgets.push_back(b);
  }
  std::sort(budgets.begin(), budgets.end());
  budgets.erase(std::unique(budgets.begin(), budgets.end()), budgets.end());

  PowerCurve curve;
  curve.level = design.level().value();
  curve.provenance = CurveProvenance::ClosedForm;
  curve.exact_power = exact_power(design);
  curve.stride = stride;
  curve.points.resize(budgets.size());

  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, budgets.size()));
  auto fill = [&](std::size_t begin, std::size_t step) {
    for (std::size_t i = begin; i < budgets.size(); i += step) {
      curve.points[i] = PowerPoint{budgets[i], mc_power_closed_form(design, budgets[i]), std::nullopt};
    }
  };
  if (workers <= 1) {
    fill(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(fill, w, workers);
  }
  return curve;
}

std::vector<std::int64_t> strict_local_maxima(const PowerCurve& curve) {
  if (curve.stride != 1) {
    throw PreconditionError("local maxima are only defined on stride-1 curves");
  }
  const auto& pts = curve.points;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    if (pts[i].budget != pts[i - 1].budget + 1) {
      throw PreconditionError("local maxima need consecutive budgets");
    }
  }
  std::vector<std::int64_t> out;
  for (std::size_t i = 1; i + 1 < pts.size(); ++i) {
    if (pts[i - 1].power < pts[i].power && pts[i].power > pts[i + 1].power) {
      out.push_back(pts[i].budget);
    }
  }
  return out;
}

}  // namespace mcperm
