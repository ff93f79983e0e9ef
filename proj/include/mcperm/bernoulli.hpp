#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mcperm/level.hpp"
#include "mcperm/threshold.hpp"

namespace mcperm {

/// Two groups of n binary outcomes; treated successes ~ Bernoulli(p1), the
/// control group never succeeds. Under relabeling, the observed treated count
/// S = s is matched only when all s successes stay in the treated group.
class BernoulliDesign {
 public:
  BernoulliDesign(std::int64_t group_size, double treated_success_prob, Level level);

  std::int64_t group_size() const { return group_size_; }
  double treated_success_prob() const { return treated_success_prob_; }
  double control_success_prob() const { return 0.0; }
  const Level& level() const { return level_; }

  /// P(S = s) for s = 0..n; sums to one within 1e-12.
  const std::vector<double>& success_weights() const { return weights_; }
  /// q(s) for s = 0..n.
  const std::vector<double>& exceedance_table() const { return exceedance_; }

 private:
  std::int64_t group_size_;
  double treated_success_prob_;
  Level level_;
  std::vector<double> weights_;
  std::vector<double> exceedance_;
};

/// Largest group size for which exceedance fractions are computed exactly.
inline constexpr std::int64_t kExactExceedanceMaxGroup = 33;

/// Largest budget supported by the closed-form power.
inline constexpr std::int64_t kClosedFormMaxBudget = 10'000'000;

/// q(s) = C(2n - s, n - s) / C(2n, n); from the exact fraction when n <= kExactExceedanceMaxGroup.
double exceedance_prob(std::int64_t n, std::int64_t s);

/// q(s) as an exact reduced fraction; n <= kExactExceedanceMaxGroup.
Fraction exceedance_fraction(std::int64_t n, std::int64_t s);

struct RejectionThreshold {
  /// Smallest s with q(s) <= alpha, or n + 1 if there is none.
  std::int64_t min_successes = 0;
  /// True when a floating-point comparison fell within 1e-12 of alpha.
  bool tolerance_sensitive = false;
  /// True when the decision used exact rational arithmetic.
  bool exact_arithmetic = false;
};

RejectionThreshold rejection_threshold(const BernoulliDesign& design);

/// The exact test rejects iff S >= exact_rejection_threshold(design).
std::int64_t exact_rejection_threshold(const BernoulliDesign& design);

/// P(S >= s*), the power of the full-group permutation test.
double exact_power(const BernoulliDesign& design);

/// Pow(B) = sum_s P(S = s) F_{B, q(s)}(k_B).
double mc_power_closed_form(const BernoulliDesign& design, std::int64_t budget);

/// Pow(B) - Pow(B+1) = sum_s P(S = s) q(s) P(Binomial(B, q(s)) = k_B).
/// Requires a plateau at B+1; throws PreconditionError otherwise.
double power_decrease(const BernoulliDesign& design, std::int64_t budget);

enum class CurveProvenance { ClosedForm, Simulated };

struct PowerPoint {
  std::int64_t budget = 0;
  double power = 0.0;
  std::optional<double> std_error;
};

struct PowerCurve {
  double level = 0.0;
  std::vector<PowerPoint> points;
  CurveProvenance provenance = CurveProvenance::ClosedForm;
  std::optional<double> exact_power;
  /// Spacing of the regular grid the curve was built on.
  std::int64_t stride = 1;
};

/// Closed-form curve at from, from+stride, ..., plus every aligned budget in range.
/// `workers` = 0 uses the hardware concurrency; results do not depend on it.
PowerCurve power_curve(const BernoulliDesign& design, std::int64_t from, std::int64_t to,
                       std::int64_t stride, unsigned workers = 0);

/// Budgets B with Pow(B-1) < Pow(B) > Pow(B+1) among interior points.
/// Only defined for stride-1 curves; throws PreconditionError otherwise.
std::vector<std::int64_t> strict_local_maxima(const PowerCurve& curve);

}  // namespace mcperm
