#pragma once

#include <cstdint>

namespace mcperm {

/// Binomial(trials, success_prob). Construction validates the parameters.
class BinomialLaw {
 public:
  BinomialLaw(std::int64_t trials, double success_prob);

  std::int64_t trials() const { return trials_; }
  double success_prob() const { return success_prob_; }

 private:
  std::int64_t trials_;
  double success_prob_;
};

/// Trials above which binomial_cdf switches from direct summation to the
/// incomplete-beta identity.
inline constexpr std::int64_t kDirectSummationMaxTrials = 10'000;

/// ln Gamma(x) for x > 0 (Lanczos, g = 7, nine terms).
double log_gamma(double x);

/// ln C(n, k). Throws DomainError unless 0 <= k <= n.
double log_choose(std::int64_t n, std::int64_t k);

/// P(R = k). Zero outside [0, trials]; exact when success_prob is 0 or 1.
double binomial_pmf(std::int64_t k, const BinomialLaw& law);

/// P(R <= k). Direct summation up to kDirectSummationMaxTrials, incomplete beta beyond.
double binomial_cdf(std::int64_t k, const BinomialLaw& law);

/// The two evaluation routes of binomial_cdf, exposed so they can be cross-checked.
double binomial_cdf_direct(std::int64_t k, const BinomialLaw& law);
double binomial_cdf_beta(std::int64_t k, const BinomialLaw& law);

/// I_x(a, b) by Lentz's continued fraction. Throws NumericError if the
/// fraction has not converged within the iteration cap.
double regularized_incomplete_beta(double a, double b, double x);

inline constexpr int kBetaFractionMaxIterations = 300;
inline constexpr double kBetaFractionTolerance = 1e-14;

/// kBetaFractionMaxIterations plus ceil(sqrt(a + b)).
int beta_fraction_iteration_cap(double a, double b);

/// Upper bound on Pow(B) - Pow(B+1) along a plateau of the critical count:
/// (2 pi (B+1))^(-1/2) * sqrt(alpha / (1 - alpha)).
double decrease_bound(std::int64_t budget, double alpha);

}  // namespace mcperm
