#include "mcperm/binomial.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

#include "mcperm/errors.hpp"

namespace mcperm {

namespace {

constexpr double kLnSqrt2Pi = 0.91893853320467274178;  // ln sqrt(2 pi)
constexpr double kTiny = 1e-300;

// Exact when it fits: C(n, k) for n <= 62 never overflows the 128-bit intermediates.
constexpr std::int64_t kExactChooseMax = 62;

double exact_choose(std::int64_t n, std::int64_t k) {
  unsigned __int128 c = 1;
  for (std::int64_t i = 1; i <= k; ++i) {
    c = c * static_cast<unsigned __int128>(n - k + i) / static_cast<unsigned __int128>(i);
  }
  return static_cast<double>(c);
}

// ln Gamma(m + 1) - [(m + 1/2) ln m - m + ln sqrt(2 pi)], the Stirling remainder.
double stirling_remainder(double m) {
  if (m > 15.0) {
    const double inv = 1.0 / m;
    const double inv2 = inv * inv;
    return inv *
           (1.0 / 12 - inv2 * (1.0 / 360 - inv2 * (1.0 / 1260 - inv2 * (1.0 / 1680 - inv2 / 1188))));
  }
  double lgamma_m1 = 0.0;
  if (m == std::floor(m)) {
    double fact = 1.0;
    for (int i = 2; i <= static_cast<int>(m); ++i) fact *= i;
    lgamma_m1 = std::log(fact);
  } else {
    lgamma_m1 = log_gamma(m + 1.0);
  }
  return lgamma_m1 - (m + 0.5) * std::log(m) + m - kLnSqrt2Pi;
}

// x ln(x / np) + np - x, accurate when x is close to np.
double deviance_term(double x, double np) {
  if (std::fabs(x - np) < 0.1 * (x + np)) {
    double v = (x - np) / (x + np);
    double s = (x - np) * v;
    const double v2 = v * v;
    double ej = 2.0 * x * v;
    for (int j = 1; j < 1000; ++j) {
      ej *= v2;
      const double s1 = s + ej / (2 * j + 1);
      if (s1 == s) return s1;
      s = s1;
    }
    return s;
  }
  return x * std::log(x / np) + np - x;
}

// x^a y^b / B(a, b) with y = 1 - x supplied separately.
double beta_front_factor(double a, double b, double x, double y) {
  const double n = a + b;
  const double log_part = stirling_remainder(n) - stirling_remainder(a) - stirling_remainder(b) -
                          deviance_term(a, n * x) - deviance_term(b, n * y);
  return std::sqrt(a * b / (2.0 * std::numbers::pi * n)) * std::exp(log_part);
}

double beta_continued_fraction(double a, double b, double x) {
  const int max_iterations = beta_fraction_iteration_cap(a, b);
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  double last_delta = 0.0;
  for (int m = 1; m <= max_iterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    last_delta = delta;
    if (std::fabs(delta - 1.0) < kBetaFractionTolerance) return h;
  }
  std::ostringstream msg;
  msg.precision(17);
  msg << "incomplete beta continued fraction did not converge: a=" << a << " b=" << b
      << " x=" << x << " iterations=" << max_iterations
      << " |delta-1|=" << std::fabs(last_delta - 1.0);
  throw NumericError(msg.str());
}

double incomplete_beta(double a, double b, double x, double y) {
  if (x <= 0.0) return 0.0;
  if (y <= 0.0) return 1.0;
  const double front = beta_front_factor(a, b, x, y);
  if (front == 0.0) {
    // Both tails are beyond double range; the side of the mean decides.
    return x < a / (a + b) ? 0.0 : 1.0;
  }
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * beta_continued_fraction(a, b, x) / a;
  }
  return 1.0 - front * beta_continued_fraction(b, a, y) / b;
}

void require_nonnegative(std::int64_t v, const char* what) {
  if (v < 0) throw DomainError(std::string(what) + " must be non-negative");
}

}  // namespace

int beta_fraction_iteration_cap(double a, double b) {
  // Near the mean the fraction needs O(sqrt(a + b)) terms.
  return kBetaFractionMaxIterations + static_cast<int>(std::ceil(std::sqrt(a + b)));
}

BinomialLaw::BinomialLaw(std::int64_t trials, double success_prob)
    : trials_(trials), success_prob_(success_prob) {
  require_nonnegative(trials, "binomial trials");
  if (!(success_prob >= 0.0 && success_prob <= 1.0)) {
    throw DomainError("binomial success probability must lie in [0,1]");
  }
}

double log_gamma(double x) {
  static constexpr std::array<double, 9> kLanczos = {
      0.99999999999980993,  676.5203681218851,     -1259.1392167224028,
      771.32342877765313,   -176.61502916214059,   12.507343278686905,
      -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};
  if (!(x > 0.0)) throw DomainError("log_gamma requires x > 0");
  if (x < 0.5) {
    // Reflection: Gamma(x) Gamma(1 - x) = pi / sin(pi x).
    return std::log(std::numbers::pi / std::sin(std::numbers::pi * x)) - log_gamma(1.0 - x);
  }
  const double z = x - 1.0;
  double sum = kLanczos[0];
  for (std::size_t i = 1; i < kLanczos.size(); ++i) sum += kLanczos[i] / (z + static_cast<double>(i));
  const double t = z + 7.5;
  return kLnSqrt2Pi + (z + 0.5) * std::log(t) - t + std::log(sum);
}

double log_choose(std::int64_t n, std::int64_t k) {
  if (n < 0 || k < 0 || k > n) {
    throw DomainError("log_choose requires 0 <= k <= n (n=" + std::to_string(n) +
                      ", k=" + std::to_string(k) + ")");
  }
  k = std::min(k, n - k);
  if (k == 0) return 0.0;
  if (n <= kExactChooseMax) return std::log(exact_choose(n, k));
  const double nd = static_cast<double>(n);
  const double kd = static_cast<double>(k);
  const double rd = static_cast<double>(n - k);
  return kd * std::log(nd / kd) - rd * std::log1p(-kd / nd) +
         0.5 * std::log(nd / (2.0 * std::numbers::pi * kd * rd)) + stirling_remainder(nd) -
         stirling_remainder(kd) - stirling_remainder(rd);
}

double binomial_pmf(std::int64_t k, const BinomialLaw& law) {
  const std::int64_t n = law.trials();
  const double p = law.success_prob();
  if (k < 0 || k > n) return 0.0;
  if (p == 0.0) return k == 0 ? 1.0 : 0.0;
  if (p == 1.0) return k == n ? 1.0 : 0.0;
  const double q = 1.0 - p;
  const double nd = static_cast<double>(n);
  if (k == 0) {
    return std::exp(nd * std::log1p(-p));
  }
  if (k == n) {
    return std::exp(nd * std::log(p));
  }
  const double kd = static_cast<double>(k);
  const double rd = nd - kd;
  const double lc = stirling_remainder(nd) - stirling_remainder(kd) - stirling_remainder(rd) -
                    deviance_term(kd, nd * p) - deviance_term(rd, nd * q);
  const double lf = std::log(2.0 * std::numbers::pi) + std::log(kd) + std::log1p(-kd / nd);
  return std::exp(lc - 0.5 * lf);
}

double binomial_cdf_direct(std::int64_t k, const BinomialLaw& law) {
  const std::int64_t n = law.trials();
  const double p = law.success_prob();
  if (k < 0) return 0.0;
  if (k >= n) return 1.0;
  if (p == 0.0) return 1.0;
  if (p == 1.0) return 0.0;

  // Sum in the direction of decreasing mass so the loop can stop early.
  const auto mode = static_cast<std::int64_t>(std::floor((static_cast<double>(n) + 1.0) * p));
  if (k < mode) {
    double sum = 0.0;
    for (std::int64_t j = k; j >= 0; --j) {
      const double term = binomial_pmf(j, law);
      sum += term;
      if (term <= sum * 1e-17) break;
    }
    return std::min(sum, 1.0);
  }
  double tail = 0.0;
  for (std::int64_t j = k + 1; j <= n; ++j) {
    const double term = binomial_pmf(j, law);
    tail += term;
    if (term <= tail * 1e-17) break;
  }
  return std::max(0.0, 1.0 - tail);
}

double binomial_cdf_beta(std::int64_t k, const BinomialLaw& law) {
  const std::int64_t n = law.trials();
  const double p = law.success_prob();
  if (k < 0) return 0.0;
  if (k >= n) return 1.0;
  if (p == 0.0) return 1.0;
  if (p == 1.0) return 0.0;
  // P(R <= k) = I_{1-p}(n - k, k + 1)
  return incomplete_beta(static_cast<double>(n - k), static_cast<double>(k + 1), 1.0 - p, p);
}

double binomial_cdf(std::int64_t k, const BinomialLaw& law) {
  return law.trials() <= kDirectSummationMaxTrials ? binomial_cdf_direct(k, law)
                                                   : binomial_cdf_beta(k, law);
}

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw DomainError("incomplete beta requires a > 0 and b > 0");
  if (!(x >= 0.0 && x <= 1.0)) throw DomainError("incomplete beta requires x in [0,1]");
  return incomplete_beta(a, b, x, 1.0 - x);
}

double decrease_bound(std::int64_t budget, double alpha) {
  if (budget < 1) throw DomainError("decrease_bound requires B >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("decrease_bound requires alpha in (0,1)");
  const double b1 = static_cast<double>(budget) + 1.0;
  return std::sqrt(alpha / (1.0 - alpha)) / std::sqrt(2.0 * std::numbers::pi * b1);
}

}  // namespace mcperm
