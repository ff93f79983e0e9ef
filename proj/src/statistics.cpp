#include "mcperm/statistics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "mcperm/errors.hpp"

namespace mcperm {

namespace {

void require_same_dim(const PointSet& x, const PointSet& y) {
  if (x.dim() != y.dim()) {
    throw DomainError("samples have different dimensions (" + std::to_string(x.dim()) + " vs " +
                      std::to_string(y.dim()) + ")");
  }
}

void require_min_size(const PointSet& s, std::size_t n, const char* what) {
  if (s.size() < n) {
    throw DomainError(std::string(what) + " needs at least " + std::to_string(n) +
                      " points, got " + std::to_string(s.size()));
  }
}

void require_bandwidth(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw DomainError("bandwidth must be positive");
}

// Sum of a kernel over distinct ordered pairs within one sample.
template <typename F>
double within_sum(const PointSet& s, F&& f) {
  double total = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = i + 1; j < s.size(); ++j) total += f(s[i], s[j]);
  }
  return 2.0 * total;
}

template <typename F>
double cross_sum(const PointSet& x, const PointSet& y, F&& f) {
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = 0; j < y.size(); ++j) total += f(x[i], y[j]);
  }
  return total;
}

// H K H for a symmetric Gram matrix stored row-major.
std::vector<double> double_centered(std::vector<double> k, std::size_t n) {
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
  return k;
}

std::vector<double> gram_matrix(const PointSet& s, double sigma) {
  const std::size_t n = s.size();
  std::vector<double> k(n * n, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      k[i * n + j] = k[j * n + i] = gaussian_kernel(s[i], s[j], sigma);
    }
  }
  return k;
}

}  // namespace

PointSet::PointSet(std::size_t dim, std::vector<double> values) : dim_(dim), values_(std::move(values)) {
  if (dim_ == 0 && !values_.empty()) throw ValidationError("points must have dimension >= 1");
  if (dim_ != 0 && values_.size() % dim_ != 0) {
    throw ValidationError("point buffer size is not a multiple of the dimension");
  }
}

PointSet PointSet::scalars(std::vector<double> values) { return PointSet(1, std::move(values)); }

PointSet PointSet::scalars(std::initializer_list<double> values) {
  return PointSet(1, std::vector<double>(values));
}

PointSet PointSet::concat(const PointSet& other) const {
  if (empty()) return other;
  if (other.empty()) return *this;
  require_same_dim(*this, other);
  std::vector<double> v = values_;
  v.insert(v.end(), other.values_.begin(), other.values_.end());
  return PointSet(dim_, std::move(v));
}

PointSet PointSet::select(std::span<const std::size_t> indices) const {
  std::vector<double> v;
  v.reserve(indices.size() * dim_);
  for (std::size_t i : indices) {
    auto p = (*this)[i];
    v.insert(v.end(), p.begin(), p.end());
  }
  return PointSet(dim_, std::move(v));
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    total += d * d;
  }
  return total;
}

double euclidean_distance(std::span<const double> a, std::span<const double> b) {
  return std::sqrt(squared_distance(a, b));
}

double gaussian_kernel(std::span<const double> a, std::span<const double> b, double bandwidth) {
  return std::exp(-squared_distance(a, b) / (2.0 * bandwidth * bandwidth));
}

BandwidthRule BandwidthRule::fixed(double sigma) {
  require_bandwidth(sigma);
  return BandwidthRule{Kind::Fixed, sigma};
}

BandwidthRule BandwidthRule::parse(std::string_view text) {
  if (text == "median") return median();
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ValidationError("bandwidth must be 'median' or a positive number, got '" +
                          std::string(text) + "'");
  }
  if (!(value > 0.0)) throw ValidationError("bandwidth must be positive");
  return fixed(value);
}

std::string BandwidthRule::to_string() const {
  if (kind == Kind::MedianHeuristic) return "median";
  char buf[32];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, end);
}

std::string_view to_string(StatisticKind kind) {
  switch (kind) {
    case StatisticKind::MeanDifference:
      return "mean_diff";
    case StatisticKind::MMDUnbiased:
      return "mmd";
    case StatisticKind::HSIC:
      return "hsic";
    case StatisticKind::EnergyDistance:
      return "energy";
  }
  return "unknown";
}

StatisticKind parse_statistic_kind(std::string_view text) {
  if (text == "mean_diff") return StatisticKind::MeanDifference;
  if (text == "mmd") return StatisticKind::MMDUnbiased;
  if (text == "hsic") return StatisticKind::HSIC;
  if (text == "energy") return StatisticKind::EnergyDistance;
  throw ValidationError("unknown statistic '" + std::string(text) +
                        "' (expected mean_diff, mmd, hsic or energy)");
}

double mean_difference(const PointSet& x, const PointSet& y) {
  require_min_size(x, 1, "mean difference");
  require_min_size(y, 1, "mean difference");
  if (x.dim() != 1 || y.dim() != 1) throw DomainError("mean difference needs scalar samples");
  double sx = 0.0;
  double sy = 0.0;
  for (double v : x.values()) sx += v;
  for (double v : y.values()) sy += v;
  return sx / static_cast<double>(x.size()) - sy / static_cast<double>(y.size());
}

double mmd_unbiased(const PointSet& x, const PointSet& y, double bandwidth) {
  require_min_size(x, 2, "unbiased MMD");
  require_min_size(y, 2, "unbiased MMD");
  require_same_dim(x, y);
  require_bandwidth(bandwidth);
  auto k = [bandwidth](auto a, auto b) { return gaussian_kernel(a, b, bandwidth); };
  const double m = static_cast<double>(x.size());
  const double n = static_cast<double>(y.size());
  return within_sum(x, k) / (m * (m - 1.0)) + within_sum(y, k) / (n * (n - 1.0)) -
         2.0 * cross_sum(x, y, k) / (m * n);
}

double hsic(const PointSet& x, const PointSet& y, double bandwidth_x, double bandwidth_y) {
  if (x.size() != y.size()) {
    throw DomainError("HSIC needs paired samples of equal length (" + std::to_string(x.size()) +
                      " vs " + std::to_string(y.size()) + ")");
  }
  require_min_size(x, 2, "HSIC");
  require_bandwidth(bandwidth_x);
  require_bandwidth(bandwidth_y);
  const std::size_t n = x.size();
  const std::vector<double> kc = double_centered(gram_matrix(x, bandwidth_x), n);
  const std::vector<double> l = gram_matrix(y, bandwidth_y);
  double total = 0.0;
  for (std::size_t i = 0; i < n * n; ++i) total += kc[i] * l[i];
  return total / static_cast<double>(n * n);
}

double energy_distance(const PointSet& x, const PointSet& y) {
  require_min_size(x, 1, "energy distance");
  require_min_size(y, 1, "energy distance");
  require_same_dim(x, y);
  auto d = [](auto a, auto b) { return euclidean_distance(a, b); };
  const double m = static_cast<double>(x.size());
  const double n = static_cast<double>(y.size());
  return 2.0 * cross_sum(x, y, d) / (m * n) - within_sum(x, d) / (m * m) -
         within_sum(y, d) / (n * n);
}

double median_heuristic_bandwidth(const PointSet& pooled) {
  require_min_size(pooled, 2, "median heuristic");
  std::vector<double> distances;
  distances.reserve(pooled.size() * (pooled.size() - 1) / 2);
  for (std::size_t i = 0; i < pooled.size(); ++i) {
    for (std::size_t j = i + 1; j < pooled.size(); ++j) {
      distances.push_back(euclidean_distance(pooled[i], pooled[j]));
    }
  }
  const auto mid = distances.begin() + static_cast<std::ptrdiff_t>((distances.size() - 1) / 2);
  std::nth_element(distances.begin(), mid, distances.end());
  if (!(*mid > 0.0)) {
    if (*std::max_element(distances.begin(), distances.end()) == 0.0) {
      throw DomainError("median heuristic is degenerate: all points are identical");
    }
    throw DomainError("median heuristic is degenerate: median pairwise distance is zero");
  }
  return *mid;
}

}  // namespace mcperm
