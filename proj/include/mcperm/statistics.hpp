#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mcperm {

/// A list of points of equal dimension, stored row-major.
class PointSet {
 public:
  PointSet() = default;
  PointSet(std::size_t dim, std::vector<double> values);
  /// One-dimensional points.
  static PointSet scalars(std::vector<double> values);
  static PointSet scalars(std::initializer_list<double> values);

  std::size_t size() const { return dim_ == 0 ? 0 : values_.size() / dim_; }
  std::size_t dim() const { return dim_; }
  bool empty() const { return size() == 0; }
  std::span<const double> operator[](std::size_t i) const {
    return {values_.data() + i * dim_, dim_};
  }
  const std::vector<double>& values() const { return values_; }

  /// Points of `this` followed by points of `other`; dimensions must agree.
  PointSet concat(const PointSet& other) const;
  /// Points at the given indices, in that order.
  PointSet select(std::span<const std::size_t> indices) const;

 private:
  std::size_t dim_ = 0;
  std::vector<double> values_;
};

double squared_distance(std::span<const double> a, std::span<const double> b);
double euclidean_distance(std::span<const double> a, std::span<const double> b);
/// exp(-|a - b|^2 / (2 bandwidth^2))
double gaussian_kernel(std::span<const double> a, std::span<const double> b, double bandwidth);

enum class StatisticKind { MeanDifference, MMDUnbiased, HSIC, EnergyDistance };

/// Orientation of the mean-difference statistic. The kernel statistics are
/// already one-directional and ignore this.
enum class Sidedness { OneSided, TwoSided };

struct BandwidthRule {
  enum class Kind { MedianHeuristic, Fixed };
  Kind kind = Kind::MedianHeuristic;
  double value = 0.0;  // used when kind == Fixed

  static BandwidthRule median() { return {}; }
  static BandwidthRule fixed(double sigma);
  /// "median" or a positive number.
  static BandwidthRule parse(std::string_view text);
  std::string to_string() const;
};

struct StatisticSpec {
  StatisticKind kind = StatisticKind::MeanDifference;
  BandwidthRule bandwidth;
  Sidedness sides = Sidedness::OneSided;
};

std::string_view to_string(StatisticKind kind);
/// "mean_diff" | "mmd" | "hsic" | "energy"
StatisticKind parse_statistic_kind(std::string_view text);

/// mean(x) - mean(y) over scalar samples.
double mean_difference(const PointSet& x, const PointSet& y);

/// Unbiased squared MMD with a Gaussian kernel. May be negative.
double mmd_unbiased(const PointSet& x, const PointSet& y, double bandwidth);

/// Biased empirical HSIC n^-2 trace(K H L H) with Gaussian Gram matrices.
double hsic(const PointSet& x, const PointSet& y, double bandwidth_x, double bandwidth_y);

/// V-statistic energy distance with Euclidean distances.
double energy_distance(const PointSet& x, const PointSet& y);

/// Lower-middle element of the sorted distinct-pair distances.
/// Throws DomainError when every pairwise distance is zero.
double median_heuristic_bandwidth(const PointSet& pooled);

}  // namespace mcperm
