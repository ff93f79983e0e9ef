#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "mcperm/errors.hpp"
#include "mcperm/rng.hpp"
#include "mcperm/statistics.hpp"

using namespace mcperm;
using doctest::Approx;

namespace {

PointSet random_points(std::uint64_t seed, std::size_t n, std::size_t dim) {
  Rng rng(seed);
  std::vector<double> v(n * dim);
  for (double& x : v) x = rng.normal();
  return PointSet(dim, std::move(v));
}

PointSet shuffled(const PointSet& s, std::uint64_t seed) {
  std::vector<std::size_t> idx(s.size());
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
  return s.select(idx);
}

}  // namespace

TEST_SUITE("statistics") {
  TEST_CASE("PointSet basics") {
    const PointSet p(2, {1, 2, 3, 4, 5, 6});
    CHECK(p.size() == 3);
    CHECK(p.dim() == 2);
    CHECK(p[1][0] == 3.0);
    CHECK(p[2][1] == 6.0);
    const PointSet q = p.concat(PointSet(2, {7, 8}));
    CHECK(q.size() == 4);
    CHECK(q[3][1] == 8.0);
    const std::vector<std::size_t> pick{2, 0};
    const PointSet r = p.select(pick);
    CHECK(r[0][0] == 5.0);
    CHECK(r[1][1] == 2.0);
    CHECK_THROWS_AS(PointSet(2, {1, 2, 3}), ValidationError);
    CHECK_THROWS_AS(p.concat(PointSet::scalars({1.0})), DomainError);
  }

  TEST_CASE("kernel and distances") {
    const std::vector<double> a{0, 0};
    const std::vector<double> b{3, 4};
    CHECK(squared_distance(a, b) == 25.0);
    CHECK(euclidean_distance(a, b) == 5.0);
    CHECK(gaussian_kernel(a, b, 5.0) == Approx(std::exp(-0.5)).epsilon(1e-15));
    CHECK(gaussian_kernel(a, a, 0.1) == 1.0);
  }

  TEST_CASE("mean_difference examples") {
    CHECK(mean_difference(PointSet::scalars({1, 2, 3}), PointSet::scalars({0, 1, 2})) == 1.0);
    CHECK(mean_difference(PointSet::scalars({1, 5}), PointSet::scalars({1, 5})) == 0.0);
    CHECK(mean_difference(PointSet::scalars({2}), PointSet::scalars({0})) == 2.0);
    CHECK_THROWS_AS(mean_difference(PointSet::scalars({}), PointSet::scalars({1})), DomainError);
    CHECK_THROWS_AS(mean_difference(PointSet(2, {1, 2}), PointSet(2, {1, 2})), DomainError);
  }

  TEST_CASE("mmd_unbiased examples") {
    CHECK(mmd_unbiased(PointSet::scalars({3, 3}), PointSet::scalars({3, 3, 3}), 0.7) == 0.0);
    // x = {0, 0}, y = {0, 1}, sigma = 1: 1 + e^{-1/2} - 2 (2 + 2 e^{-1/2}) / 4
    const double e = std::exp(-0.5);
    const double hand = 1.0 + e - 2.0 * (2.0 + 2.0 * e) / 4.0;
    const double v = mmd_unbiased(PointSet::scalars({0, 0}), PointSet::scalars({0, 1}), 1.0);
    CHECK(v == Approx(hand).epsilon(1e-15));
    CHECK(std::abs(v) <= 1e-15);
    // a non-degenerate hand value: x = {0, 1}, y = {2, 4}, sigma = 1
    const double hand2 = std::exp(-0.5) + std::exp(-2.0) -
                         2.0 * (std::exp(-2.0) + std::exp(-8.0) + std::exp(-0.5) + std::exp(-4.5)) / 4.0;
    CHECK(mmd_unbiased(PointSet::scalars({0, 1}), PointSet::scalars({2, 4}), 1.0) ==
          Approx(hand2).epsilon(1e-14));
    CHECK_THROWS_AS(mmd_unbiased(PointSet::scalars({0}), PointSet::scalars({0, 1}), 1.0), DomainError);
    CHECK_THROWS_AS(mmd_unbiased(PointSet::scalars({0, 2}), PointSet::scalars({0, 1}), 0.0), DomainError);
  }

  TEST_CASE("hsic examples") {
    const auto x = PointSet::scalars({0, 1, 2});
    const auto y = PointSet::scalars({0, 1, 0});
    CHECK(hsic(x, y, 1.0, 1.0) == Approx(0.013780416360990087).epsilon(1e-13));
    CHECK(std::abs(hsic(x, PointSet::scalars({4, 4, 4}), 1.0, 1.0)) <= 1e-12);
    const std::vector<std::size_t> perm{2, 0, 1};
    CHECK(hsic(x.select(perm), y.select(perm), 1.0, 1.0) == Approx(hsic(x, y, 1.0, 1.0)).epsilon(1e-13));
    CHECK_THROWS_AS(hsic(x, PointSet::scalars({0, 1}), 1.0, 1.0), DomainError);
  }

  TEST_CASE("energy_distance examples") {
    CHECK(energy_distance(PointSet::scalars({1, 4, 2}), PointSet::scalars({4, 2, 1})) == Approx(0.0).epsilon(1e-15));
    CHECK(energy_distance(PointSet::scalars({0}), PointSet::scalars({1})) == 2.0);
    CHECK(energy_distance(PointSet::scalars({0, 2}), PointSet::scalars({1})) == 1.0);
    CHECK_THROWS_AS(energy_distance(PointSet::scalars({}), PointSet::scalars({1})), DomainError);
    CHECK_THROWS_AS(energy_distance(PointSet(2, {0, 0}), PointSet::scalars({1})), DomainError);
  }

  TEST_CASE("median_heuristic_bandwidth examples") {
    CHECK(median_heuristic_bandwidth(PointSet::scalars({0, 1})) == 1.0);
    CHECK(median_heuristic_bandwidth(PointSet::scalars({0, 1, 2})) == 1.0);
    // even count: lower-middle of {1, 1, 2, 2, 3, 3}? points {0,1,2,3} give {1,2,3,1,2,1}
    CHECK(median_heuristic_bandwidth(PointSet::scalars({0, 1, 2, 3})) == 1.0);
    CHECK_THROWS_AS(median_heuristic_bandwidth(PointSet::scalars({5, 5, 5})), DomainError);
    CHECK_THROWS_AS(median_heuristic_bandwidth(PointSet::scalars({5})), DomainError);

    const PointSet pts = random_points(11, 50, 3);
    std::vector<double> d;
    for (std::size_t i = 0; i < 50; ++i) {
      for (std::size_t j = i + 1; j < 50; ++j) d.push_back(euclidean_distance(pts[i], pts[j]));
    }
    std::sort(d.begin(), d.end());
    CHECK(median_heuristic_bandwidth(pts) == d[(d.size() - 1) / 2]);
  }

  TEST_CASE("bandwidth rule and statistic names") {
    CHECK(BandwidthRule::parse("median").kind == BandwidthRule::Kind::MedianHeuristic);
    CHECK(BandwidthRule::parse("0.5").value == 0.5);
    CHECK(BandwidthRule::parse("0.5").to_string() == "0.5");
    CHECK_THROWS_AS(BandwidthRule::parse("-1"), ValidationError);
    CHECK_THROWS_AS(BandwidthRule::parse("wide"), ValidationError);
    CHECK_THROWS_AS(BandwidthRule::fixed(0.0), DomainError);
    for (auto k : {StatisticKind::MeanDifference, StatisticKind::MMDUnbiased, StatisticKind::HSIC,
                   StatisticKind::EnergyDistance}) {
      CHECK(parse_statistic_kind(to_string(k)) == k);
    }
    CHECK_THROWS_AS(parse_statistic_kind("t_test"), ValidationError);
  }

  TEST_CASE("property: within-sample order invariance") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const PointSet x = random_points(seed, 12, 2);
      const PointSet y = random_points(seed + 100, 9, 2);
      const PointSet xs = shuffled(x, seed + 7);
      const PointSet ys = shuffled(y, seed + 9);
      CHECK(mmd_unbiased(xs, ys, 1.3) == Approx(mmd_unbiased(x, y, 1.3)).epsilon(1e-12));
      CHECK(energy_distance(xs, ys) == Approx(energy_distance(x, y)).epsilon(1e-12));
      const PointSet a = random_points(seed + 200, 10, 1);
      const PointSet b = random_points(seed + 300, 14, 1);
      CHECK(mean_difference(shuffled(a, 3), shuffled(b, 4)) == Approx(mean_difference(a, b)).epsilon(1e-12));
    }
  }

  TEST_CASE("property: symmetry and sign") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const PointSet x = random_points(seed, 10, 3);
      const PointSet y = random_points(seed + 50, 10, 3);
      CHECK(mmd_unbiased(x, y, 0.9) == Approx(mmd_unbiased(y, x, 0.9)).epsilon(1e-12));
      CHECK(energy_distance(x, y) == Approx(energy_distance(y, x)).epsilon(1e-12));
      CHECK(hsic(x, y, 0.8, 1.7) == Approx(hsic(y, x, 1.7, 0.8)).epsilon(1e-12));
      CHECK(hsic(x, y, 0.8, 1.7) >= -1e-12);
      CHECK(energy_distance(x, y) >= -1e-12);
      CHECK(std::isfinite(mmd_unbiased(x, y, 0.9)));
    }
  }
}
