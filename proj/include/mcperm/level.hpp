#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace mcperm {

/// Non-negative rational number kept in lowest terms.
struct Fraction {
  std::uint64_t num = 0;
  std::uint64_t den = 1;

  static Fraction reduced(std::uint64_t num, std::uint64_t den);
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }

  friend bool operator==(const Fraction& a, const Fraction& b) {
    return a.num == b.num && a.den == b.den;
  }
  friend std::strong_ordering operator<=>(const Fraction& a, const Fraction& b);
};

std::string to_string(const Fraction& f);

/// Significance level in (0,1).
///
/// A level built from a ratio ("1/20") or from a finite decimal string ("0.05")
/// remembers the exact fraction, and threshold arithmetic then runs in integers.
/// A level built from a bare double only carries the floating-point value.
class Level {
 public:
  explicit Level(double value);
  static Level ratio(std::uint64_t num, std::uint64_t den);
  /// Accepts "p/q", decimals ("0.05", ".01") and scientific notation ("5e-2").
  static Level parse(std::string_view text);

  double value() const { return value_; }
  const std::optional<Fraction>& exact() const { return exact_; }
  bool is_exact() const { return exact_.has_value(); }

  std::string to_string() const;

 private:
  Level(double value, std::optional<Fraction> exact) : value_(value), exact_(exact) {}

  double value_;
  std::optional<Fraction> exact_;
};

}  // namespace mcperm
