#include "mcperm/level.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <numeric>

#include "mcperm/errors.hpp"

namespace mcperm {

namespace {

void require_open_unit(double value, std::string_view what) {
  if (!(value > 0.0 && value < 1.0)) {
    throw DomainError("level must lie in (0,1), got " + std::string(what));
  }
}

std::optional<std::uint64_t> parse_u64(std::string_view s) {
  if (s.empty()) return std::nullopt;
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Exact decimal -> fraction, or nullopt when the digits do not fit in 64 bits.
std::optional<Fraction> decimal_fraction(std::string_view s) {
  int exponent = 0;
  if (auto e = s.find_first_of("eE"); e != std::string_view::npos) {
    std::string_view exp_text = s.substr(e + 1);
    bool negative = false;
    if (!exp_text.empty() && (exp_text.front() == '-' || exp_text.front() == '+')) {
      negative = exp_text.front() == '-';
      exp_text.remove_prefix(1);
    }
    auto mag = parse_u64(exp_text);
    if (!mag || *mag > 30) return std::nullopt;
    exponent = negative ? -static_cast<int>(*mag) : static_cast<int>(*mag);
    s = s.substr(0, e);
  }
  std::string digits;
  int frac_digits = 0;
  bool seen_point = false;
  for (char c : s) {
    if (c == '.') {
      if (seen_point) return std::nullopt;
      seen_point = true;
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      digits.push_back(c);
      if (seen_point) ++frac_digits;
    } else {
      return std::nullopt;
    }
  }
  if (digits.empty()) return std::nullopt;
  const int scale = frac_digits - exponent;
  auto num = parse_u64(digits);
  if (!num) return std::nullopt;
  std::uint64_t n = *num;
  std::uint64_t d = 1;
  for (int i = 0; i < std::abs(scale); ++i) {
    std::uint64_t& target = scale > 0 ? d : n;
    if (target > UINT64_MAX / 10) return std::nullopt;
    target *= 10;
  }
  return Fraction::reduced(n, d);
}

}  // namespace

Fraction Fraction::reduced(std::uint64_t num, std::uint64_t den) {
  if (den == 0) throw DomainError("fraction with zero denominator");
  const std::uint64_t g = std::gcd(num, den);
  return g == 0 ? Fraction{0, 1} : Fraction{num / g, den / g};
}

std::strong_ordering operator<=>(const Fraction& a, const Fraction& b) {
  const auto lhs = static_cast<unsigned __int128>(a.num) * b.den;
  const auto rhs = static_cast<unsigned __int128>(b.num) * a.den;
  return lhs <=> rhs;
}

std::string to_string(const Fraction& f) {
  return std::to_string(f.num) + "/" + std::to_string(f.den);
}

Level::Level(double value) : value_(value) { require_open_unit(value, std::to_string(value)); }

Level Level::ratio(std::uint64_t num, std::uint64_t den) {
  if (den == 0 || num == 0 || num >= den) {
    throw DomainError("level must lie in (0,1), got " + std::to_string(num) + "/" +
                      std::to_string(den));
  }
  const Fraction f = Fraction::reduced(num, den);
  return Level(f.value(), f);
}

Level Level::parse(std::string_view text) {
  const std::string_view s = trim(text);
  if (auto slash = s.find('/'); slash != std::string_view::npos) {
    auto num = parse_u64(trim(s.substr(0, slash)));
    auto den = parse_u64(trim(s.substr(slash + 1)));
    if (!num || !den) throw ValidationError("malformed level ratio '" + std::string(s) + "'");
    return ratio(*num, *den);
  }
  if (auto frac = decimal_fraction(s)) {
    if (frac->num == 0 || frac->num >= frac->den) {
      throw DomainError("level must lie in (0,1), got " + std::string(s));
    }
    return Level(frac->value(), *frac);
  }
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw ValidationError("malformed level '" + std::string(s) + "'");
  }
  return Level(value);
}

std::string Level::to_string() const {
  if (exact_) return mcperm::to_string(*exact_);
  char buf[32];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value_);
  return std::string(buf, end);
}

}  // namespace mcperm
