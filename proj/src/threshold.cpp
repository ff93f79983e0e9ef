#include "mcperm/threshold.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mcperm/errors.hpp"

namespace mcperm {

namespace {

void require_budget(std::int64_t budget, std::int64_t minimum) {
  if (budget < minimum) {
    throw DomainError("budget must be >= " + std::to_string(minimum) + ", got " +
                      std::to_string(budget));
  }
}

// floor(m * alpha) for any m >= 0.
std::int64_t floor_multiple(std::int64_t m, const Level& level) {
  if (const auto& f = level.exact()) {
    const auto prod = static_cast<unsigned __int128>(m) * f->num;
    return static_cast<std::int64_t>(prod / f->den);
  }
  const double x = static_cast<double>(m) * level.value();
  const double r = std::nearbyint(x);
  if (std::fabs(x - r) <= kIntegerSnapTolerance) return static_cast<std::int64_t>(r);
  return static_cast<std::int64_t>(std::floor(x));
}

// frac((B+1) alpha) < min(alpha, 1 - alpha)
bool in_local_max_set(std::int64_t budget, const Level& level) {
  const std::int64_t m = budget + 1;
  if (const auto& f = level.exact()) {
    const auto prod = static_cast<unsigned __int128>(m) * f->num;
    const auto rem = static_cast<std::uint64_t>(prod % f->den);
    return rem < std::min(f->num, f->den - f->num);
  }
  const double alpha = level.value();
  const double frac = static_cast<double>(m) * alpha - static_cast<double>(floor_multiple(m, level));
  // Values within the snap tolerance of the bound count as equal (not strictly below).
  return std::max(frac, 0.0) < std::min(alpha, 1.0 - alpha) - kIntegerSnapTolerance;
}

// Smallest m with floor(m * alpha) >= j, consistent with floor_multiple.
std::int64_t smallest_multiple_reaching(std::int64_t j, const Level& level) {
  std::int64_t m = 0;
  if (const auto& f = level.exact()) {
    const auto num = static_cast<unsigned __int128>(j) * f->den;
    m = static_cast<std::int64_t>((num + f->num - 1) / f->num);
  } else {
    m = static_cast<std::int64_t>(std::ceil(static_cast<double>(j) / level.value()));
  }
  while (m > 0 && floor_multiple(m - 1, level) >= j) --m;
  while (floor_multiple(m, level) < j) ++m;
  return m;
}

}  // namespace

std::string_view to_string(StepType step) {
  switch (step) {
    case StepType::Jump:
      return "jump";
    case StepType::Plateau:
      return "plateau";
    case StepType::Undefined:
      break;
  }
  return "undefined";
}

std::int64_t scaled_floor(std::int64_t budget, const Level& level) {
  require_budget(budget, 1);
  return floor_multiple(budget + 1, level);
}

std::int64_t critical_count(std::int64_t budget, const Level& level) {
  return scaled_floor(budget, level) - 1;
}

StepType step_type(std::int64_t budget, const Level& level) {
  require_budget(budget, 2);
  return critical_count(budget, level) == critical_count(budget - 1, level) + 1
             ? StepType::Jump
             : StepType::Plateau;
}

bool is_local_max_index(std::int64_t budget, const Level& level) {
  require_budget(budget, 1);
  if (budget == 1) return false;  // no step into B = 1
  return step_type(budget, level) == StepType::Jump &&
         step_type(budget + 1, level) == StepType::Plateau;
}

bool is_integer_aligned(std::int64_t budget, const Level& level) {
  require_budget(budget, 1);
  const std::int64_t m = budget + 1;
  if (const auto& f = level.exact()) {
    return (static_cast<unsigned __int128>(m) * f->num) % f->den == 0;
  }
  const double x = static_cast<double>(m) * level.value();
  return std::fabs(x - std::nearbyint(x)) <= kIntegerSnapTolerance;
}

std::vector<std::int64_t> aligned_budgets(const Level& level, std::int64_t max_budget) {
  require_budget(max_budget, 1);
  std::vector<std::int64_t> out;
  if (level.value() <= 0.5) {
    // { ceil(j / alpha) - 1 : j >= 1 }
    for (std::int64_t j = 1;; ++j) {
      const std::int64_t b = smallest_multiple_reaching(j, level) - 1;
      if (b > max_budget) break;
      if (b >= 2) out.push_back(b);
    }
    return out;
  }
  for (std::int64_t b = 2; b <= max_budget; ++b) {
    if (in_local_max_set(b, level)) out.push_back(b);
  }
  return out;
}

std::int64_t next_aligned_budget(const Level& level, std::int64_t min_budget) {
  require_budget(min_budget, 1);
  if (level.value() <= 0.5) {
    std::int64_t j = std::max<std::int64_t>(1, floor_multiple(std::max<std::int64_t>(min_budget, 2), level));
    for (;; ++j) {
      const std::int64_t b = smallest_multiple_reaching(j, level) - 1;
      if (b >= min_budget && b >= 2) return b;
    }
  }
  for (std::int64_t b = std::max<std::int64_t>(min_budget, 2);; ++b) {
    if (in_local_max_set(b, level)) return b;
  }
}

ThresholdProfile threshold_profile(std::int64_t budget, const Level& level) {
  ThresholdProfile profile;
  profile.budget = budget;
  profile.level = level.value();
  profile.critical_count = critical_count(budget, level);
  profile.step_from_previous = budget >= 2 ? step_type(budget, level) : StepType::Undefined;
  return profile;
}

}  // namespace mcperm
