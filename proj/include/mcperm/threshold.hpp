#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "mcperm/level.hpp"

namespace mcperm {

/// Change of the critical count from B-1 to B.
enum class StepType { Jump, Plateau, Undefined };

std::string_view to_string(StepType step);

/// Snapping window used when (B+1)*alpha is only known in floating point.
inline constexpr double kIntegerSnapTolerance = 1e-9;

/// floor((B+1) * alpha), exact for levels that carry a fraction.
std::int64_t scaled_floor(std::int64_t budget, const Level& level);

/// k_B = floor((B+1) alpha) - 1. A value of -1 means the test can never reject at B.
std::int64_t critical_count(std::int64_t budget, const Level& level);

/// Jump iff k_B = k_{B-1} + 1. Requires B >= 2.
StepType step_type(std::int64_t budget, const Level& level);

/// Jump at B followed by a plateau at B+1: the power curve has a strict local maximum at B.
bool is_local_max_index(std::int64_t budget, const Level& level);

/// All local-maximum budgets in [2, max_budget], ascending.
std::vector<std::int64_t> aligned_budgets(const Level& level, std::int64_t max_budget);

/// Smallest local-maximum budget >= min_budget.
std::int64_t next_aligned_budget(const Level& level, std::int64_t min_budget);

/// Whether (B+1) alpha is an integer.
bool is_integer_aligned(std::int64_t budget, const Level& level);

struct ThresholdProfile {
  std::int64_t budget = 0;
  double level = 0.0;
  std::int64_t critical_count = 0;
  StepType step_from_previous = StepType::Undefined;
};

/// Undefined step for B = 1.
ThresholdProfile threshold_profile(std::int64_t budget, const Level& level);

}  // namespace mcperm
