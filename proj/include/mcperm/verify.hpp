#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace mcperm::verify {

enum class Scope { Fast, Full };

/// Outcome of one acceptance check.
struct CheckResult {
  std::string id;
  std::string name;
  std::string target;     // what is being compared against
  std::string tolerance;  // the pinned tolerance or threshold
  double observed = 0.0;  // headline observed quantity (largest deviation, rate, ...)
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
  double time_limit_seconds = 0.0;
};

struct Check {
  std::string id;
  std::string name;
  Scope scope = Scope::Fast;  // Full: only run in the full scope
  double time_limit_seconds = 0.0;
  std::function<CheckResult()> run;
};

/// Every acceptance check, in criterion order.
const std::vector<Check>& acceptance_checks();

/// Runs the checks in `scope` (Full includes Fast). With `only`, just that id.
/// A check that throws is reported as failed with the exception text.
std::vector<CheckResult> run_checks(Scope scope, const std::optional<std::string>& only = {});

/// {"scope": ..., "passed": bool, "checks": [...]} as JSON text.
std::string report_json(const std::vector<CheckResult>& results, Scope scope);

/// One line per check: "PASS 1 ...".
std::string summary_line(const CheckResult& result);

}  // namespace mcperm::verify
