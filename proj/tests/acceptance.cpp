// Acceptance runner: one PASS/FAIL line per criterion.
//   mcperm_acceptance [--scope fast|full] [--criterion ID] [--json PATH]

#include <cstring>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "mcperm/verify.hpp"

int main(int argc, char** argv) {
  using mcperm::verify::Scope;
  Scope scope = Scope::Full;
  std::optional<std::string> only;
  std::optional<std::string> json_path;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (i + 1 < argc && arg == "--scope") {
      const std::string v = argv[++i];
      if (v != "fast" && v != "full") {
        std::cerr << "unknown scope: " << v << "\n";
        return 2;
      }
      scope = v == "fast" ? Scope::Fast : Scope::Full;
    } else if (i + 1 < argc && arg == "--criterion") {
      only = argv[++i];
    } else if (i + 1 < argc && arg == "--json") {
      json_path = argv[++i];
    } else {
      std::cerr << "usage: " << argv[0] << " [--scope fast|full] [--criterion ID] [--json PATH]\n";
      return 2;
    }
  }

  const auto results = mcperm::verify::run_checks(scope, only);
  if (results.empty()) {
    std::cerr << "no check selected\n";
    return 2;
  }
  bool all = true;
  for (const auto& r : results) {
    std::cout << mcperm::verify::summary_line(r) << std::endl;
    all = all && r.passed;
  }
  if (json_path) std::ofstream(*json_path) << mcperm::verify::report_json(results, scope);
  return all ? 0 : 1;
}
