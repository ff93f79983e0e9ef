#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace mcperm::cli {

using Cell = std::variant<std::monostate, std::int64_t, double, bool, std::string>;

/// Rectangular result set written as CSV or as JSON rows.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add_row(std::vector<Cell> row);
};

/// Shortest round-trip decimal form, always with '.' as the decimal point.
std::string format_double(double x);

/// Header line plus one line per row; ',' separated, LF terminated. Empty cells for nulls.
std::string to_csv(const Table& table);

/// {"meta": meta, "columns": [...], "rows": [{column: value, ...}, ...]}
nlohmann::ordered_json to_json(const Table& table, const nlohmann::ordered_json& meta);

}  // namespace mcperm::cli
