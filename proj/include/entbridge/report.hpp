#pragma once

#include <json.hpp>

#include <string>
#include <variant>
#include <vector>

namespace entbridge {

using Cell = std::variant<double, long, std::string>;

/// Tabular series written as comma-separated values with a header row.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<Cell>> rows;

  void add_row(std::vector<Cell> row);
};

/// 17 significant digits, "nan"/"inf"/"-inf" for non-finite values.
std::string format_double(double v);

std::string to_csv(const CsvTable& table);
void write_csv(const std::string& path, const CsvTable& table);
void write_json(const std::string& path, const nlohmann::json& j);

/// JSON number, or null when not finite.
nlohmann::json json_number(double v);
nlohmann::json json_numbers(const std::vector<double>& v);

/// ENTBRIDGE_OUT when set, the fallback otherwise.
std::string output_directory(const std::string& fallback);

/// Self-contained SVG line plot of one or more series over a shared x axis.
std::string svg_line_plot(const std::string& title, const std::vector<double>& x,
                          const std::vector<std::pair<std::string, std::vector<double>>>& series,
                          bool log_y = false);

}  // namespace entbridge
