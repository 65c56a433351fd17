#include "entbridge/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace entbridge {

void CsvTable::add_row(std::vector<Cell> row) {
  if (row.size() != header.size())
    throw std::invalid_argument("CsvTable: row has " + std::to_string(row.size()) +
                                " cells, header has " + std::to_string(header.size()));
  rows.push_back(std::move(row));
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string to_csv(const CsvTable& table) {
  std::ostringstream os;
  for (std::size_t k = 0; k < table.header.size(); ++k)
    os << (k ? "," : "") << table.header[k];
  os << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (k) os << ',';
      std::visit(
          [&](const auto& c) {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, double>) os << format_double(c);
            else os << c;
          },
          row[k]);
    }
    os << '\n';
  }
  return os.str();
}

namespace {

void ensure_parent(const std::string& path) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
}

void write_text(const std::string& path, const std::string& text) {
  ensure_parent(path);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace

void write_csv(const std::string& path, const CsvTable& table) { write_text(path, to_csv(table)); }

void write_json(const std::string& path, const nlohmann::json& j) {
  write_text(path, j.dump(2) + "\n");
}

nlohmann::json json_number(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

nlohmann::json json_numbers(const std::vector<double>& v) {
  nlohmann::json out = nlohmann::json::array();
  for (double x : v) out.push_back(json_number(x));
  return out;
}

std::string output_directory(const std::string& fallback) {
  if (const char* env = std::getenv("ENTBRIDGE_OUT"); env && *env) return env;
  return fallback;
}

std::string svg_line_plot(const std::string& title, const std::vector<double>& x,
                          const std::vector<std::pair<std::string, std::vector<double>>>& series,
                          bool log_y) {
  const double W = 640, H = 400, pad = 50;
  auto ty = [&](double v) { return log_y ? std::log10(v) : v; };
  double xmin = std::numeric_limits<double>::infinity(), xmax = -std::numeric_limits<double>::infinity(), ymin = std::numeric_limits<double>::infinity(), ymax = -std::numeric_limits<double>::infinity();
  for (double v : x) xmin = std::min(xmin, v), xmax = std::max(xmax, v);
  for (const auto& [name, ys] : series)
    for (double v : ys)
      if (std::isfinite(ty(v))) ymin = std::min(ymin, ty(v)), ymax = std::max(ymax, ty(v));
  if (!(xmax > xmin)) xmax = xmin + 1;
  if (!(ymax > ymin)) ymax = ymin + 1;
  auto px = [&](double v) { return pad + (v - xmin) / (xmax - xmin) * (W - 2 * pad); };
  auto py = [&](double v) { return H - pad - (ty(v) - ymin) / (ymax - ymin) * (H - 2 * pad); };

  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << pad << "\" y=\"25\" font-family=\"sans-serif\" font-size=\"14\">" << title
     << (log_y ? " (log10 y)" : "") << "</text>\n"
     << "<rect x=\"" << pad << "\" y=\"" << pad << "\" width=\"" << W - 2 * pad << "\" height=\""
     << H - 2 * pad << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& [name, ys] = series[k];
    os << "<polyline fill=\"none\" stroke=\"" << colors[k % 5] << "\" points=\"";
    for (std::size_t i = 0; i < ys.size() && i < x.size(); ++i)
      if (std::isfinite(ty(ys[i]))) os << format_double(px(x[i])) << ',' << format_double(py(ys[i])) << ' ';
    os << "\"/>\n<text x=\"" << W - pad - 150 << "\" y=\"" << pad + 18 * (k + 1)
       << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"" << colors[k % 5] << "\">" << name
       << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace entbridge
