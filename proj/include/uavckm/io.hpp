#pragma once

// Small file helpers: round-trip number formatting, whole-file read/write,
// JSON documents, and minimal SVG renderings.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

namespace uavckm {

/// Shortest decimal representation that parses back to the same double.
inline std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

inline bool parse_double(std::string_view text, double& out) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) {
    text.remove_suffix(1);
  }
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  const auto res = std::from_chars(text.data(), text.data() + text.size(), out);
  return res.ec == std::errc{} && res.ptr == text.data() + text.size();
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::string& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

inline nlohmann::json read_json_file(const std::string& path) {
  try {
    return nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

inline void write_json_file(const std::string& path, const nlohmann::json& doc) {
  write_text_file(path, doc.dump(2) + "\n");
}

/// Throws if any number in the document is NaN or infinite.
inline void require_finite(const nlohmann::json& doc, const std::string& what) {
  if (doc.is_number_float() && !std::isfinite(doc.get<double>())) {
    throw std::runtime_error(what + ": non-finite metric");
  }
  if (doc.is_structured()) {
    for (const auto& item : doc) require_finite(item, what);
  }
}

struct SvgSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  bool scatter{false};
};

/// Minimal line / scatter plot, enough to eyeball a curve without tooling.
inline std::string render_svg(const std::string& title, const std::vector<SvgSeries>& series,
                              double width = 640.0, double height = 400.0) {
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& s : series) {
    for (double v : s.x) xmin = std::min(xmin, v), xmax = std::max(xmax, v);
    for (double v : s.y) ymin = std::min(ymin, v), ymax = std::max(ymax, v);
  }
  if (!std::isfinite(xmin)) xmin = 0.0, xmax = 1.0, ymin = 0.0, ymax = 1.0;
  if (xmax == xmin) xmax = xmin + 1.0;
  if (ymax == ymin) ymax = ymin + 1.0;
  const double margin = 50.0;
  auto px = [&](double v) { return margin + (v - xmin) / (xmax - xmin) * (width - 2 * margin); };
  auto py = [&](double v) { return height - margin - (v - ymin) / (ymax - ymin) * (height - 2 * margin); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << title
      << "</text>\n"
      << "<rect x=\"" << margin << "\" y=\"" << margin << "\" width=\"" << width - 2 * margin
      << "\" height=\"" << height - 2 * margin << "\" fill=\"none\" stroke=\"black\"/>\n"
      << "<text x=\"" << margin << "\" y=\"" << height - margin + 15 << "\" font-size=\"10\">"
      << format_double(xmin) << "</text>\n"
      << "<text x=\"" << width - margin << "\" y=\"" << height - margin + 15
      << "\" font-size=\"10\" text-anchor=\"end\">" << format_double(xmax) << "</text>\n"
      << "<text x=\"" << margin - 4 << "\" y=\"" << height - margin << "\" font-size=\"10\" text-anchor=\"end\">"
      << format_double(ymin) << "</text>\n"
      << "<text x=\"" << margin - 4 << "\" y=\"" << margin + 10 << "\" font-size=\"10\" text-anchor=\"end\">"
      << format_double(ymax) << "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = kColors[k % 6];
    const std::size_t n = std::min(s.x.size(), s.y.size());
    if (s.scatter) {
      for (std::size_t i = 0; i < n; ++i) {
        svg << "<circle cx=\"" << px(s.x[i]) << "\" cy=\"" << py(s.y[i]) << "\" r=\"1.5\" fill=\"" << color
            << "\"/>\n";
      }
    } else if (n > 0) {
      svg << "<polyline fill=\"none\" stroke=\"" << color << "\" points=\"";
      for (std::size_t i = 0; i < n; ++i) svg << px(s.x[i]) << "," << py(s.y[i]) << " ";
      svg << "\"/>\n";
    }
    svg << "<text x=\"" << width - margin - 4 << "\" y=\"" << margin + 14 + 14 * static_cast<double>(k)
        << "\" font-size=\"11\" text-anchor=\"end\" fill=\"" << color << "\">" << s.label << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace uavckm
