#include "fpp/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace fpp {

std::string format_double(double v) {
  if (!std::isfinite(v)) return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
  if (v == static_cast<long long>(v) && std::fabs(v) < 1e15) {
    return std::to_string(static_cast<long long>(v));
  }
  // shortest representation that round-trips
  for (int prec = 1; prec <= 17; ++prec) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    if (std::stod(buf) == v) return buf;
  }
  return "0";
}

bool all_pass(const std::vector<Verdict>& vs) {
  return std::all_of(vs.begin(), vs.end(), [](const Verdict& v) { return v.pass; });
}

std::string verdicts_json(const std::vector<Verdict>& vs) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& v : vs)
    arr.push_back({{"check", v.check},
                   {"statistic", v.statistic},
                   {"threshold", v.threshold},
                   {"pass", v.pass}});
  nlohmann::json doc{{"verdicts", arr}, {"all_pass", all_pass(vs)}};
  return doc.dump(2) + "\n";
}

std::string csv_string(const std::vector<std::string>& header,
                       const std::vector<std::vector<double>>& rows) {
  std::ostringstream os;
  for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
  os << "\n";
  for (const auto& row : rows) {
    if (row.size() != header.size()) throw std::invalid_argument("csv: ragged row");
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << format_double(row[i]);
    os << "\n";
  }
  return os.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << content;
}

std::string svg_line_plot(const std::vector<PlotSeries>& series, const std::string& title,
                          int width, int height) {
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& s : series)
    for (auto [x, y] : s.points) {
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  if (!(xmin < xmax)) xmax = xmin + 1;
  if (!(ymin < ymax)) ymax = ymin + 1;
  const double mL = 60, mR = 20, mT = 40, mB = 40;
  auto X = [&](double x) { return mL + (x - xmin) / (xmax - xmin) * (width - mL - mR); };
  auto Y = [&](double y) { return height - mB - (y - ymin) / (ymax - ymin) * (height - mT - mB); };
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                  "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\""
     << " font-size=\"15\">" << title << "</text>\n";
  // axes
  os << "<line x1=\"" << mL << "\" y1=\"" << height - mB << "\" x2=\"" << width - mR << "\" y2=\""
     << height - mB << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << mL << "\" y1=\"" << mT << "\" x2=\"" << mL << "\" y2=\"" << height - mB
     << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    double x = xmin + (xmax - xmin) * i / 4, y = ymin + (ymax - ymin) * i / 4;
    os << "<text x=\"" << X(x) << "\" y=\"" << height - mB + 16
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
       << format_double(x) << "</text>\n";
    os << "<text x=\"" << mL - 6 << "\" y=\"" << Y(y) + 4
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << format_double(y)
       << "</text>\n";
  }
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* col = palette[s % 8];
    os << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"1.2\" points=\"";
    for (auto [x, y] : series[s].points) os << X(x) << "," << Y(y) << " ";
    os << "\"/>\n";
    if (!series[s].label.empty())
      os << "<text x=\"" << width - mR - 8 << "\" y=\"" << mT + 16 * (s + 1)
         << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\" fill=\"" << col
         << "\">" << series[s].label << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace fpp
