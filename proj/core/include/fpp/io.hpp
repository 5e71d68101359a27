#pragma once
#include <string>
#include <vector>

namespace fpp {

struct Verdict {
  std::string check;
  double statistic = 0;
  double threshold = 0;
  bool pass = false;
};

// {"verdicts":[{"check":...,"statistic":...,"threshold":...,"pass":...},...],
//  "all_pass": bool}
std::string verdicts_json(const std::vector<Verdict>& vs);
bool all_pass(const std::vector<Verdict>& vs);

// numbers rendered with shortest round-trip formatting; deterministic output
std::string csv_string(const std::vector<std::string>& header,
                       const std::vector<std::vector<double>>& rows);

void write_text_file(const std::string& path, const std::string& content);

// minimal line plot: one polyline per series, auto-scaled axes
struct PlotSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;
};
std::string svg_line_plot(const std::vector<PlotSeries>& series, const std::string& title,
                          int width = 900, int height = 540);

std::string format_double(double v);  // shortest exact round-trip

}  // namespace fpp
