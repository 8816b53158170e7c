#pragma once

#include <string>
#include <vector>

namespace cguide::svg {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

/// Minimal standalone SVG charts for run artifacts.
std::string histogram(const std::vector<double>& values, int bins, const std::string& title);
std::string line_plot(const std::vector<Series>& series, const std::string& title, const std::string& x_label,
                      const std::string& y_label);
std::string bar_chart(const std::vector<std::string>& labels, const std::vector<double>& values,
                      const std::string& title);

}  // namespace cguide::svg
