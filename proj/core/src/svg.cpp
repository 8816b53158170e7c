#include "cguide/svg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace cguide::svg {

namespace {

constexpr double kWidth = 640, kHeight = 400, kLeft = 60, kRight = 20, kTop = 40, kBottom = 50;
const char* const kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Frame {
  double x0, x1, y0, y1;
  double px(double x) const { return kLeft + (x - x0) / (x1 - x0) * (kWidth - kLeft - kRight); }
  double py(double y) const { return kHeight - kBottom - (y - y0) / (y1 - y0) * (kHeight - kTop - kBottom); }
};

void widen(double& lo, double& hi) {
  if (!(hi > lo)) {
    lo -= 0.5;
    hi += 0.5;
  }
}

void open(std::ostringstream& os, const std::string& title) {
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << escape(title)
     << "</text>\n";
}

void axes(std::ostringstream& os, const Frame& f, const std::string& xl, const std::string& yl) {
  os << "<line x1=\"" << kLeft << "\" y1=\"" << kHeight - kBottom << "\" x2=\"" << kWidth - kRight << "\" y2=\""
     << kHeight - kBottom << "\" stroke=\"black\"/>\n"
     << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kHeight - kBottom
     << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = f.x0 + (f.x1 - f.x0) * i / 4.0;
    const double yv = f.y0 + (f.y1 - f.y0) * i / 4.0;
    os << "<text x=\"" << f.px(xv) << "\" y=\"" << kHeight - kBottom + 16 << "\" text-anchor=\"middle\">" << xv
       << "</text>\n"
       << "<text x=\"" << kLeft - 6 << "\" y=\"" << f.py(yv) + 4 << "\" text-anchor=\"end\">" << yv << "</text>\n";
  }
  os << "<text x=\"" << (kLeft + kWidth - kRight) / 2 << "\" y=\"" << kHeight - 12 << "\" text-anchor=\"middle\">"
     << escape(xl) << "</text>\n"
     << "<text x=\"14\" y=\"" << (kTop + kHeight - kBottom) / 2 << "\" transform=\"rotate(-90 14 "
     << (kTop + kHeight - kBottom) / 2 << ")\" text-anchor=\"middle\">" << escape(yl) << "</text>\n";
}

}  // namespace

std::string histogram(const std::vector<double>& values, int bins, const std::string& title) {
  bins = std::max(bins, 1);
  double lo = values.empty() ? 0.0 : *std::min_element(values.begin(), values.end());
  double hi = values.empty() ? 1.0 : *std::max_element(values.begin(), values.end());
  widen(lo, hi);
  std::vector<double> counts(static_cast<size_t>(bins), 0.0);
  for (double v : values) {
    auto b = static_cast<int>((v - lo) / (hi - lo) * bins);
    counts[static_cast<size_t>(std::clamp(b, 0, bins - 1))] += 1.0;
  }
  const double top = std::max(1.0, *std::max_element(counts.begin(), counts.end()));
  const Frame f{lo, hi, 0.0, top};
  std::ostringstream os;
  open(os, title);
  const double w = (hi - lo) / bins;
  for (int b = 0; b < bins; ++b) {
    const double c = counts[static_cast<size_t>(b)];
    os << "<rect x=\"" << f.px(lo + b * w) << "\" y=\"" << f.py(c) << "\" width=\""
       << f.px(lo + (b + 1) * w) - f.px(lo + b * w) << "\" height=\"" << f.py(0) - f.py(c)
       << "\" fill=\"" << kColors[0] << "\" stroke=\"white\" stroke-width=\"0.5\"/>\n";
  }
  axes(os, f, "value", "count");
  os << "</svg>\n";
  return os.str();
}

std::string line_plot(const std::vector<Series>& series, const std::string& title, const std::string& x_label,
                      const std::string& y_label) {
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& s : series) {
    for (double v : s.x) x0 = std::min(x0, v), x1 = std::max(x1, v);
    for (double v : s.y) y0 = std::min(y0, v), y1 = std::max(y1, v);
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  widen(x0, x1);
  widen(y0, y1);
  const Frame f{x0, x1, y0, y1};
  std::ostringstream os;
  open(os, title);
  axes(os, f, x_label, y_label);
  for (size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = kColors[k % 6];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) os << f.px(s.x[i]) << ',' << f.py(s.y[i]) << ' ';
    os << "\"/>\n";
    for (size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i)
      os << "<circle cx=\"" << f.px(s.x[i]) << "\" cy=\"" << f.py(s.y[i]) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    os << "<text x=\"" << kWidth - kRight - 150 << "\" y=\"" << kTop + 14 * (k + 1) << "\" fill=\"" << color << "\">"
       << escape(s.label) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string bar_chart(const std::vector<std::string>& labels, const std::vector<double>& values,
                      const std::string& title) {
  double lo = 0.0, hi = 0.0;
  for (double v : values) lo = std::min(lo, v), hi = std::max(hi, v);
  widen(lo, hi);
  const size_t n = std::max<size_t>(values.size(), 1);
  const Frame f{0.0, static_cast<double>(n), lo, hi};
  std::ostringstream os;
  open(os, title);
  for (size_t i = 0; i < values.size(); ++i) {
    const double v = values[i];
    const double top = f.py(std::max(v, 0.0));
    os << "<rect x=\"" << f.px(i + 0.15) << "\" y=\"" << top << "\" width=\"" << f.px(i + 0.85) - f.px(i + 0.15)
       << "\" height=\"" << std::abs(f.py(v) - f.py(0.0)) << "\" fill=\"" << kColors[i % 6] << "\"/>\n"
       << "<text x=\"" << f.px(i + 0.5) << "\" y=\"" << kHeight - kBottom + 16 << "\" text-anchor=\"middle\">"
       << escape(i < labels.size() ? labels[i] : "") << "</text>\n";
  }
  os << "<line x1=\"" << kLeft << "\" y1=\"" << f.py(0) << "\" x2=\"" << kWidth - kRight << "\" y2=\"" << f.py(0)
     << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double yv = lo + (hi - lo) * i / 4.0;
    os << "<text x=\"" << kLeft - 6 << "\" y=\"" << f.py(yv) + 4 << "\" text-anchor=\"end\">" << yv << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace cguide::svg
