#include "ctlqr/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "ctlqr/csv.hpp"

namespace ctlqr::svg {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 420.0;
constexpr double kLeft = 70.0, kRight = 480.0;   // plot area x range
constexpr double kTop = 45.0, kBottom = 370.0;   // plot area y range

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string fmt(const char* pattern, double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), pattern, v);
  return buf;
}

struct Axis {
  double lo = 0.0, hi = 1.0;        // in plot coordinates (log10 when logarithmic)
  bool logarithmic = false;
  std::vector<double> ticks;        // tick positions in plot coordinates

  double to_unit(double value) const {
    const double v = logarithmic ? std::log10(value) : value;
    return (v - lo) / (hi - lo);
  }
  double tick_value(double t) const { return logarithmic ? std::pow(10.0, t) : t; }
};

Axis make_axis(double lo, double hi, bool logarithmic) {
  Axis axis;
  axis.logarithmic = logarithmic;
  if (logarithmic) {
    if (!(lo > 0.0)) throw std::invalid_argument("svg: log axis needs positive data");
    lo = std::log10(lo);
    hi = std::log10(hi);
  }
  if (hi <= lo) {
    lo -= 0.5;
    hi += 0.5;
  }
  axis.lo = lo;
  axis.hi = hi;
  if (logarithmic) {
    for (double t = std::ceil(lo - 1e-9); t <= hi + 1e-9; t += 1.0) axis.ticks.push_back(t);
    if (axis.ticks.size() < 2) axis.ticks = {lo, hi};
  } else {
    const double raw = (hi - lo) / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    const double frac = raw / mag;
    const double step = (frac <= 1.0 ? 1.0 : frac <= 2.0 ? 2.0 : frac <= 5.0 ? 5.0 : 10.0) * mag;
    for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * step; t += step) {
      axis.ticks.push_back(t);
    }
  }
  return axis;
}

}  // namespace

std::string render_lineplot(const std::vector<Series>& series, const std::string& title,
                            const std::string& x_label, const std::string& y_label, bool log_x,
                            bool log_y) {
  if (series.empty()) throw std::invalid_argument("svg: need at least one series");
  for (const auto& s : series) {
    if (s.x.size() < 2 || s.x.size() != s.y.size()) {
      throw std::invalid_argument("svg: every series needs >= 2 points with matching sizes");
    }
  }

  double x_min = series[0].x[0], x_max = x_min, y_min = series[0].y[0], y_max = y_min;
  for (const auto& s : series) {
    x_min = std::min(x_min, *std::min_element(s.x.begin(), s.x.end()));
    x_max = std::max(x_max, *std::max_element(s.x.begin(), s.x.end()));
    y_min = std::min(y_min, *std::min_element(s.y.begin(), s.y.end()));
    y_max = std::max(y_max, *std::max_element(s.y.begin(), s.y.end()));
  }
  const Axis ax = make_axis(x_min, x_max, log_x);
  const Axis ay = make_axis(y_min, y_max, log_y);

  const auto px = [&](double v) { return kLeft + ax.to_unit(v) * (kRight - kLeft); };
  const auto py = [&](double v) { return kBottom - ay.to_unit(v) * (kBottom - kTop); };

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt("%.0f", kWidth) +
         "\" height=\"" + fmt("%.0f", kHeight) + "\" viewBox=\"0 0 " + fmt("%.0f", kWidth) + " " +
         fmt("%.0f", kHeight) + "\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out += "<text x=\"" + fmt("%.0f", (kLeft + kRight) / 2) +
         "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">" +
         title + "</text>\n";

  for (double t : ax.ticks) {
    const double x = kLeft + (t - ax.lo) / (ax.hi - ax.lo) * (kRight - kLeft);
    out += "<line x1=\"" + fmt("%.2f", x) + "\" y1=\"" + fmt("%.2f", kBottom) + "\" x2=\"" +
           fmt("%.2f", x) + "\" y2=\"" + fmt("%.2f", kBottom + 5) + "\" stroke=\"black\"/>\n";
    out += "<text x=\"" + fmt("%.2f", x) + "\" y=\"" + fmt("%.2f", kBottom + 20) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" +
           fmt("%g", ax.tick_value(t)) + "</text>\n";
  }
  for (double t : ay.ticks) {
    const double y = kBottom - (t - ay.lo) / (ay.hi - ay.lo) * (kBottom - kTop);
    out += "<line x1=\"" + fmt("%.2f", kLeft - 5) + "\" y1=\"" + fmt("%.2f", y) + "\" x2=\"" +
           fmt("%.2f", kLeft) + "\" y2=\"" + fmt("%.2f", y) + "\" stroke=\"black\"/>\n";
    out += "<text x=\"" + fmt("%.2f", kLeft - 9) + "\" y=\"" + fmt("%.2f", y + 4) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" +
           fmt("%g", ay.tick_value(t)) + "</text>\n";
  }
  out += "<line x1=\"" + fmt("%.0f", kLeft) + "\" y1=\"" + fmt("%.0f", kBottom) + "\" x2=\"" +
         fmt("%.0f", kRight) + "\" y2=\"" + fmt("%.0f", kBottom) + "\" stroke=\"black\"/>\n";
  out += "<line x1=\"" + fmt("%.0f", kLeft) + "\" y1=\"" + fmt("%.0f", kTop) + "\" x2=\"" +
         fmt("%.0f", kLeft) + "\" y2=\"" + fmt("%.0f", kBottom) + "\" stroke=\"black\"/>\n";
  out += "<text x=\"" + fmt("%.0f", (kLeft + kRight) / 2) + "\" y=\"" +
         fmt("%.0f", kBottom + 40) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" + x_label +
         "</text>\n";
  out += "<text x=\"18\" y=\"" + fmt("%.0f", (kTop + kBottom) / 2) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" transform=\"rotate(-90 18 " +
         fmt("%.0f", (kTop + kBottom) / 2) + ")\">" + y_label + "</text>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kPalette[s % (sizeof(kPalette) / sizeof(kPalette[0]))];
    std::string points;
    for (std::size_t i = 0; i < series[s].x.size(); ++i) {
      if (i) points += ' ';
      points += fmt("%.2f", px(series[s].x[i])) + "," + fmt("%.2f", py(series[s].y[i]));
    }
    out += std::string("<polyline fill=\"none\" stroke=\"") + color +
           "\" stroke-width=\"1.8\" points=\"" + points + "\"/>\n";
    const double ly = kTop + 16.0 * static_cast<double>(s);
    out += std::string("<line x1=\"") + fmt("%.0f", kRight + 12) + "\" y1=\"" + fmt("%.2f", ly) +
           "\" x2=\"" + fmt("%.0f", kRight + 34) + "\" y2=\"" + fmt("%.2f", ly) + "\" stroke=\"" +
           color + "\" stroke-width=\"1.8\"/>\n";
    out += "<text x=\"" + fmt("%.0f", kRight + 40) + "\" y=\"" + fmt("%.2f", ly + 4) +
           "\" font-family=\"sans-serif\" font-size=\"11\">" + series[s].label + "</text>\n";
  }
  out += "</svg>\n";
  return out;
}

void write_lineplot(const std::vector<Series>& series, const std::string& title,
                    const std::string& x_label, const std::string& y_label,
                    const std::filesystem::path& path, bool log_x, bool log_y) {
  csv::write_file(path, render_lineplot(series, title, x_label, y_label, log_x, log_y));
}

}  // namespace ctlqr::svg
