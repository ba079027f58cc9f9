#include "scgbin/cli/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

namespace scgbin::cli {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 420.0;
constexpr double kLeft = 64.0;
constexpr double kRight = 150.0;
constexpr double kTop = 24.0;
constexpr double kBottom = 52.0;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

const char* colour(BinMethod m) { return m == BinMethod::EqualWidth ? "#1f77b4" : "#d62728"; }

}  // namespace

std::string trend_svg(std::span<const SummaryRow> rows, const ExperimentOptions& options) {
  std::vector<Index> bins = options.bin_counts;
  std::sort(bins.begin(), bins.end());
  bins.erase(std::unique(bins.begin(), bins.end()), bins.end());
  const double x_lo = std::log2(static_cast<double>(bins.front()));
  const double x_hi = std::max(x_lo + 1.0, std::log2(static_cast<double>(bins.back())));

  double y_lo = 1.0;
  for (const auto& r : rows) y_lo = std::min({y_lo, r.accuracy_mean, r.f1_mean});
  y_lo = std::max(0.0, std::floor(y_lo * 10.0 - 0.5) / 10.0);
  const double y_hi = 1.0;

  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  auto px = [&](Index b) { return kLeft + (std::log2(static_cast<double>(b)) - x_lo) / (x_hi - x_lo) * pw; };
  auto py = [&](double v) { return kTop + (y_hi - v) / (y_hi - y_lo) * ph; };

  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" +
                  num(kHeight) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<g stroke=\"#ccc\" stroke-width=\"1\">\n";
  for (double v = y_lo; v <= y_hi + 1e-9; v += 0.1) {
    s += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(py(v)) + "\" x2=\"" + num(kLeft + pw) + "\" y2=\"" +
         num(py(v)) + "\"/>\n";
  }
  s += "</g>\n";
  s += "<rect x=\"" + num(kLeft) + "\" y=\"" + num(kTop) + "\" width=\"" + num(pw) + "\" height=\"" + num(ph) +
       "\" fill=\"none\" stroke=\"black\"/>\n";
  for (double v = y_lo; v <= y_hi + 1e-9; v += 0.1) {
    s += "<text x=\"" + num(kLeft - 8) + "\" y=\"" + num(py(v) + 4) + "\" text-anchor=\"end\">" + num(v) +
         "</text>\n";
  }
  for (Index b : bins) {
    s += "<text x=\"" + num(px(b)) + "\" y=\"" + num(kTop + ph + 18) + "\" text-anchor=\"middle\">" +
         std::to_string(b) + "</text>\n";
  }
  s += "<text x=\"" + num(kLeft + pw / 2) + "\" y=\"" + num(kHeight - 12) +
       "\" text-anchor=\"middle\">Number of bins</text>\n";

  double legend_y = kTop + 10;
  for (BinMethod m : options.methods) {
    for (int metric = 0; metric < 2; ++metric) {
      std::string points;
      for (const auto& r : rows) {
        if (r.method != m) continue;
        const double v = metric == 0 ? r.accuracy_mean : r.f1_mean;
        if (!points.empty()) points += ' ';
        points += num(px(r.bins)) + ',' + num(py(v));
      }
      if (points.empty()) continue;
      const std::string dash = metric == 0 ? "" : " stroke-dasharray=\"6 4\"";
      s += "<polyline fill=\"none\" stroke=\"" + std::string(colour(m)) + "\" stroke-width=\"2\"" + dash +
           " points=\"" + points + "\"/>\n";
      const std::string label = std::string(metric == 0 ? "Accuracy " : "F1 ") + (m == BinMethod::EqualWidth ? "EW" : "AW");
      const double lx = kLeft + pw + 12;
      s += "<line x1=\"" + num(lx) + "\" y1=\"" + num(legend_y) + "\" x2=\"" + num(lx + 28) + "\" y2=\"" +
           num(legend_y) + "\" stroke=\"" + colour(m) + "\" stroke-width=\"2\"" + dash + "/>\n";
      s += "<text x=\"" + num(lx + 34) + "\" y=\"" + num(legend_y + 4) + "\">" + label + "</text>\n";
      legend_y += 20;
    }
  }
  s += "</svg>\n";
  return s;
}

}  // namespace scgbin::cli
