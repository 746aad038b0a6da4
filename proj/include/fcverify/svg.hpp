#pragma once

// Static, self-contained SVG renderings of the diagram types.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "fcverify/errors.hpp"

namespace fcv {

enum class PlotKind { murphy, reliability, roc, pr, performance, mcb_dsc };

inline const char* to_string(PlotKind k) {
  switch (k) {
    case PlotKind::murphy: return "murphy";
    case PlotKind::reliability: return "reliability";
    case PlotKind::roc: return "roc";
    case PlotKind::pr: return "pr";
    case PlotKind::performance: return "performance";
    case PlotKind::mcb_dsc: return "mcb_dsc";
  }
  return "?";
}

struct PlotSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;
  bool markers = false;  // draw points instead of a polyline
  // Optional crosses: per-point (x_lo, x_hi, y_lo, y_hi).
  std::vector<std::array<double, 4>> error_bars;
};

struct PlotData {
  std::string title;
  std::vector<PlotSeries> series;
  // Reliability: forecast counts per 10%-wide bin.
  std::vector<std::size_t> histogram;
  // Miscalibration-discrimination: uncertainty (best-constant score) and
  // optional extra reference scores drawn as dashed iso-score lines.
  std::optional<double> uncertainty;
  std::vector<std::pair<std::string, double>> reference_scores;
};

namespace detail {

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

inline std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

class Canvas {
 public:
  Canvas(double x0, double x1, double y0, double y1) : x0_(x0), x1_(x1), y0_(y0), y1_(y1) {}

  static constexpr double kWidth = 640;
  static constexpr double kHeight = 480;
  static constexpr double kLeft = 70;
  static constexpr double kRight = 170;
  static constexpr double kTop = 40;
  static constexpr double kBottom = 60;

  [[nodiscard]] double px(double x) const {
    return kLeft + (x - x0_) / (x1_ - x0_) * (kWidth - kLeft - kRight);
  }
  [[nodiscard]] double py(double y) const {
    return kHeight - kBottom - (y - y0_) / (y1_ - y0_) * (kHeight - kTop - kBottom);
  }
  [[nodiscard]] double x0() const { return x0_; }
  [[nodiscard]] double x1() const { return x1_; }
  [[nodiscard]] double y0() const { return y0_; }
  [[nodiscard]] double y1() const { return y1_; }

  // Clipped line segment in data coordinates.
  void line(std::ostringstream& os, double ax, double ay, double bx, double by,
            const std::string& style) const {
    if (!clip(ax, ay, bx, by)) return;
    os << "<line x1=\"" << num(px(ax)) << "\" y1=\"" << num(py(ay)) << "\" x2=\"" << num(px(bx))
       << "\" y2=\"" << num(py(by)) << "\" " << style << "/>\n";
  }

  void polyline(std::ostringstream& os, const std::vector<std::pair<double, double>>& pts,
                const std::string& style) const {
    os << "<polyline fill=\"none\" " << style << " points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (i) os << ' ';
      os << num(px(std::clamp(pts[i].first, x0_, x1_))) << ','
         << num(py(std::clamp(pts[i].second, y0_, y1_)));
    }
    os << "\"/>\n";
  }

 private:
  // Liang-Barsky clipping to the plot rectangle.
  bool clip(double& ax, double& ay, double& bx, double& by) const {
    double t0 = 0.0, t1 = 1.0;
    const double dx = bx - ax, dy = by - ay;
    const std::array<double, 4> p{-dx, dx, -dy, dy};
    const std::array<double, 4> q{ax - x0_, x1_ - ax, ay - y0_, y1_ - ay};
    for (std::size_t i = 0; i < 4; ++i) {
      if (p[i] == 0.0) {
        if (q[i] < 0.0) return false;
        continue;
      }
      const double r = q[i] / p[i];
      if (p[i] < 0.0) {
        if (r > t1) return false;
        t0 = std::max(t0, r);
      } else {
        if (r < t0) return false;
        t1 = std::min(t1, r);
      }
    }
    const double nax = ax + t0 * dx, nay = ay + t0 * dy;
    bx = ax + t1 * dx;
    by = ay + t1 * dy;
    ax = nax;
    ay = nay;
    return true;
  }

  double x0_, x1_, y0_, y1_;
};

inline constexpr std::array<const char*, 8> kPalette{"#e66101", "#1f1f1f", "#2c7bb6", "#d01c8b",
                                                     "#4dac26", "#8073ac", "#b35806", "#01665e"};

inline std::array<const char*, 2> axis_labels(PlotKind k) {
  switch (k) {
    case PlotKind::murphy: return {"decision threshold", "mean elementary score"};
    case PlotKind::reliability: return {"forecast probability", "recalibrated probability"};
    case PlotKind::roc: return {"false alarm rate", "hit rate"};
    case PlotKind::pr: return {"recall (POD)", "precision (SR)"};
    case PlotKind::performance: return {"success ratio", "probability of detection"};
    case PlotKind::mcb_dsc: return {"MCB", "DSC"};
  }
  return {"", ""};
}

}  // namespace detail

inline std::string emit_svg(const PlotData& data, PlotKind kind) {
  std::size_t total_points = 0;
  for (const auto& s : data.series) total_points += s.points.size();
  if (total_points == 0) throw ValidationError("cannot render an empty plot");

  double xmax = 1.0, ymax = 1.0;
  if (kind == PlotKind::murphy || kind == PlotKind::mcb_dsc) {
    xmax = kind == PlotKind::murphy ? 1.0 : 0.0;
    ymax = 0.0;
    for (const auto& s : data.series) {
      for (const auto& [x, y] : s.points) {
        if (kind == PlotKind::mcb_dsc) xmax = std::max(xmax, x);
        ymax = std::max(ymax, y);
      }
      for (const auto& e : s.error_bars) {
        if (kind == PlotKind::mcb_dsc) xmax = std::max(xmax, e[1]);
        ymax = std::max(ymax, e[3]);
      }
    }
    if (ymax <= 0.0) ymax = 1.0;
    if (xmax <= 0.0) xmax = 1.0;
    ymax *= 1.1;
    if (kind == PlotKind::mcb_dsc) xmax *= 1.1;
  }
  const detail::Canvas cv(0.0, xmax, 0.0, ymax);
  using detail::num;

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << detail::Canvas::kWidth
     << "\" height=\"" << detail::Canvas::kHeight << "\" viewBox=\"0 0 "
     << detail::Canvas::kWidth << ' ' << detail::Canvas::kHeight
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!data.title.empty()) {
    os << "<text x=\"" << num(detail::Canvas::kLeft) << "\" y=\"24\" font-size=\"15\">"
       << detail::escape_xml(data.title) << "</text>\n";
  }

  // Reference geometry.
  const std::string ref = "stroke=\"#bbbbbb\" stroke-width=\"1\"";
  const std::string ref_dash = "stroke=\"#999999\" stroke-width=\"1\" stroke-dasharray=\"4,3\"";
  os << "<g class=\"reference\">\n";
  switch (kind) {
    case PlotKind::reliability:
    case PlotKind::roc:
      cv.line(os, 0, 0, 1, 1, ref);
      break;
    case PlotKind::performance:
      // CSI contours: POD = 1 / (1/CSI + 1 - 1/SR).
      for (int k = 1; k <= 9; ++k) {
        const double csi = k / 10.0;
        std::vector<std::pair<double, double>> pts;
        for (int i = 1; i <= 200; ++i) {
          const double sr = i / 200.0;
          const double den = 1.0 / csi + 1.0 - 1.0 / sr;
          if (den <= 0.0) continue;
          const double pod = 1.0 / den;
          if (pod <= 1.0) pts.emplace_back(sr, pod);
        }
        if (pts.size() > 1) cv.polyline(os, pts, ref);
      }
      // Frequency-bias lines: POD = FB * SR.
      for (double fb : {0.5, 0.8, 1.0, 1.3, 2.0, 4.0}) cv.line(os, 0, 0, 1, fb, ref_dash);
      break;
    case PlotKind::mcb_dsc:
      // Iso-score lines DSC = MCB + UNC - score; UNC itself through the origin.
      if (data.uncertainty) {
        const double unc = *data.uncertainty;
        const double span = std::max(cv.x1(), cv.y1());
        for (int k = -10; k <= 10; ++k) {
          const double score = unc + k * span / 5.0;
          cv.line(os, 0, unc - score, cv.x1(), cv.x1() + unc - score, ref);
        }
        cv.line(os, 0, 0, cv.x1(), cv.x1(), "stroke=\"#000000\" stroke-width=\"1.2\"");
      }
      for (const auto& [label, score] : data.reference_scores) {
        const double unc = data.uncertainty.value_or(score);
        cv.line(os, 0, unc - score, cv.x1(), cv.x1() + unc - score,
                "stroke=\"#000000\" stroke-width=\"1.2\" stroke-dasharray=\"6,4\"");
      }
      break;
    case PlotKind::murphy:
    case PlotKind::pr:
      break;
  }
  if (kind == PlotKind::reliability && !data.histogram.empty()) {
    const auto peak = *std::max_element(data.histogram.begin(), data.histogram.end());
    const double bw = 1.0 / static_cast<double>(data.histogram.size());
    for (std::size_t b = 0; b < data.histogram.size() && peak > 0; ++b) {
      const double h = 0.2 * static_cast<double>(data.histogram[b]) / static_cast<double>(peak);
      os << "<rect x=\"" << num(cv.px(b * bw)) << "\" y=\"" << num(cv.py(h)) << "\" width=\""
         << num(cv.px((b + 1) * bw) - cv.px(b * bw)) << "\" height=\"" << num(cv.py(0) - cv.py(h))
         << "\" fill=\"#dddddd\" stroke=\"#aaaaaa\"/>\n";
    }
  }
  os << "</g>\n";

  // Axes and ticks.
  const auto labels = detail::axis_labels(kind);
  os << "<g class=\"axes\" stroke=\"#000000\">\n";
  cv.line(os, cv.x0(), cv.y0(), cv.x1(), cv.y0(), "stroke=\"#000000\"");
  cv.line(os, cv.x0(), cv.y0(), cv.x0(), cv.y1(), "stroke=\"#000000\"");
  os << "</g>\n<g class=\"ticks\">\n";
  for (int i = 0; i <= 5; ++i) {
    const double xv = cv.x0() + (cv.x1() - cv.x0()) * i / 5.0;
    const double yv = cv.y0() + (cv.y1() - cv.y0()) * i / 5.0;
    os << "<text x=\"" << num(cv.px(xv)) << "\" y=\"" << num(cv.py(cv.y0()) + 16)
       << "\" text-anchor=\"middle\">" << num(xv) << "</text>\n";
    os << "<text x=\"" << num(cv.px(cv.x0()) - 6) << "\" y=\"" << num(cv.py(yv) + 4)
       << "\" text-anchor=\"end\">" << num(yv) << "</text>\n";
  }
  os << "<text x=\"" << num((cv.px(cv.x0()) + cv.px(cv.x1())) / 2) << "\" y=\""
     << num(detail::Canvas::kHeight - 20) << "\" text-anchor=\"middle\">" << labels[0]
     << "</text>\n";
  os << "<text transform=\"translate(20," << num((cv.py(cv.y0()) + cv.py(cv.y1())) / 2)
     << ") rotate(-90)\" text-anchor=\"middle\">" << labels[1] << "</text>\n";
  os << "</g>\n";

  // Data and legend.
  os << "<g class=\"data\">\n";
  for (std::size_t k = 0; k < data.series.size(); ++k) {
    const auto& s = data.series[k];
    const std::string color = detail::kPalette[k % detail::kPalette.size()];
    const std::string stroke = "stroke=\"" + color + "\" stroke-width=\"1.8\"";
    for (const auto& e : s.error_bars) {
      const double cx = (e[0] + e[1]) / 2, cy = (e[2] + e[3]) / 2;
      cv.line(os, e[0], cy, e[1], cy, stroke);
      cv.line(os, cx, e[2], cx, e[3], stroke);
    }
    if (s.markers || s.points.size() == 1) {
      for (const auto& [x, y] : s.points) {
        os << "<circle cx=\"" << num(cv.px(x)) << "\" cy=\"" << num(cv.py(y))
           << "\" r=\"3.5\" fill=\"" << color << "\"/>\n";
      }
    }
    if (!s.markers && s.points.size() > 1) cv.polyline(os, s.points, stroke);
    const double ly = detail::Canvas::kTop + 10 + 18.0 * static_cast<double>(k);
    const double lx = detail::Canvas::kWidth - detail::Canvas::kRight + 15;
    os << "<line x1=\"" << num(lx) << "\" y1=\"" << num(ly) << "\" x2=\"" << num(lx + 20)
       << "\" y2=\"" << num(ly) << "\" " << stroke << "/>\n";
    os << "<text x=\"" << num(lx + 26) << "\" y=\"" << num(ly + 4) << "\">"
       << detail::escape_xml(s.label) << "</text>\n";
  }
  os << "</g>\n</svg>\n";
  return os.str();
}

}  // namespace fcv
