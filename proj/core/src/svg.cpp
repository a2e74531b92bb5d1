#include "rtp_arb/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace rtp_arb::svg {

namespace {

constexpr double kWidth = 820;
constexpr double kHeight = 480;
constexpr double kLeft = 80;
constexpr double kRight = 180;
constexpr double kTop = 50;
constexpr double kBottom = 60;

const char* const kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  if (std::abs(v) >= 1e4 || (std::abs(v) < 1e-2 && v != 0.0)) {
    std::snprintf(buf, sizeof buf, "%.3g", v);
  } else {
    std::snprintf(buf, sizeof buf, "%.4g", v);
  }
  return buf;
}

struct Range {
  double lo = 0.0;
  double hi = 1.0;

  void widen() {
    if (!(hi > lo)) {
      lo -= 0.5;
      hi += 0.5;
    }
  }
  double map(double v, double out_lo, double out_hi) const { return out_lo + (v - lo) / (hi - lo) * (out_hi - out_lo); }
};

class Canvas {
 public:
  explicit Canvas(std::string_view title) {
    out_ += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out_ += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) +
            "\" viewBox=\"0 0 " + num(kWidth) + " " + num(kHeight) + "\">\n";
    out_ += "<rect x=\"0\" y=\"0\" width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) + "\" fill=\"white\"/>\n";
    text(kWidth / 2, 28, title, "middle", 16);
  }

  void text(double x, double y, std::string_view s, std::string_view anchor = "start", int size = 12,
            std::string_view extra = {}) {
    out_ += "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" font-family=\"sans-serif\" font-size=\"" +
            std::to_string(size) + "\" text-anchor=\"" + std::string(anchor) + "\"";
    if (!extra.empty()) out_ += " " + std::string(extra);
    out_ += ">" + escape(s) + "</text>\n";
  }

  void line(double x1, double y1, double x2, double y2, std::string_view stroke = "#333", double width = 1) {
    out_ += "<line x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x2) + "\" y2=\"" + num(y2) +
            "\" stroke=\"" + std::string(stroke) + "\" stroke-width=\"" + num(width) + "\"/>\n";
  }

  void raw(std::string_view s) { out_ += s; }

  std::string finish() {
    out_ += "</svg>\n";
    return std::move(out_);
  }

 private:
  std::string out_;
};

void axes(Canvas& c, const Range& x, const Range& y, std::string_view x_label, std::string_view y_label,
          bool numeric_x) {
  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
  c.line(x0, y0, x1, y0);
  c.line(x0, y0, x0, y1);
  for (int i = 0; i <= 5; ++i) {
    const double v = y.lo + (y.hi - y.lo) * i / 5.0;
    const double py = y.map(v, y0, y1);
    c.line(x0 - 4, py, x0, py);
    c.line(x0, py, x1, py, "#e0e0e0", 0.5);
    c.text(x0 - 8, py + 4, tick_label(v), "end", 10);
  }
  if (numeric_x) {
    for (int i = 0; i <= 5; ++i) {
      const double v = x.lo + (x.hi - x.lo) * i / 5.0;
      const double px = x.map(v, x0, x1);
      c.line(px, y0, px, y0 + 4);
      c.text(px, y0 + 18, tick_label(v), "middle", 10);
    }
  }
  c.text((x0 + x1) / 2, kHeight - 15, x_label, "middle", 12);
  c.text(20, (y0 + y1) / 2, y_label, "middle", 12,
         "transform=\"rotate(-90 20 " + num((y0 + y1) / 2) + ")\"");
}

}  // namespace

std::string escape(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char ch : text) {
    switch (ch) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      case '\'':
        out += "&apos;";
        break;
      default:
        out += ch;
    }
  }
  return out;
}

std::string line_chart(std::string_view title, std::string_view x_label, std::string_view y_label,
                       const std::vector<LineSeries>& series) {
  Range x{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  Range y = x;
  for (const auto& s : series) {
    for (auto [px, py] : s.points) {
      x.lo = std::min(x.lo, px);
      x.hi = std::max(x.hi, px);
      y.lo = std::min(y.lo, py);
      y.hi = std::max(y.hi, py);
    }
  }
  if (!std::isfinite(x.lo)) x = y = Range{};
  y.lo = std::min(y.lo, 0.0);
  x.widen();
  y.widen();

  Canvas c(title);
  axes(c, x, y, x_label, y_label, true);
  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
  for (std::size_t i = 0; i < series.size(); ++i) {
    const char* colour = kPalette[i % std::size(kPalette)];
    std::string pts;
    for (auto [px, py] : series[i].points) {
      if (!pts.empty()) pts += ' ';
      pts += num(x.map(px, x0, x1)) + "," + num(y.map(py, y0, y1));
    }
    c.raw("<polyline fill=\"none\" stroke=\"" + std::string(colour) + "\" stroke-width=\"2\" points=\"" + pts +
          "\"><title>" + escape(series[i].name) + "</title></polyline>\n");
    const double ly = kTop + 10 + 18.0 * static_cast<double>(i);
    c.line(x1 + 15, ly, x1 + 40, ly, colour, 2);
    c.text(x1 + 46, ly + 4, series[i].name, "start", 11);
  }
  return c.finish();
}

std::string bar_chart(std::string_view title, std::string_view y_label, const std::vector<Bar>& bars) {
  Range y{0.0, 0.0};
  for (const auto& b : bars) {
    y.lo = std::min(y.lo, b.value);
    y.hi = std::max(y.hi, b.value);
  }
  y.widen();
  Canvas c(title);
  axes(c, Range{0.0, 1.0}, y, "", y_label, false);
  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
  const double slot = (x1 - x0) / static_cast<double>(std::max<std::size_t>(bars.size(), 1));
  const double base = y.map(0.0, y0, y1);
  for (std::size_t i = 0; i < bars.size(); ++i) {
    const double top = y.map(bars[i].value, y0, y1);
    const double bx = x0 + slot * static_cast<double>(i) + slot * 0.15;
    c.raw("<rect x=\"" + num(bx) + "\" y=\"" + num(std::min(top, base)) + "\" width=\"" + num(slot * 0.7) +
          "\" height=\"" + num(std::abs(base - top)) + "\" fill=\"" + kPalette[i % std::size(kPalette)] +
          "\"><title>" + escape(bars[i].label) + ": " + tick_label(bars[i].value) + "</title></rect>\n");
    c.text(bx + slot * 0.35, y0 + 18, bars[i].label, "middle", 11);
    c.text(bx + slot * 0.35, std::min(top, base) - 4, tick_label(bars[i].value), "middle", 10);
  }
  return c.finish();
}

std::string step_chart(std::string_view title, std::string_view x_label, std::string_view y_label,
                       const std::vector<std::string>& x_ticks, const std::vector<double>& values,
                       const std::vector<StepMarker>& markers) {
  Range x{0.0, static_cast<double>(std::max<std::size_t>(values.size(), 1))};
  Range y{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (double v : values) {
    y.lo = std::min(y.lo, v);
    y.hi = std::max(y.hi, v);
  }
  if (!std::isfinite(y.lo)) y = Range{};
  const double pad = 0.1 * (y.hi - y.lo);
  y.lo -= pad;
  y.hi += pad;
  y.widen();

  Canvas c(title);
  axes(c, x, y, x_label, y_label, false);
  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
  std::string pts;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double py = y.map(values[i], y0, y1);
    if (!pts.empty()) pts += ' ';
    pts += num(x.map(static_cast<double>(i), x0, x1)) + "," + num(py) + " " +
           num(x.map(static_cast<double>(i + 1), x0, x1)) + "," + num(py);
  }
  c.raw("<polyline fill=\"none\" stroke=\"#333\" stroke-width=\"2\" points=\"" + pts + "\"/>\n");

  static const char* const kMarkerColour[] = {"#2ca02c", "#d62728", "#9e9e9e"};
  for (std::size_t i = 0; i < markers.size() && i < values.size(); ++i) {
    const int kind = std::clamp(markers[i].kind, 0, 2);
    const double cx = x.map(static_cast<double>(i) + 0.5, x0, x1);
    const double cy = y.map(values[i], y0, y1);
    c.raw("<circle cx=\"" + num(cx) + "\" cy=\"" + num(cy) + "\" r=\"5\" fill=\"" + kMarkerColour[kind] +
          "\"><title>" + escape(markers[i].label) + "</title></circle>\n");
  }
  for (std::size_t i = 0; i < x_ticks.size() && i < values.size(); i += 3) {
    c.text(x.map(static_cast<double>(i) + 0.5, x0, x1), y0 + 18, x_ticks[i], "middle", 10);
  }
  const char* names[] = {"charge", "discharge", "idle"};
  for (int k = 0; k < 3; ++k) {
    const double ly = kTop + 10 + 18.0 * k;
    c.raw("<circle cx=\"" + num(x1 + 25) + "\" cy=\"" + num(ly) + "\" r=\"5\" fill=\"" + kMarkerColour[k] + "\"/>\n");
    c.text(x1 + 36, ly + 4, names[k], "start", 11);
  }
  return c.finish();
}

}  // namespace rtp_arb::svg
