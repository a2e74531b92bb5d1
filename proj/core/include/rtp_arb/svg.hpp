#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace rtp_arb::svg {

struct LineSeries {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

// One <polyline> per series, with axes, ticks and a legend.
std::string line_chart(std::string_view title, std::string_view x_label, std::string_view y_label,
                       const std::vector<LineSeries>& series);

struct Bar {
  std::string label;
  double value = 0.0;
};

std::string bar_chart(std::string_view title, std::string_view y_label, const std::vector<Bar>& bars);

// Step plot of hourly values with one marker per hour; `marker_kind` picks
// the marker colour (0 charge, 1 discharge, 2 idle).
struct StepMarker {
  int kind = 2;
  std::string label;
};

std::string step_chart(std::string_view title, std::string_view x_label, std::string_view y_label,
                       const std::vector<std::string>& x_ticks, const std::vector<double>& values,
                       const std::vector<StepMarker>& markers);

std::string escape(std::string_view text);

}  // namespace rtp_arb::svg
