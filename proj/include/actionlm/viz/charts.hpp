#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "actionlm/errors.hpp"
#include "actionlm/train.hpp"
#include "actionlm/viz/svg.hpp"

namespace actionlm::viz {

struct ChartStyle {
  double width = 420.0;
  double height = 300.0;
  double margin_left = 58.0;
  double margin_bottom = 46.0;
  double margin_top = 30.0;
  double margin_right = 18.0;
  std::string line_color = "#1f77b4";
  std::string axis_color = "#333333";

  static ChartStyle from_json(const nlohmann::json& j) {
    ChartStyle s;
    s.width = j.value("width", s.width);
    s.height = j.value("height", s.height);
    s.line_color = j.value("line_color", s.line_color);
    s.axis_color = j.value("axis_color", s.axis_color);
    return s;
  }
};

namespace detail {

inline std::string axis_title(const std::string& axis) {
  if (axis == "dataset_size") return "dataset fraction";
  if (axis == "context_size") return "context size";
  if (axis == "parameters") return "parameters";
  return axis;
}

// One line chart: axis value on x (log10 for dataset size and parameter
// count), validation accuracy on y. Points are drawn in ascending x order;
// polyline vertices carry the data through untransformed in y.
inline std::string line_chart(const std::string& axis, std::vector<std::pair<double, double>> points,
                              const ChartStyle& st) {
  std::sort(points.begin(), points.end());
  const bool log_x = axis == "dataset_size" || axis == "parameters";

  auto xval = [&](double v) { return log_x ? std::log10(v) : v; };
  double xmin = xval(points.front().first), xmax = xval(points.back().first);
  if (xmax - xmin < 1e-12) {
    xmin -= 0.5;
    xmax += 0.5;
  }
  double ymin = points.front().second, ymax = points.front().second;
  for (const auto& p : points) {
    ymin = std::min(ymin, p.second);
    ymax = std::max(ymax, p.second);
  }
  const double ypad = std::max(0.01, (ymax - ymin) * 0.15);
  ymin = std::max(0.0, ymin - ypad);
  ymax = std::min(1.0, ymax + ypad);
  if (ymax - ymin < 1e-9) ymax = ymin + 0.01;

  const double plot_w = st.width - st.margin_left - st.margin_right;
  const double plot_h = st.height - st.margin_top - st.margin_bottom;
  auto px = [&](double v) { return st.margin_left + (xval(v) - xmin) / (xmax - xmin) * plot_w; };
  auto py = [&](double acc) { return st.margin_top + (1.0 - (acc - ymin) / (ymax - ymin)) * plot_h; };

  SvgBuilder b(st.width, st.height);
  b.text(st.width / 2, st.margin_top - 10.0, "validation accuracy vs " + axis_title(axis), 13.0, "#000000");
  b.line(st.margin_left, st.margin_top, st.margin_left, st.margin_top + plot_h, st.axis_color, 1.0);
  b.line(st.margin_left, st.margin_top + plot_h, st.margin_left + plot_w, st.margin_top + plot_h, st.axis_color, 1.0);

  for (int i = 0; i <= 4; ++i) {
    const double acc = ymin + (ymax - ymin) * i / 4.0;
    const double y = py(acc);
    b.line(st.margin_left - 4.0, y, st.margin_left, y, st.axis_color, 1.0);
    b.text(st.margin_left - 7.0, y + 3.0, fmt_double(acc, 3), 9.0, st.axis_color, "end");
  }
  for (const auto& p : points) {
    const double x = px(p.first);
    b.line(x, st.margin_top + plot_h, x, st.margin_top + plot_h + 4.0, st.axis_color, 1.0);
    const std::string label = log_x && p.first >= 1000.0 ? fmt_double(p.first / 1000.0, 0) + "k"
                                                          : fmt_double(p.first, p.first < 1.0 ? 2 : 0);
    b.text(x, st.margin_top + plot_h + 15.0, label, 9.0, st.axis_color);
  }
  b.text(st.margin_left + plot_w / 2, st.height - 8.0,
         axis_title(axis) + (log_x ? " (log scale)" : ""), 11.0, st.axis_color);

  std::string pts;
  for (const auto& p : points) {
    if (!pts.empty()) pts += " ";
    pts += SvgBuilder::num(px(p.first)) + "," + SvgBuilder::num(py(p.second));
  }
  b.polyline(pts, st.line_color, 2.0);
  for (const auto& p : points) b.circle(px(p.first), py(p.second), 3.5, st.line_color, st.line_color, 1.0);
  return b.finish();
}

}  // namespace detail

// One chart per axis present in the records (skipped grid points carry no
// accuracy and are ignored).
inline std::vector<std::pair<std::string, std::string>> plot_scaling(const std::vector<train::ScalingRecord>& records,
                                                                     const ChartStyle& style = {}) {
  if (records.empty()) throw ValidationError("plot_scaling: no records");
  std::map<std::string, std::vector<std::pair<double, double>>> by_axis;
  for (const auto& r : records)
    if (r.val_accuracy) by_axis[r.axis].emplace_back(r.value, *r.val_accuracy);
  std::vector<std::pair<std::string, std::string>> charts;
  for (const char* axis : {"dataset_size", "context_size", "parameters"}) {
    auto it = by_axis.find(axis);
    if (it == by_axis.end() || it->second.empty()) continue;
    charts.emplace_back(axis, detail::line_chart(axis, it->second, style));
  }
  return charts;
}

}  // namespace actionlm::viz
