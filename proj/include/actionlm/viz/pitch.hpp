#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "actionlm/errors.hpp"
#include "actionlm/spadl.hpp"
#include "actionlm/tokenizer.hpp"
#include "actionlm/viz/svg.hpp"

namespace actionlm::viz {

struct SceneAction {
  double x = 0.0;
  double y = 0.0;
  bool is_home = false;
  std::string label;

  bool operator==(const SceneAction&) const = default;
};

// An ordered action sequence to draw. Generated tokens are placed at bin
// centers; real actions keep their coordinates.
struct PitchScene {
  std::vector<SceneAction> actions;
  std::optional<std::size_t> highlight;  // index of the action to mark out
  std::string title;
};

inline PitchScene scene_from_actions(const std::vector<spadl::Action>& actions, std::string title = "") {
  PitchScene s;
  s.title = std::move(title);
  for (const auto& a : actions) s.actions.push_back(SceneAction{a.x, a.y, a.is_home, spadl::to_string(a.type)});
  return s;
}

inline PitchScene scene_from_tokens(const std::vector<tok::Token>& tokens, std::string title = "") {
  PitchScene s;
  s.title = std::move(title);
  for (const auto& t : tokens)
    s.actions.push_back(SceneAction{tok::bin_center_x(t.bin.bx), tok::bin_center_y(t.bin.by), t.is_home, t.action_type});
  return s;
}

struct PitchStyle {
  double scale = 7.0;  // px per yard
  double margin = 16.0;
  double caption_band = 22.0;
  std::string home_color = "#1f77b4";
  std::string away_color = "#d62728";
  std::string pitch_color = "#2e7d32";
  std::string line_color = "#ffffff";
  std::string highlight_color = "#ffd700";

  static PitchStyle from_json(const nlohmann::json& j) {
    PitchStyle s;
    s.scale = j.value("scale", s.scale);
    s.margin = j.value("margin", s.margin);
    s.home_color = j.value("home_color", s.home_color);
    s.away_color = j.value("away_color", s.away_color);
    s.pitch_color = j.value("pitch_color", s.pitch_color);
    s.line_color = j.value("line_color", s.line_color);
    s.highlight_color = j.value("highlight_color", s.highlight_color);
    return s;
  }
};

namespace detail {

inline void validate_scene(const PitchScene& scene) {
  for (const auto& a : scene.actions)
    if (!(a.x >= 0.0 && a.x <= spadl::kPitchLength && a.y >= 0.0 && a.y <= spadl::kPitchWidth))
      throw ValidationError("pitch scene: coordinates (" + std::to_string(a.x) + ", " + std::to_string(a.y) +
                            ") outside the 105x68 pitch");
}

// Draws one panel into b, origin at (0,0) of the current group. Pitch y is
// flipped into SVG's downward axis.
inline void draw_panel(SvgBuilder& b, const PitchScene& scene, const PitchStyle& st) {
  const double s = st.scale, m = st.margin;
  auto px = [&](double x) { return m + x * s; };
  auto py = [&](double y) { return m + (spadl::kPitchWidth - y) * s; };

  // Pitch: outline, halfway line, center circle and spot, both penalty areas.
  b.rect(px(0), py(spadl::kPitchWidth), spadl::kPitchLength * s, spadl::kPitchWidth * s, st.line_color,
         st.pitch_color, 2.0);
  b.line(px(52.5), py(0), px(52.5), py(spadl::kPitchWidth), st.line_color, 1.5);
  b.circle(px(52.5), py(34.0), 9.15 * s, st.line_color, "none", 1.5);
  b.circle(px(52.5), py(34.0), 2.0, st.line_color, st.line_color, 1.0);
  const double pa_w = 40.32, pa_d = 16.5, pa_y1 = 34.0 + pa_w / 2;
  b.rect(px(0), py(pa_y1), pa_d * s, pa_w * s, st.line_color, "none", 1.5);
  b.rect(px(spadl::kPitchLength - pa_d), py(pa_y1), pa_d * s, pa_w * s, st.line_color, "none", 1.5);

  // Arrows between consecutive actions.
  for (std::size_t i = 0; i + 1 < scene.actions.size(); ++i) {
    const auto& a = scene.actions[i];
    const auto& c = scene.actions[i + 1];
    const double x1 = px(a.x), y1 = py(a.y), x2 = px(c.x), y2 = py(c.y);
    b.line(x1, y1, x2, y2, "#f0f0f0", 1.0, " opacity=\"0.85\"");
    const double dx = x2 - x1, dy = y2 - y1;
    const double len = std::sqrt(dx * dx + dy * dy);
    if (len > 1e-9) {
      const double ux = dx / len, uy = dy / len;
      const double hx = x2 - 6.0 * ux, hy = y2 - 6.0 * uy;
      b.line(x2, y2, hx - 3.0 * uy, hy + 3.0 * ux, "#f0f0f0", 1.0, " opacity=\"0.85\"");
      b.line(x2, y2, hx + 3.0 * uy, hy - 3.0 * ux, "#f0f0f0", 1.0, " opacity=\"0.85\"");
    }
  }

  // Numbered markers, colored by team, with action-type labels.
  for (std::size_t i = 0; i < scene.actions.size(); ++i) {
    const auto& a = scene.actions[i];
    const double cx = px(a.x), cy = py(a.y);
    const bool highlighted = scene.highlight && *scene.highlight == i;
    if (highlighted) b.circle(cx, cy, 11.0, st.highlight_color, "none", 3.0);
    b.circle(cx, cy, 8.0, st.line_color, a.is_home ? st.home_color : st.away_color, 1.0);
    b.text(cx, cy + 3.5, std::to_string(i + 1), 9.0, "#ffffff");
    b.text(cx, cy - 10.0, a.label, 8.0, "#ffffff");
  }

  if (!scene.title.empty())
    b.text(m + spadl::kPitchLength * s / 2, m + spadl::kPitchWidth * s + st.caption_band - 6.0, scene.title, 13.0,
           "#000000");
}

inline double panel_width(const PitchStyle& st) { return spadl::kPitchLength * st.scale + 2 * st.margin; }
inline double panel_height(const PitchStyle& st) {
  return spadl::kPitchWidth * st.scale + 2 * st.margin + st.caption_band;
}

}  // namespace detail

// One scene on one pitch. Deterministic: same scene, same bytes.
inline std::string render_pitch(const PitchScene& scene, const PitchStyle& style = {}) {
  detail::validate_scene(scene);
  SvgBuilder b(detail::panel_width(style), detail::panel_height(style));
  detail::draw_panel(b, scene, style);
  return b.finish();
}

// Ground truth followed by model panels in a two-column grid with a shared
// scale. All scenes must have the same length and share every action except
// the last (the prediction).
inline std::string render_comparison(const PitchScene& ground_truth,
                                     const std::vector<std::pair<std::string, PitchScene>>& predictions,
                                     const PitchStyle& style = {}) {
  detail::validate_scene(ground_truth);
  for (const auto& [name, scene] : predictions) {
    detail::validate_scene(scene);
    if (scene.actions.size() != ground_truth.actions.size())
      throw ValidationError("render_comparison: scene \"" + name + "\" length differs from ground truth");
    for (std::size_t i = 0; i + 1 < ground_truth.actions.size(); ++i)
      if (!(scene.actions[i] == ground_truth.actions[i]))
        throw ValidationError("render_comparison: scene \"" + name + "\" diverges from the shared context at action " +
                              std::to_string(i));
  }

  std::vector<PitchScene> panels;
  panels.push_back(ground_truth);
  if (panels.back().title.empty()) panels.back().title = "Ground truth";
  for (const auto& [name, scene] : predictions) {
    panels.push_back(scene);
    panels.back().title = name;
    if (!panels.back().actions.empty() && !panels.back().highlight)
      panels.back().highlight = panels.back().actions.size() - 1;
  }

  const long cols = panels.size() > 1 ? 2 : 1;
  const long rows = (static_cast<long>(panels.size()) + cols - 1) / cols;
  const double pw = detail::panel_width(style), ph = detail::panel_height(style);
  SvgBuilder b(pw * cols, ph * rows);
  for (std::size_t i = 0; i < panels.size(); ++i) {
    b.group_open(static_cast<double>(i % cols) * pw, static_cast<double>(i / cols) * ph);
    detail::draw_panel(b, panels[i], style);
    b.group_close();
  }
  return b.finish();
}

}  // namespace actionlm::viz
