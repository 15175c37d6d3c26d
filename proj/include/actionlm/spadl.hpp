#pragma once

#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "actionlm/errors.hpp"
#include "actionlm/io.hpp"

namespace actionlm::spadl {

constexpr double kPitchLength = 105.0;  // yards
constexpr double kPitchWidth = 68.0;    // yards
constexpr double kProviderLength = 120.0;
constexpr double kProviderWidth = 80.0;

// Simplified SPADL action taxonomy. This is the documented conversion
// contract; the order below is the canonical vocabulary order.
enum class ActionType {
  pass,
  throw_in,
  corner,
  freekick,
  cross,
  dribble,
  take_on,
  shot,
  interception,
  clearance,
  tackle,
  foul,
  keeper_action,
  receival,
  bad_touch,
  recovery,
};

inline const std::vector<std::string>& action_type_names() {
  static const std::vector<std::string> names = {
      "pass",   "throw_in",     "corner",   "freekick",      "cross",     "dribble",
      "take_on", "shot",        "interception", "clearance", "tackle",    "foul",
      "keeper_action", "receival", "bad_touch", "recovery",
  };
  return names;
}

inline std::string to_string(ActionType t) { return action_type_names()[static_cast<std::size_t>(t)]; }

inline std::optional<ActionType> action_type_from(const std::string& name) {
  const auto& names = action_type_names();
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return static_cast<ActionType>(i);
  return std::nullopt;
}

// One provider event, parsed down to the fields conversion needs. The
// qualifiers map carries provider-specific keys ("pass_type", "cross",
// "duel_type").
struct RawEvent {
  long match_id = 0;
  std::string event_type;
  long team_id = 0;
  bool has_location = false;
  double x = 0.0;  // provider units, 0..120
  double y = 0.0;  // provider units, 0..80
  int period = 1;
  std::string timestamp;
  std::map<std::string, std::string> qualifiers;
};

// One simplified SPADL action. Coordinates are yards on the 105x68 pitch in
// the acting team's attacking frame (the provider already reports acting-team
// left-to-right, so conversion is a pure rescale). The period is carried for
// sequence segmentation; the exported CSV schema does not include it.
struct Action {
  long match_id = 0;
  long index = 0;
  bool is_home = false;
  ActionType type = ActionType::pass;
  double x = 0.0;
  double y = 0.0;
  int period = 1;

  bool operator==(const Action&) const = default;
};

struct MatchInfo {
  long match_id = 0;
  std::string season;
  std::string home_team;
  std::string away_team;
  long home_team_id = 0;
  long away_team_id = 0;
};

struct MatchTable {
  MatchInfo info;
  std::vector<Action> actions;  // ordered by index
};

// Mapping table from provider event types to the simplified taxonomy.
// Returns nullopt for non-action events (substitutions, half start, ...).
// Pass set-piece qualifiers take precedence over the cross flag.
inline std::optional<ActionType> map_event_type(const std::string& event_type,
                                                const std::map<std::string, std::string>& qualifiers) {
  if (event_type == "Pass") {
    auto it = qualifiers.find("pass_type");
    if (it != qualifiers.end()) {
      if (it->second == "Throw-in") return ActionType::throw_in;
      if (it->second == "Corner") return ActionType::corner;
      if (it->second == "Free Kick") return ActionType::freekick;
    }
    auto cr = qualifiers.find("cross");
    if (cr != qualifiers.end() && cr->second == "true") return ActionType::cross;
    return ActionType::pass;
  }
  if (event_type == "Carry") return ActionType::dribble;
  if (event_type == "Dribble") return ActionType::take_on;
  if (event_type == "Shot") return ActionType::shot;
  if (event_type == "Interception") return ActionType::interception;
  if (event_type == "Clearance") return ActionType::clearance;
  if (event_type == "Duel") {
    auto it = qualifiers.find("duel_type");
    if (it != qualifiers.end() && it->second.find("Tackle") != std::string::npos) return ActionType::tackle;
    return std::nullopt;
  }
  if (event_type == "Foul Committed") return ActionType::foul;
  if (event_type == "Goal Keeper") return ActionType::keeper_action;
  if (event_type == "Ball Receipt" || event_type == "Ball Receipt*") return ActionType::receival;
  if (event_type == "Miscontrol") return ActionType::bad_touch;
  if (event_type == "Ball Recovery") return ActionType::recovery;
  return std::nullopt;
}

inline double rescale_x(double provider_x) { return provider_x * kPitchLength / kProviderLength; }
inline double rescale_y(double provider_y) { return provider_y * kPitchWidth / kProviderWidth; }

struct ConversionResult {
  std::vector<Action> actions;
  long dropped_missing_location = 0;
};

// Convert provider events (ordered by period then timestamp) to actions.
// Every event whose type appears in the mapping table yields exactly one
// action; mapped events without a location are dropped and counted.
inline ConversionResult to_actions(const std::vector<RawEvent>& events, long home_team_id) {
  ConversionResult result;
  long index = 0;
  for (const RawEvent& ev : events) {
    auto type = map_event_type(ev.event_type, ev.qualifiers);
    if (!type) continue;
    if (!ev.has_location) {
      ++result.dropped_missing_location;
      continue;
    }
    Action a;
    a.match_id = ev.match_id;
    a.index = index++;
    a.is_home = ev.team_id == home_team_id;
    a.type = *type;
    a.x = rescale_x(ev.x);
    a.y = rescale_y(ev.y);
    a.period = ev.period;
    result.actions.push_back(a);
  }
  return result;
}

// ---- actions CSV (schema: match_id,index,is_home,action_type,x,y) ----

inline std::string actions_csv_header() { return "match_id,index,is_home,action_type,x,y"; }

inline std::string to_csv(const std::vector<Action>& actions) {
  std::string out = actions_csv_header() + "\n";
  for (const Action& a : actions) {
    out += std::to_string(a.match_id) + "," + std::to_string(a.index) + "," + (a.is_home ? "True" : "False") + "," +
           to_string(a.type) + "," + fmt_double(a.x, 3) + "," + fmt_double(a.y, 3) + "\n";
  }
  return out;
}

inline std::vector<Action> from_csv(const std::string& csv) {
  std::vector<Action> actions;
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line) || line != actions_csv_header())
    throw ParseError("actions csv: bad header: \"" + line + "\"");
  long lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i)
      if (i == line.size() || line[i] == ',') {
        f.push_back(line.substr(start, i - start));
        start = i + 1;
      }
    if (f.size() != 6) throw ParseError("actions csv: line " + std::to_string(lineno) + ": expected 6 fields");
    Action a;
    try {
      a.match_id = std::stol(f[0]);
      a.index = std::stol(f[1]);
      a.is_home = f[2] == "True";
      auto type = action_type_from(f[3]);
      if (!type) throw ParseError("unknown action type");
      a.type = *type;
      a.x = std::stod(f[4]);
      a.y = std::stod(f[5]);
    } catch (const std::exception&) {
      throw ParseError("actions csv: line " + std::to_string(lineno) + ": parse failure");
    }
    actions.push_back(a);
  }
  return actions;
}

}  // namespace actionlm::spadl
