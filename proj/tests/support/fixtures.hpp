#pragma once

// Hand-written open-data-layout fixtures: one small league with two matches
// whose events cover the whole action-type mapping table, including the
// ten-event sequence whose expected conversion is spelled out in
// expected_match1_actions().

#include <string>
#include <vector>

#include <json.hpp>

#include "actionlm/io.hpp"
#include "actionlm/spadl.hpp"

namespace testsupport {

namespace fs = std::filesystem;
using nlohmann::json;

inline json event(const std::string& type, long team, double x, double y, int period = 1) {
  return json{{"type", {{"name", type}}}, {"team", {{"id", team}}}, {"period", period},
              {"timestamp", "00:00:00.000"}, {"location", {x, y}}};
}

// Match 1001: home team 10, away team 20. Ten convertible events plus two
// that the converter must ignore (half start) or drop (pass without
// location).
inline json match1_events() {
  json arr = json::array();
  arr.push_back(json{{"type", {{"name", "Half Start"}}}, {"team", {{"id", 10}}}, {"period", 1}});
  arr.push_back(event("Pass", 10, 60, 40));  // plain pass at midpoint
  {
    json e = event("Pass", 10, 120, 80);  // throw-in at the far corner
    e["pass"] = {{"type", {{"name", "Throw-in"}}}};
    arr.push_back(e);
  }
  arr.push_back(event("Ball Receipt*", 10, 90, 60));
  arr.push_back(event("Carry", 10, 96, 64));
  {
    json e = event("Pass", 10, 100, 70);  // cross flag
    e["pass"] = {{"cross", true}};
    arr.push_back(e);
  }
  arr.push_back(event("Shot", 10, 110, 40));
  arr.push_back(event("Goal Keeper", 20, 6, 36));
  {
    json nolocation = json{{"type", {{"name", "Pass"}}}, {"team", {{"id", 20}}}, {"period", 2},
                           {"timestamp", "00:01:00.000"}};
    arr.push_back(nolocation);  // mapped type, missing location: dropped + counted
  }
  {
    json e = event("Duel", 20, 30, 20, 2);
    e["duel"] = {{"type", {{"name", "Tackle"}}}};
    arr.push_back(e);
  }
  {
    json e = event("Pass", 20, 0, 0, 2);  // corner kick
    e["pass"] = {{"type", {{"name", "Corner"}}}};
    arr.push_back(e);
  }
  arr.push_back(event("Interception", 10, 45, 30, 2));
  return arr;
}

// The hand-converted expectation for match1_events(): mapping table applied
// on paper, coordinates rescaled by 105/120 and 68/80.
inline std::vector<actionlm::spadl::Action> expected_match1_actions() {
  using actionlm::spadl::Action;
  using actionlm::spadl::ActionType;
  return {
      Action{1001, 0, true, ActionType::pass, 52.5, 34.0, 1},
      Action{1001, 1, true, ActionType::throw_in, 105.0, 68.0, 1},
      Action{1001, 2, true, ActionType::receival, 78.75, 51.0, 1},
      Action{1001, 3, true, ActionType::dribble, 84.0, 54.4, 1},
      Action{1001, 4, true, ActionType::cross, 87.5, 59.5, 1},
      Action{1001, 5, true, ActionType::shot, 96.25, 34.0, 1},
      Action{1001, 6, false, ActionType::keeper_action, 5.25, 30.6, 1},
      Action{1001, 7, false, ActionType::tackle, 26.25, 17.0, 2},
      Action{1001, 8, false, ActionType::corner, 0.0, 0.0, 2},
      Action{1001, 9, true, ActionType::interception, 39.375, 25.5, 2},
  };
}

inline json match2_events() {
  json arr = json::array();
  arr.push_back(event("Pass", 30, 10, 10));
  arr.push_back(event("Ball Receipt*", 30, 20, 12));
  arr.push_back(event("Miscontrol", 30, 22, 14));
  arr.push_back(event("Ball Recovery", 40, 95, 65));
  arr.push_back(event("Clearance", 40, 80, 60));
  {
    json e = event("Pass", 30, 40, 30, 2);
    e["pass"] = {{"type", {{"name", "Free Kick"}}}};
    arr.push_back(e);
  }
  arr.push_back(event("Dribble", 30, 55, 35, 2));
  arr.push_back(event("Foul Committed", 40, 60, 38, 2));
  {
    json e = event("Duel", 40, 58, 36, 2);  // aerial duel: not in the table
    e["duel"] = {{"type", {{"name", "Aerial Lost"}}}};
    arr.push_back(e);
  }
  arr.push_back(json{{"type", {{"name", "Substitution"}}}, {"team", {{"id", 30}}}, {"period", 2}});
  return arr;
}

// Writes the fixture tree: competitions.json, matches/99/1.json and both
// event files. Competition 99 season 1 is "Test League" "2023/2024".
inline void write_fixture_source(const fs::path& root) {
  using actionlm::write_file_atomic;
  json comps = json::array();
  comps.push_back(json{{"competition_id", 99},
                       {"season_id", 1},
                       {"competition_name", "Test League"},
                       {"season_name", "2023/2024"}});
  write_file_atomic(root / "competitions.json", comps.dump(1));

  json matches = json::array();
  matches.push_back(json{{"match_id", 1001},
                         {"season", {{"season_id", 1}, {"season_name", "2023/2024"}}},
                         {"home_team", {{"home_team_id", 10}, {"home_team_name", "Alpha"}}},
                         {"away_team", {{"away_team_id", 20}, {"away_team_name", "Beta"}}}});
  matches.push_back(json{{"match_id", 1002},
                         {"season", {{"season_id", 1}, {"season_name", "2023/2024"}}},
                         {"home_team", {{"home_team_id", 30}, {"home_team_name", "Gamma"}}},
                         {"away_team", {{"away_team_id", 40}, {"away_team_name", "Delta"}}}});
  write_file_atomic(root / "matches/99/1.json", matches.dump(1));
  write_file_atomic(root / "events/1001.json", match1_events().dump(1));
  write_file_atomic(root / "events/1002.json", match2_events().dump(1));
}

}  // namespace testsupport
