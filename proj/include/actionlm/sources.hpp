#pragma once

#include <algorithm>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "actionlm/errors.hpp"
#include "actionlm/io.hpp"
#include "actionlm/spadl.hpp"

namespace actionlm::ingest {

// A read-only tree of JSON documents laid out like the public open-data
// repository:
//   competitions.json
//   matches/<competition_id>/<season_id>.json
//   events/<match_id>.json
class DataSource {
 public:
  virtual ~DataSource() = default;
  virtual std::string get(const std::string& rel_path) = 0;
  virtual std::string describe() const = 0;
  virtual long request_count() const { return 0; }
};

class LocalSource : public DataSource {
 public:
  explicit LocalSource(fs::path root) : root_(std::move(root)) {}

  std::string get(const std::string& rel_path) override {
    fs::path p = root_ / rel_path;
    if (!fs::exists(p)) throw NotFoundError("not found: " + p.string());
    ++requests_;
    return read_file(p);
  }

  std::string describe() const override { return root_.string(); }
  long request_count() const override { return requests_; }

 private:
  fs::path root_;
  long requests_ = 0;
};

// Serves from cache_dir when possible; fetches through the inner source and
// stores the payload verbatim otherwise. Writes are atomic (temp + rename),
// so concurrent writers of distinct files are safe.
class CachingSource : public DataSource {
 public:
  CachingSource(DataSource& inner, fs::path cache_dir) : inner_(inner), cache_dir_(std::move(cache_dir)) {}

  std::string get(const std::string& rel_path) override {
    fs::path cached = cache_dir_ / rel_path;
    if (fs::exists(cached)) return read_file(cached);
    std::string payload = inner_.get(rel_path);
    write_file_atomic(cached, payload);
    return payload;
  }

  std::string describe() const override { return inner_.describe() + " (cache: " + cache_dir_.string() + ")"; }
  long request_count() const override { return inner_.request_count(); }

 private:
  DataSource& inner_;
  fs::path cache_dir_;
};

inline bool is_url(const std::string& locator) {
  return locator.rfind("http://", 0) == 0 || locator.rfind("https://", 0) == 0;
}

// "2018/19" and "2018/2019" name the same season.
inline std::string normalize_season(const std::string& season) {
  std::size_t slash = season.find('/');
  if (slash == 4 && season.size() == 7)
    return season.substr(0, 5) + season.substr(0, 2) + season.substr(5);
  return season;
}

// All matches of a competition in the given seasons, ordered by match_id.
// An empty season list requests nothing and touches no source.
inline std::vector<spadl::MatchInfo> list_matches(const std::string& competition_name,
                                                  const std::vector<std::string>& seasons, DataSource& source) {
  if (seasons.empty()) return {};
  nlohmann::json comps;
  try {
    comps = nlohmann::json::parse(source.get("competitions.json"));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("competitions.json: ") + e.what());
  }
  std::vector<std::string> wanted;
  for (const auto& s : seasons) wanted.push_back(normalize_season(s));

  bool competition_seen = false;
  std::vector<std::pair<long, long>> comp_season_ids;  // parallel to found seasons
  std::vector<std::string> found_names;
  for (const auto& c : comps) {
    if (c.value("competition_name", "") != competition_name) continue;
    competition_seen = true;
    std::string season_name = normalize_season(c.value("season_name", ""));
    if (std::find(wanted.begin(), wanted.end(), season_name) == wanted.end()) continue;
    comp_season_ids.emplace_back(c.at("competition_id").get<long>(), c.at("season_id").get<long>());
    found_names.push_back(season_name);
  }
  if (!competition_seen) throw NotFoundError("competition not found: \"" + competition_name + "\"");
  for (const auto& w : wanted)
    if (std::find(found_names.begin(), found_names.end(), w) == found_names.end())
      throw NotFoundError("season not found for \"" + competition_name + "\": \"" + w + "\"");

  std::vector<spadl::MatchInfo> matches;
  for (std::size_t i = 0; i < comp_season_ids.size(); ++i) {
    const std::string rel =
        "matches/" + std::to_string(comp_season_ids[i].first) + "/" + std::to_string(comp_season_ids[i].second) + ".json";
    nlohmann::json arr;
    try {
      arr = nlohmann::json::parse(source.get(rel));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(rel + ": " + e.what());
    }
    for (const auto& m : arr) {
      spadl::MatchInfo info;
      try {
        info.match_id = m.at("match_id").get<long>();
        info.season = found_names[i];
        info.home_team = m.at("home_team").value("home_team_name", "");
        info.away_team = m.at("away_team").value("away_team_name", "");
        info.home_team_id = m.at("home_team").at("home_team_id").get<long>();
        info.away_team_id = m.at("away_team").at("away_team_id").get<long>();
      } catch (const nlohmann::json::exception& e) {
        throw ParseError(rel + ": match record: " + e.what());
      }
      matches.push_back(info);
    }
  }
  std::sort(matches.begin(), matches.end(),
            [](const spadl::MatchInfo& a, const spadl::MatchInfo& b) { return a.match_id < b.match_id; });
  return matches;
}

inline double clamp(double v, double lo, double hi) { return v < lo ? lo : (v > hi ? hi : v); }

// Parse one events/<match_id>.json payload into the fields conversion needs.
inline std::vector<spadl::RawEvent> parse_events(long match_id, const std::string& payload) {
  const std::string doc = "events/" + std::to_string(match_id) + ".json";
  nlohmann::json arr;
  try {
    arr = nlohmann::json::parse(payload);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(doc + ": " + e.what());
  }
  if (!arr.is_array()) throw ParseError(doc + ": expected a top-level array");
  std::vector<spadl::RawEvent> events;
  events.reserve(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const auto& e = arr[i];
    try {
      spadl::RawEvent ev;
      ev.match_id = match_id;
      ev.event_type = e.at("type").at("name").get<std::string>();
      ev.team_id = e.contains("team") ? e.at("team").value("id", 0L) : 0L;
      ev.period = e.value("period", 1);
      ev.timestamp = e.value("timestamp", "");
      if (e.contains("location") && e.at("location").is_array() && e.at("location").size() >= 2) {
        ev.has_location = true;
        ev.x = clamp(e.at("location")[0].get<double>(), 0.0, spadl::kProviderLength);
        ev.y = clamp(e.at("location")[1].get<double>(), 0.0, spadl::kProviderWidth);
      }
      if (e.contains("pass")) {
        const auto& pass = e.at("pass");
        if (pass.contains("type") && pass.at("type").contains("name"))
          ev.qualifiers["pass_type"] = pass.at("type").at("name").get<std::string>();
        if (pass.value("cross", false)) ev.qualifiers["cross"] = "true";
      }
      if (e.contains("duel") && e.at("duel").contains("type") && e.at("duel").at("type").contains("name"))
        ev.qualifiers["duel_type"] = e.at("duel").at("type").at("name").get<std::string>();
      events.push_back(std::move(ev));
    } catch (const nlohmann::json::exception& ex) {
      throw ParseError(doc + ": record " + std::to_string(i) + ": " + ex.what());
    }
  }
  return events;
}

// Fetch one match's events, writing the raw payload through the cache.
// Repeated calls are served from cache_dir with zero further requests.
inline std::vector<spadl::RawEvent> fetch_events(long match_id, DataSource& source, const fs::path& cache_dir) {
  CachingSource cached(source, cache_dir);
  return parse_events(match_id, cached.get("events/" + std::to_string(match_id) + ".json"));
}

}  // namespace actionlm::ingest
