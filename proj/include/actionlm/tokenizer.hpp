#pragma once

#include <cmath>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "actionlm/errors.hpp"
#include "actionlm/spadl.hpp"

namespace actionlm::tok {

// Pitch discretization: 10x10 equal rectangles of 10.5 x 6.8 yards over the
// 105 x 68 pitch. The far boundary (x = 105 or y = 68) clamps into index 9 so
// the map is total on the closed pitch.
struct Bin {
  int bx = 0;
  int by = 0;
  bool operator==(const Bin&) const = default;
};

inline Bin bin_of(double x, double y) {
  if (!(x >= 0.0 && x <= spadl::kPitchLength) || !(y >= 0.0 && y <= spadl::kPitchWidth))
    throw RangeError("bin_of: coordinates (" + std::to_string(x) + ", " + std::to_string(y) + ") outside pitch");
  int bx = static_cast<int>(std::floor(x / (spadl::kPitchLength / 10.0)));
  int by = static_cast<int>(std::floor(y / (spadl::kPitchWidth / 10.0)));
  if (bx > 9) bx = 9;
  if (by > 9) by = 9;
  return {bx, by};
}

// Center of a bin; generated tokens are placed here when coordinates are
// needed downstream.
inline double bin_center_x(int bx) { return bx * 10.5 + 5.25; }
inline double bin_center_y(int by) { return by * 6.8 + 3.4; }

struct Token {
  bool is_home = false;
  std::string action_type;
  Bin bin;

  bool operator==(const Token&) const = default;

  // Canonical form, e.g. "True, dribble, 4, 4".
  std::string text() const {
    return std::string(is_home ? "True" : "False") + ", " + action_type + ", " + std::to_string(bin.bx) + ", " +
           std::to_string(bin.by);
  }

  static Token parse(const std::string& text) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
      std::size_t comma = text.find(", ", start);
      if (comma == std::string::npos) {
        parts.push_back(text.substr(start));
        break;
      }
      parts.push_back(text.substr(start, comma - start));
      start = comma + 2;
    }
    if (parts.size() != 4 || (parts[0] != "True" && parts[0] != "False"))
      throw ParseError("not a token: \"" + text + "\"");
    Token t;
    t.is_home = parts[0] == "True";
    t.action_type = parts[1];
    try {
      t.bin.bx = std::stoi(parts[2]);
      t.bin.by = std::stoi(parts[3]);
    } catch (const std::exception&) {
      throw ParseError("not a token: \"" + text + "\"");
    }
    if (t.bin.bx < 0 || t.bin.bx > 9 || t.bin.by < 0 || t.bin.by > 9)
      throw ParseError("token bin out of range: \"" + text + "\"");
    return t;
  }
};

inline Token encode(const spadl::Action& a) {
  return Token{a.is_home, spadl::to_string(a.type), bin_of(a.x, a.y)};
}

// Closed token space: the full cartesian product team x type x bin in
// lexicographic order (team, type, bx, by). No out-of-vocabulary token can
// arise from a valid action, so there is no UNK id.
class Vocabulary {
 public:
  static Vocabulary build(const std::vector<std::string>& action_types) {
    if (action_types.empty()) throw ValidationError("build_vocabulary: empty action-type list");
    {
      std::unordered_map<std::string, int> seen;
      for (const auto& t : action_types)
        if (++seen[t] > 1) throw ValidationError("build_vocabulary: duplicate action type \"" + t + "\"");
    }
    Vocabulary v;
    v.types_ = action_types;
    for (int team = 0; team < 2; ++team)
      for (const auto& type : action_types)
        for (int bx = 0; bx < 10; ++bx)
          for (int by = 0; by < 10; ++by) v.tokens_.push_back(Token{team == 1, type, {bx, by}});
    v.index();
    return v;
  }

  static Vocabulary build_default() { return build(spadl::action_type_names()); }

  long size() const { return static_cast<long>(tokens_.size()); }

  int id_of(const Token& t) const {
    auto it = by_text_.find(t.text());
    if (it == by_text_.end()) throw LookupError("token not in vocabulary: \"" + t.text() + "\"");
    return it->second;
  }

  const Token& token_of(long id) const {
    if (id < 0 || id >= size()) throw LookupError("token id " + std::to_string(id) + " outside vocabulary of " + std::to_string(size()));
    return tokens_[static_cast<std::size_t>(id)];
  }

  const std::vector<Token>& tokens() const { return tokens_; }
  const std::vector<std::string>& action_types() const { return types_; }

  // Serialized as the ordered token-text list; id = list position.
  nlohmann::json to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& t : tokens_) arr.push_back(t.text());
    return nlohmann::json{{"tokens", arr}, {"action_types", types_}};
  }

  static Vocabulary from_json(const nlohmann::json& j) {
    Vocabulary v;
    v.types_ = j.at("action_types").get<std::vector<std::string>>();
    for (const auto& s : j.at("tokens")) v.tokens_.push_back(Token::parse(s.get<std::string>()));
    v.index();
    return v;
  }

 private:
  void index() {
    by_text_.clear();
    for (std::size_t i = 0; i < tokens_.size(); ++i) by_text_[tokens_[i].text()] = static_cast<int>(i);
  }

  std::vector<Token> tokens_;
  std::vector<std::string> types_;
  std::unordered_map<std::string, int> by_text_;
};

}  // namespace actionlm::tok
