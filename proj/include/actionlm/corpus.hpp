#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "actionlm/errors.hpp"
#include "actionlm/io.hpp"
#include "actionlm/rng.hpp"
#include "actionlm/spadl.hpp"
#include "actionlm/tokenizer.hpp"

namespace actionlm::corpus {

// Match-level split. Never splits inside a match: every window of a match
// lands in exactly one subset.
struct Split {
  std::vector<long> train, val, test;
  std::uint64_t seed = 0;
};

// 80/10/10 by match count. Sizes are round(n/10) for val and test (ties round
// up), remainder to train: 326 -> 260/33/33, 10 -> 8/1/1. Deterministic for a
// given seed; input order does not matter.
inline Split split_matches(std::vector<long> match_ids, std::uint64_t seed) {
  if (match_ids.size() < 10)
    throw ValidationError("split_matches: need at least 10 matches, got " + std::to_string(match_ids.size()));
  std::sort(match_ids.begin(), match_ids.end());
  Rng rng(seed);
  rng.shuffle(match_ids);
  const long n = static_cast<long>(match_ids.size());
  const long n_hold = static_cast<long>(std::floor(static_cast<double>(n) / 10.0 + 0.5));
  Split s;
  s.seed = seed;
  s.val.assign(match_ids.begin(), match_ids.begin() + n_hold);
  s.test.assign(match_ids.begin() + n_hold, match_ids.begin() + 2 * n_hold);
  s.train.assign(match_ids.begin() + 2 * n_hold, match_ids.end());
  return s;
}

// One uninterrupted play sequence: a (match, period) run of token ids.
// Windows and transition counts never cross segment boundaries.
struct TokenSegment {
  long match_id = 0;
  int period = 1;
  std::vector<std::int32_t> ids;
};

// Tokenize a match's actions into per-period segments.
inline std::vector<TokenSegment> tokenize_match(const std::vector<spadl::Action>& actions,
                                                const tok::Vocabulary& vocab) {
  std::vector<TokenSegment> segments;
  for (const spadl::Action& a : actions) {
    if (segments.empty() || segments.back().period != a.period || segments.back().match_id != a.match_id)
      segments.push_back(TokenSegment{a.match_id, a.period, {}});
    segments.back().ids.push_back(static_cast<std::int32_t>(vocab.id_of(tok::encode(a))));
  }
  return segments;
}

// Fixed-length next-token windows. Row r holds k context ids then the target,
// laid out contiguously. match_of tags each window with its source match for
// split bookkeeping and tests; it is not part of the serialized format.
struct WindowSet {
  long k = 0;
  long vocab_size = 0;
  std::vector<std::int32_t> data;      // count * (k+1)
  std::vector<long> match_of;

  long count() const { return k == 0 ? 0 : static_cast<long>(data.size()) / (k + 1); }
  const std::int32_t* context(long r) const { return data.data() + r * (k + 1); }
  std::int32_t target(long r) const { return data[static_cast<std::size_t>(r * (k + 1) + k)]; }
};

// Sliding windows of stride 1 inside each segment. A segment with n tokens
// yields max(0, n - k) windows; no window crosses a segment boundary and the
// first k tokens of a segment are only ever context.
inline WindowSet make_windows(const std::vector<TokenSegment>& segments, long k, long vocab_size) {
  if (k < 1) throw ValidationError("make_windows: context length must be >= 1");
  WindowSet ws;
  ws.k = k;
  ws.vocab_size = vocab_size;
  for (const TokenSegment& seg : segments) {
    const long n = static_cast<long>(seg.ids.size());
    for (std::int32_t id : seg.ids)
      if (id < 0 || id >= vocab_size) throw ValidationError("make_windows: token id outside vocabulary");
    for (long i = k; i < n; ++i) {
      ws.data.insert(ws.data.end(), seg.ids.begin() + (i - k), seg.ids.begin() + (i + 1));
      ws.match_of.push_back(seg.match_id);
    }
  }
  return ws;
}

// Convenience: windows over plain id sequences (tests, synthetic corpora).
inline WindowSet make_windows(const std::vector<std::vector<std::int32_t>>& sequences, long k, long vocab_size) {
  std::vector<TokenSegment> segments;
  for (std::size_t i = 0; i < sequences.size(); ++i)
    segments.push_back(TokenSegment{static_cast<long>(i), 1, sequences[i]});
  return make_windows(segments, k, vocab_size);
}

inline WindowSet filter_by_matches(const WindowSet& ws, const std::vector<long>& matches) {
  WindowSet out;
  out.k = ws.k;
  out.vocab_size = ws.vocab_size;
  for (long r = 0; r < ws.count(); ++r)
    if (std::find(matches.begin(), matches.end(), ws.match_of[static_cast<std::size_t>(r)]) != matches.end()) {
      out.data.insert(out.data.end(), ws.context(r), ws.context(r) + ws.k + 1);
      out.match_of.push_back(ws.match_of[static_cast<std::size_t>(r)]);
    }
  return out;
}

// ---- binary window file ----
// Layout: magic "ALMW", u32 k, u32 vocab_size, u64 count, then count records
// of (k+1) little-endian i32 token ids. Provenance tags are not stored.

inline std::string windows_to_bytes(const WindowSet& ws) {
  std::string buf;
  buf += "ALMW";
  put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(ws.k));
  put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(ws.vocab_size));
  put_le<std::uint64_t>(buf, static_cast<std::uint64_t>(ws.count()));
  for (std::int32_t v : ws.data) put_le<std::int32_t>(buf, v);
  return buf;
}

inline WindowSet windows_from_bytes(const std::string& buf) {
  if (buf.size() < 4 || buf.substr(0, 4) != "ALMW") throw ParseError("window file: bad magic");
  std::size_t pos = 4;
  WindowSet ws;
  ws.k = get_le<std::uint32_t>(buf, pos);
  ws.vocab_size = get_le<std::uint32_t>(buf, pos);
  const std::uint64_t count = get_le<std::uint64_t>(buf, pos);
  ws.data.resize(count * static_cast<std::uint64_t>(ws.k + 1));
  for (auto& v : ws.data) v = get_le<std::int32_t>(buf, pos);
  ws.match_of.assign(count, -1);
  return ws;
}

inline void save_windows(const fs::path& path, const WindowSet& ws) { write_file_atomic(path, windows_to_bytes(ws)); }
inline WindowSet load_windows(const fs::path& path) { return windows_from_bytes(read_file(path)); }

}  // namespace actionlm::corpus
