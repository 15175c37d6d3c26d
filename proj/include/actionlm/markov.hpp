#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "actionlm/corpus.hpp"
#include "actionlm/errors.hpp"
#include "actionlm/io.hpp"
#include "actionlm/metrics.hpp"

namespace actionlm::markov {

constexpr double kLaplace = 0.1;

// Laplace-smoothed 2-gram transition model. T holds smoothed successor
// counts (T[i][j] = 0.1 + #{i followed by j}); P is T row-normalized.
// Adjacent pairs are counted inside a segment only, matching the window
// policy: boundaries contribute no pairs.
class TransitionModel {
 public:
  static TransitionModel fit(const std::vector<std::vector<std::int32_t>>& sequences, long vocab_size) {
    if (vocab_size <= 0) throw ValidationError("markov fit: vocabulary size must be positive");
    TransitionModel m;
    m.v_ = vocab_size;
    m.t_.assign(static_cast<std::size_t>(vocab_size) * vocab_size, kLaplace);
    for (const auto& seq : sequences) {
      for (std::int32_t id : seq)
        if (id < 0 || id >= vocab_size) throw ValidationError("markov fit: token id outside vocabulary");
      for (std::size_t i = 0; i + 1 < seq.size(); ++i)
        m.t_[static_cast<std::size_t>(seq[i]) * vocab_size + seq[i + 1]] += 1.0;
    }
    m.normalize();
    return m;
  }

  static TransitionModel fit(const std::vector<corpus::TokenSegment>& segments, long vocab_size) {
    std::vector<std::vector<std::int32_t>> seqs;
    seqs.reserve(segments.size());
    for (const auto& s : segments) seqs.push_back(s.ids);
    return fit(seqs, vocab_size);
  }

  long vocab_size() const { return v_; }

  double t(long i, long j) const { return t_[static_cast<std::size_t>(i) * v_ + j]; }
  double p(long i, long j) const { return p_[static_cast<std::size_t>(i) * v_ + j]; }

  std::span<const double> row_p(long current) const {
    if (current < 0 || current >= v_)
      throw LookupError("markov: token id " + std::to_string(current) + " outside vocabulary of " + std::to_string(v_));
    return {p_.data() + static_cast<std::size_t>(current) * v_, static_cast<std::size_t>(v_)};
  }

  std::vector<double> next_distribution(long current) const {
    auto row = row_p(current);
    return {row.begin(), row.end()};
  }

  // Shared metric path: per window, log probabilities of row P[last context
  // token] play the role of logits (softmax of log p reproduces p exactly).
  train::Metrics evaluate(const corpus::WindowSet& windows, const std::string& dataset = "eval") const {
    if (windows.count() == 0) throw ValidationError("markov evaluate: empty window list");
    train::MetricsAccum acc;
    std::vector<double> logp(static_cast<std::size_t>(v_));
    for (long r = 0; r < windows.count(); ++r) {
      const long current = windows.context(r)[windows.k - 1];
      auto row = row_p(current);
      for (long j = 0; j < v_; ++j) logp[static_cast<std::size_t>(j)] = std::log(row[static_cast<std::size_t>(j)]);
      acc.add(logp.data(), v_, windows.target(r));
    }
    return acc.finish(dataset);
  }

  // ---- serialization ----
  // Layout: magic "ALMT", u32 vocab_size, 4-byte dtype tag "f64 ", then the
  // dense row-major T. P is recomputed on load.

  std::string to_bytes() const {
    std::string buf;
    buf += "ALMT";
    put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(v_));
    buf += "f64 ";
    put_array(buf, t_.data(), t_.size());
    return buf;
  }

  static TransitionModel from_bytes(const std::string& buf) {
    if (buf.size() < 12 || buf.substr(0, 4) != "ALMT") throw ParseError("markov file: bad magic");
    std::size_t pos = 4;
    TransitionModel m;
    m.v_ = get_le<std::uint32_t>(buf, pos);
    if (buf.substr(pos, 4) != "f64 ") throw ParseError("markov file: unsupported dtype");
    pos += 4;
    m.t_.resize(static_cast<std::size_t>(m.v_) * m.v_);
    get_array(buf, pos, m.t_.data(), m.t_.size());
    m.normalize();
    return m;
  }

  void save(const fs::path& path) const { write_file_atomic(path, to_bytes()); }
  static TransitionModel load(const fs::path& path) { return from_bytes(read_file(path)); }

 private:
  void normalize() {
    p_.resize(t_.size());
    for (long i = 0; i < v_; ++i) {
      const double* trow = t_.data() + static_cast<std::size_t>(i) * v_;
      double* prow = p_.data() + static_cast<std::size_t>(i) * v_;
      double total = 0.0;
      for (long j = 0; j < v_; ++j) total += trow[j];
      for (long j = 0; j < v_; ++j) prow[j] = trow[j] / total;
    }
  }

  long v_ = 0;
  std::vector<double> t_;
  std::vector<double> p_;
};

}  // namespace actionlm::markov
