#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "actionlm/errors.hpp"
#include "actionlm/io.hpp"
#include "actionlm/rng.hpp"
#include "actionlm/tokenizer.hpp"
#include "actionlm/train.hpp"

namespace actionlm::gen {

struct SamplerSpec {
  enum class Mode { greedy, temperature };
  Mode mode = Mode::greedy;
  double temperature = 1.0;
  std::optional<long> top_k;
  std::uint64_t seed = 0;

  void validate(long vocab) const {
    if (mode == Mode::temperature && !(temperature > 0.0))
      throw ConfigError("sampler: temperature must be positive");
    if (top_k && (*top_k < 1 || *top_k > vocab))
      throw ConfigError("sampler: top_k must be in [1, vocab]");
  }
};

// Draws tokens from logits. Deterministic: the n-th draw for a given seed is
// a pure function of (seed, n, logits).
class Sampler {
 public:
  explicit Sampler(const SamplerSpec& spec) : spec_(spec), rng_(spec.seed) {}

  const SamplerSpec& spec() const { return spec_; }

  struct Draw {
    long token = 0;
    double prob = 0.0;  // model probability of the chosen token (temperature 1)
  };

  Draw step(const std::vector<double>& logits) {
    spec_.validate(static_cast<long>(logits.size()));
    const long v = static_cast<long>(logits.size());
    // Model probabilities (temperature 1) for reporting.
    std::vector<double> model_p = softmax(logits, 1.0);
    long chosen;
    if (spec_.mode == SamplerSpec::Mode::greedy || (spec_.top_k && *spec_.top_k == 1)) {
      chosen = argmax_lowest(logits);
    } else {
      std::vector<double> p = softmax(logits, spec_.temperature);
      if (spec_.top_k && *spec_.top_k < v) {
        // Keep the top_k most probable (ties toward lower ids), renormalize.
        std::vector<long> idx(static_cast<std::size_t>(v));
        for (long i = 0; i < v; ++i) idx[static_cast<std::size_t>(i)] = i;
        std::stable_sort(idx.begin(), idx.end(), [&](long a, long b) { return p[static_cast<std::size_t>(a)] > p[static_cast<std::size_t>(b)]; });
        std::vector<double> kept(static_cast<std::size_t>(v), 0.0);
        double total = 0.0;
        for (long r = 0; r < *spec_.top_k; ++r) total += p[static_cast<std::size_t>(idx[static_cast<std::size_t>(r)])];
        for (long r = 0; r < *spec_.top_k; ++r) {
          const long i = idx[static_cast<std::size_t>(r)];
          kept[static_cast<std::size_t>(i)] = p[static_cast<std::size_t>(i)] / total;
        }
        p = std::move(kept);
      }
      chosen = sample_from(p);
    }
    return Draw{chosen, model_p[static_cast<std::size_t>(chosen)]};
  }

  static long argmax_lowest(const std::vector<double>& v) {
    long best = 0;
    for (long i = 1; i < static_cast<long>(v.size()); ++i)
      if (v[static_cast<std::size_t>(i)] > v[static_cast<std::size_t>(best)]) best = i;
    return best;
  }

  static std::vector<double> softmax(const std::vector<double>& logits, double temperature) {
    std::vector<double> p(logits.size());
    double mx = logits[0];
    for (double x : logits) mx = std::max(mx, x);
    double total = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
      p[i] = std::exp((logits[i] - mx) / temperature);
      total += p[i];
    }
    for (double& x : p) x /= total;
    return p;
  }

 private:
  long sample_from(const std::vector<double>& p) {
    const double u = rng_.uniform01();
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      acc += p[i];
      if (u < acc) return static_cast<long>(i);
    }
    return static_cast<long>(p.size()) - 1;
  }

  SamplerSpec spec_;
  Rng rng_;
};

struct RolloutStep {
  long step = 0;
  long token = 0;
  double prob = 0.0;
};

// Single next-token draw for a model exposed as BatchLogits.
inline Sampler::Draw step(const train::BatchLogits& model, long vocab, const std::vector<std::int32_t>& context,
                          Sampler& sampler) {
  std::vector<double> logits;
  model(context.data(), 1, logits);
  if (static_cast<long>(logits.size()) != vocab) throw ShapeError("step: model returned wrong logit width");
  return sampler.step(logits);
}

// Autoregressive rollout: repeatedly sample, then slide the context left by
// one and append the sampled token.
inline std::vector<RolloutStep> rollout(const train::BatchLogits& model, long vocab,
                                        std::vector<std::int32_t> context, long n_steps, Sampler& sampler) {
  if (n_steps < 1) throw ValidationError("rollout: need n_steps >= 1");
  std::vector<RolloutStep> steps;
  for (long s = 0; s < n_steps; ++s) {
    Sampler::Draw d = step(model, vocab, context, sampler);
    steps.push_back(RolloutStep{s, d.token, d.prob});
    std::copy(context.begin() + 1, context.end(), context.begin());
    context.back() = static_cast<std::int32_t>(d.token);
  }
  return steps;
}

// One JSON object per generated action: token text, decoded fields, bin
// center coordinates, and the model probability of the chosen token.
inline std::string rollout_jsonl(const std::vector<RolloutStep>& steps, const tok::Vocabulary& vocab) {
  std::string out;
  for (const auto& s : steps) {
    const tok::Token& t = vocab.token_of(s.token);
    nlohmann::json j{{"step", s.step},
                     {"token_id", s.token},
                     {"token", t.text()},
                     {"is_home", t.is_home},
                     {"action_type", t.action_type},
                     {"bx", t.bin.bx},
                     {"by", t.bin.by},
                     {"x", tok::bin_center_x(t.bin.bx)},
                     {"y", tok::bin_center_y(t.bin.by)},
                     {"prob", s.prob}};
    out += j.dump() + "\n";
  }
  return out;
}

}  // namespace actionlm::gen
