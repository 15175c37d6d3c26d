#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "actionlm/corpus.hpp"
#include "actionlm/errors.hpp"
#include "actionlm/markov.hpp"
#include "actionlm/metrics.hpp"
#include "actionlm/models.hpp"
#include "actionlm/nn/param.hpp"
#include "actionlm/nn/tape.hpp"
#include "actionlm/rng.hpp"

namespace actionlm::train {

struct TrainOptions {
  double lr = 2e-4;
  long batch = 32;
  long epochs = 6;
  std::uint64_t seed = 7;
  bool shuffle = true;

  // The stated recipes: transformer lr 2e-4 / batch 32 / 6 epochs, MLP
  // lr 2e-4 / batch 100 / 3 epochs.
  static TrainOptions transformer_defaults() { return TrainOptions{2e-4, 32, 6, 7, true}; }
  static TrainOptions mlp_defaults() { return TrainOptions{2e-4, 100, 3, 7, true}; }
};

struct EpochRecord {
  long epoch = 0;
  double mean_loss = 0.0;
  long windows = 0;
};

struct TrainResult {
  std::vector<EpochRecord> history;
};

inline std::string history_jsonl(const std::vector<EpochRecord>& history) {
  std::string out;
  for (const auto& e : history) {
    nlohmann::json j{{"epoch", e.epoch}, {"mean_loss", e.mean_loss}, {"windows", e.windows}};
    out += j.dump() + "\n";
  }
  return out;
}

// Mini-batch Adam on the mean cross-entropy of Eq-style next-token windows:
// one target per window, read from the last position. Epoch order is a
// seeded shuffle (one stream across epochs); the final partial batch is
// kept. History records the window-weighted mean training loss per epoch.
template <class Real, class Model>
TrainResult fit_model(Model& model, const corpus::WindowSet& windows, const TrainOptions& opt) {
  if (windows.count() == 0) throw ValidationError("train: no windows");
  if (windows.k != model.cfg.context)
    throw ConfigError("train: window context " + std::to_string(windows.k) + " != model context " +
                      std::to_string(model.cfg.context));
  if (windows.vocab_size != model.cfg.vocab)
    throw ConfigError("train: window vocabulary " + std::to_string(windows.vocab_size) + " != model vocabulary " +
                      std::to_string(model.cfg.vocab));
  if (opt.batch < 1 || opt.epochs < 0) throw ConfigError("train: bad batch size or epoch count");

  nn::AdamOptions adam;
  adam.lr = opt.lr;
  Rng rng(opt.seed);
  const long n = windows.count(), k = windows.k;
  std::vector<long> order(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;

  TrainResult result;
  std::vector<std::int32_t> ctx;
  std::vector<int> targets;
  nn::Tape<Real> tape;
  for (long epoch = 1; epoch <= opt.epochs; ++epoch) {
    if (opt.shuffle) rng.shuffle(order);
    double loss_sum = 0.0;
    for (long start = 0; start < n; start += opt.batch) {
      const long b = std::min(opt.batch, n - start);
      ctx.assign(static_cast<std::size_t>(b * k), 0);
      targets.assign(static_cast<std::size_t>(b), 0);
      for (long r = 0; r < b; ++r) {
        const long row = order[static_cast<std::size_t>(start + r)];
        std::copy_n(windows.context(row), k, ctx.data() + r * k);
        targets[static_cast<std::size_t>(r)] = windows.target(row);
      }
      tape.reset();
      const int logits = model.forward(tape, ctx.data(), b);
      const int loss = tape.cross_entropy(logits, targets);
      model.params.zero_grads();
      tape.backward(loss);
      nn::adam_step(model.params, adam);
      loss_sum += static_cast<double>(tape.value(loss)[0]) * static_cast<double>(b);
    }
    result.history.push_back(EpochRecord{epoch, loss_sum / static_cast<double>(n), n});
  }
  return result;
}

// A model reduced to "contexts in, double logits out". The adapter form lets
// the metric path stay identical across markov, mlp and transformer.
using BatchLogits = std::function<void(const std::int32_t* contexts, long batch, std::vector<double>& out)>;

template <class Real, class Model>
BatchLogits model_logits(Model& model) {
  return [&model](const std::int32_t* contexts, long batch, std::vector<double>& out) {
    nn::Tape<Real> tape;
    const int logits = model.forward(tape, contexts, batch);
    const nn::Tensor<Real>& v = tape.value(logits);
    out.resize(static_cast<std::size_t>(v.numel()));
    for (long i = 0; i < v.numel(); ++i) out[static_cast<std::size_t>(i)] = static_cast<double>(v[i]);
  };
}

// The Markov model as a BatchLogits: log P[last context token]. softmax of
// log p recovers p exactly, so the shared metric path reproduces
// TransitionModel::evaluate bit for bit.
inline BatchLogits markov_logits(const markov::TransitionModel& m, long k) {
  return [&m, k](const std::int32_t* contexts, long batch, std::vector<double>& out) {
    const long v = m.vocab_size();
    out.resize(static_cast<std::size_t>(batch * v));
    for (long r = 0; r < batch; ++r) {
      auto row = m.row_p(contexts[r * k + k - 1]);
      for (long j = 0; j < v; ++j) out[static_cast<std::size_t>(r * v + j)] = std::log(row[static_cast<std::size_t>(j)]);
    }
  };
}

// Window rows interleave context and target; scorers take dense contexts of
// stride k, so batches are gathered before each call.
inline Metrics evaluate(const BatchLogits& fn, long vocab, const corpus::WindowSet& windows,
                        const std::string& dataset = "eval", long batch = 256) {
  if (windows.count() == 0) throw ValidationError("evaluate: empty window list");
  MetricsAccum acc;
  std::vector<double> logits;
  std::vector<std::int32_t> ctx;
  for (long start = 0; start < windows.count(); start += batch) {
    const long b = std::min(batch, windows.count() - start);
    ctx.resize(static_cast<std::size_t>(b * windows.k));
    for (long r = 0; r < b; ++r) std::copy_n(windows.context(start + r), windows.k, ctx.data() + r * windows.k);
    fn(ctx.data(), b, logits);
    for (long r = 0; r < b; ++r) acc.add(logits.data() + r * vocab, vocab, windows.target(start + r));
  }
  return acc.finish(dataset);
}

template <class Real, class Model>
Metrics evaluate_model(Model& model, const corpus::WindowSet& windows, const std::string& dataset = "eval") {
  return evaluate(model_logits<Real>(model), model.cfg.vocab, windows, dataset);
}

// Mean cross-entropy computed directly (lse minus target logit), a separate
// numeric route from the metric path's log-softmax; the two must agree as
// mean_log_likelihood == -mean_cross_entropy.
inline double mean_cross_entropy(const BatchLogits& fn, long vocab, const corpus::WindowSet& windows,
                                 long batch = 256) {
  if (windows.count() == 0) throw ValidationError("mean_cross_entropy: empty window list");
  double total = 0.0;
  std::vector<double> logits;
  std::vector<std::int32_t> ctx;
  for (long start = 0; start < windows.count(); start += batch) {
    const long b = std::min(batch, windows.count() - start);
    ctx.resize(static_cast<std::size_t>(b * windows.k));
    for (long r = 0; r < b; ++r) std::copy_n(windows.context(start + r), windows.k, ctx.data() + r * windows.k);
    fn(ctx.data(), b, logits);
    for (long r = 0; r < b; ++r) {
      const double* row = logits.data() + r * vocab;
      double mx = row[0];
      for (long j = 1; j < vocab; ++j) mx = std::max(mx, row[j]);
      double s = 0.0;
      for (long j = 0; j < vocab; ++j) s += std::exp(row[j] - mx);
      total += (mx + std::log(s)) - row[windows.target(start + r)];
    }
  }
  return total / static_cast<double>(windows.count());
}

// ---- scaling harness ----

struct ScalingPoint {
  long blocks = 0;
  long heads = 0;
};

struct ScalingGrid {
  std::vector<double> dataset_fractions;
  std::vector<long> context_sizes;
  std::vector<ScalingPoint> parameter_points;

  bool empty() const { return dataset_fractions.empty() && context_sizes.empty() && parameter_points.empty(); }

  // { "axes": [ {"axis":"dataset_size","values":[0.25,0.5,1.0]},
  //             {"axis":"context_size","values":[1,3,9]},
  //             {"axis":"parameters","values":[{"blocks":1,"heads":2}, ...]} ] }
  static ScalingGrid from_json(const nlohmann::json& j) {
    ScalingGrid g;
    for (const auto& axis : j.at("axes")) {
      const std::string name = axis.at("axis").get<std::string>();
      if (name == "dataset_size")
        g.dataset_fractions = axis.at("values").get<std::vector<double>>();
      else if (name == "context_size")
        g.context_sizes = axis.at("values").get<std::vector<long>>();
      else if (name == "parameters")
        for (const auto& p : axis.at("values"))
          g.parameter_points.push_back(ScalingPoint{p.at("blocks").get<long>(), p.at("heads").get<long>()});
      else
        throw ConfigError("scaling grid: unknown axis \"" + name + "\"");
    }
    return g;
  }
};

struct ScalingRecord {
  std::string axis;
  double value = 0.0;
  std::optional<double> val_accuracy;  // empty for infeasible (skipped) points
  std::uint64_t seed = 0;
  std::string note;
};

inline std::string scaling_csv_header() { return "axis,value,val_accuracy,seed"; }

// Completed records only; skipped points carry a note and are reported on
// stderr by the caller.
inline std::string scaling_csv(const std::vector<ScalingRecord>& records) {
  std::string out = scaling_csv_header() + "\n";
  for (const auto& r : records)
    if (r.val_accuracy)
      out += r.axis + "," + fmt_full(r.value) + "," + fmt_full(*r.val_accuracy) + "," + std::to_string(r.seed) + "\n";
  return out;
}

struct ScalingInput {
  std::vector<corpus::TokenSegment> segments;  // the whole corpus, all matches
  corpus::Split split;
  long vocab_size = 0;
};

namespace detail {
inline std::vector<corpus::TokenSegment> segments_for(const std::vector<corpus::TokenSegment>& all,
                                                      const std::vector<long>& matches) {
  std::vector<corpus::TokenSegment> out;
  for (const auto& s : all)
    if (std::find(matches.begin(), matches.end(), s.match_id) != matches.end()) out.push_back(s);
  return out;
}
}  // namespace detail

// Retrains the base transformer from scratch at every grid point with only
// one axis changed, and records validation accuracy. Dataset size subsamples
// by match (a prefix of the shuffled train split), never by window.
template <class Real>
std::vector<ScalingRecord> scaling_run(const ScalingGrid& grid, const models::TransformerConfig& base,
                                       const ScalingInput& input, const TrainOptions& base_opt,
                                       std::uint64_t init_seed = 1) {
  if (grid.empty()) throw ValidationError("scaling_run: empty grid");
  std::vector<ScalingRecord> records;
  auto train_segments = detail::segments_for(input.segments, input.split.train);
  auto val_segments = detail::segments_for(input.segments, input.split.val);

  auto run_point = [&](const models::TransformerConfig& cfg, const std::vector<corpus::TokenSegment>& train_segs,
                       long context) -> double {
    auto train_ws = corpus::make_windows(train_segs, context, input.vocab_size);
    auto val_ws = corpus::make_windows(val_segments, context, input.vocab_size);
    auto model = models::TransformerModel<Real>::init(cfg, init_seed);
    fit_model<Real>(model, train_ws, base_opt);
    return evaluate_model<Real>(model, val_ws, "val").accuracy;
  };

  for (double fraction : grid.dataset_fractions) {
    const long n_train = static_cast<long>(input.split.train.size());
    const long take = std::max<long>(1, static_cast<long>(std::ceil(fraction * static_cast<double>(n_train))));
    std::vector<long> subset(input.split.train.begin(), input.split.train.begin() + std::min(take, n_train));
    models::TransformerConfig cfg = base;
    records.push_back(ScalingRecord{"dataset_size", fraction,
                                    run_point(cfg, detail::segments_for(input.segments, subset), base.context),
                                    base_opt.seed, ""});
  }
  for (long context : grid.context_sizes) {
    models::TransformerConfig cfg = base;
    cfg.context = context;
    records.push_back(ScalingRecord{"context_size", static_cast<double>(context),
                                    run_point(cfg, train_segments, context), base_opt.seed, ""});
  }
  for (const ScalingPoint& point : grid.parameter_points) {
    models::TransformerConfig cfg = base;
    cfg.blocks = point.blocks;
    cfg.heads = point.heads;
    if (cfg.heads <= 0 || cfg.d_model % cfg.heads != 0) {
      records.push_back(ScalingRecord{"parameters", 0.0, std::nullopt, base_opt.seed,
                                      "skipped: d_model " + std::to_string(cfg.d_model) + " not divisible by " +
                                          std::to_string(cfg.heads) + " heads"});
      continue;
    }
    const double value = static_cast<double>(models::count_parameters(cfg));
    records.push_back(
        ScalingRecord{"parameters", value, run_point(cfg, train_segments, base.context), base_opt.seed, ""});
  }
  return records;
}

}  // namespace actionlm::train
