#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "actionlm/errors.hpp"
#include "actionlm/io.hpp"
#include "actionlm/nn/param.hpp"
#include "actionlm/nn/positional.hpp"
#include "actionlm/nn/tape.hpp"
#include "actionlm/rng.hpp"

namespace actionlm::models {

constexpr double kLayerNormEps = 1e-5;
constexpr double kEmbeddingInitStd = 0.02;

// Decoder-only transformer. Small = 2 heads / 1 block, Large = 5 heads /
// 4 blocks; both share d_model 50 and feed-forward width 500.
struct TransformerConfig {
  long d_model = 50;
  long heads = 2;
  long blocks = 1;
  long ffn_hidden = 500;
  long vocab = 0;
  long context = 9;

  static TransformerConfig small(long vocab, long context = 9) {
    return TransformerConfig{50, 2, 1, 500, vocab, context};
  }
  static TransformerConfig large(long vocab, long context = 9) {
    return TransformerConfig{50, 5, 4, 500, vocab, context};
  }

  void validate() const {
    if (d_model <= 0 || heads <= 0 || blocks <= 0 || ffn_hidden <= 0 || vocab <= 0 || context <= 0)
      throw ConfigError("transformer config: all dimensions must be positive");
    if (d_model % heads != 0)
      throw ConfigError("transformer config: d_model " + std::to_string(d_model) + " not divisible by " +
                        std::to_string(heads) + " heads");
  }

  nlohmann::json to_json() const {
    return {{"kind", "transformer"}, {"d_model", d_model},     {"heads", heads},
            {"blocks", blocks},      {"ffn_hidden", ffn_hidden}, {"vocab", vocab},
            {"context", context}};
  }

  static TransformerConfig from_json(const nlohmann::json& j) {
    TransformerConfig c;
    c.d_model = j.at("d_model").get<long>();
    c.heads = j.at("heads").get<long>();
    c.blocks = j.at("blocks").get<long>();
    c.ffn_hidden = j.at("ffn_hidden").get<long>();
    c.vocab = j.at("vocab").get<long>();
    c.context = j.at("context").get<long>();
    return c;
  }
};

struct MlpConfig {
  long d_embed = 128;
  long hidden = 1024;
  long layers = 4;  // total affine layers, ReLU between
  long vocab = 0;
  long context = 9;

  void validate() const {
    if (d_embed <= 0 || hidden <= 0 || vocab <= 0 || context <= 0)
      throw ConfigError("mlp config: all dimensions must be positive");
    if (layers < 2) throw ConfigError("mlp config: need at least 2 layers");
    if (d_embed % 2 != 0) throw ConfigError("mlp config: embedding dimension must be even");
  }

  nlohmann::json to_json() const {
    return {{"kind", "mlp"},     {"d_embed", d_embed}, {"hidden", hidden},
            {"layers", layers},  {"vocab", vocab},     {"context", context}};
  }

  static MlpConfig from_json(const nlohmann::json& j) {
    MlpConfig c;
    c.d_embed = j.at("d_embed").get<long>();
    c.hidden = j.at("hidden").get<long>();
    c.layers = j.at("layers").get<long>();
    c.vocab = j.at("vocab").get<long>();
    c.context = j.at("context").get<long>();
    return c;
  }
};

// Trainable scalars in one decoder block: four biased d x d attention
// projections, the two feed-forward layers, and two layer norms.
inline long block_parameter_count(const TransformerConfig& c) {
  const long attn = 4 * (c.d_model * c.d_model + c.d_model);
  const long ffn = (c.d_model * c.ffn_hidden + c.ffn_hidden) + (c.ffn_hidden * c.d_model + c.d_model);
  const long norms = 2 * (2 * c.d_model);
  return attn + ffn + norms;
}

inline long count_parameters(const TransformerConfig& c) {
  const long embedding = c.vocab * c.d_model;
  const long head = c.d_model * c.vocab + c.vocab;
  return embedding + c.blocks * block_parameter_count(c) + head;
}

inline long count_parameters(const MlpConfig& c) {
  const long embedding = c.vocab * c.d_embed;
  const long in = c.context * c.d_embed;
  long total = embedding + (in * c.hidden + c.hidden);
  for (long l = 0; l < c.layers - 2; ++l) total += c.hidden * c.hidden + c.hidden;
  total += c.hidden * c.vocab + c.vocab;
  return total;
}

template <class Real>
const char* dtype_name() {
  if constexpr (std::is_same_v<Real, float>) return "f32";
  else return "f64";
}

// ---- transformer ----

template <class Real>
class TransformerModel {
 public:
  TransformerConfig cfg;
  nn::ParamSet<Real> params;
  nn::Tensor<Real> positions;  // [context, d_model], fixed sinusoidal table

  static TransformerModel init(const TransformerConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    TransformerModel m;
    m.cfg = cfg;
    m.positions = nn::sinusoidal_positions<Real>(cfg.context, cfg.d_model);
    Rng rng(seed);
    auto& p = m.params;
    p.add("embedding", nn::ParamSet<Real>::normal_init({cfg.vocab, cfg.d_model}, kEmbeddingInitStd, rng));
    for (long b = 0; b < cfg.blocks; ++b) {
      const std::string pre = "block" + std::to_string(b) + ".";
      for (const char* proj : {"wq", "wk", "wv", "wo"}) {
        p.add(pre + "attn." + proj, nn::ParamSet<Real>::uniform_fan_in({cfg.d_model, cfg.d_model}, cfg.d_model, rng));
        p.add(pre + "attn." + proj + ".bias", nn::Tensor<Real>({cfg.d_model}));
      }
      p.add(pre + "ln1.gain", nn::Tensor<Real>::full({cfg.d_model}, Real(1)));
      p.add(pre + "ln1.bias", nn::Tensor<Real>({cfg.d_model}));
      p.add(pre + "ffn.w1", nn::ParamSet<Real>::uniform_fan_in({cfg.d_model, cfg.ffn_hidden}, cfg.d_model, rng));
      p.add(pre + "ffn.b1", nn::Tensor<Real>({cfg.ffn_hidden}));
      p.add(pre + "ffn.w2", nn::ParamSet<Real>::uniform_fan_in({cfg.ffn_hidden, cfg.d_model}, cfg.ffn_hidden, rng));
      p.add(pre + "ffn.b2", nn::Tensor<Real>({cfg.d_model}));
      p.add(pre + "ln2.gain", nn::Tensor<Real>::full({cfg.d_model}, Real(1)));
      p.add(pre + "ln2.bias", nn::Tensor<Real>({cfg.d_model}));
    }
    p.add("head.w", nn::ParamSet<Real>::uniform_fan_in({cfg.d_model, cfg.vocab}, cfg.d_model, rng));
    p.add("head.b", nn::Tensor<Real>({cfg.vocab}));
    return m;
  }

  static TransformerModel zeros(const TransformerConfig& cfg) {
    TransformerModel m = init(cfg, 0);
    for (auto& p : m.params.items()) p.value.fill(Real(0));
    return m;
  }

  // Builds the forward graph for a window-major batch of B contexts of
  // length cfg.context. Returns the [B, vocab] logits node; *repr_out, when
  // requested, receives the [B*context, d_model] node of final per-position
  // representations (post-norm block stack output).
  //
  // Pipeline: embedding lookup -> add sinusoidal positions -> blocks of
  // (causal attention, residual, norm, feed-forward, residual, norm) ->
  // last position -> affine head.
  int forward(nn::Tape<Real>& tape, const std::int32_t* contexts, long batch, int* repr_out = nullptr) {
    const long k = cfg.context;
    std::vector<int> ids(contexts, contexts + batch * k);
    for (int id : ids)
      if (id < 0 || id >= cfg.vocab) throw ShapeError("transformer forward: token id outside vocabulary");

    int x = tape.embedding(tape.param(params.by_name("embedding")), std::move(ids));
    x = tape.add_cycled_rows(x, positions);
    for (long b = 0; b < cfg.blocks; ++b) {
      const std::string pre = "block" + std::to_string(b) + ".";
      auto lin = [&](int in, const std::string& w) {
        return tape.add_bias(tape.matmul(in, tape.param(params.by_name(pre + w))),
                             tape.param(params.by_name(pre + w + ".bias")));
      };
      int q = lin(x, "attn.wq"), kk = lin(x, "attn.wk"), v = lin(x, "attn.wv");
      int att = tape.causal_attention(q, kk, v, batch, k, cfg.heads);
      att = lin(att, "attn.wo");
      x = tape.layer_norm(tape.add(x, att), tape.param(params.by_name(pre + "ln1.gain")),
                          tape.param(params.by_name(pre + "ln1.bias")), static_cast<Real>(kLayerNormEps));
      int f = tape.add_bias(tape.matmul(x, tape.param(params.by_name(pre + "ffn.w1"))),
                            tape.param(params.by_name(pre + "ffn.b1")));
      f = tape.relu(f);
      f = tape.add_bias(tape.matmul(f, tape.param(params.by_name(pre + "ffn.w2"))),
                        tape.param(params.by_name(pre + "ffn.b2")));
      x = tape.layer_norm(tape.add(x, f), tape.param(params.by_name(pre + "ln2.gain")),
                          tape.param(params.by_name(pre + "ln2.bias")), static_cast<Real>(kLayerNormEps));
    }
    if (repr_out) *repr_out = x;
    std::vector<long> last(static_cast<std::size_t>(batch));
    for (long w = 0; w < batch; ++w) last[static_cast<std::size_t>(w)] = w * k + k - 1;
    int pooled = tape.select_rows(x, std::move(last));
    return tape.add_bias(tape.matmul(pooled, tape.param(params.by_name("head.w"))),
                         tape.param(params.by_name("head.b")));
  }

  const nn::Tensor<Real>& embedding_matrix() { return params.by_name("embedding").value; }
};

// ---- MLP baseline ----

template <class Real>
class MlpModel {
 public:
  MlpConfig cfg;
  nn::ParamSet<Real> params;
  nn::Tensor<Real> positions;  // [context, d_embed]

  static MlpModel init(const MlpConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    MlpModel m;
    m.cfg = cfg;
    m.positions = nn::sinusoidal_positions<Real>(cfg.context, cfg.d_embed);
    Rng rng(seed);
    auto& p = m.params;
    p.add("embedding", nn::ParamSet<Real>::normal_init({cfg.vocab, cfg.d_embed}, kEmbeddingInitStd, rng));
    long in = cfg.context * cfg.d_embed;
    for (long l = 0; l < cfg.layers; ++l) {
      const long out = l == cfg.layers - 1 ? cfg.vocab : cfg.hidden;
      const std::string name = "fc" + std::to_string(l);
      p.add(name + ".w", nn::ParamSet<Real>::uniform_fan_in({in, out}, in, rng));
      p.add(name + ".b", nn::Tensor<Real>({out}));
      in = out;
    }
    return m;
  }

  static MlpModel zeros(const MlpConfig& cfg) {
    MlpModel m = init(cfg, 0);
    for (auto& p : m.params.items()) p.value.fill(Real(0));
    return m;
  }

  // Embedding lookup -> positional encoding -> concatenate the window into
  // one vector -> affine/ReLU stack -> logits (softmax is applied by the
  // loss or the sampler).
  int forward(nn::Tape<Real>& tape, const std::int32_t* contexts, long batch) {
    const long k = cfg.context;
    std::vector<int> ids(contexts, contexts + batch * k);
    for (int id : ids)
      if (id < 0 || id >= cfg.vocab) throw ShapeError("mlp forward: token id outside vocabulary");
    int x = tape.embedding(tape.param(params.by_name("embedding")), std::move(ids));
    x = tape.add_cycled_rows(x, positions);
    x = tape.reshape(x, {batch, k * cfg.d_embed});
    for (long l = 0; l < cfg.layers; ++l) {
      const std::string name = "fc" + std::to_string(l);
      x = tape.add_bias(tape.matmul(x, tape.param(params.by_name(name + ".w"))),
                        tape.param(params.by_name(name + ".b")));
      if (l != cfg.layers - 1) x = tape.relu(x);
    }
    return x;
  }

  const nn::Tensor<Real>& embedding_matrix() { return params.by_name("embedding").value; }
};

// ---- checkpoints ----
// Layout: magic "ALMC", u32 version, u64 manifest length, manifest JSON
// (kind, config, config hash, dtype, parameter names/shapes in order), then
// each parameter's raw little-endian values in manifest order.

inline std::string config_hash(const nlohmann::json& config) { return hex64(fnv1a64(config.dump())); }

template <class Real>
std::string checkpoint_to_bytes(const nlohmann::json& config, const nn::ParamSet<Real>& params) {
  nlohmann::json manifest;
  manifest["format"] = 1;
  manifest["config"] = config;
  manifest["config_hash"] = config_hash(config);
  manifest["dtype"] = dtype_name<Real>();
  nlohmann::json plist = nlohmann::json::array();
  for (const auto& p : params.items()) plist.push_back({{"name", p.name}, {"shape", p.value.shape()}});
  manifest["params"] = plist;
  const std::string mstr = manifest.dump();

  std::string buf;
  buf += "ALMC";
  put_le<std::uint32_t>(buf, 1);
  put_le<std::uint64_t>(buf, mstr.size());
  buf += mstr;
  for (const auto& p : params.items()) put_array(buf, p.value.data(), static_cast<std::size_t>(p.value.numel()));
  return buf;
}

inline nlohmann::json checkpoint_manifest(const std::string& buf) {
  if (buf.size() < 16 || buf.substr(0, 4) != "ALMC") throw ParseError("checkpoint: bad magic");
  std::size_t pos = 4;
  if (get_le<std::uint32_t>(buf, pos) != 1) throw ParseError("checkpoint: unsupported version");
  const std::uint64_t mlen = get_le<std::uint64_t>(buf, pos);
  if (pos + mlen > buf.size()) throw ParseError("checkpoint: truncated manifest");
  try {
    return nlohmann::json::parse(buf.substr(pos, mlen));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("checkpoint manifest: ") + e.what());
  }
}

template <class Real>
void checkpoint_read_params(const std::string& buf, const nlohmann::json& manifest, nn::ParamSet<Real>& params) {
  if (manifest.at("dtype").get<std::string>() != dtype_name<Real>())
    throw ConfigError("checkpoint dtype " + manifest.at("dtype").get<std::string>() + " does not match build dtype " +
                      dtype_name<Real>());
  std::size_t pos = 4;
  (void)get_le<std::uint32_t>(buf, pos);
  const std::uint64_t mlen = get_le<std::uint64_t>(buf, pos);
  pos += mlen;
  const auto& plist = manifest.at("params");
  if (plist.size() != params.items().size()) throw ParseError("checkpoint: parameter list mismatch");
  std::size_t i = 0;
  for (auto& p : params.items()) {
    const auto& entry = plist[i++];
    if (entry.at("name").get<std::string>() != p.name)
      throw ParseError("checkpoint: parameter order mismatch at " + p.name);
    if (entry.at("shape").get<std::vector<long>>() != p.value.shape())
      throw ParseError("checkpoint: shape mismatch for " + p.name);
    get_array(buf, pos, p.value.data(), static_cast<std::size_t>(p.value.numel()));
  }
}

template <class Real>
void save_transformer(const fs::path& path, TransformerModel<Real>& m) {
  write_file_atomic(path, checkpoint_to_bytes(m.cfg.to_json(), m.params));
}

template <class Real>
void save_mlp(const fs::path& path, MlpModel<Real>& m) {
  write_file_atomic(path, checkpoint_to_bytes(m.cfg.to_json(), m.params));
}

inline std::string checkpoint_kind(const fs::path& path) {
  return checkpoint_manifest(read_file(path)).at("config").at("kind").get<std::string>();
}

template <class Real>
TransformerModel<Real> load_transformer(const fs::path& path) {
  const std::string buf = read_file(path);
  nlohmann::json manifest = checkpoint_manifest(buf);
  if (manifest.at("config").at("kind") != "transformer") throw ConfigError("checkpoint is not a transformer");
  auto cfg = TransformerConfig::from_json(manifest.at("config"));
  auto m = TransformerModel<Real>::init(cfg, 0);
  checkpoint_read_params(buf, manifest, m.params);
  return m;
}

template <class Real>
MlpModel<Real> load_mlp(const fs::path& path) {
  const std::string buf = read_file(path);
  nlohmann::json manifest = checkpoint_manifest(buf);
  if (manifest.at("config").at("kind") != "mlp") throw ConfigError("checkpoint is not an mlp");
  auto cfg = MlpConfig::from_json(manifest.at("config"));
  auto m = MlpModel<Real>::init(cfg, 0);
  checkpoint_read_params(buf, manifest, m.params);
  return m;
}

}  // namespace actionlm::models
