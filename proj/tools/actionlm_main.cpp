// actionlm: next-action sequence modeling for soccer event streams.
//
// Subcommands cover the full pipeline: ingest raw event data, train a model
// (2-gram / MLP / transformer), evaluate, run the scaling grid, generate
// rollouts, export embeddings, and render plots. Every run writes a
// manifest.json that pins the resolved config, seeds and input hashes.

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "actionlm/config.hpp"
#include "actionlm/corpus.hpp"
#include "actionlm/errors.hpp"
#include "actionlm/generate.hpp"
#include "actionlm/markov.hpp"
#include "actionlm/models.hpp"
#include "actionlm/sources_http.hpp"
#include "actionlm/spadl.hpp"
#include "actionlm/tokenizer.hpp"
#include "actionlm/train.hpp"
#include "actionlm/viz/charts.hpp"
#include "actionlm/viz/embed.hpp"
#include "actionlm/viz/pitch.hpp"

namespace alm = actionlm;
using alm::fs::path;
using Real = float;  // training precision; gradient verification runs at double in the test suite

namespace {

// Tracks which flags were set explicitly so precedence is flags > file >
// defaults, and so evaluate/generate can refuse overrides that contradict a
// checkpoint.
struct CliFlags {
  std::string config_file;
  alm::RunConfig flags;  // flag values land here before overlay
  CLI::App* cmd = nullptr;

  bool set(const std::string& name) const { return cmd->count(name) > 0; }

  alm::RunConfig resolve() const {
    alm::RunConfig cfg;
    if (!config_file.empty()) {
      try {
        cfg.overlay_file(nlohmann::json::parse(alm::read_file(config_file)));
      } catch (const nlohmann::json::exception& e) {
        throw alm::ConfigError("config file " + config_file + ": " + e.what());
      }
    }
    if (set("--data-source")) cfg.data_source = flags.data_source;
    if (set("--cache-dir")) cfg.cache_dir = flags.cache_dir;
    if (set("--competition")) cfg.competition = flags.competition;
    if (set("--seasons")) cfg.seasons = flags.seasons;
    if (set("--seed-split")) cfg.split_seed = flags.split_seed;
    if (set("--seed-train")) cfg.train_seed = flags.train_seed;
    if (set("--context")) cfg.context = flags.context;
    if (set("--model")) cfg.model = flags.model;
    if (set("--epochs")) cfg.epochs = flags.epochs;
    if (set("--batch-size")) cfg.batch = flags.batch;
    if (set("--lr")) cfg.lr = flags.lr;
    if (set("--out")) cfg.out_dir = flags.out_dir;
    return cfg;
  }
};

CliFlags* add_common_options(CLI::App* cmd) {
  auto* f = new CliFlags();
  f->cmd = cmd;
  cmd->add_option("--config", f->config_file, "JSON config file (flags override file, file overrides defaults)");
  cmd->add_option("--data-source", f->flags.data_source, "open-data base URL or local directory");
  cmd->add_option("--cache-dir", f->flags.cache_dir, "raw payload cache directory");
  cmd->add_option("--competition", f->flags.competition, "competition name");
  cmd->add_option("--seasons", f->flags.seasons, "season names (e.g. 2018/2019)")->delimiter(',');
  cmd->add_option("--seed-split", f->flags.split_seed, "match split seed");
  cmd->add_option("--seed-train", f->flags.train_seed, "training seed");
  cmd->add_option("--context", f->flags.context, "context window length k");
  cmd->add_option("--model", f->flags.model, "markov | mlp | transformer-small | transformer-large");
  cmd->add_option("--epochs", f->flags.epochs, "training epochs");
  cmd->add_option("--batch-size", f->flags.batch, "batch size");
  cmd->add_option("--lr", f->flags.lr, "learning rate");
  cmd->add_option("--out", f->flags.out_dir, "output directory");
  return f;
}

struct Corpus {
  std::vector<alm::spadl::MatchInfo> matches;
  std::vector<alm::spadl::Action> actions;  // all matches, match-major
  std::vector<alm::corpus::TokenSegment> segments;
  long dropped = 0;
  std::string corpus_hash;
};

Corpus load_corpus(const alm::RunConfig& cfg, const alm::tok::Vocabulary& vocab) {
  auto source = alm::ingest::make_source(cfg.data_source);
  alm::ingest::CachingSource cached(*source, cfg.cache_dir);
  Corpus c;
  c.matches = alm::ingest::list_matches(cfg.competition, cfg.seasons, cached);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& m : c.matches) {
    auto events = alm::ingest::parse_events(m.match_id, cached.get("events/" + std::to_string(m.match_id) + ".json"));
    auto conv = alm::spadl::to_actions(events, m.home_team_id);
    c.dropped += conv.dropped_missing_location;
    auto segs = alm::corpus::tokenize_match(conv.actions, vocab);
    for (const auto& s : segs) {
      h = alm::fnv1a64(&s.match_id, sizeof(s.match_id), h);
      h = alm::fnv1a64(s.ids.data(), s.ids.size() * sizeof(std::int32_t), h);
      c.segments.push_back(std::move(s));
    }
    c.actions.insert(c.actions.end(), conv.actions.begin(), conv.actions.end());
  }
  c.corpus_hash = alm::hex64(h);
  return c;
}

std::vector<alm::corpus::TokenSegment> segments_of(const Corpus& c, const std::vector<long>& matches) {
  std::vector<alm::corpus::TokenSegment> out;
  for (const auto& s : c.segments)
    if (std::find(matches.begin(), matches.end(), s.match_id) != matches.end()) out.push_back(s);
  return out;
}

std::vector<long> match_ids(const Corpus& c) {
  std::vector<long> ids;
  for (const auto& m : c.matches) ids.push_back(m.match_id);
  return ids;
}

alm::train::TrainOptions train_options(const alm::RunConfig& cfg) {
  alm::train::TrainOptions opt = cfg.model == "mlp" ? alm::train::TrainOptions::mlp_defaults()
                                                    : alm::train::TrainOptions::transformer_defaults();
  if (cfg.epochs >= 0) opt.epochs = cfg.epochs;
  if (cfg.batch > 0) opt.batch = cfg.batch;
  if (cfg.lr > 0) opt.lr = cfg.lr;
  opt.seed = cfg.train_seed;
  return opt;
}

// Loaded checkpoint of any neural kind, exposed uniformly.
struct LoadedModel {
  std::string kind;  // "transformer" | "mlp" | "markov"
  std::optional<alm::models::TransformerModel<Real>> transformer;
  std::optional<alm::models::MlpModel<Real>> mlp;
  std::optional<alm::markov::TransitionModel> markov;
  long context = 1;
  long vocab = 0;

  alm::train::BatchLogits logits() {
    if (transformer) return alm::train::model_logits<Real>(*transformer);
    if (mlp) return alm::train::model_logits<Real>(*mlp);
    return alm::train::markov_logits(*markov, context);
  }
};

LoadedModel load_model(const path& checkpoint) {
  LoadedModel m;
  const std::string buf = alm::read_file(checkpoint);
  if (buf.size() >= 4 && buf.substr(0, 4) == "ALMT") {
    m.kind = "markov";
    m.markov = alm::markov::TransitionModel::from_bytes(buf);
    m.context = 1;
    m.vocab = m.markov->vocab_size();
    return m;
  }
  nlohmann::json manifest = alm::models::checkpoint_manifest(buf);
  const std::string stored_hash = manifest.at("config_hash").get<std::string>();
  const std::string actual_hash = alm::models::config_hash(manifest.at("config"));
  if (stored_hash != actual_hash)
    throw alm::ConfigError("refusing to run: checkpoint config hash " + stored_hash +
                           " does not match its config (" + actual_hash + "); the file is corrupt or was edited");
  m.kind = manifest.at("config").at("kind").get<std::string>();
  if (m.kind == "transformer") {
    m.transformer = alm::models::load_transformer<Real>(checkpoint);
    m.context = m.transformer->cfg.context;
    m.vocab = m.transformer->cfg.vocab;
  } else {
    m.mlp = alm::models::load_mlp<Real>(checkpoint);
    m.context = m.mlp->cfg.context;
    m.vocab = m.mlp->cfg.vocab;
  }
  return m;
}

std::string model_label(const LoadedModel& m) {
  if (m.kind == "transformer") return m.transformer->cfg.blocks == 1 ? "transformer-small" : "transformer-large";
  return m.kind;
}

void refuse_on_override(const CliFlags& f, const alm::RunConfig& cfg, const LoadedModel& m) {
  if (f.set("--context") && cfg.context != m.context)
    throw alm::ConfigError("refusing to run: --context " + std::to_string(cfg.context) +
                           " contradicts the checkpoint (context " + std::to_string(m.context) + ")");
  if (f.set("--model") && cfg.model != model_label(m))
    throw alm::ConfigError("refusing to run: --model " + cfg.model + " contradicts the checkpoint (" +
                           model_label(m) + ")");
}

// ---- subcommands ----

int run_ingest(const CliFlags& f) {
  alm::RunConfig cfg = f.resolve();
  auto vocab = alm::tok::Vocabulary::build_default();
  Corpus corpus = load_corpus(cfg, vocab);
  const path out(cfg.out_dir);
  alm::write_file_atomic(out / "actions.csv", alm::spadl::to_csv(corpus.actions));

  alm::RunManifest manifest;
  manifest.command = "ingest";
  manifest.config = cfg.to_json();
  manifest.inputs["corpus_hash"] = corpus.corpus_hash;
  manifest.outputs["actions_csv"] = "actions.csv";
  manifest.stats["match_count"] = corpus.matches.size();
  manifest.stats["action_count"] = corpus.actions.size();
  manifest.stats["dropped_missing_location"] = corpus.dropped;
  manifest.write(out);
  std::cout << "ingested " << corpus.matches.size() << " matches, " << corpus.actions.size() << " actions ("
            << corpus.dropped << " dropped for missing location) -> " << (out / "actions.csv").string() << "\n";
  return 0;
}

int run_train(const CliFlags& f) {
  alm::RunConfig cfg = f.resolve();
  cfg.validate_model();
  auto vocab = alm::tok::Vocabulary::build_default();
  Corpus corpus = load_corpus(cfg, vocab);
  auto split = alm::corpus::split_matches(match_ids(corpus), cfg.split_seed);
  auto train_segs = segments_of(corpus, split.train);
  const path out(cfg.out_dir);
  alm::write_file_atomic(out / "vocab.json", vocab.to_json().dump(2) + "\n");

  alm::RunManifest manifest;
  manifest.command = "train";
  manifest.config = cfg.to_json();
  manifest.inputs["corpus_hash"] = corpus.corpus_hash;
  manifest.inputs["vocab_hash"] = alm::hex64(alm::fnv1a64(vocab.to_json().dump()));
  manifest.outputs["checkpoint"] = "model.bin";
  manifest.outputs["history"] = "history.jsonl";
  manifest.stats["train_matches"] = split.train.size();

  if (cfg.model == "markov") {
    auto model = alm::markov::TransitionModel::fit(train_segs, vocab.size());
    model.save(out / "model.bin");
    alm::write_file_atomic(out / "history.jsonl", "");
    manifest.write(out);
    std::cout << "fitted markov model on " << split.train.size() << " matches -> " << (out / "model.bin").string()
              << "\n";
    return 0;
  }

  auto windows = alm::corpus::make_windows(train_segs, cfg.context, vocab.size());
  auto opt = train_options(cfg);
  alm::train::TrainResult result;
  if (cfg.model == "mlp") {
    alm::models::MlpConfig mc;
    mc.vocab = vocab.size();
    mc.context = cfg.context;
    auto model = alm::models::MlpModel<Real>::init(mc, cfg.train_seed);
    result = alm::train::fit_model<Real>(model, windows, opt);
    alm::models::save_mlp(out / "model.bin", model);
  } else {
    auto tc = cfg.model == "transformer-large" ? alm::models::TransformerConfig::large(vocab.size(), cfg.context)
                                               : alm::models::TransformerConfig::small(vocab.size(), cfg.context);
    auto model = alm::models::TransformerModel<Real>::init(tc, cfg.train_seed);
    result = alm::train::fit_model<Real>(model, windows, opt);
    alm::models::save_transformer(out / "model.bin", model);
  }
  alm::write_file_atomic(out / "history.jsonl", alm::train::history_jsonl(result.history));
  manifest.stats["train_windows"] = windows.count();
  manifest.stats["epochs"] = opt.epochs;
  manifest.write(out);
  std::cout << "trained " << cfg.model << " on " << windows.count() << " windows";
  if (!result.history.empty()) std::cout << ", final epoch loss " << result.history.back().mean_loss;
  std::cout << " -> " << (out / "model.bin").string() << "\n";
  return 0;
}

int run_evaluate(const CliFlags& f, const std::string& checkpoint) {
  alm::RunConfig cfg = f.resolve();
  auto vocab = alm::tok::Vocabulary::build_default();
  LoadedModel model = load_model(checkpoint);
  refuse_on_override(f, cfg, model);
  if (model.vocab != vocab.size())
    throw alm::ConfigError("refusing to run: checkpoint vocabulary " + std::to_string(model.vocab) +
                           " != current vocabulary " + std::to_string(vocab.size()));
  Corpus corpus = load_corpus(cfg, vocab);
  auto split = alm::corpus::split_matches(match_ids(corpus), cfg.split_seed);

  const path out(cfg.out_dir);
  std::string csv = alm::train::metrics_csv_header() + "\n";
  auto fn = model.logits();
  for (const auto& [name, matches] :
       {std::pair<std::string, const std::vector<long>*>{"train", &split.train},
        {"val", &split.val},
        {"test", &split.test}}) {
    auto ws = alm::corpus::make_windows(segments_of(corpus, *matches), model.context, vocab.size());
    auto metrics = alm::train::evaluate(fn, vocab.size(), ws, name);
    csv += alm::train::metrics_csv_row(metrics, model_label(model)) + "\n";
    std::cout << name << ": accuracy " << metrics.accuracy << ", mean log likelihood " << metrics.mean_log_likelihood
              << " (" << metrics.n << " windows)\n";
  }
  alm::write_file_atomic(out / "metrics.csv", csv);

  alm::RunManifest manifest;
  manifest.command = "evaluate";
  manifest.config = cfg.to_json();
  manifest.inputs["checkpoint"] = alm::hex64(alm::fnv1a64(alm::read_file(checkpoint)));
  manifest.inputs["corpus_hash"] = corpus.corpus_hash;
  manifest.outputs["metrics"] = "metrics.csv";
  manifest.write(out);
  return 0;
}

int run_scale(const CliFlags& f, const std::string& grid_file) {
  alm::RunConfig cfg = f.resolve();
  auto vocab = alm::tok::Vocabulary::build_default();
  auto grid = alm::train::ScalingGrid::from_json(nlohmann::json::parse(alm::read_file(grid_file)));
  Corpus corpus = load_corpus(cfg, vocab);

  alm::train::ScalingInput input;
  input.segments = corpus.segments;
  input.split = alm::corpus::split_matches(match_ids(corpus), cfg.split_seed);
  input.vocab_size = vocab.size();
  auto base = alm::models::TransformerConfig::small(vocab.size(), cfg.context);
  auto records = alm::train::scaling_run<Real>(grid, base, input, train_options(cfg), cfg.train_seed);
  for (const auto& r : records)
    if (!r.val_accuracy) std::cerr << "warning: " << r.axis << " point " << r.note << "\n";

  const path out(cfg.out_dir);
  alm::write_file_atomic(out / "scaling.csv", alm::train::scaling_csv(records));
  for (const auto& [axis, svg] : alm::viz::plot_scaling(records))
    alm::write_file_atomic(out / ("scaling_" + axis + ".svg"), svg);

  alm::RunManifest manifest;
  manifest.command = "scale";
  manifest.config = cfg.to_json();
  manifest.inputs["grid"] = alm::hex64(alm::fnv1a64(alm::read_file(grid_file)));
  manifest.inputs["corpus_hash"] = corpus.corpus_hash;
  manifest.outputs["scaling"] = "scaling.csv";
  manifest.write(out);
  std::cout << "wrote " << records.size() << " scaling records -> " << (out / "scaling.csv").string() << "\n";
  return 0;
}

int run_generate(const CliFlags& f, const std::string& checkpoint, const std::string& seed_file, long n_steps,
                 const std::string& mode, double temperature, long top_k, std::uint64_t sample_seed) {
  alm::RunConfig cfg = f.resolve();
  auto vocab = alm::tok::Vocabulary::build_default();
  LoadedModel model = load_model(checkpoint);
  refuse_on_override(f, cfg, model);

  nlohmann::json seed_json = nlohmann::json::parse(alm::read_file(seed_file));
  std::vector<std::int32_t> context;
  for (const auto& s : seed_json)
    context.push_back(static_cast<std::int32_t>(vocab.id_of(alm::tok::Token::parse(s.get<std::string>()))));
  if (static_cast<long>(context.size()) < model.context)
    throw alm::ValidationError("seed sequence has " + std::to_string(context.size()) + " tokens; model needs " +
                               std::to_string(model.context));
  context.erase(context.begin(), context.end() - model.context);

  alm::gen::SamplerSpec spec;
  spec.mode = mode == "greedy" ? alm::gen::SamplerSpec::Mode::greedy : alm::gen::SamplerSpec::Mode::temperature;
  spec.temperature = temperature;
  if (top_k > 0) spec.top_k = top_k;
  spec.seed = sample_seed;
  spec.validate(vocab.size());
  alm::gen::Sampler sampler(spec);

  auto fn = model.logits();
  auto steps = alm::gen::rollout(fn, vocab.size(), context, n_steps, sampler);
  const path out(cfg.out_dir);
  alm::write_file_atomic(out / "rollout.jsonl", alm::gen::rollout_jsonl(steps, vocab));

  alm::RunManifest manifest;
  manifest.command = "generate";
  manifest.config = cfg.to_json();
  manifest.config["sampler"] = {{"mode", mode}, {"temperature", temperature}, {"top_k", top_k}, {"seed", sample_seed}};
  manifest.inputs["checkpoint"] = alm::hex64(alm::fnv1a64(alm::read_file(checkpoint)));
  manifest.inputs["seed_sequence"] = alm::hex64(alm::fnv1a64(alm::read_file(seed_file)));
  manifest.outputs["rollout"] = "rollout.jsonl";
  manifest.write(out);
  std::cout << "generated " << steps.size() << " actions -> " << (out / "rollout.jsonl").string() << "\n";
  return 0;
}

int run_embed(const CliFlags& f, const std::string& checkpoint, const std::string& projection) {
  alm::RunConfig cfg = f.resolve();
  auto vocab = alm::tok::Vocabulary::build_default();
  LoadedModel model = load_model(checkpoint);
  refuse_on_override(f, cfg, model);
  if (model.kind == "markov") throw alm::ConfigError("embed: the markov model has no embedding matrix");

  const alm::nn::Tensor<Real>& emb =
      model.kind == "transformer" ? model.transformer->embedding_matrix() : model.mlp->embedding_matrix();
  std::vector<double> values(emb.values().begin(), emb.values().end());
  std::string csv =
      alm::viz::embeddings_csv(values, emb.dim(0), emb.dim(1), vocab, alm::viz::projection_from(projection));
  const path out(cfg.out_dir);
  alm::write_file_atomic(out / "embeddings.csv", csv);

  alm::RunManifest manifest;
  manifest.command = "embed";
  manifest.config = cfg.to_json();
  manifest.config["projection"] = projection;
  manifest.inputs["checkpoint"] = alm::hex64(alm::fnv1a64(alm::read_file(checkpoint)));
  manifest.outputs["embeddings"] = "embeddings.csv";
  manifest.write(out);
  std::cout << "wrote " << emb.dim(0) << " embedding rows -> " << (out / "embeddings.csv").string() << "\n";
  return 0;
}

alm::viz::PitchScene scene_from_rollout_file(const std::string& file, const std::string& title) {
  std::vector<alm::tok::Token> tokens;
  std::istringstream in(alm::read_file(file));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    tokens.push_back(alm::tok::Token::parse(nlohmann::json::parse(line).at("token").get<std::string>()));
  }
  return alm::viz::scene_from_tokens(tokens, title);
}

int run_plot(const CliFlags& f, const std::string& scaling_file, const std::string& rollout_file,
             const std::string& compare_gt, const std::vector<std::string>& preds, const std::string& style_file) {
  alm::RunConfig cfg = f.resolve();
  const path out(cfg.out_dir);
  alm::viz::PitchStyle pitch_style;
  alm::viz::ChartStyle chart_style;
  if (!style_file.empty()) {
    auto j = nlohmann::json::parse(alm::read_file(style_file));
    pitch_style = alm::viz::PitchStyle::from_json(j);
    chart_style = alm::viz::ChartStyle::from_json(j);
  }
  alm::RunManifest manifest;
  manifest.command = "plot";
  manifest.config = cfg.to_json();
  bool wrote = false;

  if (!scaling_file.empty()) {
    std::vector<alm::train::ScalingRecord> records;
    std::istringstream in(alm::read_file(scaling_file));
    std::string line;
    if (!std::getline(in, line) || line != alm::train::scaling_csv_header())
      throw alm::ParseError("scaling csv: bad header: \"" + line + "\"");
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::vector<std::string> parts;
      std::size_t start = 0;
      for (std::size_t i = 0; i <= line.size(); ++i)
        if (i == line.size() || line[i] == ',') {
          parts.push_back(line.substr(start, i - start));
          start = i + 1;
        }
      if (parts.size() != 4) throw alm::ParseError("scaling csv: expected 4 fields");
      alm::train::ScalingRecord r;
      r.axis = parts[0];
      r.value = std::stod(parts[1]);
      r.val_accuracy = std::stod(parts[2]);
      r.seed = std::stoull(parts[3]);
      records.push_back(r);
    }
    for (const auto& [axis, svg] : alm::viz::plot_scaling(records, chart_style))
      alm::write_file_atomic(out / ("scaling_" + axis + ".svg"), svg);
    manifest.inputs["scaling"] = alm::hex64(alm::fnv1a64(alm::read_file(scaling_file)));
    wrote = true;
  }
  if (!rollout_file.empty()) {
    auto scene = scene_from_rollout_file(rollout_file, "Rollout");
    alm::write_file_atomic(out / "sequence.svg", alm::viz::render_pitch(scene, pitch_style));
    manifest.inputs["rollout"] = alm::hex64(alm::fnv1a64(alm::read_file(rollout_file)));
    wrote = true;
  }
  if (!compare_gt.empty()) {
    auto gt = scene_from_rollout_file(compare_gt, "Ground truth");
    std::vector<std::pair<std::string, alm::viz::PitchScene>> panels;
    for (const auto& spec : preds) {
      std::size_t eq = spec.find('=');
      if (eq == std::string::npos) throw alm::ConfigError("--pred expects Name=rollout.jsonl, got \"" + spec + "\"");
      panels.emplace_back(spec.substr(0, eq), scene_from_rollout_file(spec.substr(eq + 1), ""));
    }
    alm::write_file_atomic(out / "comparison.svg", alm::viz::render_comparison(gt, panels, pitch_style));
    manifest.inputs["ground_truth"] = alm::hex64(alm::fnv1a64(alm::read_file(compare_gt)));
    wrote = true;
  }
  if (!wrote) throw alm::ConfigError("plot: nothing to do (pass --scaling, --rollout, or --compare)");
  manifest.write(out);
  std::cout << "plots written to " << out.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"next-action sequence modeling for soccer event streams"};
  app.require_subcommand(1);

  auto* ingest = app.add_subcommand("ingest", "fetch events and write the actions CSV");
  auto* ingest_f = add_common_options(ingest);

  auto* train = app.add_subcommand("train", "train a model and write a checkpoint");
  auto* train_f = add_common_options(train);

  auto* evaluate = app.add_subcommand("evaluate", "evaluate a checkpoint on train/val/test");
  auto* eval_f = add_common_options(evaluate);
  std::string eval_checkpoint;
  evaluate->add_option("--checkpoint", eval_checkpoint, "checkpoint file")->required();

  auto* scale = app.add_subcommand("scale", "run the scaling grid and plot it");
  auto* scale_f = add_common_options(scale);
  std::string grid_file;
  scale->add_option("--grid", grid_file, "scaling grid JSON file")->required();

  auto* generate = app.add_subcommand("generate", "roll out future actions from a seed sequence");
  auto* gen_f = add_common_options(generate);
  std::string gen_checkpoint, seed_file, mode = "greedy";
  long n_steps = 10, top_k = 0;
  double temperature = 1.0;
  std::uint64_t sample_seed = 0;
  generate->add_option("--checkpoint", gen_checkpoint)->required();
  generate->add_option("--seed-sequence", seed_file, "JSON array of token texts")->required();
  generate->add_option("--n", n_steps, "number of actions to generate");
  generate->add_option("--mode", mode, "greedy | temperature");
  generate->add_option("--temperature", temperature);
  generate->add_option("--top-k", top_k, "restrict sampling to the k most probable tokens");
  generate->add_option("--sample-seed", sample_seed);

  auto* embed = app.add_subcommand("embed", "export the action embedding table");
  auto* embed_f = add_common_options(embed);
  std::string embed_checkpoint, projection = "pca";
  embed->add_option("--checkpoint", embed_checkpoint)->required();
  embed->add_option("--projection", projection, "pca | none");

  auto* plot = app.add_subcommand("plot", "render SVGs from pipeline outputs");
  auto* plot_f = add_common_options(plot);
  std::string scaling_file, rollout_file, compare_gt, style_file;
  std::vector<std::string> preds;
  plot->add_option("--scaling", scaling_file, "scaling.csv to chart");
  plot->add_option("--rollout", rollout_file, "rollout.jsonl to draw on a pitch");
  plot->add_option("--compare", compare_gt, "ground-truth rollout.jsonl for a comparison grid");
  plot->add_option("--pred", preds, "Name=rollout.jsonl panels for --compare")->take_all();
  plot->add_option("--style", style_file, "style JSON (colors, sizes)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest) return run_ingest(*ingest_f);
    if (*train) return run_train(*train_f);
    if (*evaluate) return run_evaluate(*eval_f, eval_checkpoint);
    if (*scale) return run_scale(*scale_f, grid_file);
    if (*generate)
      return run_generate(*gen_f, gen_checkpoint, seed_file, n_steps, mode, temperature, top_k, sample_seed);
    if (*embed) return run_embed(*embed_f, embed_checkpoint, projection);
    if (*plot) return run_plot(*plot_f, scaling_file, rollout_file, compare_gt, preds, style_file);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
