#pragma once

#include <cstdint>
#include <cstdlib>
#include <string>
#include <vector>

#include <json.hpp>

#include "actionlm/errors.hpp"
#include "actionlm/io.hpp"

namespace actionlm {

// The default remote source is the public open-data repository; override via
// config file, --data-source, or the ACTIONLM_DATA_URL environment variable.
inline const char* kDefaultDataUrl = "https://raw.githubusercontent.com/statsbomb/open-data/master/data";

inline std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

// Resolved settings for one CLI run. Defaults mirror the reference training
// recipe; precedence is flags over config file over defaults.
struct RunConfig {
  std::string data_source;  // URL or local directory (open-data layout)
  std::string cache_dir = "cache";
  std::string competition = "FA Women's Super League";
  std::vector<std::string> seasons = {"2018/2019", "2019/2020", "2020/2021"};
  std::uint64_t split_seed = 1;
  std::uint64_t train_seed = 7;
  long context = 9;
  std::string model = "transformer-small";  // markov | mlp | transformer-small | transformer-large
  long epochs = -1;                          // -1: per-model default
  long batch = -1;
  double lr = -1.0;
  std::string out_dir = "out";

  RunConfig() { data_source = env_or("ACTIONLM_DATA_URL", kDefaultDataUrl); }

  void overlay_file(const nlohmann::json& j) {
    if (j.contains("data_source")) data_source = j.at("data_source").get<std::string>();
    if (j.contains("cache_dir")) cache_dir = j.at("cache_dir").get<std::string>();
    if (j.contains("competition")) competition = j.at("competition").get<std::string>();
    if (j.contains("seasons")) seasons = j.at("seasons").get<std::vector<std::string>>();
    if (j.contains("split_seed")) split_seed = j.at("split_seed").get<std::uint64_t>();
    if (j.contains("train_seed")) train_seed = j.at("train_seed").get<std::uint64_t>();
    if (j.contains("context")) context = j.at("context").get<long>();
    if (j.contains("model")) model = j.at("model").get<std::string>();
    if (j.contains("epochs")) epochs = j.at("epochs").get<long>();
    if (j.contains("batch_size")) batch = j.at("batch_size").get<long>();
    if (j.contains("lr")) lr = j.at("lr").get<double>();
    if (j.contains("out_dir")) out_dir = j.at("out_dir").get<std::string>();
  }

  nlohmann::json to_json() const {
    return {{"data_source", data_source},
            {"cache_dir", cache_dir},
            {"competition", competition},
            {"seasons", seasons},
            {"split_seed", split_seed},
            {"train_seed", train_seed},
            {"context", context},
            {"model", model},
            {"epochs", epochs},
            {"batch_size", batch},
            {"lr", lr},
            {"out_dir", out_dir}};
  }

  void validate_model() const {
    if (model != "markov" && model != "mlp" && model != "transformer-small" && model != "transformer-large")
      throw ConfigError("unknown model \"" + model + "\" (expected markov, mlp, transformer-small or transformer-large)");
  }
};

// Reproducibility record written next to every artifact. A run is fully
// determined by the resolved config, the two seeds and the input hashes.
struct RunManifest {
  std::string command;
  nlohmann::json config;
  nlohmann::json inputs = nlohmann::json::object();
  nlohmann::json outputs = nlohmann::json::object();
  nlohmann::json stats = nlohmann::json::object();

  void write(const fs::path& dir) const {
    nlohmann::json j{{"command", command}, {"config", config}, {"inputs", inputs},
                     {"outputs", outputs}, {"stats", stats}};
    write_file_atomic(dir / "manifest.json", j.dump(2) + "\n");
  }
};

}  // namespace actionlm
