#include <catch2/catch.hpp>

#include <cstdlib>

#include <json.hpp>

#include "actionlm/io.hpp"
#include "actionlm/models.hpp"
#include "actionlm/tokenizer.hpp"
#include "support/fixtures.hpp"
#include "support/synthetic.hpp"
#include "support/tmpdir.hpp"
#include "support/xmlcheck.hpp"

using namespace actionlm;
using testsupport::TmpDir;

namespace {

struct CliResult {
  int exit_code = 0;
  std::string out;
  std::string err;
};

CliResult run_cli(const std::string& args, const fs::path& scratch) {
  const fs::path out_file = scratch / "stdout.txt";
  const fs::path err_file = scratch / "stderr.txt";
  const std::string cmd =
      std::string(ACTIONLM_CLI_PATH) + " " + args + " > " + out_file.string() + " 2> " + err_file.string();
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = fs::exists(out_file) ? read_file(out_file) : "";
  r.err = fs::exists(err_file) ? read_file(err_file) : "";
  return r;
}

// A small league (12 matches, short halves) that the split accepts, shared
// across the training-path tests.
struct LeagueFixture {
  TmpDir dir{"league"};
  TmpDir cache{"cache"};
  std::string common;

  LeagueFixture() {
    testsupport::SyntheticLeague::write_league(dir.path(), 12, 99, 180, 80);
    common = "--data-source " + dir.path().string() + " --cache-dir " + cache.path().string() +
             " --competition \"Synthetic League\" --seasons 2024/2025";
  }
};

}  // namespace

TEST_CASE("ingest writes actions csv and a manifest", "[cli]") {
  TmpDir src("src"), cache("cache"), out("out"), scratch("s");
  testsupport::write_fixture_source(src.path());
  auto r = run_cli("ingest --data-source " + src.path().string() + " --cache-dir " + cache.path().string() +
                       " --competition \"Test League\" --seasons 2023/2024 --out " + out.path().string(),
                   scratch.path());
  INFO(r.err);
  REQUIRE(r.exit_code == 0);
  auto manifest = nlohmann::json::parse(read_file(out / "manifest.json"));
  CHECK(manifest.at("stats").at("match_count") == 2);
  CHECK(manifest.at("stats").at("action_count") == 18);  // 10 + 8 convertible fixture events
  CHECK(manifest.at("stats").at("dropped_missing_location") == 1);
  const std::string csv = read_file(out / "actions.csv");
  CHECK(csv.rfind("match_id,index,is_home,action_type,x,y\n", 0) == 0);
  CHECK(fs::exists(cache / "events/1001.json"));

  SECTION("second run resolves everything from the warm cache") {
    TmpDir out2("out2"), empty("empty");
    auto r2 = run_cli("ingest --data-source " + empty.path().string() + " --cache-dir " + cache.path().string() +
                          " --competition \"Test League\" --seasons 2023/2024 --out " + out2.path().string(),
                      scratch.path());
    CHECK(r2.exit_code == 0);
    CHECK(read_file(out2 / "actions.csv") == csv);
  }
}

TEST_CASE("unreachable source fails with a message on stderr", "[cli]") {
  TmpDir out("out"), scratch("s");
  auto r = run_cli("ingest --data-source /no/such/source --out " + out.path().string(), scratch.path());
  CHECK(r.exit_code != 0);
  CHECK(r.err.find("error:") != std::string::npos);
  CHECK_FALSE(fs::exists(out / "manifest.json"));
}

TEST_CASE("train and evaluate round-trip for every model kind", "[cli]") {
  LeagueFixture league;
  TmpDir scratch("s");

  SECTION("markov") {
    TmpDir out("out");
    auto r = run_cli("train " + league.common + " --model markov --out " + out.path().string(), scratch.path());
    INFO(r.err);
    REQUIRE(r.exit_code == 0);
    CHECK(fs::exists(out / "model.bin"));
    CHECK(fs::exists(out / "vocab.json"));
    auto e = run_cli("evaluate " + league.common + " --checkpoint " + (out / "model.bin").string() + " --out " +
                         out.path().string(),
                     scratch.path());
    INFO(e.err);
    REQUIRE(e.exit_code == 0);
    const std::string csv = read_file(out / "metrics.csv");
    CHECK(csv.rfind("dataset,model,accuracy,mean_log_likelihood,n\n", 0) == 0);
    // The model column reflects the checkpoint kind, not the config default.
    CHECK(csv.find("train,markov,") != std::string::npos);
    CHECK(csv.find("val,markov,") != std::string::npos);
    CHECK(csv.find("test,markov,") != std::string::npos);
  }
  SECTION("transformer-small trains deterministically") {
    TmpDir out1("o1"), out2("o2");
    const std::string args = "train " + league.common +
                             " --model transformer-small --context 4 --epochs 1 --batch-size 32 "
                             "--seed-split 5 --seed-train 11 --out ";
    auto r1 = run_cli(args + out1.path().string(), scratch.path());
    INFO(r1.err);
    REQUIRE(r1.exit_code == 0);
    auto r2 = run_cli(args + out2.path().string(), scratch.path());
    REQUIRE(r2.exit_code == 0);
    CHECK(read_file(out1 / "history.jsonl") == read_file(out2 / "history.jsonl"));
    CHECK(read_file(out1 / "model.bin") == read_file(out2 / "model.bin"));
    auto manifest = nlohmann::json::parse(read_file(out1 / "manifest.json"));
    CHECK(manifest.at("config").at("model") == "transformer-small");
    CHECK(manifest.at("inputs").contains("corpus_hash"));
  }
  SECTION("mlp trains") {
    TmpDir out("out");
    auto r = run_cli("train " + league.common + " --model mlp --context 3 --epochs 1 --out " + out.path().string(),
                     scratch.path());
    INFO(r.err);
    REQUIRE(r.exit_code == 0);
    CHECK(models::checkpoint_kind(out / "model.bin") == "mlp");
  }
}

TEST_CASE("evaluate on an untrained (zero) checkpoint is uniform", "[cli]") {
  LeagueFixture league;
  TmpDir out("out"), scratch("s");
  auto vocab = tok::Vocabulary::build_default();
  auto zero = models::TransformerModel<float>::zeros(models::TransformerConfig::small(vocab.size(), 4));
  models::save_transformer(out / "zero.bin", zero);
  auto r = run_cli("evaluate " + league.common + " --checkpoint " + (out / "zero.bin").string() + " --out " +
                       out.path().string(),
                   scratch.path());
  INFO(r.err);
  REQUIRE(r.exit_code == 0);
  // Every row's mean log likelihood is -ln V within 0.01.
  std::istringstream in(read_file(out / "metrics.csv"));
  std::string line;
  std::getline(in, line);
  long rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::size_t p1 = line.find(',', line.find(',', line.find(',') + 1) + 1);
    std::size_t p2 = line.find(',', p1 + 1);
    const double mll = std::stod(line.substr(p1 + 1, p2 - p1 - 1));
    CHECK(mll == Approx(-std::log(3200.0)).margin(0.01));
    ++rows;
  }
  CHECK(rows == 3);
}

TEST_CASE("checkpoint guards", "[cli]") {
  LeagueFixture league;
  TmpDir out("out"), scratch("s");
  auto vocab = tok::Vocabulary::build_default();
  auto m = models::TransformerModel<float>::init(models::TransformerConfig::small(vocab.size(), 4), 3);
  models::save_transformer(out / "m.bin", m);

  SECTION("tampered config is refused") {
    std::string bytes = read_file(out / "m.bin");
    const std::string needle = "\"context\":4";
    const std::size_t pos = bytes.find(needle);
    REQUIRE(pos != std::string::npos);
    bytes[pos + needle.size() - 1] = '7';
    write_file_atomic(out / "tampered.bin", bytes);
    auto r = run_cli("evaluate " + league.common + " --checkpoint " + (out / "tampered.bin").string() + " --out " +
                         out.path().string(),
                     scratch.path());
    CHECK(r.exit_code != 0);
    CHECK(r.err.find("refusing") != std::string::npos);
    CHECK(r.err.find("hash") != std::string::npos);
  }
  SECTION("contradicting --context is refused") {
    auto r = run_cli("evaluate " + league.common + " --context 9 --checkpoint " + (out / "m.bin").string() +
                         " --out " + out.path().string(),
                     scratch.path());
    CHECK(r.exit_code != 0);
    CHECK(r.err.find("refusing") != std::string::npos);
  }
  SECTION("contradicting --model is refused") {
    auto r = run_cli("evaluate " + league.common + " --model mlp --checkpoint " + (out / "m.bin").string() +
                         " --out " + out.path().string(),
                     scratch.path());
    CHECK(r.exit_code != 0);
    CHECK(r.err.find("refusing") != std::string::npos);
  }
}

TEST_CASE("generate is reproducible and decodable", "[cli]") {
  LeagueFixture league;
  TmpDir out("out"), scratch("s");
  auto vocab = tok::Vocabulary::build_default();
  auto m = models::TransformerModel<float>::init(models::TransformerConfig::small(vocab.size(), 3), 5);
  models::save_transformer(out / "m.bin", m);

  nlohmann::json seed = nlohmann::json::array();
  for (const char* t : {"True, pass, 4, 4", "True, receival, 5, 4", "True, dribble, 5, 5"}) seed.push_back(t);
  write_file_atomic(out / "seed.json", seed.dump());

  const std::string base = "generate " + league.common + " --checkpoint " + (out / "m.bin").string() +
                           " --seed-sequence " + (out / "seed.json").string() + " --n 8 --out ";
  TmpDir o1("g1"), o2("g2");
  auto r1 = run_cli(base + o1.path().string() + " --mode greedy", scratch.path());
  INFO(r1.err);
  REQUIRE(r1.exit_code == 0);
  auto r2 = run_cli(base + o2.path().string() + " --mode greedy", scratch.path());
  REQUIRE(r2.exit_code == 0);
  CHECK(read_file(o1 / "rollout.jsonl") == read_file(o2 / "rollout.jsonl"));

  // Every line parses and decodes to a known token.
  std::istringstream in(read_file(o1 / "rollout.jsonl"));
  std::string line;
  long lines = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto j = nlohmann::json::parse(line);
    CHECK_NOTHROW(vocab.id_of(tok::Token::parse(j.at("token").get<std::string>())));
    CHECK(j.at("prob").get<double>() >= 0.0);
    ++lines;
  }
  CHECK(lines == 8);

  SECTION("temperature sampling with a fixed seed is reproducible") {
    TmpDir o3("g3"), o4("g4");
    auto t1 = run_cli(base + o3.path().string() + " --mode temperature --temperature 1.5 --top-k 40 --sample-seed 7",
                      scratch.path());
    REQUIRE(t1.exit_code == 0);
    auto t2 = run_cli(base + o4.path().string() + " --mode temperature --temperature 1.5 --top-k 40 --sample-seed 7",
                      scratch.path());
    REQUIRE(t2.exit_code == 0);
    CHECK(read_file(o3 / "rollout.jsonl") == read_file(o4 / "rollout.jsonl"));
  }
  SECTION("short seed sequences are rejected") {
    write_file_atomic(out / "short.json", R"(["True, pass, 4, 4"])");
    auto r = run_cli("generate " + league.common + " --checkpoint " + (out / "m.bin").string() + " --seed-sequence " +
                         (out / "short.json").string() + " --out " + out.path().string(),
                     scratch.path());
    CHECK(r.exit_code != 0);
  }
}

TEST_CASE("embed exports the table; scale and plot chain together", "[cli]") {
  LeagueFixture league;
  TmpDir out("out"), scratch("s");
  auto vocab = tok::Vocabulary::build_default();
  auto m = models::TransformerModel<float>::init(models::TransformerConfig::small(vocab.size(), 3), 5);
  models::save_transformer(out / "m.bin", m);

  SECTION("embed") {
    auto r = run_cli("embed " + league.common + " --checkpoint " + (out / "m.bin").string() + " --projection pca" +
                         " --out " + out.path().string(),
                     scratch.path());
    INFO(r.err);
    REQUIRE(r.exit_code == 0);
    std::istringstream in(read_file(out / "embeddings.csv"));
    std::string header;
    std::getline(in, header);
    CHECK(header.rfind("id,token,is_home,action_type,bx,by,e0,", 0) == 0);
    CHECK(header.find(",e49,p0,p1") != std::string::npos);
    long rows = 0;
    std::string line;
    while (std::getline(in, line))
      if (!line.empty()) ++rows;
    CHECK(rows == vocab.size());
  }
  SECTION("scale writes csv + charts, skipping infeasible points") {
    write_file_atomic(out / "grid.json", R"({"axes": [
      {"axis": "dataset_size", "values": [1.0]},
      {"axis": "parameters", "values": [{"blocks": 1, "heads": 7}]}
    ]})");
    auto r = run_cli("scale " + league.common + " --grid " + (out / "grid.json").string() +
                         " --context 3 --epochs 1 --out " + out.path().string(),
                     scratch.path());
    INFO(r.err);
    REQUIRE(r.exit_code == 0);
    CHECK(r.err.find("not divisible") != std::string::npos);  // warning for heads 7
    const std::string csv = read_file(out / "scaling.csv");
    CHECK(csv.rfind("axis,value,val_accuracy,seed\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);  // header + the one feasible row
    CHECK(fs::exists(out / "scaling_dataset_size.svg"));

    auto p = run_cli("plot --scaling " + (out / "scaling.csv").string() + " --out " + out.path().string(),
                     scratch.path());
    REQUIRE(p.exit_code == 0);
    CHECK(testsupport::xml_well_formed(read_file(out / "scaling_dataset_size.svg")));
  }
  SECTION("plot renders rollouts and comparisons") {
    // Build two tiny rollout files by hand: same context, different final action.
    auto write_rollout = [&](const fs::path& p, const char* last) {
      std::string jsonl;
      for (const char* t : {"True, pass, 4, 4", "True, receival, 5, 4", last}) {
        nlohmann::json j{{"step", 0}, {"token_id", 0}, {"token", t}, {"is_home", true}, {"action_type", "pass"},
                         {"bx", 4},   {"by", 4},       {"x", 47.25}, {"y", 30.6},       {"prob", 0.5}};
        jsonl += j.dump() + "\n";
      }
      write_file_atomic(p, jsonl);
    };
    write_rollout(out / "gt.jsonl", "True, shot, 9, 4");
    write_rollout(out / "pred.jsonl", "True, dribble, 6, 5");
    write_file_atomic(out / "style.json", R"({"home_color": "#112233", "scale": 5.0})");
    auto r = run_cli("plot --rollout " + (out / "gt.jsonl").string() + " --compare " + (out / "gt.jsonl").string() +
                         " --pred Markov=" + (out / "pred.jsonl").string() + " --style " +
                         (out / "style.json").string() + " --out " + out.path().string(),
                     scratch.path());
    INFO(r.err);
    REQUIRE(r.exit_code == 0);
    CHECK(testsupport::xml_well_formed(read_file(out / "sequence.svg")));
    CHECK(testsupport::xml_well_formed(read_file(out / "comparison.svg")));
    CHECK(read_file(out / "sequence.svg").find("#112233") != std::string::npos);  // style applied

    // Mismatched context: different first token.
    std::string mismatched;
    for (const char* t : {"False, pass, 0, 0", "True, receival, 5, 4", "True, shot, 9, 4"}) {
      nlohmann::json j{{"token", t}};
      mismatched += j.dump() + "\n";
    }
    write_file_atomic(out / "mismatch.jsonl", mismatched);
    auto rbad = run_cli("plot --compare " + (out / "gt.jsonl").string() + " --pred X=" +
                            (out / "mismatch.jsonl").string() + " --out " + out.path().string(),
                        scratch.path());
    CHECK(rbad.exit_code != 0);
  }
}

TEST_CASE("config file precedence: flags beat file, file beats defaults", "[cli]") {
  TmpDir src("src"), cache("cache"), out_file_dir("of"), out_flag_dir("ofl"), scratch("s");
  testsupport::write_fixture_source(src.path());
  nlohmann::json cfg{{"data_source", src.path().string()},
                     {"cache_dir", cache.path().string()},
                     {"competition", "Test League"},
                     {"seasons", {"2023/2024"}},
                     {"out_dir", out_file_dir.path().string()}};
  write_file_atomic(scratch / "cfg.json", cfg.dump());

  // File out_dir applies when no flag is given.
  auto r1 = run_cli("ingest --config " + (scratch / "cfg.json").string(), scratch.path());
  INFO(r1.err);
  REQUIRE(r1.exit_code == 0);
  CHECK(fs::exists(out_file_dir / "actions.csv"));

  // The flag overrides the file.
  auto r2 = run_cli("ingest --config " + (scratch / "cfg.json").string() + " --out " + out_flag_dir.path().string(),
                    scratch.path());
  REQUIRE(r2.exit_code == 0);
  CHECK(fs::exists(out_flag_dir / "actions.csv"));
}
