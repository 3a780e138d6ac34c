#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "sps/pipeline.hpp"
#include "sps/serialize.hpp"
#include "synthetic.hpp"

using namespace sps;
namespace fs = std::filesystem;

namespace {

struct PipelineFixture {
  fs::path dir;
  PipelineConfig config;
  sps::testing::SyntheticConfig synth;
};

PipelineFixture make_fixture(const std::string& name) {
  PipelineFixture f;
  f.dir = fs::temp_directory_path() / ("sps_pipeline_" + name);
  fs::remove_all(f.dir);
  fs::create_directories(f.dir);

  f.synth.question_count = 560;
  f.synth.junk_count = 2;
  f.synth.embedding_dim = 8;
  f.synth.seed = 77;

  f.config.questions_path = f.dir / "questions.jsonl";
  f.config.tables_path = f.dir / "tables.jsonl";
  f.config.embeddings_path = f.dir / "embeddings.txt";
  f.config.model_dir = f.dir / "models";
  f.config.report_dir = f.dir / "reports";
  f.config.embedding_dim = 8;
  f.config.lexical.alpha = 5;
  f.config.lexical.k = 6;
  f.config.train.epochs = 1;
  f.config.train.batch_size = 64;
  f.config.train.hidden_size = 8;
  f.config.train.pairs_per_epoch = 300;
  f.config.seed = 99;
  f.config.fan_out_seeds();

  sps::testing::write_synthetic_dataset(f.synth, f.config.questions_path,
                                        f.config.tables_path);
  const auto corpus = sps::testing::make_synthetic_corpus(f.synth);
  sps::testing::write_synthetic_embeddings(corpus.lexicon, f.synth.embedding_dim,
                                           f.config.embeddings_path);
  return f;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t count_lines(const std::string& s) {
  std::size_t n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

}  // namespace

TEST_CASE("cmd_clean produces the corpus, report, and manifest") {
  auto f = make_fixture("clean");
  CHECK(cmd_clean(f.config) == 0);
  CHECK(fs::exists(f.config.corpus_path()));
  CHECK(fs::exists(f.config.report_dir / "cleaning_report.json"));
  CHECK(fs::exists(f.config.report_dir / "manifest_clean.json"));

  const auto report =
      nlohmann::json::parse(read_file(f.config.report_dir / "cleaning_report.json"));
  CHECK(report["retained"] == 560);
  CHECK(report["rejected"]["too_short"] == 1);
  CHECK(report["rejected"]["low_alphabetic"] == 1);
  // The points column is declared text in the fixture; the date column too.
  CHECK(report["retyped"]["to_number"] == 1);
  CHECK(report["retyped"]["to_date"] == 1);

  SUBCASE("rerun is byte-identical") {
    const auto first = read_file(f.config.corpus_path());
    CHECK(cmd_clean(f.config) == 0);
    CHECK(read_file(f.config.corpus_path()) == first);
  }

  SUBCASE("manifest names its input hashes") {
    const auto manifest =
        nlohmann::json::parse(read_file(f.config.report_dir / "manifest_clean.json"));
    CHECK(manifest["inputs"].contains(f.config.questions_path.string()));
    CHECK(manifest["inputs"].contains(f.config.tables_path.string()));
    CHECK(manifest["artifacts"].contains(f.config.corpus_path().string()));
  }
}

TEST_CASE("cmd_clean on a missing tables file names the path") {
  auto f = make_fixture("clean_missing");
  f.config.tables_path = f.dir / "does_not_exist.jsonl";
  CHECK_THROWS_WITH_AS(cmd_clean(f.config), doctest::Contains("does_not_exist"),
                       std::runtime_error);
}

TEST_CASE("cmd_cluster fits and serializes the lexical model") {
  auto f = make_fixture("cluster");
  REQUIRE(cmd_clean(f.config) == 0);
  CHECK(cmd_cluster(f.config) == 0);
  REQUIRE(fs::exists(f.config.lexical_model_path()));

  const auto loaded = load_lexical_model(f.config.lexical_model_path());
  CHECK(loaded.clusters.k == 6);
  std::size_t total = 0;
  for (const auto& members : loaded.clusters.members) total += members.size();
  CHECK(total == 448);  // 80% of 560

  SUBCASE("fixed seed rerun gives an identical model file") {
    const auto h1 = hash_file(f.config.lexical_model_path());
    CHECK(cmd_cluster(f.config) == 0);
    CHECK(hash_file(f.config.lexical_model_path()) == h1);
  }

  SUBCASE("alpha above every frequency reports an empty vocabulary") {
    f.config.lexical.alpha = 1000000;
    CHECK_THROWS_WITH_AS(cmd_cluster(f.config), doctest::Contains("empty vocabulary"),
                         std::runtime_error);
  }
}

TEST_CASE("cmd_train writes a checkpoint and a loss log") {
  auto f = make_fixture("train");
  REQUIRE(cmd_clean(f.config) == 0);
  REQUIRE(cmd_cluster(f.config) == 0);
  CHECK(cmd_train(f.config) == 0);
  REQUIRE(fs::exists(f.config.checkpoint_path()));

  const auto loss_log = read_file(f.config.report_dir / "loss_log.csv");
  CHECK(count_lines(loss_log) == 2);  // header + one epoch

  const auto ckpt = load_checkpoint(f.config.checkpoint_path());
  CHECK(ckpt.epochs_trained == 1);
  CHECK(ckpt.lstm.hidden_size() == 8);
  CHECK(ckpt.epoch_log.size() == 1);

  SUBCASE("same seed trains to an identical checkpoint") {
    const auto h1 = hash_file(f.config.checkpoint_path());
    CHECK(cmd_train(f.config) == 0);
    CHECK(hash_file(f.config.checkpoint_path()) == h1);
  }

  SUBCASE("checkpoint round-trips through its binary format") {
    save_checkpoint(f.dir / "copy.bin", ckpt);
    const auto again = load_checkpoint(f.dir / "copy.bin");
    CHECK(flatten(again.lstm, again.head) == flatten(ckpt.lstm, ckpt.head));
    CHECK(again.config.seed == ckpt.config.seed);
    CHECK(again.final_loss == ckpt.final_loss);
  }
}

TEST_CASE("cmd_match exit codes distinguish matched, rejected, and errors") {
  auto f = make_fixture("match");
  REQUIRE(cmd_clean(f.config) == 0);
  REQUIRE(cmd_cluster(f.config) == 0);
  REQUIRE(cmd_train(f.config) == 0);

  // A question identical to a training question, generous beta.
  const auto corpus = load_questions(f.config.corpus_path());
  std::string text;
  for (const auto& tok : corpus.front().tokens) {
    if (!text.empty()) text += ' ';
    text += tok;
  }
  f.config.beta = 100.0;
  CHECK(cmd_match(f.config, text) == 0);

  f.config.beta = 0.0;
  CHECK(cmd_match(f.config, text) == 2);

  CHECK(cmd_match(f.config, "") == 1);
  CHECK(cmd_match(f.config, "   ") == 1);
}

TEST_CASE("cmd_eval writes the full report with baseline rows") {
  auto f = make_fixture("eval");
  f.config.beta_grid = {0.1, 1.0, 0.1};  // 10 rows, keeps the test fast
  REQUIRE(cmd_clean(f.config) == 0);
  REQUIRE(cmd_cluster(f.config) == 0);
  REQUIRE(cmd_train(f.config) == 0);
  CHECK(cmd_eval(f.config) == 0);

  const auto report = read_file(f.config.report_dir / "eval_report.csv");
  const auto grid = beta_grid_values(f.config.beta_grid);
  CHECK(count_lines(report) == grid.size() + 3);  // header + grid + 2 baselines
  CHECK(report.find("embeddings,") != std::string::npos);
  CHECK(report.find("accept_all,") != std::string::npos);

  SUBCASE("rerun is byte-identical") {
    CHECK(cmd_eval(f.config) == 0);
    CHECK(read_file(f.config.report_dir / "eval_report.csv") == report);
  }
}

TEST_CASE("cmd_export_embeddings respects min_group_size") {
  auto f = make_fixture("export");
  REQUIRE(cmd_clean(f.config) == 0);
  REQUIRE(cmd_cluster(f.config) == 0);
  REQUIRE(cmd_train(f.config) == 0);

  SUBCASE("min_group_size 1 exports every question") {
    f.config.min_group_size = 1;
    CHECK(cmd_export_embeddings(f.config) == 0);
    const auto csv = read_file(f.config.report_dir / "hidden_states.csv");
    CHECK(count_lines(csv) == 561);  // header + all 560 questions
    CHECK(csv.rfind("id,template,d0", 0) == 0);
  }

  SUBCASE("the default threshold filters a tiny corpus to nothing") {
    CHECK(f.config.min_group_size == 500);
    CHECK(cmd_export_embeddings(f.config) == 0);
    const auto csv = read_file(f.config.report_dir / "hidden_states.csv");
    CHECK(count_lines(csv) == 1);  // header only
  }

  SUBCASE("rerun gives an identical file hash") {
    f.config.min_group_size = 1;
    CHECK(cmd_export_embeddings(f.config) == 0);
    const auto h1 = hash_file(f.config.report_dir / "hidden_states.csv");
    CHECK(cmd_export_embeddings(f.config) == 0);
    CHECK(hash_file(f.config.report_dir / "hidden_states.csv") == h1);
  }
}

TEST_CASE("pipeline config round-trips through json with flag-style overrides") {
  auto f = make_fixture("config");
  atomic_write(f.dir / "config.json", pipeline_config_json(f.config));
  const auto loaded = load_pipeline_config(f.dir / "config.json");
  CHECK(loaded.questions_path == f.config.questions_path);
  CHECK(loaded.lexical.alpha == f.config.lexical.alpha);
  CHECK(loaded.train.hidden_size == f.config.train.hidden_size);
  CHECK(loaded.seed == f.config.seed);
  // Seed fan-out is derived, not stored.
  CHECK(loaded.lexical.seed == f.config.lexical.seed);
  CHECK(loaded.train.seed == f.config.train.seed);
}

TEST_CASE("lexical model round-trips through its binary format") {
  auto f = make_fixture("lexroundtrip");
  REQUIRE(cmd_clean(f.config) == 0);
  REQUIRE(cmd_cluster(f.config) == 0);
  const auto m = load_lexical_model(f.config.lexical_model_path());
  save_lexical_model(f.dir / "copy.bin", m);
  const auto again = load_lexical_model(f.dir / "copy.bin");
  CHECK(again.vocab.words() == m.vocab.words());
  CHECK(again.clusters.centroids == m.clusters.centroids);
  CHECK(again.clusters.assignment == m.clusters.assignment);
  CHECK(again.config.alpha == m.config.alpha);
}

TEST_CASE("atomic_write never leaves a temp file behind") {
  auto dir = fs::temp_directory_path() / "sps_atomic";
  fs::create_directories(dir);
  atomic_write(dir / "out.txt", "payload");
  CHECK(read_file(dir / "out.txt") == "payload");
  CHECK_FALSE(fs::exists(dir / "out.txt.tmp"));
}
