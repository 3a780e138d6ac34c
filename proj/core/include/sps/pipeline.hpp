#ifndef SPS_PIPELINE_HPP
#define SPS_PIPELINE_HPP

#include <cstdint>
#include <filesystem>
#include <string>

#include "sps/corpus.hpp"
#include "sps/encoder.hpp"
#include "sps/lexical.hpp"
#include "sps/matcher.hpp"

namespace sps {

struct BetaGridSpec {
  double start = 0.1;
  double stop = 2.5;
  double step = 0.05;
};

struct PipelineConfig {
  std::filesystem::path questions_path;
  std::filesystem::path tables_path;
  std::filesystem::path embeddings_path;
  std::filesystem::path model_dir = "models";
  std::filesystem::path report_dir = "reports";

  CleaningConfig cleaning;
  LexicalConfig lexical;
  TrainConfig train;
  double beta = 0.75;
  BetaGridSpec beta_grid;
  std::size_t min_group_size = 500;
  int embedding_dim = 300;
  std::string eval_split = "test";
  std::uint64_t seed = 42;

  std::filesystem::path corpus_path() const { return model_dir / "corpus.jsonl"; }
  std::filesystem::path lexical_model_path() const { return model_dir / "lexical.bin"; }
  std::filesystem::path checkpoint_path() const { return model_dir / "checkpoint.bin"; }

  /// Derives per-component seeds from the global seed, so one --seed flag
  /// pins every stochastic stage.
  std::uint64_t seed_for(std::string_view component) const;

  /// Applies the global seed to the nested component configs.
  void fan_out_seeds();
};

PipelineConfig load_pipeline_config(const std::filesystem::path& json_path);
std::string pipeline_config_json(const PipelineConfig& config);

std::vector<double> beta_grid_values(const BetaGridSpec& spec);

// Each command returns a process exit code; unexpected failures throw.
int cmd_clean(const PipelineConfig& config);
int cmd_cluster(const PipelineConfig& config);
int cmd_train(const PipelineConfig& config);
int cmd_match(const PipelineConfig& config, const std::string& question_text);
int cmd_eval(const PipelineConfig& config);
int cmd_export_embeddings(const PipelineConfig& config);

}  // namespace sps

#endif
