// sps: learn and apply SQL-template similarity between natural-language
// questions. Subcommands: clean, cluster, train, match, eval,
// export-embeddings.

#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "sps/pipeline.hpp"

int main(int argc, char** argv) {
  CLI::App app{"SQL-template similarity pipeline"};
  app.require_subcommand(1);

  sps::PipelineConfig config;
  std::string config_file;

  app.add_option("--config", config_file, "JSON config file; flags override its values")
      ->check(CLI::ExistingFile);

  // Shared flags; each mirrors a PipelineConfig field.
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--questions", config.questions_path, "WikiSQL-format questions file");
    cmd->add_option("--tables", config.tables_path, "WikiSQL-format tables file");
    cmd->add_option("--embeddings", config.embeddings_path, "word-vector text file");
    cmd->add_option("--model-dir", config.model_dir, "model artifact directory");
    cmd->add_option("--report-dir", config.report_dir, "report output directory");
    cmd->add_option("--seed", config.seed, "global seed");
    cmd->add_option("--alpha", config.lexical.alpha, "vocabulary frequency threshold");
    cmd->add_option("--k", config.lexical.k, "k-means cluster count");
    cmd->add_option("--epochs", config.train.epochs);
    cmd->add_option("--batch-size", config.train.batch_size);
    cmd->add_option("--learning-rate", config.train.learning_rate);
    cmd->add_option("--hidden-size", config.train.hidden_size);
    cmd->add_option("--pairs-per-epoch", config.train.pairs_per_epoch);
    cmd->add_option("--max-sequence", config.train.max_sequence);
    cmd->add_option("--embedding-dim", config.embedding_dim);
    cmd->add_option("--beta", config.beta, "rejection threshold");
    cmd->add_option("--beta-grid-start", config.beta_grid.start);
    cmd->add_option("--beta-grid-stop", config.beta_grid.stop);
    cmd->add_option("--beta-grid-step", config.beta_grid.step);
    cmd->add_option("--min-group-size", config.min_group_size);
    cmd->add_option("--min-tokens", config.cleaning.min_tokens);
    cmd->add_option("--min-alpha-frac", config.cleaning.min_alphabetic_fraction);
    cmd->add_option("--eval-split", config.eval_split, "dev or test");
  };

  auto* clean = app.add_subcommand("clean", "load, retype, filter, tokenize");
  auto* cluster = app.add_subcommand("cluster", "build vocabulary and k-means model");
  auto* train = app.add_subcommand("train", "train the Siamese LSTM regressor");
  auto* match_cmd = app.add_subcommand("match", "match one question (exit 0/2)");
  auto* eval = app.add_subcommand("eval", "beta sweep plus baselines");
  auto* export_cmd = app.add_subcommand("export-embeddings", "hidden-state table");

  std::string question_text;
  match_cmd->add_option("question", question_text, "question text")->required();

  for (auto* cmd : {clean, cluster, train, match_cmd, eval, export_cmd}) add_common(cmd);

  // Load the config file first so command-line flags win.
  app.preparse_callback([&](std::size_t) {
    for (int i = 1; i < argc - 1; ++i) {
      if (std::string(argv[i]) == "--config") {
        config = sps::load_pipeline_config(argv[i + 1]);
      }
    }
  });

  CLI11_PARSE(app, argc, argv);
  config.fan_out_seeds();

  try {
    if (*clean) return sps::cmd_clean(config);
    if (*cluster) return sps::cmd_cluster(config);
    if (*train) return sps::cmd_train(config);
    if (*match_cmd) return sps::cmd_match(config, question_text);
    if (*eval) return sps::cmd_eval(config);
    if (*export_cmd) return sps::cmd_export_embeddings(config);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
