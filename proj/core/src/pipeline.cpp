#include "sps/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "sps/eval.hpp"
#include "sps/serialize.hpp"

namespace sps {

using nlohmann::json;

std::uint64_t PipelineConfig::seed_for(std::string_view component) const {
  std::uint64_t h = fnv1a(component);
  h ^= seed + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  return h;
}

void PipelineConfig::fan_out_seeds() {
  lexical.seed = seed_for("cluster");
  train.seed = seed_for("train");
}

std::vector<double> beta_grid_values(const BetaGridSpec& spec) {
  std::vector<double> grid;
  for (int i = 0;; ++i) {
    const double b = spec.start + spec.step * i;
    if (b > spec.stop + 1e-9) break;
    grid.push_back(b);
  }
  return grid;
}

namespace {

template <typename T>
void maybe_get(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void maybe_get_path(const json& j, const char* key, std::filesystem::path& out) {
  if (j.contains(key)) out = j.at(key).get<std::string>();
}

}  // namespace

PipelineConfig load_pipeline_config(const std::filesystem::path& json_path) {
  std::ifstream in(json_path);
  if (!in) throw std::runtime_error("cannot open config file: " + json_path.string());
  json j = json::parse(in);

  PipelineConfig c;
  maybe_get_path(j, "questions", c.questions_path);
  maybe_get_path(j, "tables", c.tables_path);
  maybe_get_path(j, "embeddings", c.embeddings_path);
  maybe_get_path(j, "model_dir", c.model_dir);
  maybe_get_path(j, "report_dir", c.report_dir);
  maybe_get(j, "min_tokens", c.cleaning.min_tokens);
  maybe_get(j, "min_alphabetic_fraction", c.cleaning.min_alphabetic_fraction);
  maybe_get(j, "alpha", c.lexical.alpha);
  maybe_get(j, "k", c.lexical.k);
  maybe_get(j, "kmeans_max_iterations", c.lexical.max_iterations);
  maybe_get(j, "epochs", c.train.epochs);
  maybe_get(j, "batch_size", c.train.batch_size);
  maybe_get(j, "learning_rate", c.train.learning_rate);
  maybe_get(j, "clip_norm", c.train.clip_norm);
  maybe_get(j, "max_sequence", c.train.max_sequence);
  maybe_get(j, "pairs_per_epoch", c.train.pairs_per_epoch);
  maybe_get(j, "hidden_size", c.train.hidden_size);
  maybe_get(j, "beta", c.beta);
  maybe_get(j, "beta_grid_start", c.beta_grid.start);
  maybe_get(j, "beta_grid_stop", c.beta_grid.stop);
  maybe_get(j, "beta_grid_step", c.beta_grid.step);
  maybe_get(j, "min_group_size", c.min_group_size);
  maybe_get(j, "embedding_dim", c.embedding_dim);
  maybe_get(j, "eval_split", c.eval_split);
  maybe_get(j, "seed", c.seed);
  c.fan_out_seeds();
  return c;
}

std::string pipeline_config_json(const PipelineConfig& c) {
  json j{{"questions", c.questions_path.string()},
         {"tables", c.tables_path.string()},
         {"embeddings", c.embeddings_path.string()},
         {"model_dir", c.model_dir.string()},
         {"report_dir", c.report_dir.string()},
         {"min_tokens", c.cleaning.min_tokens},
         {"min_alphabetic_fraction", c.cleaning.min_alphabetic_fraction},
         {"alpha", c.lexical.alpha},
         {"k", c.lexical.k},
         {"kmeans_max_iterations", c.lexical.max_iterations},
         {"epochs", c.train.epochs},
         {"batch_size", c.train.batch_size},
         {"learning_rate", c.train.learning_rate},
         {"clip_norm", c.train.clip_norm},
         {"max_sequence", c.train.max_sequence},
         {"pairs_per_epoch", c.train.pairs_per_epoch},
         {"hidden_size", c.train.hidden_size},
         {"beta", c.beta},
         {"beta_grid_start", c.beta_grid.start},
         {"beta_grid_stop", c.beta_grid.stop},
         {"beta_grid_step", c.beta_grid.step},
         {"min_group_size", c.min_group_size},
         {"embedding_dim", c.embedding_dim},
         {"eval_split", c.eval_split},
         {"seed", c.seed}};
  return j.dump(2);
}

namespace {

constexpr const char* kToolVersion = "0.1.0";

void write_manifest(const PipelineConfig& config, const std::string& command,
                    const std::vector<std::filesystem::path>& inputs,
                    const std::vector<std::filesystem::path>& artifacts) {
  json j;
  j["command"] = command;
  j["tool_version"] = kToolVersion;
  j["timestamp"] = static_cast<std::int64_t>(
      std::chrono::duration_cast<std::chrono::seconds>(
          std::chrono::system_clock::now().time_since_epoch())
          .count());
  j["config"] = json::parse(pipeline_config_json(config));
  json in_hashes = json::object();
  for (const auto& p : inputs) in_hashes[p.string()] = hash_hex(hash_file(p));
  j["inputs"] = in_hashes;
  json out_hashes = json::object();
  for (const auto& p : artifacts) out_hashes[p.string()] = hash_hex(hash_file(p));
  j["artifacts"] = out_hashes;
  atomic_write(config.report_dir / ("manifest_" + command + ".json"), j.dump(2) + "\n");
}

std::vector<Question> questions_of_split(const std::vector<Question>& all, Split split) {
  std::vector<Question> out;
  for (const auto& q : all) {
    if (q.split == split) out.push_back(q);
  }
  return out;
}

struct LoadedStack {
  std::vector<Question> corpus;
  LexicalModelFile lexical;
  std::shared_ptr<const EmbeddingTable> embeddings;
  SiameseModel model;
};

LoadedStack load_stack(const PipelineConfig& config) {
  LoadedStack s;
  s.corpus = load_questions(config.corpus_path());
  s.lexical = load_lexical_model(config.lexical_model_path());
  s.embeddings = std::make_shared<EmbeddingTable>(
      load_embeddings(config.embeddings_path, config.embedding_dim));
  s.model = to_model(load_checkpoint(config.checkpoint_path()), s.embeddings);
  return s;
}

std::string format_double(double v) {
  std::ostringstream ss;
  ss.precision(12);
  ss << v;
  return ss.str();
}

std::string eval_row_csv(const std::string& key, const EvalRow& row) {
  return key + "," + format_double(row.accuracy_non_rejected) + "," +
         format_double(row.accuracy_all) + "," + format_double(row.pct_rejected) + "," +
         format_double(row.pct_incorrectly_rejected) + "," + std::to_string(row.n_test) +
         "\n";
}

}  // namespace

int cmd_clean(const PipelineConfig& config) {
  Dataset ds = load_dataset(config.questions_path, config.tables_path);
  CleaningReport report;
  for (auto& [id, schema] : ds.tables) schema = infer_column_types(std::move(schema), &report);

  auto [questions, clean_report] = clean_questions(ds.records, ds.tables, config.cleaning);
  clean_report.retyped_to_number = report.retyped_to_number;
  clean_report.retyped_to_date = report.retyped_to_date;
  if (questions.empty()) {
    std::cerr << "clean: no questions retained\n";
    return 1;
  }
  save_questions(config.corpus_path(), questions);
  atomic_write(config.report_dir / "cleaning_report.json",
               cleaning_report_json(clean_report));
  write_manifest(config, "clean", {config.questions_path, config.tables_path},
                 {config.corpus_path(), config.report_dir / "cleaning_report.json"});
  std::cout << "clean: retained " << clean_report.retained << " of "
            << clean_report.input_count << " questions\n";
  return 0;
}

int cmd_cluster(const PipelineConfig& config) {
  const auto corpus = load_questions(config.corpus_path());
  const auto train_qs = questions_of_split(corpus, Split::Train);

  LexicalModelFile m;
  m.config = config.lexical;
  m.vocab = build_vocab(train_qs, config.lexical.alpha);

  std::vector<OneHotVector> vectors;
  std::vector<std::string> ids;
  vectors.reserve(train_qs.size());
  for (const auto& q : train_qs) {
    vectors.push_back(encode(q, m.vocab));
    ids.push_back(q.id);
  }
  m.clusters = kmeans_fit(vectors, ids, m.vocab.size(), config.lexical);
  save_lexical_model(config.lexical_model_path(), m);

  std::size_t min_size = std::numeric_limits<std::size_t>::max(), max_size = 0;
  for (const auto& members : m.clusters.members) {
    min_size = std::min(min_size, members.size());
    max_size = std::max(max_size, members.size());
  }
  write_manifest(config, "cluster", {config.corpus_path()},
                 {config.lexical_model_path()});
  std::cout << "cluster: |V|=" << m.vocab.size() << " k=" << m.clusters.k
            << " mean_size="
            << static_cast<double>(train_qs.size()) / static_cast<double>(m.clusters.k)
            << " min_size=" << min_size << " max_size=" << max_size
            << " iterations=" << m.clusters.iterations << "\n";
  return 0;
}

int cmd_train(const PipelineConfig& config) {
  const auto corpus = load_questions(config.corpus_path());
  const auto train_qs = questions_of_split(corpus, Split::Train);
  const auto lexical = load_lexical_model(config.lexical_model_path());
  auto embeddings = std::make_shared<EmbeddingTable>(
      load_embeddings(config.embeddings_path, config.embedding_dim));

  std::vector<EpochLog> log;
  SiameseModel model = train(train_qs, lexical.clusters, embeddings, config.train, &log);

  Checkpoint ckpt;
  ckpt.lstm = model.lstm;
  ckpt.head = model.head;
  ckpt.config = config.train;
  ckpt.config_hash = fnv1a(pipeline_config_json(config));
  ckpt.vocab_hash = hash_file(config.lexical_model_path());
  ckpt.embedding_hash = hash_file(config.embeddings_path);
  ckpt.epochs_trained = model.epochs_trained;
  ckpt.final_loss = model.final_loss;
  ckpt.epoch_log = log;
  save_checkpoint(config.checkpoint_path(), ckpt);

  std::string loss_csv = "epoch,mean_loss\n";
  for (const auto& e : log) {
    loss_csv += std::to_string(e.epoch) + "," + format_double(e.mean_loss) + "\n";
  }
  atomic_write(config.report_dir / "loss_log.csv", loss_csv);
  write_manifest(config, "train",
                 {config.corpus_path(), config.lexical_model_path(),
                  config.embeddings_path},
                 {config.checkpoint_path(), config.report_dir / "loss_log.csv"});
  std::cout << "train: epochs=" << model.epochs_trained
            << " final_loss=" << model.final_loss << "\n";
  return 0;
}

int cmd_match(const PipelineConfig& config, const std::string& question_text) {
  const auto tokens = tokenize(question_text);
  if (tokens.empty()) {
    std::cerr << "match: empty question\n";
    return 1;
  }
  const auto stack = load_stack(config);
  const auto train_qs = questions_of_split(stack.corpus, Split::Train);
  auto vocab = std::make_shared<const Vocabulary>(stack.lexical.vocab);
  auto clusters = std::make_shared<const ClusterModel>(stack.lexical.clusters);
  const QuestionIndex index = build_index(train_qs, vocab, clusters, stack.model);

  Question q;
  q.id = "query";
  q.tokens = tokens;
  const MatchResult result = match(q, index, stack.model, MatcherConfig{config.beta});

  json j;
  j["id"] = q.id;
  j["status"] = result.matched ? "matched" : "rejected";
  j["cluster"] = result.cluster;
  if (result.matched) {
    j["train_id"] = result.train_id;
    j["predicted_distance"] = result.predicted_distance;
  } else {
    j["predicted_distance"] =
        std::isfinite(result.min_distance) ? json(result.min_distance) : json(nullptr);
  }
  std::cout << j.dump() << "\n";
  return result.matched ? 0 : 2;
}

int cmd_eval(const PipelineConfig& config) {
  const auto stack = load_stack(config);
  const auto train_qs = questions_of_split(stack.corpus, Split::Train);
  const auto eval_qs =
      questions_of_split(stack.corpus, split_from_string(config.eval_split));
  if (eval_qs.empty()) {
    std::cerr << "eval: empty " << config.eval_split << " split\n";
    return 1;
  }
  auto vocab = std::make_shared<const Vocabulary>(stack.lexical.vocab);
  auto clusters = std::make_shared<const ClusterModel>(stack.lexical.clusters);
  const QuestionIndex index = build_index(train_qs, vocab, clusters, stack.model);

  const auto grid = beta_grid_values(config.beta_grid);
  const auto rows = evaluate(eval_qs, index, stack.model, grid);
  const EvalRow emb = baseline_embeddings(eval_qs, index, *stack.embeddings);
  const EvalRow all = baseline_accept_all(eval_qs, index, stack.model);

  std::string csv =
      "beta,accuracy_non_rejected,accuracy_all,pct_rejected,pct_incorrectly_rejected,"
      "n_test\n";
  for (const auto& row : rows) csv += eval_row_csv(format_double(row.beta), row);
  csv += eval_row_csv("embeddings", emb);
  csv += eval_row_csv("accept_all", all);
  const auto report_path = config.report_dir / "eval_report.csv";
  atomic_write(report_path, csv);
  write_manifest(config, "eval",
                 {config.corpus_path(), config.lexical_model_path(),
                  config.checkpoint_path(), config.embeddings_path},
                 {report_path});
  std::cout << "eval: " << rows.size() << " grid rows + 2 baseline rows -> "
            << report_path.string() << "\n";
  return 0;
}

int cmd_export_embeddings(const PipelineConfig& config) {
  const auto stack = load_stack(config);
  const auto rows = export_hidden_states(stack.corpus, stack.model, config.min_group_size);

  const int hidden = stack.model.lstm.hidden_size();
  std::string csv = "id,template";
  for (int i = 0; i < hidden; ++i) csv += ",d" + std::to_string(i);
  csv += "\n";
  for (const auto& row : rows) {
    csv += row.id + "," + row.template_label;
    for (Eigen::Index i = 0; i < row.hidden.size(); ++i) {
      csv += "," + format_double(row.hidden[i]);
    }
    csv += "\n";
  }
  const auto path = config.report_dir / "hidden_states.csv";
  atomic_write(path, csv);
  write_manifest(config, "export-embeddings",
                 {config.corpus_path(), config.checkpoint_path(),
                  config.embeddings_path},
                 {path});
  std::cout << "export-embeddings: " << rows.size() << " rows -> " << path.string()
            << "\n";
  return 0;
}

}  // namespace sps
