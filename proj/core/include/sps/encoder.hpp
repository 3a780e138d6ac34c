#ifndef SPS_ENCODER_HPP
#define SPS_ENCODER_HPP

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "sps/corpus.hpp"
#include "sps/lexical.hpp"

namespace sps {

/// Pretrained word vectors. Lookup is total: out-of-vocabulary words map to
/// the zero vector, which keeps sequence lengths intact.
struct EmbeddingTable {
  int dim = 0;
  std::unordered_map<std::string, Eigen::VectorXd> vectors;
  std::size_t duplicates_skipped = 0;

  Eigen::VectorXd lookup(const std::string& word) const;
};

/// Text word-vector format: optional "count dim" first line, then one line
/// per word. Throws std::runtime_error naming the line on dimension mismatch;
/// duplicate words keep the first entry and are counted.
EmbeddingTable load_embeddings(const std::filesystem::path& path, int dim);

/// One shared parameter set drives both Siamese branches. Matrices are
/// hidden x input (w_*) and hidden x hidden (u_*).
struct LstmParams {
  Eigen::MatrixXd w_input, w_forget, w_output, w_cell;
  Eigen::MatrixXd u_input, u_forget, u_output, u_cell;
  Eigen::VectorXd b_input, b_forget, b_output, b_cell;

  int input_size() const { return static_cast<int>(w_input.cols()); }
  int hidden_size() const { return static_cast<int>(w_input.rows()); }

  static LstmParams zeros(int input, int hidden);
  static LstmParams random(int input, int hidden, std::uint64_t seed);
};

/// Distance head: softplus(w . |h_a - h_b| + b), non-negative and unbounded.
struct RegressionHead {
  Eigen::VectorXd weight;
  double bias = 0.0;

  static RegressionHead zeros(int hidden);
  static RegressionHead random(int hidden, std::uint64_t seed);
};

struct TrainConfig {
  int epochs = 25;
  int batch_size = 1024;
  double learning_rate = 1e-3;
  double clip_norm = 5.0;
  std::uint64_t seed = 0;
  int max_sequence = 60;
  std::size_t pairs_per_epoch = 60000;
  int hidden_size = 100;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
};

struct SiameseModel {
  std::shared_ptr<const EmbeddingTable> embeddings;
  LstmParams lstm;
  RegressionHead head;
  int max_sequence = 60;
  std::uint64_t config_hash = 0;
  std::uint64_t vocab_hash = 0;
  int epochs_trained = 0;
  double final_loss = 0.0;
};

/// Final LSTM hidden state over the embedded token sequence (zero initial
/// state, left to right). Throws std::invalid_argument on an empty sequence.
Eigen::VectorXd encode_question(const std::vector<std::string>& tokens,
                                const SiameseModel& model);

double predict_distance(const std::vector<std::string>& a,
                        const std::vector<std::string>& b,
                        const SiameseModel& model);

/// Head over precomputed hidden states; the cached-index fast path.
double predict_distance_hidden(const SiameseModel& model, const Eigen::VectorXd& h_a,
                               const Eigen::VectorXd& h_b);

// --- training machinery (also the surface the gradient tests exercise) ---

Eigen::VectorXd lstm_encode(const LstmParams& params,
                            const std::vector<Eigen::VectorXd>& inputs);

struct ModelGrads {
  LstmParams lstm;
  Eigen::VectorXd head_weight;
  double head_bias = 0.0;

  static ModelGrads zeros(int input, int hidden);
};

/// Squared error of one pair, (softplus(w.|h_a-h_b| + b) - target)^2, with
/// optional gradient accumulation through the head and both shared branches.
double pair_loss(const LstmParams& params, const RegressionHead& head,
                 const std::vector<Eigen::VectorXd>& seq_a,
                 const std::vector<Eigen::VectorXd>& seq_b, double target,
                 ModelGrads* grads = nullptr);

/// Flat views over all trainable parameters, in a fixed order. Used by the
/// optimizer and by finite-difference checks.
std::size_t parameter_count(int input, int hidden);
Eigen::VectorXd flatten(const LstmParams& params, const RegressionHead& head);
Eigen::VectorXd flatten(const ModelGrads& grads);
void unflatten(const Eigen::VectorXd& flat, LstmParams& params, RegressionHead& head);

/// A training pair; a/b index into the train question list.
struct PairExample {
  std::size_t a = 0;
  std::size_t b = 0;
  int target = 0;
};

struct PairSamplingStats {
  std::array<std::size_t, 6> produced{};
  std::size_t skipped_strata = 0;
  std::size_t cross_fallbacks = 0;
};

/// Stratified sampling over SQLSD targets 0..5: each stratum gets as close
/// to per_epoch/6 pairs as the corpus allows, 70% drawn within a cluster and
/// 30% across clusters. Deterministic given the seed; every emitted target
/// is recomputed from the two templates.
std::vector<PairExample> make_pairs(const std::vector<Question>& train,
                                    const ClusterModel& clusters,
                                    std::size_t per_epoch, std::uint64_t seed,
                                    PairSamplingStats* stats = nullptr);

struct EpochLog {
  int epoch = 0;
  double mean_loss = 0.0;
};

/// Minimizes mean squared error against SQLSD with Adam over fresh pairs
/// each epoch. Embeddings stay frozen. Throws std::runtime_error naming the
/// batch on a non-finite loss.
SiameseModel train(const std::vector<Question>& train_questions,
                   const ClusterModel& clusters,
                   std::shared_ptr<const EmbeddingTable> embeddings,
                   const TrainConfig& config,
                   std::vector<EpochLog>* epoch_log = nullptr);

}  // namespace sps

#endif
