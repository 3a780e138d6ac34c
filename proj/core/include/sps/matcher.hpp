#ifndef SPS_MATCHER_HPP
#define SPS_MATCHER_HPP

#include <Eigen/Core>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "sps/encoder.hpp"
#include "sps/lexical.hpp"

namespace sps {

struct MatcherConfig {
  double beta = 0.75;  // rejection threshold; accept when distance < beta
};

struct IndexEntry {
  std::string id;
  std::vector<std::string> tokens;
  ConstituentVector tmpl;
  Eigen::VectorXd hidden;  // precomputed encode_question output
};

/// Train questions partitioned by fitted cluster, with cached hidden states.
struct QuestionIndex {
  std::shared_ptr<const Vocabulary> vocab;
  std::shared_ptr<const ClusterModel> clusters;
  std::vector<std::vector<IndexEntry>> members;  // one list per cluster
};

QuestionIndex build_index(const std::vector<Question>& train,
                          std::shared_ptr<const Vocabulary> vocab,
                          std::shared_ptr<const ClusterModel> clusters,
                          const SiameseModel& model);

struct MatchResult {
  bool matched = false;
  std::string train_id;            // set when matched
  double predicted_distance = 0.0; // distance to the chosen member
  int cluster = -1;
  double min_distance = 0.0;       // minimum observed (inf for empty cluster)
};

/// Scores a query against one indexed train question.
using PairScorer =
    std::function<double(const Question& query, const IndexEntry& member)>;

/// Scores every member of the query's nearest lexical cluster and accepts the
/// closest one when its distance is strictly below beta. Ties break to the
/// smaller predicted distance, then the lexicographically smaller id.
MatchResult match(const Question& question, const QuestionIndex& index,
                  const PairScorer& scorer, const MatcherConfig& config);

/// Fast path for a trained model: the query is encoded once and scored
/// against the cached member hidden states.
MatchResult match(const Question& question, const QuestionIndex& index,
                  const SiameseModel& model, const MatcherConfig& config);

}  // namespace sps

#endif
