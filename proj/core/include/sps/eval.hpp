#ifndef SPS_EVAL_HPP
#define SPS_EVAL_HPP

#include <string>
#include <vector>

#include "sps/matcher.hpp"

namespace sps {

struct EvalRow {
  double beta = 0.0;
  double accuracy_non_rejected = 0.0;  // correct / non-rejected
  double accuracy_all = 0.0;           // correct / all test questions
  double pct_rejected = 0.0;
  double pct_incorrectly_rejected = 0.0;  // among rejected: cluster had a match
  std::size_t n_test = 0;
};

struct EvalReport {
  std::vector<EvalRow> rows;
  EvalRow embeddings_baseline;
  EvalRow accept_all_baseline;
  std::string split;
};

std::vector<double> default_beta_grid();  // 0.1 to 2.5, step 0.05

/// One row per beta. A match is correct iff the chosen train question shares
/// the test question's template; a rejection is incorrect iff the searched
/// cluster contains at least one same-template train question.
std::vector<EvalRow> evaluate(const std::vector<Question>& test,
                              const QuestionIndex& index, const SiameseModel& model,
                              const std::vector<double>& beta_grid);

std::vector<EvalRow> evaluate(const std::vector<Question>& test,
                              const QuestionIndex& index, const PairScorer& scorer,
                              const std::vector<double>& beta_grid);

/// Nearest-cluster match by cosine of mean token embeddings; never rejects.
EvalRow baseline_embeddings(const std::vector<Question>& test,
                            const QuestionIndex& index, const EmbeddingTable& embeddings);

/// evaluate at beta = +infinity.
EvalRow baseline_accept_all(const std::vector<Question>& test,
                            const QuestionIndex& index, const SiameseModel& model);

struct HiddenStateRow {
  std::string id;
  std::string template_label;
  Eigen::VectorXd hidden;
};

/// One row per question whose template group has >= min_group_size members.
std::vector<HiddenStateRow> export_hidden_states(const std::vector<Question>& questions,
                                                 const SiameseModel& model,
                                                 std::size_t min_group_size);

}  // namespace sps

#endif
