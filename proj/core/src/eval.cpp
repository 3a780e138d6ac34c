#include "sps/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace sps {

std::vector<double> default_beta_grid() {
  std::vector<double> grid;
  for (int i = 0; ; ++i) {
    const double b = 0.1 + 0.05 * i;
    if (b > 2.5 + 1e-9) break;
    grid.push_back(b);
  }
  return grid;
}

namespace {

struct Outcome {
  double best_distance = std::numeric_limits<double>::infinity();
  bool best_correct = false;      // chosen member shares the template
  bool cluster_has_match = false; // any same-template member in the cluster
};

Outcome question_outcome(const Question& q, const QuestionIndex& index,
                         const std::function<double(const IndexEntry&)>& score) {
  const OneHotVector lex = encode(q, *index.vocab);
  const int cluster = assign_cluster(lex, *index.clusters);
  const auto& members = index.members[static_cast<std::size_t>(cluster)];

  Outcome out;
  const IndexEntry* chosen = nullptr;
  for (const auto& m : members) {
    if (same_template(q.tmpl, m.tmpl)) out.cluster_has_match = true;
    const double d = score(m);
    if (d < out.best_distance ||
        (d == out.best_distance && chosen && m.id < chosen->id)) {
      out.best_distance = d;
      chosen = &m;
    }
  }
  out.best_correct = chosen && same_template(q.tmpl, chosen->tmpl);
  return out;
}

std::vector<Outcome> all_outcomes(const std::vector<Question>& test,
                                  const QuestionIndex& index,
                                  const PairScorer& scorer) {
  std::vector<Outcome> outcomes;
  outcomes.reserve(test.size());
  for (const auto& q : test) {
    outcomes.push_back(question_outcome(
        q, index, [&](const IndexEntry& m) { return scorer(q, m); }));
  }
  return outcomes;
}

EvalRow row_at_beta(const std::vector<Outcome>& outcomes, double beta) {
  std::size_t accepted = 0, correct = 0, rejected = 0, bad_rejections = 0;
  for (const auto& o : outcomes) {
    if (o.best_distance < beta) {
      ++accepted;
      if (o.best_correct) ++correct;
    } else {
      ++rejected;
      if (o.cluster_has_match) ++bad_rejections;
    }
  }
  EvalRow row;
  row.beta = beta;
  row.n_test = outcomes.size();
  const auto n = static_cast<double>(outcomes.size());
  row.pct_rejected = static_cast<double>(rejected) / n;
  row.accuracy_non_rejected =
      accepted ? static_cast<double>(correct) / static_cast<double>(accepted) : 0.0;
  row.accuracy_all = static_cast<double>(correct) / n;
  row.pct_incorrectly_rejected =
      rejected ? static_cast<double>(bad_rejections) / static_cast<double>(rejected) : 0.0;
  return row;
}

std::vector<EvalRow> rows_over_grid(const std::vector<Outcome>& outcomes,
                                    const std::vector<double>& beta_grid) {
  if (beta_grid.empty()) throw std::invalid_argument("evaluate: empty beta grid");
  for (std::size_t i = 1; i < beta_grid.size(); ++i) {
    if (beta_grid[i] <= beta_grid[i - 1]) {
      throw std::invalid_argument("evaluate: beta grid must be strictly increasing");
    }
  }
  std::vector<EvalRow> rows;
  rows.reserve(beta_grid.size());
  for (double b : beta_grid) rows.push_back(row_at_beta(outcomes, b));
  return rows;
}

}  // namespace

std::vector<EvalRow> evaluate(const std::vector<Question>& test,
                              const QuestionIndex& index, const SiameseModel& model,
                              const std::vector<double>& beta_grid) {
  if (test.empty()) throw std::invalid_argument("evaluate: empty test set");
  std::vector<Outcome> outcomes;
  outcomes.reserve(test.size());
  for (const auto& q : test) {
    const Eigen::VectorXd h = encode_question(q.tokens, model);
    outcomes.push_back(question_outcome(q, index, [&](const IndexEntry& m) {
      return predict_distance_hidden(model, h, m.hidden);
    }));
  }
  return rows_over_grid(outcomes, beta_grid);
}

std::vector<EvalRow> evaluate(const std::vector<Question>& test,
                              const QuestionIndex& index, const PairScorer& scorer,
                              const std::vector<double>& beta_grid) {
  if (test.empty()) throw std::invalid_argument("evaluate: empty test set");
  return rows_over_grid(all_outcomes(test, index, scorer), beta_grid);
}

namespace {

Eigen::VectorXd mean_embedding(const std::vector<std::string>& tokens,
                               const EmbeddingTable& table) {
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(table.dim);
  std::size_t count = 0;
  for (const auto& tok : tokens) {
    auto it = table.vectors.find(tok);
    if (it == table.vectors.end()) continue;  // OOV tokens skipped in the mean
    sum += it->second;
    ++count;
  }
  if (count > 0) sum /= static_cast<double>(count);
  return sum;
}

}  // namespace

EvalRow baseline_embeddings(const std::vector<Question>& test,
                            const QuestionIndex& index,
                            const EmbeddingTable& embeddings) {
  std::size_t correct = 0;
  for (const auto& q : test) {
    const OneHotVector lex = encode(q, *index.vocab);
    const int cluster = assign_cluster(lex, *index.clusters);
    const auto& members = index.members[static_cast<std::size_t>(cluster)];

    const Eigen::VectorXd qv = mean_embedding(q.tokens, embeddings);
    const double qn = qv.norm();
    const IndexEntry* chosen = nullptr;
    double best = -std::numeric_limits<double>::infinity();
    if (qn > 0.0) {
      for (const auto& m : members) {
        const Eigen::VectorXd mv = mean_embedding(m.tokens, embeddings);
        const double mn = mv.norm();
        if (mn == 0.0) continue;
        const double cos = qv.dot(mv) / (qn * mn);
        if (cos > best || (cos == best && chosen && m.id < chosen->id)) {
          best = cos;
          chosen = &m;
        }
      }
    }
    if (chosen && same_template(q.tmpl, chosen->tmpl)) ++correct;
  }
  EvalRow row;
  row.beta = std::numeric_limits<double>::infinity();
  row.n_test = test.size();
  row.pct_rejected = 0.0;
  row.accuracy_all = static_cast<double>(correct) / static_cast<double>(test.size());
  row.accuracy_non_rejected = row.accuracy_all;
  row.pct_incorrectly_rejected = 0.0;
  return row;
}

EvalRow baseline_accept_all(const std::vector<Question>& test,
                            const QuestionIndex& index, const SiameseModel& model) {
  std::vector<Outcome> outcomes;
  outcomes.reserve(test.size());
  for (const auto& q : test) {
    const Eigen::VectorXd h = encode_question(q.tokens, model);
    outcomes.push_back(question_outcome(q, index, [&](const IndexEntry& m) {
      return predict_distance_hidden(model, h, m.hidden);
    }));
  }
  return row_at_beta(outcomes, std::numeric_limits<double>::infinity());
}

std::vector<HiddenStateRow> export_hidden_states(const std::vector<Question>& questions,
                                                 const SiameseModel& model,
                                                 std::size_t min_group_size) {
  std::map<ConstituentVector, std::size_t> group_sizes;
  for (const auto& q : questions) ++group_sizes[q.tmpl];

  std::vector<HiddenStateRow> rows;
  for (const auto& q : questions) {
    if (group_sizes[q.tmpl] < min_group_size) continue;
    rows.push_back({q.id, template_label(q.tmpl), encode_question(q.tokens, model)});
  }
  return rows;
}

}  // namespace sps
