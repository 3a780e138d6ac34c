#include "sps/matcher.hpp"

#include <limits>
#include <stdexcept>

namespace sps {

QuestionIndex build_index(const std::vector<Question>& train,
                          std::shared_ptr<const Vocabulary> vocab,
                          std::shared_ptr<const ClusterModel> clusters,
                          const SiameseModel& model) {
  QuestionIndex index;
  index.vocab = std::move(vocab);
  index.clusters = clusters;
  index.members.resize(static_cast<std::size_t>(clusters->k));
  for (const auto& q : train) {
    auto it = clusters->assignment.find(q.id);
    if (it == clusters->assignment.end()) {
      throw std::runtime_error("build_index: question not in cluster assignment: " + q.id);
    }
    IndexEntry entry;
    entry.id = q.id;
    entry.tokens = q.tokens;
    entry.tmpl = q.tmpl;
    entry.hidden = encode_question(q.tokens, model);
    index.members[static_cast<std::size_t>(it->second)].push_back(std::move(entry));
  }
  return index;
}

namespace {

MatchResult scan_cluster(const Question& question, const QuestionIndex& index,
                         const std::function<double(const IndexEntry&)>& score,
                         const MatcherConfig& config) {
  const OneHotVector lex = encode(question, *index.vocab);
  const int cluster = assign_cluster(lex, *index.clusters);
  const auto& members = index.members[static_cast<std::size_t>(cluster)];

  MatchResult result;
  result.cluster = cluster;
  double best = std::numeric_limits<double>::infinity();
  const IndexEntry* chosen = nullptr;
  for (const auto& m : members) {
    const double d = score(m);
    if (d < best || (d == best && chosen && m.id < chosen->id)) {
      best = d;
      chosen = &m;
    }
  }
  result.min_distance = best;
  if (chosen && best < config.beta) {
    result.matched = true;
    result.train_id = chosen->id;
    result.predicted_distance = best;
  }
  return result;
}

}  // namespace

MatchResult match(const Question& question, const QuestionIndex& index,
                  const PairScorer& scorer, const MatcherConfig& config) {
  return scan_cluster(
      question, index, [&](const IndexEntry& m) { return scorer(question, m); }, config);
}

MatchResult match(const Question& question, const QuestionIndex& index,
                  const SiameseModel& model, const MatcherConfig& config) {
  const Eigen::VectorXd h = encode_question(question.tokens, model);
  return scan_cluster(
      question, index,
      [&](const IndexEntry& m) { return predict_distance_hidden(model, h, m.hidden); },
      config);
}

}  // namespace sps
