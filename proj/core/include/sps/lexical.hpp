#ifndef SPS_LEXICAL_HPP
#define SPS_LEXICAL_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "sps/corpus.hpp"

namespace sps {

struct LexicalConfig {
  int alpha = 50;           // minimum corpus frequency (strict: freq > alpha)
  int k = 500;              // cluster count
  int max_iterations = 100;
  double convergence_epsilon = 0.0;  // 0 = stop only on unchanged assignments
  std::uint64_t seed = 0;
};

/// Frequency-thresholded vocabulary over the Train split. Indices are dense,
/// ordered by descending frequency with lexicographic tie-break.
class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> words);

  std::optional<int> find(const std::string& word) const;
  const std::vector<std::string>& words() const { return words_; }
  std::size_t size() const { return words_.size(); }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, int> index_;
};

/// Binary presence vector: sorted unique vocabulary indices.
struct OneHotVector {
  std::vector<int> active;
};

struct ClusterModel {
  int k = 0;
  std::size_t dim = 0;  // |V|
  std::vector<std::vector<double>> centroids;
  std::unordered_map<std::string, int> assignment;  // question id -> cluster
  std::vector<std::vector<std::string>> members;    // per-cluster question ids
  std::size_t iterations = 0;
  double inertia = 0.0;
};

/// Throws std::runtime_error when no word clears the threshold.
Vocabulary build_vocab(const std::vector<Question>& train_questions, int alpha);

OneHotVector encode(const Question& question, const Vocabulary& vocab);

/// Lloyd's iterations with k-means++ seeding. `ids` labels the vectors for
/// the assignment map; both lists must have equal length >= config.k.
ClusterModel kmeans_fit(const std::vector<OneHotVector>& vectors,
                        const std::vector<std::string>& ids, std::size_t dim,
                        const LexicalConfig& config);

/// Argmin of Euclidean distance to the centroids, ties to the lowest id.
int assign_cluster(const OneHotVector& vector, const ClusterModel& model);

/// Squared Euclidean distance between a binary vector and a dense centroid.
double sq_distance(const OneHotVector& v, const std::vector<double>& centroid,
                   double centroid_sq_norm);

}  // namespace sps

#endif
