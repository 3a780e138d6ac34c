#include "sps/lexical.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <stdexcept>

namespace sps {

namespace {

// Uniform double in [0,1) from the raw engine output; avoids the
// implementation-defined behavior of std::uniform_real_distribution.
double next_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::size_t next_index(std::mt19937_64& rng, std::size_t n) {
  return std::min(n - 1, static_cast<std::size_t>(next_unit(rng) * static_cast<double>(n)));
}

double centroid_sq_norm(const std::vector<double>& c) {
  double s = 0.0;
  for (double v : c) s += v * v;
  return s;
}

}  // namespace

Vocabulary::Vocabulary(std::vector<std::string> words) : words_(std::move(words)) {
  for (std::size_t i = 0; i < words_.size(); ++i) {
    index_.emplace(words_[i], static_cast<int>(i));
  }
}

std::optional<int> Vocabulary::find(const std::string& word) const {
  auto it = index_.find(word);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Vocabulary build_vocab(const std::vector<Question>& train_questions, int alpha) {
  std::map<std::string, std::size_t> freq;
  for (const auto& q : train_questions) {
    for (const auto& tok : q.tokens) ++freq[tok];
  }
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (const auto& [word, count] : freq) {
    if (count > static_cast<std::size_t>(alpha)) kept.emplace_back(word, count);
  }
  if (kept.empty()) {
    throw std::runtime_error("empty vocabulary: no word has frequency > " +
                             std::to_string(alpha));
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<std::string> words;
  words.reserve(kept.size());
  for (auto& [word, count] : kept) words.push_back(std::move(word));
  return Vocabulary(std::move(words));
}

OneHotVector encode(const Question& question, const Vocabulary& vocab) {
  OneHotVector out;
  for (const auto& tok : question.tokens) {
    if (auto idx = vocab.find(tok)) out.active.push_back(*idx);
  }
  std::sort(out.active.begin(), out.active.end());
  out.active.erase(std::unique(out.active.begin(), out.active.end()), out.active.end());
  return out;
}

double sq_distance(const OneHotVector& v, const std::vector<double>& centroid,
                   double sq_norm) {
  // ||c||^2 - 2 * sum_{i active} c_i + |active|
  double cross = 0.0;
  for (int i : v.active) cross += centroid[static_cast<std::size_t>(i)];
  return sq_norm - 2.0 * cross + static_cast<double>(v.active.size());
}

namespace {

std::vector<std::vector<double>> kmeans_pp_seed(const std::vector<OneHotVector>& vectors,
                                                std::size_t dim, int k,
                                                std::mt19937_64& rng) {
  const std::size_t n = vectors.size();
  std::vector<std::vector<double>> centroids;
  centroids.reserve(static_cast<std::size_t>(k));

  auto as_dense = [dim](const OneHotVector& v) {
    std::vector<double> d(dim, 0.0);
    for (int i : v.active) d[static_cast<std::size_t>(i)] = 1.0;
    return d;
  };

  centroids.push_back(as_dense(vectors[next_index(rng, n)]));
  std::vector<double> min_sq(n, std::numeric_limits<double>::infinity());

  while (centroids.size() < static_cast<std::size_t>(k)) {
    const auto& latest = centroids.back();
    const double norm = centroid_sq_norm(latest);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      min_sq[i] = std::min(min_sq[i], sq_distance(vectors[i], latest, norm));
      total += min_sq[i];
    }
    std::size_t chosen = 0;
    if (total <= 0.0) {
      chosen = next_index(rng, n);
    } else {
      const double target = next_unit(rng) * total;
      double acc = 0.0;
      chosen = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        acc += min_sq[i];
        if (acc >= target) { chosen = i; break; }
      }
    }
    centroids.push_back(as_dense(vectors[chosen]));
  }
  return centroids;
}

}  // namespace

ClusterModel kmeans_fit(const std::vector<OneHotVector>& vectors,
                        const std::vector<std::string>& ids, std::size_t dim,
                        const LexicalConfig& config) {
  const std::size_t n = vectors.size();
  if (ids.size() != n) throw std::invalid_argument("kmeans_fit: ids/vectors size mismatch");
  if (config.k < 1) throw std::invalid_argument("kmeans_fit: k must be >= 1");
  if (n < static_cast<std::size_t>(config.k)) {
    throw std::runtime_error("kmeans_fit: fewer points (" + std::to_string(n) +
                             ") than clusters (" + std::to_string(config.k) + ")");
  }

  std::mt19937_64 rng(config.seed);
  const auto k = static_cast<std::size_t>(config.k);
  auto centroids = kmeans_pp_seed(vectors, dim, config.k, rng);

  std::vector<int> assign(n, -1);
  std::vector<double> norms(k);
  double inertia = 0.0;
  std::size_t iter = 0;
  double prev_inertia = std::numeric_limits<double>::infinity();

  for (; iter < static_cast<std::size_t>(config.max_iterations); ++iter) {
    for (std::size_t c = 0; c < k; ++c) norms[c] = centroid_sq_norm(centroids[c]);

    bool changed = false;
    inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double best_d = sq_distance(vectors[i], centroids[0], norms[0]);
      for (std::size_t c = 1; c < k; ++c) {
        const double d = sq_distance(vectors[i], centroids[c], norms[c]);
        if (d < best_d) { best_d = d; best = static_cast<int>(c); }
      }
      if (assign[i] != best) { assign[i] = best; changed = true; }
      inertia += best_d;
    }
    if (!changed) break;
    if (config.convergence_epsilon > 0.0 &&
        prev_inertia - inertia <= config.convergence_epsilon) {
      break;
    }
    prev_inertia = inertia;

    std::vector<std::size_t> counts(k, 0);
    for (auto& c : centroids) std::fill(c.begin(), c.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = static_cast<std::size_t>(assign[i]);
      ++counts[c];
      for (int d : vectors[i].active) centroids[c][static_cast<std::size_t>(d)] += 1.0;
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      const double inv = 1.0 / static_cast<double>(counts[c]);
      for (double& v : centroids[c]) v *= inv;
    }

    // Reseed each emptied cluster to the point farthest from its nearest
    // non-empty centroid, so exactly k clusters survive.
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] != 0) continue;
      for (std::size_t cc = 0; cc < k; ++cc) norms[cc] = centroid_sq_norm(centroids[cc]);
      std::size_t farthest = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        double nearest = std::numeric_limits<double>::infinity();
        for (std::size_t cc = 0; cc < k; ++cc) {
          if (counts[cc] == 0 && cc != c) continue;
          if (cc == c) continue;
          nearest = std::min(nearest, sq_distance(vectors[i], centroids[cc], norms[cc]));
        }
        if (nearest > far_d) { far_d = nearest; farthest = i; }
      }
      std::fill(centroids[c].begin(), centroids[c].end(), 0.0);
      for (int d : vectors[farthest].active) centroids[c][static_cast<std::size_t>(d)] = 1.0;
      counts[c] = 1;
    }
  }

  // Final assignment pass so the stored assignment is the argmin of the
  // final centroids even when max_iterations cut the loop short.
  for (std::size_t c = 0; c < k; ++c) norms[c] = centroid_sq_norm(centroids[c]);
  inertia = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    int best = 0;
    double best_d = sq_distance(vectors[i], centroids[0], norms[0]);
    for (std::size_t c = 1; c < k; ++c) {
      const double d = sq_distance(vectors[i], centroids[c], norms[c]);
      if (d < best_d) { best_d = d; best = static_cast<int>(c); }
    }
    assign[i] = best;
    inertia += best_d;
  }

  ClusterModel model;
  model.k = config.k;
  model.dim = dim;
  model.centroids = std::move(centroids);
  model.members.resize(k);
  for (std::size_t i = 0; i < n; ++i) {
    model.assignment[ids[i]] = assign[i];
    model.members[static_cast<std::size_t>(assign[i])].push_back(ids[i]);
  }
  model.iterations = iter;
  model.inertia = inertia;
  return model;
}

int assign_cluster(const OneHotVector& vector, const ClusterModel& model) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < model.centroids.size(); ++c) {
    const double d =
        sq_distance(vector, model.centroids[c], centroid_sq_norm(model.centroids[c]));
    if (d < best_d) { best_d = d; best = static_cast<int>(c); }
  }
  return best;
}

}  // namespace sps
