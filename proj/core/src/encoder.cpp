#include "sps/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>

namespace sps {

namespace {

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) {
  if (x > 30.0) return x;
  if (x < -30.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

Eigen::VectorXd sigmoid(const Eigen::VectorXd& v) {
  return v.unaryExpr([](double x) { return stable_sigmoid(x); });
}

double next_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double next_uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * next_unit(rng);
}

std::size_t next_index(std::mt19937_64& rng, std::size_t n) {
  return std::min(n - 1, static_cast<std::size_t>(next_unit(rng) * static_cast<double>(n)));
}

}  // namespace

Eigen::VectorXd EmbeddingTable::lookup(const std::string& word) const {
  auto it = vectors.find(word);
  if (it != vectors.end()) return it->second;
  return Eigen::VectorXd::Zero(dim);
}

EmbeddingTable load_embeddings(const std::filesystem::path& path, int dim) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open embeddings file: " + path.string());
  EmbeddingTable table;
  table.dim = dim;

  std::string line;
  std::size_t lineno = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream iss(line);
    if (first) {
      first = false;
      // Optional "count dimension" header line.
      std::size_t count = 0;
      int d = 0;
      std::istringstream probe(line);
      if ((probe >> count >> d) && probe.eof()) {
        if (d != dim) {
          throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                                   ": header dimension " + std::to_string(d) +
                                   " does not match requested " + std::to_string(dim));
        }
        continue;
      }
    }
    std::string word;
    if (!(iss >> word)) continue;
    Eigen::VectorXd vec(dim);
    int i = 0;
    double v = 0.0;
    while (i < dim && (iss >> v)) vec[i++] = v;
    double extra;
    if (i != dim || (iss >> extra)) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                               ": expected " + std::to_string(dim) + " values for word '" +
                               word + "'");
    }
    auto [it, inserted] = table.vectors.emplace(std::move(word), std::move(vec));
    if (!inserted) ++table.duplicates_skipped;
  }
  return table;
}

LstmParams LstmParams::zeros(int input, int hidden) {
  LstmParams p;
  p.w_input = p.w_forget = p.w_output = p.w_cell = Eigen::MatrixXd::Zero(hidden, input);
  p.u_input = p.u_forget = p.u_output = p.u_cell = Eigen::MatrixXd::Zero(hidden, hidden);
  p.b_input = p.b_forget = p.b_output = p.b_cell = Eigen::VectorXd::Zero(hidden);
  return p;
}

LstmParams LstmParams::random(int input, int hidden, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const double sw = 1.0 / std::sqrt(static_cast<double>(input));
  const double su = 1.0 / std::sqrt(static_cast<double>(hidden));
  auto fill = [&rng](Eigen::MatrixXd& m, double s) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = next_uniform(rng, -s, s);
    }
  };
  LstmParams p = zeros(input, hidden);
  fill(p.w_input, sw); fill(p.w_forget, sw); fill(p.w_output, sw); fill(p.w_cell, sw);
  fill(p.u_input, su); fill(p.u_forget, su); fill(p.u_output, su); fill(p.u_cell, su);
  p.b_forget.setOnes();  // standard forget-gate bias init
  return p;
}

RegressionHead RegressionHead::zeros(int hidden) {
  RegressionHead h;
  h.weight = Eigen::VectorXd::Zero(hidden);
  h.bias = 0.0;
  return h;
}

RegressionHead RegressionHead::random(int hidden, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const double s = 1.0 / std::sqrt(static_cast<double>(hidden));
  RegressionHead h = zeros(hidden);
  for (int i = 0; i < hidden; ++i) h.weight[i] = next_uniform(rng, -s, s);
  return h;
}

namespace {

struct LstmTrace {
  std::vector<Eigen::VectorXd> i, f, o, g, c, h;
};

Eigen::VectorXd lstm_forward(const LstmParams& p, const std::vector<Eigen::VectorXd>& xs,
                             LstmTrace* trace) {
  const int hidden = p.hidden_size();
  Eigen::VectorXd h = Eigen::VectorXd::Zero(hidden);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(hidden);
  for (const auto& x : xs) {
    Eigen::VectorXd gi = sigmoid(p.w_input * x + p.u_input * h + p.b_input);
    Eigen::VectorXd gf = sigmoid(p.w_forget * x + p.u_forget * h + p.b_forget);
    Eigen::VectorXd go = sigmoid(p.w_output * x + p.u_output * h + p.b_output);
    Eigen::VectorXd gg = (p.w_cell * x + p.u_cell * h + p.b_cell).array().tanh();
    c = gf.cwiseProduct(c) + gi.cwiseProduct(gg);
    h = go.cwiseProduct(c.array().tanh().matrix());
    if (trace) {
      trace->i.push_back(gi); trace->f.push_back(gf); trace->o.push_back(go);
      trace->g.push_back(gg); trace->c.push_back(c); trace->h.push_back(h);
    }
  }
  return h;
}

// Backpropagation through time. dh_last is dLoss/d(final hidden state);
// gradients accumulate into `grads`.
void lstm_backward(const LstmParams& p, const std::vector<Eigen::VectorXd>& xs,
                   const LstmTrace& tr, const Eigen::VectorXd& dh_last,
                   LstmParams& grads) {
  const int hidden = p.hidden_size();
  const auto steps = static_cast<std::ptrdiff_t>(xs.size());
  Eigen::VectorXd dh = dh_last;
  Eigen::VectorXd dc = Eigen::VectorXd::Zero(hidden);

  for (std::ptrdiff_t t = steps - 1; t >= 0; --t) {
    const auto ts = static_cast<std::size_t>(t);
    const Eigen::VectorXd& gi = tr.i[ts];
    const Eigen::VectorXd& gf = tr.f[ts];
    const Eigen::VectorXd& go = tr.o[ts];
    const Eigen::VectorXd& gg = tr.g[ts];
    const Eigen::VectorXd& ct = tr.c[ts];
    const Eigen::VectorXd c_prev =
        t > 0 ? tr.c[ts - 1] : Eigen::VectorXd::Zero(hidden);
    const Eigen::VectorXd h_prev =
        t > 0 ? tr.h[ts - 1] : Eigen::VectorXd::Zero(hidden);

    const Eigen::VectorXd tc = ct.array().tanh();
    const Eigen::VectorXd da_o =
        dh.cwiseProduct(tc).cwiseProduct(go).cwiseProduct(Eigen::VectorXd::Ones(hidden) - go);
    dc += dh.cwiseProduct(go).cwiseProduct(
        (1.0 - tc.array().square()).matrix());
    const Eigen::VectorXd da_i = dc.cwiseProduct(gg).cwiseProduct(gi).cwiseProduct(
        Eigen::VectorXd::Ones(hidden) - gi);
    const Eigen::VectorXd da_g =
        dc.cwiseProduct(gi).cwiseProduct((1.0 - gg.array().square()).matrix());
    const Eigen::VectorXd da_f = dc.cwiseProduct(c_prev).cwiseProduct(gf).cwiseProduct(
        Eigen::VectorXd::Ones(hidden) - gf);

    grads.w_input.noalias() += da_i * xs[ts].transpose();
    grads.w_forget.noalias() += da_f * xs[ts].transpose();
    grads.w_output.noalias() += da_o * xs[ts].transpose();
    grads.w_cell.noalias() += da_g * xs[ts].transpose();
    grads.u_input.noalias() += da_i * h_prev.transpose();
    grads.u_forget.noalias() += da_f * h_prev.transpose();
    grads.u_output.noalias() += da_o * h_prev.transpose();
    grads.u_cell.noalias() += da_g * h_prev.transpose();
    grads.b_input += da_i;
    grads.b_forget += da_f;
    grads.b_output += da_o;
    grads.b_cell += da_g;

    dh = p.u_input.transpose() * da_i + p.u_forget.transpose() * da_f +
         p.u_output.transpose() * da_o + p.u_cell.transpose() * da_g;
    dc = dc.cwiseProduct(gf);
  }
}

std::vector<Eigen::VectorXd> embed_sequence(const std::vector<std::string>& tokens,
                                            const EmbeddingTable& table,
                                            int max_sequence) {
  std::vector<Eigen::VectorXd> xs;
  const std::size_t cap = std::min(tokens.size(), static_cast<std::size_t>(max_sequence));
  xs.reserve(cap);
  for (std::size_t i = 0; i < cap; ++i) xs.push_back(table.lookup(tokens[i]));
  return xs;
}

}  // namespace

Eigen::VectorXd lstm_encode(const LstmParams& params,
                            const std::vector<Eigen::VectorXd>& inputs) {
  if (inputs.empty()) throw std::invalid_argument("lstm_encode: empty sequence");
  return lstm_forward(params, inputs, nullptr);
}

Eigen::VectorXd encode_question(const std::vector<std::string>& tokens,
                                const SiameseModel& model) {
  if (tokens.empty()) throw std::invalid_argument("encode_question: empty token list");
  return lstm_encode(model.lstm,
                     embed_sequence(tokens, *model.embeddings, model.max_sequence));
}

double predict_distance_hidden(const SiameseModel& model, const Eigen::VectorXd& h_a,
                               const Eigen::VectorXd& h_b) {
  const Eigen::VectorXd feat = (h_a - h_b).cwiseAbs();
  return softplus(model.head.weight.dot(feat) + model.head.bias);
}

double predict_distance(const std::vector<std::string>& a,
                        const std::vector<std::string>& b, const SiameseModel& model) {
  return predict_distance_hidden(model, encode_question(a, model),
                                 encode_question(b, model));
}

ModelGrads ModelGrads::zeros(int input, int hidden) {
  ModelGrads g;
  g.lstm = LstmParams::zeros(input, hidden);
  g.head_weight = Eigen::VectorXd::Zero(hidden);
  g.head_bias = 0.0;
  return g;
}

double pair_loss(const LstmParams& params, const RegressionHead& head,
                 const std::vector<Eigen::VectorXd>& seq_a,
                 const std::vector<Eigen::VectorXd>& seq_b, double target,
                 ModelGrads* grads) {
  LstmTrace tr_a, tr_b;
  const Eigen::VectorXd h_a = lstm_forward(params, seq_a, grads ? &tr_a : nullptr);
  const Eigen::VectorXd h_b = lstm_forward(params, seq_b, grads ? &tr_b : nullptr);
  const Eigen::VectorXd diff = h_a - h_b;
  const Eigen::VectorXd feat = diff.cwiseAbs();
  const double z = head.weight.dot(feat) + head.bias;
  const double pred = softplus(z);
  const double err = pred - target;
  const double loss = err * err;
  if (!grads) return loss;

  const double dz = 2.0 * err * stable_sigmoid(z);
  grads->head_weight += dz * feat;
  grads->head_bias += dz;

  const Eigen::VectorXd sign = diff.unaryExpr(
      [](double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
  const Eigen::VectorXd dfeat = dz * head.weight;
  const Eigen::VectorXd dh_a = dfeat.cwiseProduct(sign);
  lstm_backward(params, seq_a, tr_a, dh_a, grads->lstm);
  lstm_backward(params, seq_b, tr_b, -dh_a, grads->lstm);
  return loss;
}

std::size_t parameter_count(int input, int hidden) {
  const auto h = static_cast<std::size_t>(hidden);
  const auto in = static_cast<std::size_t>(input);
  return 4 * (h * in + h * h + h) + h + 1;
}

namespace {

template <typename Fn>
void visit_tensors(LstmParams& p, Fn&& fn) {
  fn(p.w_input); fn(p.w_forget); fn(p.w_output); fn(p.w_cell);
  fn(p.u_input); fn(p.u_forget); fn(p.u_output); fn(p.u_cell);
  fn(p.b_input); fn(p.b_forget); fn(p.b_output); fn(p.b_cell);
}

}  // namespace

Eigen::VectorXd flatten(const LstmParams& params, const RegressionHead& head) {
  Eigen::VectorXd flat(parameter_count(params.input_size(), params.hidden_size()));
  Eigen::Index pos = 0;
  auto& p = const_cast<LstmParams&>(params);
  visit_tensors(p, [&flat, &pos](const auto& t) {
    flat.segment(pos, t.size()) = Eigen::Map<const Eigen::VectorXd>(t.data(), t.size());
    pos += t.size();
  });
  flat.segment(pos, head.weight.size()) = head.weight;
  pos += head.weight.size();
  flat[pos] = head.bias;
  return flat;
}

Eigen::VectorXd flatten(const ModelGrads& grads) {
  RegressionHead head;
  head.weight = grads.head_weight;
  head.bias = grads.head_bias;
  return flatten(grads.lstm, head);
}

void unflatten(const Eigen::VectorXd& flat, LstmParams& params, RegressionHead& head) {
  Eigen::Index pos = 0;
  visit_tensors(params, [&flat, &pos](auto& t) {
    Eigen::Map<Eigen::VectorXd>(t.data(), t.size()) = flat.segment(pos, t.size());
    pos += t.size();
  });
  head.weight = flat.segment(pos, head.weight.size());
  pos += head.weight.size();
  head.bias = flat[pos];
}

// ---------------------------------------------------------------------------
// Pair sampling

namespace {

struct PairPools {
  std::vector<ConstituentVector> templates;
  std::vector<std::vector<std::size_t>> buckets;  // template idx -> question idxs
  // per target t: list of (template i, template j) with sqlsd == t, i <= j
  std::array<std::vector<std::pair<int, int>>, 6> by_target;
};

PairPools build_pools(const std::vector<Question>& qs,
                      const std::vector<std::size_t>& subset) {
  PairPools pools;
  std::map<ConstituentVector, int> index;
  for (std::size_t qi : subset) {
    const auto& t = qs[qi].tmpl;
    auto [it, inserted] = index.emplace(t, static_cast<int>(pools.templates.size()));
    if (inserted) {
      pools.templates.push_back(t);
      pools.buckets.emplace_back();
    }
    pools.buckets[static_cast<std::size_t>(it->second)].push_back(qi);
  }
  const int nt = static_cast<int>(pools.templates.size());
  for (int i = 0; i < nt; ++i) {
    // (i,i) is a valid target-0 pool only when it holds two distinct questions
    if (pools.buckets[static_cast<std::size_t>(i)].size() >= 2) {
      pools.by_target[0].emplace_back(i, i);
    }
    for (int j = i + 1; j < nt; ++j) {
      const int d = sqlsd(pools.templates[static_cast<std::size_t>(i)],
                          pools.templates[static_cast<std::size_t>(j)]);
      pools.by_target[static_cast<std::size_t>(d)].emplace_back(i, j);
    }
  }
  return pools;
}

}  // namespace

std::vector<PairExample> make_pairs(const std::vector<Question>& train,
                                    const ClusterModel& clusters,
                                    std::size_t per_epoch, std::uint64_t seed,
                                    PairSamplingStats* stats) {
  std::mt19937_64 rng(seed);
  std::vector<PairExample> out;
  out.reserve(per_epoch);
  PairSamplingStats local{};

  std::vector<std::size_t> all(train.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  const PairPools global = build_pools(train, all);

  // Per-cluster pools, for the within-cluster share.
  std::vector<std::size_t> question_cluster(train.size(), 0);
  std::vector<std::vector<std::size_t>> cluster_members(
      static_cast<std::size_t>(clusters.k));
  std::unordered_map<std::string, std::size_t> by_id;
  for (std::size_t i = 0; i < train.size(); ++i) by_id[train[i].id] = i;
  for (const auto& [id, c] : clusters.assignment) {
    auto it = by_id.find(id);
    if (it == by_id.end()) continue;
    question_cluster[it->second] = static_cast<std::size_t>(c);
    cluster_members[static_cast<std::size_t>(c)].push_back(it->second);
  }
  for (auto& m : cluster_members) std::sort(m.begin(), m.end());

  std::vector<PairPools> cluster_pools;
  cluster_pools.reserve(cluster_members.size());
  for (const auto& members : cluster_members) {
    cluster_pools.push_back(build_pools(train, members));
  }
  std::array<std::vector<std::size_t>, 6> eligible_clusters;
  for (std::size_t c = 0; c < cluster_pools.size(); ++c) {
    for (std::size_t t = 0; t < 6; ++t) {
      if (!cluster_pools[c].by_target[t].empty()) eligible_clusters[t].push_back(c);
    }
  }

  auto draw_from_pool = [&rng](const PairPools& pool, std::size_t t)
      -> std::pair<std::size_t, std::size_t> {
    const auto& pairs = pool.by_target[t];
    const auto [ti, tj] = pairs[next_index(rng, pairs.size())];
    const auto& ba = pool.buckets[static_cast<std::size_t>(ti)];
    const auto& bb = pool.buckets[static_cast<std::size_t>(tj)];
    std::size_t qa = ba[next_index(rng, ba.size())];
    std::size_t qb = bb[next_index(rng, bb.size())];
    if (ti == tj) {
      while (qb == qa) qb = bb[next_index(rng, bb.size())];
    }
    return {qa, qb};
  };

  for (std::size_t t = 0; t < 6; ++t) {
    std::size_t quota = per_epoch / 6 + (t < per_epoch % 6 ? 1 : 0);
    const bool within_possible = !eligible_clusters[t].empty();
    const bool cross_possible = !global.by_target[t].empty();
    if (!within_possible && !cross_possible) {
      ++local.skipped_strata;
      continue;
    }
    std::size_t n_within = within_possible ? (quota * 7 + 5) / 10 : 0;
    if (!cross_possible) n_within = quota;
    const std::size_t n_cross = quota - n_within;

    for (std::size_t d = 0; d < n_within; ++d) {
      const auto& elig = eligible_clusters[t];
      const std::size_t c = elig[next_index(rng, elig.size())];
      auto [qa, qb] = draw_from_pool(cluster_pools[c], t);
      out.push_back({qa, qb, sqlsd(train[qa].tmpl, train[qb].tmpl)});
      ++local.produced[t];
    }
    for (std::size_t d = 0; d < n_cross; ++d) {
      std::pair<std::size_t, std::size_t> pick{0, 0};
      bool cross_ok = false;
      for (int attempt = 0; attempt < 20; ++attempt) {
        pick = draw_from_pool(global, t);
        if (question_cluster[pick.first] != question_cluster[pick.second]) {
          cross_ok = true;
          break;
        }
      }
      if (!cross_ok) ++local.cross_fallbacks;
      out.push_back({pick.first, pick.second,
                     sqlsd(train[pick.first].tmpl, train[pick.second].tmpl)});
      ++local.produced[t];
    }
  }

  // Interleave strata so batches see mixed targets.
  for (std::size_t i = out.size(); i > 1; --i) {
    std::swap(out[i - 1], out[next_index(rng, i)]);
  }
  if (stats) *stats = local;
  return out;
}

// ---------------------------------------------------------------------------
// Training

SiameseModel train(const std::vector<Question>& train_questions,
                   const ClusterModel& clusters,
                   std::shared_ptr<const EmbeddingTable> embeddings,
                   const TrainConfig& config, std::vector<EpochLog>* epoch_log) {
  if (train_questions.empty()) throw std::invalid_argument("train: empty training set");
  if (!embeddings) throw std::invalid_argument("train: null embeddings");

  const int input = embeddings->dim;
  const int hidden = config.hidden_size;

  SiameseModel model;
  model.embeddings = embeddings;
  model.lstm = LstmParams::random(input, hidden, config.seed);
  model.head = RegressionHead::random(hidden, config.seed ^ 0x9e3779b97f4a7c15ULL);
  model.max_sequence = config.max_sequence;

  // Embed every training question once; embeddings are frozen.
  std::vector<std::vector<Eigen::VectorXd>> sequences;
  sequences.reserve(train_questions.size());
  for (const auto& q : train_questions) {
    sequences.push_back(embed_sequence(q.tokens, *embeddings, config.max_sequence));
  }

  Eigen::VectorXd theta = flatten(model.lstm, model.head);
  Eigen::VectorXd m = Eigen::VectorXd::Zero(theta.size());
  Eigen::VectorXd v = Eigen::VectorXd::Zero(theta.size());
  std::size_t step = 0;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto pairs =
        make_pairs(train_questions, clusters, config.pairs_per_epoch,
                   config.seed + static_cast<std::uint64_t>(epoch) * 0x9e3779b97f4a7c15ULL);
    if (pairs.empty()) throw std::runtime_error("train: pair sampler produced no pairs");

    double epoch_loss = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < pairs.size();
         start += static_cast<std::size_t>(config.batch_size), ++batch_index) {
      const std::size_t end =
          std::min(pairs.size(), start + static_cast<std::size_t>(config.batch_size));
      ModelGrads grads = ModelGrads::zeros(input, hidden);
      double batch_loss = 0.0;
      for (std::size_t i = start; i < end; ++i) {
        const auto& pe = pairs[i];
        batch_loss += pair_loss(model.lstm, model.head, sequences[pe.a], sequences[pe.b],
                                static_cast<double>(pe.target), &grads);
      }
      const double scale = 1.0 / static_cast<double>(end - start);
      if (!std::isfinite(batch_loss)) {
        throw std::runtime_error("train: non-finite loss in epoch " +
                                 std::to_string(epoch) + ", batch " +
                                 std::to_string(batch_index));
      }
      epoch_loss += batch_loss;

      Eigen::VectorXd g = flatten(grads) * scale;
      const double norm = g.norm();
      if (norm > config.clip_norm) g *= config.clip_norm / norm;

      ++step;
      m = config.adam_beta1 * m + (1.0 - config.adam_beta1) * g;
      v = config.adam_beta2 * v.array().matrix() +
          (1.0 - config.adam_beta2) * g.cwiseProduct(g);
      const double bc1 = 1.0 - std::pow(config.adam_beta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(config.adam_beta2, static_cast<double>(step));
      theta -= (config.learning_rate * (m / bc1).array() /
                ((v / bc2).array().sqrt() + config.adam_epsilon))
                   .matrix();
      unflatten(theta, model.lstm, model.head);
    }
    const double mean_loss = epoch_loss / static_cast<double>(pairs.size());
    if (epoch_log) epoch_log->push_back({epoch, mean_loss});
    model.final_loss = mean_loss;
  }
  model.epochs_trained = config.epochs;
  return model;
}

}  // namespace sps
