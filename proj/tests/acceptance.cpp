// End-to-end acceptance suite: one pass/fail line per criterion, exit 0 only
// if everything holds. Runs from scratch with no external data.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "sps/eval.hpp"
#include "sps/pipeline.hpp"
#include "sps/serialize.hpp"
#include "synthetic.hpp"

using namespace sps;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int criterion, const std::string& what, bool ok,
            const std::string& detail = "") {
  std::cout << (ok ? "[PASS]" : "[FAIL]") << " criterion " << criterion << ": " << what;
  if (!detail.empty()) std::cout << " (" << detail << ")";
  std::cout << "\n";
  if (!ok) ++g_failures;
}

double uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// ---------------------------------------------------------------------------
// Criterion 1: sqlsd agrees with an independent oracle on 10,000 random
// pairs, and the metric axioms hold exhaustively on the capped domain.
// ---------------------------------------------------------------------------

ConstituentVector random_template(std::mt19937_64& rng) {
  ConstituentVector t;
  t.select_type = static_cast<ColumnType>(rng() % 3);
  t.aggregator = static_cast<Aggregator>(rng() % 6);
  t.count_eq = static_cast<int>(rng() % 4);
  t.count_gt = static_cast<int>(rng() % 4);
  t.count_lt = static_cast<int>(rng() % 4);
  return t;
}

int sqlsd_oracle(const ConstituentVector& a, const ConstituentVector& b) {
  int d = 0;
  d += a.select_type != b.select_type;
  d += a.aggregator != b.aggregator;
  d += a.count_eq != b.count_eq;
  d += a.count_gt != b.count_gt;
  d += a.count_lt != b.count_lt;
  return d;
}

void criterion_1() {
  std::mt19937_64 rng(1001);
  bool oracle_ok = true;
  for (int i = 0; i < 10000 && oracle_ok; ++i) {
    const auto a = random_template(rng);
    const auto b = random_template(rng);
    oracle_ok = sqlsd(a, b) == sqlsd_oracle(a, b);
  }
  report(1, "sqlsd matches a constituent-by-constituent oracle on 10,000 pairs",
         oracle_ok);

  // Exhaustive domain with condition counts capped at 3: 3*6*4*4*4 points.
  std::vector<ConstituentVector> domain;
  for (int s = 0; s < 3; ++s)
    for (int g = 0; g < 6; ++g)
      for (int eq = 0; eq < 4; ++eq)
        for (int gt = 0; gt < 4; ++gt)
          for (int lt = 0; lt < 4; ++lt)
            domain.push_back({static_cast<ColumnType>(s), static_cast<Aggregator>(g),
                              eq, gt, lt});
  const std::size_t n = domain.size();

  std::vector<std::uint8_t> d(n * n);
  bool axioms_ok = true;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const int dij = sqlsd(domain[i], domain[j]);
      d[i * n + j] = static_cast<std::uint8_t>(dij);
      if (dij < 0 || dij > 5) axioms_ok = false;
    }
  }
  // Identity and symmetry.
  for (std::size_t i = 0; i < n && axioms_ok; ++i) {
    if (d[i * n + i] != 0) axioms_ok = false;
    for (std::size_t j = i + 1; j < n; ++j) {
      if (d[i * n + j] != d[j * n + i]) axioms_ok = false;
      if (d[i * n + j] == 0 && !(domain[i] == domain[j])) axioms_ok = false;
    }
  }
  // Triangle inequality over all ordered triples.
  for (std::size_t i = 0; i < n && axioms_ok; ++i) {
    const std::uint8_t* di = d.data() + i * n;
    for (std::size_t j = 0; j < n && axioms_ok; ++j) {
      const int dij = di[j];
      const std::uint8_t* dj = d.data() + j * n;
      for (std::size_t k = 0; k < n; ++k) {
        if (di[k] > dij + dj[k]) {
          axioms_ok = false;
          break;
        }
      }
    }
  }
  report(1, "metric axioms hold on the exhaustive capped domain", axioms_ok,
         std::to_string(n) + " points");
}

// ---------------------------------------------------------------------------
// Criterion 2: analytic BPTT gradients vs central finite differences.
// ---------------------------------------------------------------------------

void criterion_2() {
  const int input = 3;
  const double step = 1e-5;
  double worst = 0.0;
  std::mt19937_64 rng(2002);

  for (int trial = 0; trial < 20; ++trial) {
    const int hidden = std::vector<int>{2, 4, 8}[trial % 3];
    LstmParams params = LstmParams::random(input, hidden, 7000 + trial);
    RegressionHead head = RegressionHead::random(hidden, 8000 + trial);

    auto random_seq = [&](std::size_t len) {
      std::vector<Eigen::VectorXd> seq;
      for (std::size_t t = 0; t < len; ++t) {
        Eigen::VectorXd v(input);
        for (int i = 0; i < input; ++i) v[i] = 2.0 * uniform(rng) - 1.0;
        seq.push_back(v);
      }
      return seq;
    };
    const auto seq_a = random_seq(1 + rng() % 6);
    const auto seq_b = random_seq(1 + rng() % 6);
    const double target = static_cast<double>(rng() % 6);

    ModelGrads grads = ModelGrads::zeros(input, hidden);
    pair_loss(params, head, seq_a, seq_b, target, &grads);
    const Eigen::VectorXd analytic = flatten(grads);

    Eigen::VectorXd theta = flatten(params, head);
    for (Eigen::Index p = 0; p < theta.size(); ++p) {
      LstmParams lp = params;
      RegressionHead hp = head;
      Eigen::VectorXd t2 = theta;

      t2[p] = theta[p] + step;
      unflatten(t2, lp, hp);
      const double up = pair_loss(lp, hp, seq_a, seq_b, target);
      t2[p] = theta[p] - step;
      unflatten(t2, lp, hp);
      const double down = pair_loss(lp, hp, seq_a, seq_b, target);

      const double fd = (up - down) / (2.0 * step);
      const double rel = std::abs(analytic[p] - fd) /
                         std::max(1e-6, std::abs(analytic[p]) + std::abs(fd));
      worst = std::max(worst, rel);
    }
  }
  std::ostringstream detail;
  detail << "max relative error " << worst;
  report(2, "BPTT gradients agree with central finite differences", worst < 1e-4,
         detail.str());
}

// ---------------------------------------------------------------------------
// Criterion 3: k-means invariants.
// ---------------------------------------------------------------------------

void criterion_3() {
  std::mt19937_64 rng(3003);
  auto random_dataset = [&](std::size_t count, std::size_t dim) {
    std::vector<OneHotVector> vectors;
    for (std::size_t i = 0; i < count; ++i) {
      OneHotVector v;
      for (std::size_t k = 0; k < dim; ++k) {
        if (uniform(rng) < 0.25) v.active.push_back(static_cast<int>(k));
      }
      vectors.push_back(v);
    }
    return vectors;
  };

  // Lloyd's iterations never increase inertia: with a fixed seed, a run
  // capped at t iterations is a prefix of the run capped at t+1.
  bool monotone = true;
  for (int ds = 0; ds < 50 && monotone; ++ds) {
    const auto vectors = random_dataset(40, 20);
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < vectors.size(); ++i) ids.push_back(std::to_string(i));
    double prev = std::numeric_limits<double>::infinity();
    for (int iters = 1; iters <= 6; ++iters) {
      LexicalConfig config;
      config.k = 4;
      config.seed = 500 + static_cast<std::uint64_t>(ds);
      config.max_iterations = iters;
      const auto model = kmeans_fit(vectors, ids, 20, config);
      if (model.inertia > prev + 1e-9) monotone = false;
      prev = model.inertia;
    }
  }
  report(3, "inertia is non-increasing per iteration on 50 random datasets", monotone);

  // k=1: the single centroid is the coordinate-wise mean.
  const auto vectors = random_dataset(30, 12);
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < vectors.size(); ++i) ids.push_back(std::to_string(i));
  LexicalConfig config;
  config.k = 1;
  config.seed = 9;
  const auto model = kmeans_fit(vectors, ids, 12, config);
  std::vector<double> mean(12, 0.0);
  for (const auto& v : vectors)
    for (int k : v.active) mean[static_cast<std::size_t>(k)] += 1.0;
  bool mean_ok = true;
  for (std::size_t k = 0; k < 12; ++k) {
    mean[k] /= static_cast<double>(vectors.size());
    if (std::abs(model.centroids[0][k] - mean[k]) > 1e-9) mean_ok = false;
  }
  report(3, "k=1 centroid equals the coordinate-wise mean within 1e-9", mean_ok);

  config.k = 3;
  config.seed = 17;
  config.max_iterations = 100;
  const auto m1 = kmeans_fit(vectors, ids, 12, config);
  const auto m2 = kmeans_fit(vectors, ids, 12, config);
  report(3, "fixed seed reproduces centroids, assignment, and inertia",
         m1.centroids == m2.centroids && m1.assignment == m2.assignment &&
             m1.inertia == m2.inertia);
}

// ---------------------------------------------------------------------------
// Criteria 4 and 5: matcher/eval identities and the perfect-oracle check,
// on a small two-template fixture.
// ---------------------------------------------------------------------------

struct Fixture {
  std::vector<Question> train;
  std::vector<Question> test;
  std::shared_ptr<const Vocabulary> vocab;
  std::shared_ptr<const ClusterModel> clusters;
  SiameseModel model;
  QuestionIndex index;
};

Fixture make_fixture() {
  Fixture f;
  const ConstituentVector t0{ColumnType::Text, Aggregator::None, 1, 0, 0};
  const ConstituentVector t1{ColumnType::Number, Aggregator::Count, 1, 0, 0};
  const std::vector<std::string> lexicon{"who",  "was",  "the",  "winner", "champ",
                                         "how",  "many", "wins", "there",  "then"};
  auto who_tokens = [](int i) {
    return std::vector<std::string>{"who", "was", "the", i % 2 ? "winner" : "champ"};
  };
  auto how_tokens = [](int i) {
    return std::vector<std::string>{"how", "many", "wins", i % 2 ? "there" : "then"};
  };
  for (int i = 0; i < 10; ++i) {
    f.train.push_back({"w" + std::to_string(i), who_tokens(i), t0, Split::Train});
    f.train.push_back({"h" + std::to_string(i), how_tokens(i), t1, Split::Train});
  }
  for (int i = 0; i < 6; ++i) {
    f.test.push_back({"tw" + std::to_string(i), who_tokens(i), t0, Split::Test});
    f.test.push_back({"th" + std::to_string(i), how_tokens(i), t1, Split::Test});
  }
  f.vocab = std::make_shared<const Vocabulary>(build_vocab(f.train, 1));
  std::vector<OneHotVector> vectors;
  std::vector<std::string> ids;
  for (const auto& q : f.train) {
    vectors.push_back(encode(q, *f.vocab));
    ids.push_back(q.id);
  }
  LexicalConfig config;
  config.k = 2;
  config.seed = 41;
  f.clusters = std::make_shared<const ClusterModel>(
      kmeans_fit(vectors, ids, f.vocab->size(), config));
  f.model.embeddings = std::make_shared<EmbeddingTable>(
      sps::testing::make_synthetic_embeddings(lexicon, 6));
  f.model.lstm = LstmParams::random(6, 8, 404);
  f.model.head = RegressionHead::random(8, 405);
  f.index = build_index(f.train, f.vocab, f.clusters, f.model);
  return f;
}

void criterion_4() {
  const auto f = make_fixture();
  const auto rows = evaluate(f.test, f.index, f.model, default_beta_grid());

  bool identity_ok = true;
  bool monotone_ok = true;
  double prev_rejected = 1.0 + 1e-12;
  for (const auto& row : rows) {
    if (std::abs(row.accuracy_all -
                 row.accuracy_non_rejected * (1.0 - row.pct_rejected)) > 1e-12) {
      identity_ok = false;
    }
    if (row.pct_rejected > prev_rejected) monotone_ok = false;
    prev_rejected = row.pct_rejected;
  }
  report(4, "pct_rejected is non-increasing in beta across the report", monotone_ok);
  report(4, "accuracy_all = accuracy_non_rejected * (1 - pct_rejected) within 1e-12",
         identity_ok);

  bool persistence_ok = true;
  for (const auto& q : f.test) {
    for (double b1 : {0.2, 0.5, 0.9, 1.4}) {
      const auto r1 = match(q, f.index, f.model, MatcherConfig{b1});
      if (!r1.matched) continue;
      for (double b2 : {b1 + 0.05, b1 + 0.7, 1e6}) {
        const auto r2 = match(q, f.index, f.model, MatcherConfig{b2});
        if (!r2.matched || r2.train_id != r1.train_id ||
            r2.predicted_distance != r1.predicted_distance) {
          persistence_ok = false;
        }
      }
    }
  }
  report(4, "a match at beta1 persists at any beta2 >= beta1 with the same member",
         persistence_ok);
}

void criterion_5() {
  const auto f = make_fixture();
  const PairScorer oracle = [](const Question& q, const IndexEntry& m) {
    return static_cast<double>(sqlsd(q.tmpl, m.tmpl));
  };
  std::vector<double> grid;
  for (int i = 1; i <= 20; ++i) grid.push_back(0.05 * i);  // (0, 1]
  const auto rows = evaluate(f.test, f.index, oracle, grid);
  bool ok = true;
  for (const auto& row : rows) {
    if (row.accuracy_non_rejected != 1.0) ok = false;
  }
  report(5, "the sqlsd oracle scores accuracy_non_rejected = 1.0 at every beta in (0,1]",
         ok);
}

// ---------------------------------------------------------------------------
// Criterion 6: desk-scale end-to-end experiment through the pipeline commands.
// ---------------------------------------------------------------------------

struct ParsedReport {
  double best_accuracy_all = 0.0;
  double best_acc_non_rejected = 0.0;
  double best_beta = 0.0;
  double embeddings_accuracy = 0.0;
};

ParsedReport parse_report(const fs::path& path) {
  ParsedReport r;
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string key, field;
    std::getline(ss, key, ',');
    std::vector<double> vals;
    while (std::getline(ss, field, ',')) vals.push_back(std::stod(field));
    if (key == "embeddings") {
      r.embeddings_accuracy = vals[1];  // accuracy_all column
    } else if (key != "accept_all") {
      if (vals[1] > r.best_accuracy_all) {
        r.best_accuracy_all = vals[1];
        r.best_acc_non_rejected = vals[0];
        r.best_beta = std::stod(key);
      }
    }
  }
  return r;
}

void criterion_6() {
  const fs::path dir = fs::temp_directory_path() / "sps_acceptance_e2e";
  fs::remove_all(dir);
  fs::create_directories(dir);

  sps::testing::SyntheticConfig synth;
  synth.question_count = 2400;
  synth.seed = 20240601;
  synth.embedding_dim = 16;

  PipelineConfig config;
  config.questions_path = dir / "questions.jsonl";
  config.tables_path = dir / "tables.jsonl";
  config.embeddings_path = dir / "embeddings.txt";
  config.model_dir = dir / "models";
  config.report_dir = dir / "reports";
  config.embedding_dim = synth.embedding_dim;
  config.lexical.alpha = 25;
  config.lexical.k = 20;
  config.train.hidden_size = 32;
  config.train.epochs = 20;
  config.train.batch_size = 32;
  config.train.pairs_per_epoch = 4000;
  config.seed = 7;
  config.fan_out_seeds();

  sps::testing::write_synthetic_dataset(synth, config.questions_path,
                                        config.tables_path);
  const auto corpus = sps::testing::make_synthetic_corpus(synth);
  sps::testing::write_synthetic_embeddings(corpus.lexicon, synth.embedding_dim,
                                           config.embeddings_path);

  bool pipeline_ok = cmd_clean(config) == 0 && cmd_cluster(config) == 0 &&
                     cmd_train(config) == 0 && cmd_eval(config) == 0;
  report(6, "clean -> cluster -> train -> eval pipeline runs end to end", pipeline_ok);
  if (!pipeline_ok) return;

  const auto parsed = parse_report(config.report_dir / "eval_report.csv");
  {
    std::ostringstream detail;
    detail << "best accuracy_all " << parsed.best_accuracy_all << " at beta "
           << parsed.best_beta << " vs embeddings baseline "
           << parsed.embeddings_accuracy;
    report(6, "best accuracy_all beats the embeddings baseline by >= 15 points",
           parsed.best_accuracy_all >= parsed.embeddings_accuracy + 0.15, detail.str());
  }
  {
    std::ostringstream detail;
    detail << "accuracy_non_rejected " << parsed.best_acc_non_rejected << " at beta "
           << parsed.best_beta;
    report(6, "accuracy_non_rejected at the best beta >= 0.85",
           parsed.best_acc_non_rejected >= 0.85, detail.str());
  }
  {
    const auto ckpt = load_checkpoint(config.checkpoint_path());
    bool loss_ok = ckpt.epoch_log.size() >= 5 &&
                   ckpt.epoch_log[4].mean_loss < ckpt.epoch_log[0].mean_loss;
    std::ostringstream detail;
    if (ckpt.epoch_log.size() >= 5) {
      detail << "epoch 1 loss " << ckpt.epoch_log[0].mean_loss << " -> epoch 5 loss "
             << ckpt.epoch_log[4].mean_loss;
    }
    report(6, "training loss strictly decreases from epoch 1 to epoch 5", loss_ok,
           detail.str());
  }
}

}  // namespace

int main() {
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  if (g_failures == 0) {
    std::cout << "acceptance: all criteria passed\n";
    return 0;
  }
  std::cout << "acceptance: " << g_failures << " check(s) failed\n";
  return 1;
}
