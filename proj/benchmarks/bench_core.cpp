#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "sps/encoder.hpp"
#include "sps/lexical.hpp"
#include "sps/sql_template.hpp"

namespace {

sps::ConstituentVector random_template(std::mt19937_64& rng) {
  sps::ConstituentVector v;
  v.select_type = static_cast<sps::ColumnType>(rng() % 3);
  v.aggregator = static_cast<sps::Aggregator>(rng() % 6);
  v.count_eq = static_cast<int>(rng() % 4);
  v.count_gt = static_cast<int>(rng() % 4);
  v.count_lt = static_cast<int>(rng() % 4);
  return v;
}

void BM_Sqlsd(benchmark::State& state) {
  std::mt19937_64 rng(7);
  std::vector<sps::ConstituentVector> pool;
  for (int i = 0; i < 1024; ++i) pool.push_back(random_template(rng));
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(sps::sqlsd(pool[i % 1024], pool[(i + 13) % 1024]));
    ++i;
  }
}
BENCHMARK(BM_Sqlsd);

void BM_AssignCluster(benchmark::State& state) {
  const auto k = static_cast<int>(state.range(0));
  const std::size_t dim = 256;
  std::mt19937_64 rng(7);

  std::vector<sps::OneHotVector> vectors;
  std::vector<std::string> ids;
  for (int i = 0; i < k * 8; ++i) {
    sps::OneHotVector v;
    for (std::size_t d = 0; d < dim; ++d) {
      if (rng() % 16 == 0) v.active.push_back(static_cast<int>(d));
    }
    if (v.active.empty()) v.active.push_back(static_cast<int>(rng() % dim));
    vectors.push_back(std::move(v));
    ids.push_back(std::to_string(i));
  }
  sps::LexicalConfig config;
  config.k = k;
  config.max_iterations = 10;
  config.seed = 7;
  const auto model = sps::kmeans_fit(vectors, ids, dim, config);

  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(sps::assign_cluster(vectors[i % vectors.size()], model));
    ++i;
  }
}
BENCHMARK(BM_AssignCluster)->Arg(20)->Arg(100);

void BM_LstmEncode(benchmark::State& state) {
  const auto hidden = static_cast<int>(state.range(0));
  const int input = 64;
  const auto params = sps::LstmParams::random(input, hidden, 7);
  std::mt19937_64 rng(11);
  std::vector<Eigen::VectorXd> seq;
  for (int t = 0; t < 12; ++t) {
    Eigen::VectorXd x(input);
    for (int d = 0; d < input; ++d) {
      x[d] = static_cast<double>(rng() % 1000) / 1000.0 - 0.5;
    }
    seq.push_back(std::move(x));
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(sps::lstm_encode(params, seq));
  }
}
BENCHMARK(BM_LstmEncode)->Arg(32)->Arg(100);

void BM_PairLossBackward(benchmark::State& state) {
  const auto hidden = static_cast<int>(state.range(0));
  const int input = 64;
  const auto params = sps::LstmParams::random(input, hidden, 7);
  const auto head = sps::RegressionHead::random(hidden, 9);
  std::mt19937_64 rng(11);
  auto make_seq = [&rng, input]() {
    std::vector<Eigen::VectorXd> seq;
    for (int t = 0; t < 12; ++t) {
      Eigen::VectorXd x(input);
      for (int d = 0; d < input; ++d) {
        x[d] = static_cast<double>(rng() % 1000) / 1000.0 - 0.5;
      }
      seq.push_back(std::move(x));
    }
    return seq;
  };
  const auto a = make_seq();
  const auto b = make_seq();
  for (auto _ : state) {
    auto grads = sps::ModelGrads::zeros(input, hidden);
    benchmark::DoNotOptimize(sps::pair_loss(params, head, a, b, 2.0, &grads));
  }
}
BENCHMARK(BM_PairLossBackward)->Arg(32)->Arg(100);

}  // namespace

BENCHMARK_MAIN();
