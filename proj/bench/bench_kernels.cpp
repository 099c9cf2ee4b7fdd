// Serial reference kernels against their OpenMP counterparts.
// Thread count comes from OMP_NUM_THREADS (or the machine default).

#include <benchmark/benchmark.h>
#include <omp.h>

#include <random>
#include <string>
#include <vector>

#include "lexlift/kernels/cbow.hpp"
#include "lexlift/kernels/count.hpp"
#include "lexlift/kernels/dense.hpp"
#include "lexlift/w2v.hpp"

using namespace lexlift;

namespace {

std::vector<std::string> make_lines(std::size_t n_lines, std::size_t vocab, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, vocab - 1);
  std::vector<std::string> lines(n_lines);
  for (auto& line : lines) {
    for (int j = 0; j < 20; ++j) {
      if (j) line += ' ';
      line += "w" + std::to_string(pick(rng));
    }
  }
  return lines;
}

EmbeddingTable make_table(std::size_t rows, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> normal;
  EmbeddingTable t(rows, dim);
  for (float& v : t.data()) v = normal(rng);
  return t;
}

const std::vector<std::string>& corpus_lines() {
  static const auto lines = make_lines(20'000, 2'000, 1);
  return lines;
}

struct CbowSetup {
  Vocab vocab;
  w2v::EncodedCorpus corpus;
  w2v::W2VConfig config;
  CbowSetup() {
    vocab = build_vocab(corpus_lines(), 5);
    corpus = w2v::encode_corpus(corpus_lines(), vocab);
    config.dim = 64;
    config.epochs = 1;
    config.table_size = 1'000'000;
  }
};

const CbowSetup& cbow_setup() {
  static const CbowSetup s;
  return s;
}

void BM_CountSerial(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(kernels::serial::count_tokens(corpus_lines()));
}
void BM_CountOmp(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(kernels::omp::count_tokens(corpus_lines(), omp_get_max_threads()));
}

void BM_CbowSerial(benchmark::State& state) {
  const auto& s = cbow_setup();
  for (auto _ : state) benchmark::DoNotOptimize(kernels::serial::train_cbow(s.corpus, s.vocab, s.config));
}
void BM_CbowOmp(benchmark::State& state) {
  const auto& s = cbow_setup();
  auto config = s.config;
  config.workers = omp_get_max_threads();
  for (auto _ : state) benchmark::DoNotOptimize(kernels::omp::train_cbow(s.corpus, s.vocab, config));
}

struct DenseSetup {
  std::vector<double> map;
  EmbeddingTable src = make_table(20'000, 128, 2);
  EmbeddingTable lm = make_table(30'000, 128, 3);
  std::vector<double> query;
  DenseSetup() {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> normal;
    map.resize(128 * 128);
    for (double& v : map) v = normal(rng);
    query.resize(128);
    for (double& v : query) v = normal(rng);
  }
  kernels::MatrixView view() const { return {map, 128, 128}; }
};

const DenseSetup& dense_setup() {
  static const DenseSetup s;
  return s;
}

void BM_ProjectSerial(benchmark::State& state) {
  const auto& s = dense_setup();
  for (auto _ : state) benchmark::DoNotOptimize(kernels::serial::project_rows(s.view(), s.src));
}
void BM_ProjectOmp(benchmark::State& state) {
  const auto& s = dense_setup();
  for (auto _ : state) benchmark::DoNotOptimize(kernels::omp::project_rows(s.view(), s.src));
}

void BM_TopKSerial(benchmark::State& state) {
  const auto& s = dense_setup();
  for (auto _ : state) benchmark::DoNotOptimize(kernels::serial::top_k_dot(s.lm, s.query, 10));
}
void BM_TopKOmp(benchmark::State& state) {
  const auto& s = dense_setup();
  for (auto _ : state) benchmark::DoNotOptimize(kernels::omp::top_k_dot(s.lm, s.query, 10));
}

}  // namespace

BENCHMARK(BM_CountSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CountOmp)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CbowSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CbowOmp)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ProjectSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ProjectOmp)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TopKSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TopKOmp)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
