#include <benchmark/benchmark.h>

#include <map>

#include "../tests/support/synthetic_corpus.hpp"
#include "ras/scoring/maxsim.hpp"
#include "ras/scoring/reference.hpp"
#include "ras/scoring/top_k.hpp"

namespace {

using namespace ras;

const std::vector<scoring::CorpusDocument>& corpus(std::size_t n) {
  static std::map<std::size_t, std::vector<scoring::CorpusDocument>> cache;
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, testing::synthetic_corpus(n)).first;
  return it->second;
}

const scoring::EmbeddingMatrix& query() {
  static const auto q = testing::random_unit_matrix(16, 128, 7);
  return q;
}

void set_counters(benchmark::State& state, std::size_t docs) {
  state.counters["docs"] = static_cast<double>(docs);
  state.counters["docs_per_s"] =
      benchmark::Counter(static_cast<double>(docs), benchmark::Counter::kIsIterationInvariantRate);
}

void BM_Reference(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<scoring::EmbeddingMatrix> docs;
  for (std::size_t i = 0; i < n; ++i) docs.push_back(testing::random_unit_matrix(768, 128, 42 + i));
  for (auto _ : state) benchmark::DoNotOptimize(scoring::reference::score_corpus(query(), docs));
  set_counters(state, n);
}

void BM_Serial(benchmark::State& state) {
  const auto& docs = corpus(static_cast<std::size_t>(state.range(0)));
  const scoring::PreparedQuery q(query());
  for (auto _ : state) benchmark::DoNotOptimize(scoring::score_corpus_serial(q, docs));
  set_counters(state, docs.size());
}

void BM_Parallel(benchmark::State& state) {
  const auto& docs = corpus(static_cast<std::size_t>(state.range(0)));
  const scoring::PreparedQuery q(query());
  for (auto _ : state) benchmark::DoNotOptimize(scoring::score_corpus(q, docs));
  set_counters(state, docs.size());
  state.counters["threads"] = scoring::scan_threads({});
}

void BM_SearchEndToEnd(benchmark::State& state) {
  const auto& docs = corpus(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    const scoring::PreparedQuery q(query());
    const auto scores = scoring::score_corpus(q, docs);
    benchmark::DoNotOptimize(scoring::top_k(std::span<const scoring::CorpusDocument>(docs), scores));
  }
  set_counters(state, docs.size());
}

void BM_TopK(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 16.0);
  std::vector<std::string> ids;
  std::vector<double> scores;
  for (std::size_t i = 0; i < n; ++i) {
    ids.push_back("doc-" + std::to_string(i));
    scores.push_back(u(rng));
  }
  for (auto _ : state) benchmark::DoNotOptimize(scoring::top_k(ids, scores, 100));
}

BENCHMARK(BM_Reference)->Arg(100)->Arg(500)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Serial)->Arg(1000)->Arg(5000)->Arg(25000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Parallel)->Arg(1000)->Arg(5000)->Arg(25000)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_SearchEndToEnd)->Arg(25000)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_TopK)->Arg(10000)->Arg(120000)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
