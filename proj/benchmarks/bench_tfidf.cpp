#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "evver/rng.hpp"
#include "evver/text_features.hpp"

namespace {

std::vector<std::string> headlines(std::size_t n) {
  static const char* words[] = {"senate", "vaccine", "budget", "storm",  "election", "court", "climate", "report",
                                "tax",    "city",    "police", "school", "market",   "rates", "virus",   "trial"};
  evver::Rng rng(17);
  std::vector<std::string> docs;
  for (std::size_t i = 0; i < n; ++i) {
    std::string d;
    std::size_t len = 6 + rng.uniform_index(10);
    for (std::size_t k = 0; k < len; ++k) {
      d += words[rng.uniform_index(16)];
      d += std::to_string(rng.uniform_index(50));
      d += ' ';
    }
    docs.push_back(std::move(d));
  }
  return docs;
}

void BM_VocabularyFit(benchmark::State& state) {
  auto docs = headlines(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(evver::Vocabulary::fit(docs));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_VocabularyFit)->Arg(1000)->Arg(10000);

void BM_Featurize(benchmark::State& state) {
  auto docs = headlines(static_cast<std::size_t>(state.range(0)));
  auto vocab = evver::Vocabulary::fit(docs);
  for (auto _ : state) benchmark::DoNotOptimize(evver::featurize(docs, vocab, evver::FeatureMode::tfidf));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Featurize)->Arg(1000)->Arg(10000);

}  // namespace
