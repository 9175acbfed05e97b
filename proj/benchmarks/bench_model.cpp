#include <benchmark/benchmark.h>

#include <vector>

#include "evver/evvernet.hpp"
#include "evver/training.hpp"

namespace {

evver::EvverConfig config(std::size_t dim) {
  evver::EvverConfig c;
  c.input_dim = dim;
  c.hidden_dims = {512};
  c.batch_size = 512;
  c.max_epochs = 1;
  return c;
}

// Inference over a batch of 512 embeddings.
void BM_ForwardBatch(benchmark::State& state) {
  auto dim = static_cast<std::size_t>(state.range(0));
  auto model = evver::EvverModel::initialize(config(dim));
  evver::mlp::Mat<double> inputs = evver::mlp::Mat<double>::Random(static_cast<Eigen::Index>(dim), 512);
  for (auto _ : state) benchmark::DoNotOptimize(model.forward_batch(inputs));
  state.SetItemsProcessed(state.iterations() * 512);
}
BENCHMARK(BM_ForwardBatch)->Arg(768)->Arg(1024);

// One epoch over 2048 samples is four Adam steps at batch 512.
void BM_TrainEpoch(benchmark::State& state) {
  auto dim = static_cast<std::size_t>(state.range(0));
  evver::RowMatrixF x = evver::RowMatrixF::Random(2048, static_cast<Eigen::Index>(dim));
  std::vector<int> labels(2048);
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i % 3);
  auto data = evver::TrainingSet::from_dense(x, labels);
  auto c = config(dim);
  for (auto _ : state) benchmark::DoNotOptimize(evver::train(data, c));
  state.SetItemsProcessed(state.iterations() * 2048);
}
BENCHMARK(BM_TrainEpoch)->Arg(768)->Unit(benchmark::kMillisecond);

}  // namespace
