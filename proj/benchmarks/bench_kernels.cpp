#include <anicemc/diagnostics.hpp>
#include <anicemc/logistic.hpp>
#include <anicemc/samplers.hpp>
#include <anicemc/training.hpp>

#include <benchmark/benchmark.h>

#include <random>

using namespace anicemc;

namespace {

ChainBatch make_batch(const EnergyTarget& target, std::size_t n, double sigma, std::uint64_t seed) {
  ChainBatch b;
  b.x = Tensor(Shape{n, target.dim()});
  StreamRng init(seed);
  for (auto& v : b.x.storage()) v = sigma * init.normal();
  for (std::size_t i = 0; i < n; ++i) b.rng.push_back(make_stream(seed, Stream::ChainStep, i));
  b.refresh_energy(target);
  return b;
}

// Synthetic stand-in with the german table's shape: 1000 rows, 24 features plus bias.
LogisticRegressionTarget synthetic_blr(std::size_t rows = 1000, std::size_t features = 24) {
  LogisticRegressionData d;
  d.name = "synthetic";
  d.covariates = Tensor(Shape{rows, features + 1});
  StreamRng rng(11);
  std::vector<double> w(features + 1);
  for (auto& v : w) v = 0.3 * rng.normal();
  for (std::size_t r = 0; r < rows; ++r) {
    double z = 0.0;
    for (std::size_t c = 0; c < features; ++c) {
      d.covariates(r, c) = rng.normal();
      z += w[c] * d.covariates(r, c);
    }
    d.covariates(r, features) = 1.0;
    d.labels.push_back(rng.uniform() < 1.0 / (1.0 + std::exp(-z)) ? 1.0 : 0.0);
  }
  return LogisticRegressionTarget(std::move(d));
}

NiceModel energy_model(std::size_t x_dim) {
  NiceSpec spec;
  spec.x_dim = x_dim;
  spec.v_dim = x_dim;
  std::mt19937_64 init(1);
  return NiceModel::create(spec, init);
}

NiceModel blr_model(std::size_t x_dim) {
  NiceSpec spec = blr_train_preset(x_dim).nice;
  std::mt19937_64 init(1);
  return NiceModel::create(spec, init);
}

void BM_HmcStepEnergy(benchmark::State& state) {
  const auto target = make_analytic_target("mog2");
  HmcKernel kernel({0.1, 40});
  auto batch = make_batch(*target, static_cast<std::size_t>(state.range(0)), 1.0, 1);
  for (auto _ : state) benchmark::DoNotOptimize(kernel.step(*target, batch));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_HmcStepEnergy)->Arg(64)->Arg(2000)->Unit(benchmark::kMicrosecond);

void BM_NiceStepEnergy(benchmark::State& state) {
  const auto target = make_analytic_target("mog2");
  const NiceModel model = energy_model(2);
  NiceMhKernel kernel(model);
  auto batch = make_batch(*target, static_cast<std::size_t>(state.range(0)), 1.0, 1);
  for (auto _ : state) benchmark::DoNotOptimize(kernel.step(*target, batch));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_NiceStepEnergy)->Arg(64)->Arg(2000)->Unit(benchmark::kMicrosecond);

// Bayesian logistic regression: HMC with 40 leapfrog steps against one NICE proposal.
void BM_HmcStepBlr(benchmark::State& state) {
  const auto target = synthetic_blr();
  HmcKernel kernel({0.005, 40});
  auto batch = make_batch(target, 64, 0.1, 2);
  for (auto _ : state) benchmark::DoNotOptimize(kernel.step(target, batch));
  state.SetItemsProcessed(state.iterations() * 64);
}
BENCHMARK(BM_HmcStepBlr)->Unit(benchmark::kMillisecond);

void BM_NiceStepBlr(benchmark::State& state) {
  const auto target = synthetic_blr();
  const NiceModel model = blr_model(target.dim());
  NiceMhKernel kernel(model);
  auto batch = make_batch(target, 64, 0.1, 2);
  for (auto _ : state) benchmark::DoNotOptimize(kernel.step(target, batch));
  state.SetItemsProcessed(state.iterations() * 64);
}
BENCHMARK(BM_NiceStepBlr)->Unit(benchmark::kMillisecond);

void BM_LeapfrogGradientBlr(benchmark::State& state) {
  const auto target = synthetic_blr();
  auto batch = make_batch(target, 64, 0.1, 3);
  Tensor grad;
  for (auto _ : state) {
    target.gradient_batch(batch.x, grad);
    benchmark::DoNotOptimize(grad.data().data());
  }
}
BENCHMARK(BM_LeapfrogGradientBlr)->Unit(benchmark::kMicrosecond);

void BM_TrainIterationEnergy(benchmark::State& state) {
  const auto target = make_analytic_target("mog2");
  TrainConfig c = energy_train_preset();
  c.bootstrap_chains = 32;
  c.bootstrap_initial_burn_in = 100;
  Trainer trainer(*target, c, 1);
  trainer.initialize_buffer();
  for (auto _ : state) benchmark::DoNotOptimize(trainer.iterate());
}
BENCHMARK(BM_TrainIterationEnergy)->Unit(benchmark::kMillisecond);

void BM_EssEstimate(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  ChainSeries chains(32, std::vector<double>(n));
  StreamRng rng(4);
  for (auto& c : chains) {
    double x = 0.0;
    for (auto& v : c) v = x = 0.9 * x + rng.normal();
  }
  for (auto _ : state) benchmark::DoNotOptimize(effective_sample_size(chains, 0.0, 1.0 / (1.0 - 0.81)));
}
BENCHMARK(BM_EssEstimate)->Arg(1000)->Arg(5000)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
