#include <benchmark/benchmark.h>

#include <vector>

#include "mtlchoice/mnl.hpp"
#include "mtlchoice/mtldnn.hpp"
#include "mtlchoice/nl.hpp"
#include "mtlchoice/synth.hpp"

using namespace mtlchoice;

namespace {

const Standardized& mode_data() {
  static const Standardized data = [] {
    const Dataset raw = generate(mode_choice_dgp(DgpKind::Nonlinear), 2000, 8000, 3);
    const auto parts = split(raw, 0.7, 4);
    return standardize(parts.train, parts.test);
  }();
  return data;
}

Batch sample_batch(const Dataset& data, Index rows) {
  std::vector<Index> rp, sp;
  const auto rp_pool = data.indices(Task::RP);
  const auto sp_pool = data.indices(Task::SP);
  for (Index i = 0; i < rows; ++i) {
    rp.push_back(rp_pool[static_cast<std::size_t>(i)]);
    sp.push_back(sp_pool[static_cast<std::size_t>(i)]);
  }
  return make_batch(data, rp, sp);
}

void BM_LossAndGradient(benchmark::State& state) {
  const Dataset& train = mode_data().train;
  HyperConfig h;
  h.width = static_cast<int>(state.range(0));
  const auto& s = train.schema();
  const MtldnnModel model = build(h, s.dim(), s.num_rp_alternatives(), s.num_sp_alternatives(),
                                  s.av_specific_indices());
  const Batch batch = sample_batch(train, 200);
  const LossSpec spec = model.loss_spec();
  for (auto _ : state) benchmark::DoNotOptimize(backward(model.params, batch, spec));
}
BENCHMARK(BM_LossAndGradient)->Arg(25)->Arg(100)->Unit(benchmark::kMicrosecond);

void BM_TrainSteps(benchmark::State& state) {
  const Dataset& train = mode_data().train;
  HyperConfig h;
  h.n_iter = 100;
  const auto& s = train.schema();
  const MtldnnModel model = build(h, s.dim(), s.num_rp_alternatives(), s.num_sp_alternatives(),
                                  s.av_specific_indices());
  for (auto _ : state) benchmark::DoNotOptimize(mtlchoice::train(model, train));
}
BENCHMARK(BM_TrainSteps)->Unit(benchmark::kMillisecond);

void BM_FitMnlSpt(benchmark::State& state) {
  const Dataset& train = mode_data().train;
  for (auto _ : state) benchmark::DoNotOptimize(fit_mnl_spt(train));
}
BENCHMARK(BM_FitMnlSpt)->Unit(benchmark::kMillisecond);

void BM_FitNlConstrained(benchmark::State& state) {
  const Dataset& train = mode_data().train;
  const std::vector<CoefficientTie> ties{{"walk_time", "walk"}, {"transit_cost", "transit"},
                                         {"drive_cost", "drive"}};
  for (auto _ : state) benchmark::DoNotOptimize(fit_nl(train, ties));
}
BENCHMARK(BM_FitNlConstrained)->Unit(benchmark::kMillisecond);

void BM_Predict(benchmark::State& state) {
  const Dataset& test = mode_data().test;
  HyperConfig h;
  const auto& s = test.schema();
  const MtldnnModel model = build(h, s.dim(), s.num_rp_alternatives(), s.num_sp_alternatives(),
                                  s.av_specific_indices());
  for (auto _ : state) benchmark::DoNotOptimize(evaluate(model, test));
}
BENCHMARK(BM_Predict)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
