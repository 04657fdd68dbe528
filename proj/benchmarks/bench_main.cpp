#include <benchmark/benchmark.h>

#include <random>

#include "scmlens/dataset.hpp"
#include "scmlens/forward.hpp"
#include "scmlens/scm.hpp"
#include "scmlens/structural_learn.hpp"
#include "scmlens/tensor.hpp"

using namespace scmlens;

namespace {

Tensor random_tensor(Shape shape, std::mt19937_64& rng) {
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  Tensor t(std::move(shape));
  for (float& v : t.data()) v = u(rng);
  return t;
}

struct Desk {
  Network net;
  LabeledDataset data;
};

const Desk& desk() {
  static const Desk d{load_network(SCMLENS_BENCH_DATA_DIR "/model.json", SCMLENS_BENCH_DATA_DIR "/weights.bin"),
                      load_dataset_file(SCMLENS_BENCH_DATA_DIR "/data.bin")};
  return d;
}

const ResponseTable& desk_table() {
  static const ResponseTable t = augment(desk().net, desk().data, 0.1, 1, 42);
  return t;
}

}  // namespace

static void BM_Conv2d(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto c = static_cast<std::size_t>(state.range(1));
  std::mt19937_64 rng(1);
  const Tensor input = random_tensor({n, n, c}, rng);
  const Tensor kernel = random_tensor({3, 3, c, c}, rng);
  const std::vector<float> bias(c, 0.1f);
  for (auto _ : state) benchmark::DoNotOptimize(conv2d(input, kernel, bias, 1, Padding::Same));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * c * c * 9));
}
BENCHMARK(BM_Conv2d)->Args({16, 8})->Args({32, 16})->Args({32, 64});

static void BM_ForwardDesk(benchmark::State& state) {
  const auto& d = desk();
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(forward(d.net, d.data.images[i++ % d.data.size()]));
}
BENCHMARK(BM_ForwardDesk);

static void BM_AugmentDesk(benchmark::State& state) {
  const auto& d = desk();
  for (auto _ : state) benchmark::DoNotOptimize(augment(d.net, d.data, 0.1, 1, 42));
}
BENCHMARK(BM_AugmentDesk)->Unit(benchmark::kMillisecond);

static void BM_FitDesk(benchmark::State& state) {
  const auto& table = desk_table();
  const CausalDag dag = build_dag(desk().net.spec());
  LearnerConfig cfg;
  cfg.real_learner = state.range(0) == 0 ? Learner::Ols : Learner::Ridge;
  for (auto _ : state) benchmark::DoNotOptimize(fit_all(table, dag, TransformKind::Frobenius, cfg));
}
BENCHMARK(BM_FitDesk)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

static void BM_ScmForwardDesk(benchmark::State& state) {
  const auto scm = fit_scm(desk().net, desk_table(), TransformKind::Frobenius, LearnerConfig{}, 0.1, 1);
  const auto roots = collect_roots(scm, desk().net, desk().data);
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(scm_forward(scm, roots[i++ % roots.size()]));
}
BENCHMARK(BM_ScmForwardDesk);
BENCHMARK_MAIN();
