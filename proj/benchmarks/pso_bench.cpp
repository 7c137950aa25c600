#include "pso/pso.hpp"

#include <benchmark/benchmark.h>

using namespace pso;

namespace {

Matrix normal_matrix(CounterRng& rng, Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

struct Fixture {
  Model model;
  Matrix up, down;
  Distribution down_law;

  Fixture(int dim, int num_blocks, int block_size, int batch)
      : down_law(uniform_box(Vector::Constant(dim, -2.5), Vector::Constant(dim, 2.5))) {
    const Distribution truth = columns(dim);
    CounterRng rng(42);
    up = truth.sample(rng, batch);
    down = down_law.sample(rng, batch);
    model.spec = NetworkSpec::block_diagonal(dim, num_blocks, block_size, 4);
    model.spec.shortcuts = true;
    model.precond = Preconditioner::from_data(up, down_law.height_bias());
    model.theta = init_params(model.spec, 1, false);
  }
};

}  // namespace

static void BM_Forward(benchmark::State& state) {
  const Fixture f(static_cast<int>(state.range(0)), 8, 16, 256);
  for (auto _ : state) benchmark::DoNotOptimize(f.model.heights(f.up));
  state.SetItemsProcessed(state.iterations() * f.up.rows());
}
BENCHMARK(BM_Forward)->Arg(1)->Arg(4)->Arg(20);

static void BM_ForwardBackward(benchmark::State& state) {
  const Fixture f(static_cast<int>(state.range(0)), 8, 16, 256);
  const Vector coeffs = Vector::Ones(f.up.rows());
  for (auto _ : state) {
    const ForwardTape tape = forward_tape(f.model.spec, f.model.precond, f.model.theta, f.up);
    benchmark::DoNotOptimize(backward(f.model.spec, f.model.theta, tape, coeffs));
  }
  state.SetItemsProcessed(state.iterations() * f.up.rows());
}
BENCHMARK(BM_ForwardBackward)->Arg(1)->Arg(4)->Arg(20);

static void BM_BdLayerApply(benchmark::State& state) {
  const int nb = static_cast<int>(state.range(0)), sb = static_cast<int>(state.range(1));
  CounterRng rng(3);
  const Matrix W = normal_matrix(rng, 1, nb * sb * sb);
  const Matrix b = normal_matrix(rng, 1, nb * sb);
  const Matrix v = normal_matrix(rng, 256, nb * sb);
  for (auto _ : state)
    benchmark::DoNotOptimize(bd_layer_apply(std::span<const double>(W.data(), W.size()),
                                            std::span<const double>(b.data(), b.size()), v, nb, sb,
                                            Activation{}));
  state.SetItemsProcessed(state.iterations() * v.rows());
}
BENCHMARK(BM_BdLayerApply)->Args({4, 16})->Args({8, 16})->Args({50, 64});

static void BM_PsoUpdate(benchmark::State& state) {
  const Fixture f(4, 4, 16, static_cast<int>(state.range(0)));
  const PsoInstance inst = make_pso_lde(0.25);
  const AuxEvaluator aux = density_aux(f.down_law);
  for (auto _ : state) benchmark::DoNotOptimize(pso_update(f.model, inst, f.up, f.down, aux));
  state.SetItemsProcessed(state.iterations() * 2 * f.up.rows());
}
BENCHMARK(BM_PsoUpdate)->Arg(64)->Arg(256)->Arg(1000);

static void BM_ColumnsLogPdf(benchmark::State& state) {
  const int dim = static_cast<int>(state.range(0));
  const Distribution d = columns(dim);
  CounterRng rng(5);
  const Matrix x = d.sample(rng, 1024);
  for (auto _ : state) benchmark::DoNotOptimize(d.log_pdf(x));
  state.SetItemsProcessed(state.iterations() * x.rows());
}
BENCHMARK(BM_ColumnsLogPdf)->Arg(1)->Arg(20);

static void BM_Gramian(benchmark::State& state) {
  const Fixture f(2, 2, 8, 256);
  const Matrix probes = f.up.topRows(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(gramian(f.model, probes));
}
BENCHMARK(BM_Gramian)->Arg(32)->Arg(128);

BENCHMARK_MAIN();
