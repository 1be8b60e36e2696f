#include <rcgs/driver_systems.hpp>
#include <rcgs/gs_test.hpp>
#include <rcgs/reservoir.hpp>
#include <rcgs/sparse.hpp>
#include <rcgs/training.hpp>

#include <benchmark/benchmark.h>

using namespace rcgs;

namespace {

ReservoirParams bench_params(int n)
{
    ReservoirParams p;
    p.n_nodes = n;
    p.seed = 1;
    return p;
}

const Trajectory& lorenz_input()
{
    static const Trajectory t =
        standardize(integrate_on_attractor(lorenz63(), Vector::Constant(3, 1.0), 0.01, 50.0, 60.0)).first;
    return t;
}

void BM_CsrMultiply(benchmark::State& state)
{
    const Reservoir res = Reservoir::build(bench_params(static_cast<int>(state.range(0))));
    const Vector x = res.random_state(3);
    Vector y(x.size());
    for (auto _ : state) {
        res.adjacency_csr().multiply(x, y);
        benchmark::DoNotOptimize(y.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<long>(res.adjacency().nnz()));
}
BENCHMARK(BM_CsrMultiply)->Arg(500)->Arg(2000)->Arg(8000);

void BM_CsrBlockMultiply(benchmark::State& state)
{
    const Reservoir res = Reservoir::build(bench_params(2000));
    RowMatrix x = RowMatrix::Random(2000, state.range(0)), y(2000, state.range(0));
    for (auto _ : state) {
        res.adjacency_csr().multiply(x, y);
        benchmark::DoNotOptimize(y.data());
    }
}
BENCHMARK(BM_CsrBlockMultiply)->Arg(4)->Arg(9)->Arg(16);

void BM_FastTanh(benchmark::State& state)
{
    const Vector x = Vector::Random(state.range(0)) * 4.0;
    Vector y(x.size());
    for (auto _ : state) {
        y = fast_tanh(x.array()).matrix();
        benchmark::DoNotOptimize(y.data());
    }
}
BENCHMARK(BM_FastTanh)->Arg(2000);

void BM_DriveOneTimeUnit(benchmark::State& state)
{
    const Reservoir res = Reservoir::build(bench_params(static_cast<int>(state.range(0))));
    const Trajectory input = lorenz_input().slice(0, 101);
    const Vector r0 = res.random_state(5);
    for (auto _ : state) benchmark::DoNotOptimize(drive_to_end(res, input, r0));
}
BENCHMARK(BM_DriveOneTimeUnit)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_GramAccumulation(benchmark::State& state)
{
    const Eigen::Index dim = state.range(0);
    const Matrix phi = Matrix::Random(512, dim);
    const Matrix target = Matrix::Random(512, 3);
    for (auto _ : state) {
        NormalEquations ne(dim, 3);
        ne.add_rows(phi, target);
        benchmark::DoNotOptimize(ne.gram().data());
    }
}
BENCHMARK(BM_GramAccumulation)->Arg(1001)->Arg(4001)->Unit(benchmark::kMillisecond);

void BM_AuxiliaryTest(benchmark::State& state)
{
    const Reservoir res = Reservoir::build(bench_params(static_cast<int>(state.range(0))));
    GSOptions opt;
    opt.transient_time = 5.0;
    opt.test_time = 20.0;
    for (auto _ : state) benchmark::DoNotOptimize(auxiliary_test(res, lorenz_input(), {1, 2}, opt).converged);
}
BENCHMARK(BM_AuxiliaryTest)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
