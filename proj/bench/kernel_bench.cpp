// Serial vs OpenMP kernels on an n = 2 grid.
#include <benchmark/benchmark.h>

#include <cmath>

#include "cma/kernels.hpp"
#include "cma/ma_operator.hpp"
#include "cma/spectral.hpp"

namespace {

cma::GridField sample_phi(const cma::TorusSpec& spec) {
    cma::GridField f(spec);
    auto& v = f.mutable_values();
    for (std::size_t i = 0; i < v.size(); ++i) {
        const auto x = spec.coords(i);
        v[i] = 0.05 * (std::cos(2 * M_PI * x[0]) + std::sin(2 * M_PI * (x[1] + x[2])));
    }
    return f;
}

cma::Exec exec_of(const benchmark::State& s) { return s.range(1) ? cma::Exec::parallel : cma::Exec::serial; }

void BM_MaDensity(benchmark::State& s) {
    const cma::TorusSpec spec(2, static_cast<int>(s.range(0)));
    const auto phi = sample_phi(spec);
    const auto a = cma::HermitianFormField::identity(spec);
    for (auto _ : s) benchmark::DoNotOptimize(cma::ma_density(a, phi, exec_of(s)));
}

void BM_Linearized(benchmark::State& s) {
    const cma::TorusSpec spec(2, static_cast<int>(s.range(0)));
    const auto phi = sample_phi(spec);
    const auto a = cma::HermitianFormField::identity(spec);
    for (auto _ : s) benchmark::DoNotOptimize(cma::linearized_apply(a, phi, phi, exec_of(s)));
}

void BM_Solve(benchmark::State& s) {
    const cma::TorusSpec spec(2, static_cast<int>(s.range(0)));
    const auto a = cma::HermitianFormField::identity(spec);
    const auto F = cma::ma_density(a, sample_phi(spec));
    cma::SolveOptions opt;
    opt.exec = exec_of(s);
    for (auto _ : s) benchmark::DoNotOptimize(cma::solve_ma_detailed(a, F, cma::GridField(spec), 1e-10, opt));
}

}  // namespace

BENCHMARK(BM_MaDensity)->ArgsProduct({{16, 24}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Linearized)->ArgsProduct({{16, 24}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Solve)->ArgsProduct({{16}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
