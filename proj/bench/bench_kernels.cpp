#include <benchmark/benchmark.h>
#include <omp.h>

#include <complex>
#include <random>
#include <vector>

#include "hydroldp/kernels.hpp"

namespace k = hydroldp::kernels;

namespace {

constexpr int kNz = 32;
constexpr k::Ghosts kNeumann{1.0, 1.0};

std::vector<double> random_data(std::size_t n, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    std::vector<double> v(n);
    for (auto& x : v) x = nd(rng);
    return v;
}

// range(0) = number of columns, range(1) = threads (ignored by the serial variant).
k::Columns columns(const benchmark::State& st) { return {static_cast<std::size_t>(st.range(0)), kNz}; }

template <bool Omp>
void BM_SecondDiff(benchmark::State& st) {
    const auto cols = columns(st);
    const auto in = random_data(cols.count * kNz, 1);
    std::vector<double> out(in.size());
    if (Omp) omp_set_num_threads(static_cast<int>(st.range(1)));
    for (auto _ : st) {
        if (Omp)
            k::omp::second_diff(in, out, cols, kNeumann, 1.0 / kNz);
        else
            k::serial::second_diff(in, out, cols, kNeumann, 1.0 / kNz);
        benchmark::DoNotOptimize(out.data());
    }
    st.SetItemsProcessed(st.iterations() * static_cast<long>(in.size()));
}

template <bool Omp>
void BM_CumulativeMidpoint(benchmark::State& st) {
    const auto cols = columns(st);
    const auto in = random_data(cols.count * kNz, 2);
    std::vector<double> out(in.size());
    if (Omp) omp_set_num_threads(static_cast<int>(st.range(1)));
    for (auto _ : st) {
        if (Omp)
            k::omp::cumulative_midpoint(in, out, cols, 1.0 / kNz);
        else
            k::serial::cumulative_midpoint(in, out, cols, 1.0 / kNz);
        benchmark::DoNotOptimize(out.data());
    }
    st.SetItemsProcessed(st.iterations() * static_cast<long>(in.size()));
}

template <bool Omp>
void BM_ImplicitHeatSolve(benchmark::State& st) {
    const auto cols = columns(st);
    const auto re = random_data(cols.count * kNz, 3);
    std::vector<std::complex<double>> base(re.size());
    for (std::size_t i = 0; i < re.size(); ++i) base[i] = {re[i], -re[i]};
    std::vector<double> shift(cols.count, 2.0);
    std::vector<std::complex<double>> rhs(base.size());
    if (Omp) omp_set_num_threads(static_cast<int>(st.range(1)));
    for (auto _ : st) {
        st.PauseTiming();
        rhs = base;
        st.ResumeTiming();
        if (Omp)
            k::omp::implicit_heat_solve(rhs, shift, cols, kNeumann, 0.01 * kNz * kNz);
        else
            k::serial::implicit_heat_solve(rhs, shift, cols, kNeumann, 0.01 * kNz * kNz);
        benchmark::DoNotOptimize(rhs.data());
    }
    st.SetItemsProcessed(st.iterations() * static_cast<long>(rhs.size()));
}

template <bool Omp>
void BM_MultiplyAccumulate(benchmark::State& st) {
    const std::size_t n = static_cast<std::size_t>(st.range(0)) * kNz;
    const auto a = random_data(n, 4), b = random_data(n, 5);
    std::vector<double> out(n, 0.0);
    if (Omp) omp_set_num_threads(static_cast<int>(st.range(1)));
    for (auto _ : st) {
        if (Omp)
            k::omp::multiply_accumulate(a, b, out, 0.5);
        else
            k::serial::multiply_accumulate(a, b, out, 0.5);
        benchmark::DoNotOptimize(out.data());
    }
    st.SetItemsProcessed(st.iterations() * static_cast<long>(n));
}

void serial_args(benchmark::internal::Benchmark* b) {
    for (long c : {256L, 4096L, 65536L}) b->Args({c, 1});
}

void omp_args(benchmark::internal::Benchmark* b) {
    const long max_threads = omp_get_max_threads();
    for (long c : {256L, 4096L, 65536L})
        for (long t = 1; t <= max_threads; t *= 2) b->Args({c, t});
}

}  // namespace

BENCHMARK(BM_SecondDiff<false>)->Apply(serial_args);
BENCHMARK(BM_SecondDiff<true>)->Apply(omp_args);
BENCHMARK(BM_CumulativeMidpoint<false>)->Apply(serial_args);
BENCHMARK(BM_CumulativeMidpoint<true>)->Apply(omp_args);
BENCHMARK(BM_ImplicitHeatSolve<false>)->Apply(serial_args);
BENCHMARK(BM_ImplicitHeatSolve<true>)->Apply(omp_args);
BENCHMARK(BM_MultiplyAccumulate<false>)->Apply(serial_args);
BENCHMARK(BM_MultiplyAccumulate<true>)->Apply(omp_args);

BENCHMARK_MAIN();
