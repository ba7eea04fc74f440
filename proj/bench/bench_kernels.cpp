// Serial reference vs OpenMP paths: the two data-parallel kernels, k-means
// clustering, cross-validation and a small experiment.

#include <benchmark/benchmark.h>

#include "fpa/cc_cleaner.hpp"
#include "fpa/enet.hpp"
#include "fpa/kernels.hpp"
#include "fpa/random.hpp"
#include "fpa/synth.hpp"

using namespace fpa;

namespace {

std::vector<std::uint8_t> random_cells(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::uint8_t> cells(rows * cols);
    for (auto& c : cells) c = rng.bernoulli(0.3) ? 1 : 0;
    return cells;
}

Execution mode(const benchmark::State& state) { return state.range(0) == 0 ? Execution::Serial : Execution::Parallel; }

void BM_NearestCentroid(benchmark::State& state) {
    const std::size_t rows = 2000, cols = 400, k = 16;
    const auto points = random_cells(rows, cols, 1);
    std::vector<double> centroids(k * cols);
    Rng rng(2);
    for (auto& c : centroids) c = rng.uniform();
    std::vector<std::size_t> label(rows);
    std::vector<double> dist(rows);
    for (auto _ : state) {
        kernels::nearest_centroid(mode(state), points, rows, cols, centroids, k, label, dist);
        benchmark::DoNotOptimize(label.data());
    }
}
BENCHMARK(BM_NearestCentroid)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMicrosecond);

void BM_ColumnCorrelation(benchmark::State& state) {
    const std::size_t rows = 500, cols = 300;
    const auto cells = random_cells(rows, cols, 3);
    std::vector<std::size_t> sel(cols);
    for (std::size_t j = 0; j < cols; ++j) sel[j] = j;
    std::vector<double> out(cols * cols);
    for (auto _ : state) {
        kernels::column_correlation(mode(state), cells, rows, cols, sel, out);
        benchmark::DoNotOptimize(out.data());
    }
}
BENCHMARK(BM_ColumnCorrelation)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMicrosecond);

void BM_ClusterRuns(benchmark::State& state) {
    const std::size_t rows = 1000, cols = 200;
    std::vector<std::string> runs, preds;
    for (std::size_t i = 0; i < rows; ++i) runs.push_back("r" + std::to_string(i));
    for (std::size_t j = 0; j < cols; ++j) preds.push_back("p" + std::to_string(j));
    const CoverageMatrix m(runs, preds, random_cells(rows, cols, 4));
    for (auto _ : state) benchmark::DoNotOptimize(cluster_runs(m, 22, 5, mode(state)));
}
BENCHMARK(BM_ClusterRuns)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);

void BM_CrossValidate(benchmark::State& state) {
    SynthConfig c;
    c.seed = 6;
    const auto inst = generate_instance(c);
    EnetConfig config;
    config.alpha_grid = {0.0, 0.5, 1.0};
    const std::vector<double> v(inst.dataset.predicates(), 1.0);
    for (auto _ : state) benchmark::DoNotOptimize(cross_validate(inst.dataset, v, config, mode(state)));
}
BENCHMARK(BM_CrossValidate)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);

void BM_Experiment(benchmark::State& state) {
    ExperimentConfig c;
    c.synth.n_predicates = 60;
    c.synth.m_runs = 50;
    c.synth.context_size = 10;
    c.synth.n_modules = 10;
    c.repetitions = 8;
    c.options.enet.alpha_grid = {0.5, 1.0};
    for (auto _ : state) benchmark::DoNotOptimize(run_experiment(c, mode(state)));
}
BENCHMARK(BM_Experiment)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
