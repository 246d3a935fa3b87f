#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "anchor/mapping/mapping.hpp"
#include "anchor/structuring/backends.hpp"

namespace {

using anchor::Vector;

std::vector<Vector> random_vectors(std::size_t n, std::size_t dim, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<Vector> out(n, Vector(dim));
    for (std::size_t i = 0; i < n; ++i) {
        const double centre = static_cast<double>(i % 6) * 4.0;
        for (auto& x : out[i]) x = centre + g(rng);
    }
    return out;
}

void BM_PcaReduce(benchmark::State& state) {
    const auto n = static_cast<int>(state.range(0));
    const auto data = random_vectors(static_cast<std::size_t>(n), 256, 3);
    const auto params = anchor::structuring::derive_reduction_params(n);
    anchor::structuring::PcaReduction pca;
    for (auto _ : state) benchmark::DoNotOptimize(pca.reduce(data, params));
}
BENCHMARK(BM_PcaReduce)->Arg(80)->Arg(300)->Unit(benchmark::kMillisecond);

void BM_DensityCluster(benchmark::State& state) {
    const auto n = static_cast<int>(state.range(0));
    const auto data = random_vectors(static_cast<std::size_t>(n), 16, 5);
    const auto params = anchor::structuring::derive_cluster_params(n);
    anchor::structuring::DensityClustering hdbscan;
    for (auto _ : state) benchmark::DoNotOptimize(hdbscan.cluster(data, params));
}
BENCHMARK(BM_DensityCluster)->Arg(80)->Arg(300)->Unit(benchmark::kMillisecond);

void BM_CosineSimilarity(benchmark::State& state) {
    const auto data = random_vectors(2, static_cast<std::size_t>(state.range(0)), 9);
    for (auto _ : state) benchmark::DoNotOptimize(anchor::mapping::cosine_similarity(data[0], data[1]));
}
BENCHMARK(BM_CosineSimilarity)->Arg(64)->Arg(1536);

}  // namespace
