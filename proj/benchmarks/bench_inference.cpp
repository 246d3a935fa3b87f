#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include "anchor/inference/model.hpp"

namespace {

using anchor::inference::EvidenceSet;
using anchor::inference::LatentBayesModel;
using anchor::inference::LatentVariable;

LatentBayesModel make_model(int k, int n_factors, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> p(0.01, 0.99);
    LatentBayesModel model;
    model.scenario_id = "bench";
    for (int i = 0; i < k; ++i) model.latents.push_back(LatentVariable{"L" + std::to_string(i), {}, p(rng), p(rng)});
    for (int j = 0; j < n_factors; ++j) {
        const std::string id = "f" + std::to_string(j);
        model.factor_params[id] = p(rng);
        model.latents[static_cast<std::size_t>(j % k)].members.push_back(id);
    }
    return model;
}

EvidenceSet half_active(const LatentBayesModel& model) {
    EvidenceSet e;
    int i = 0;
    for (const auto& [id, theta] : model.factor_params)
        if (i++ % 2 == 0) e.active.push_back(id);
    return e;
}

void BM_CbnClosedForm(benchmark::State& state) {
    std::mt19937_64 rng(7);
    const auto model = make_model(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)), rng);
    const auto evidence = half_active(model);
    for (auto _ : state) benchmark::DoNotOptimize(anchor::inference::cbn_posterior(model, evidence));
}
BENCHMARK(BM_CbnClosedForm)->ArgsProduct({{1, 3, 6}, {6, 12}});

void BM_CbnBruteForce(benchmark::State& state) {
    std::mt19937_64 rng(7);
    const auto model = make_model(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)), rng);
    const auto evidence = half_active(model);
    for (auto _ : state) benchmark::DoNotOptimize(anchor::inference::cbn_posterior_bruteforce(model, evidence));
}
BENCHMARK(BM_CbnBruteForce)->ArgsProduct({{1, 3, 6}, {6, 12}});

void BM_NbPosterior(benchmark::State& state) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> p(0.01, 0.99);
    std::vector<double> thetas(static_cast<std::size_t>(state.range(0)));
    for (auto& t : thetas) t = p(rng);
    for (auto _ : state) benchmark::DoNotOptimize(anchor::inference::nb_posterior(thetas));
}
BENCHMARK(BM_NbPosterior)->Arg(8)->Arg(64)->Arg(512);

}  // namespace
