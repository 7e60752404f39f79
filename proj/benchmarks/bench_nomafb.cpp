// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include <vector>

#include "nomafb/alloc.hpp"
#include "nomafb/channel.hpp"
#include "nomafb/evaluator.hpp"
#include "nomafb/harness.hpp"
#include "nomafb/quantizer.hpp"

using namespace nomafb;

static void BM_SampleGains(benchmark::State& state) {
    const std::vector<double> lambda = ChannelParams::defaults(static_cast<std::size_t>(state.range(0))).variances;
    std::vector<double> g(lambda.size());
    std::uint64_t t = 0;
    for (auto _ : state) {
        sample_gains(lambda, {1, t++}, g);
        benchmark::DoNotOptimize(g.data());
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_SampleGains)->Arg(2)->Arg(4);

static void BM_OptimalAlpha(benchmark::State& state) {
    double h = 1.3;
    for (auto _ : state) {
        benchmark::DoNotOptimize(optimal_alpha_two_user(h, 0.4, 10.0));
        h += 1e-9;
    }
}
BENCHMARK(BM_OptimalAlpha);

static void BM_SolveMaxMinK(benchmark::State& state) {
    const std::vector<double> h = {1.7, 0.9, 0.35, 0.12};
    for (auto _ : state)
        benchmark::DoNotOptimize(solve_max_min_k(h, 10.0, 1e-4));
}
BENCHMARK(BM_SolveMaxMinK);

static void BM_VleEncode(benchmark::State& state) {
    std::uint64_t n = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(vle_encode(n));
        n = (n + 1) % 1000;
    }
}
BENCHMARK(BM_VleEncode);

static void BM_EvaluateTrial(benchmark::State& state) {
    const QuantizerConfig q{0.05, default_t_outage(0.05, 1.0), Flavor::Outage};
    const auto out = OutageConfig::from_threshold(1.0);
    const std::vector<double> lambda = {1.0, 0.5};
    std::vector<double> g(2);
    std::uint64_t t = 0;
    for (auto _ : state) {
        sample_gains(lambda, {2, t++}, g);
        benchmark::DoNotOptimize(evaluate_trial(g[0], g[1], 10.0, q, out));
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_EvaluateTrial);

static void BM_OutageSweepPoint(benchmark::State& state) {
    ExperimentConfig cfg;
    cfg.kind = ExperimentKind::Outage;
    cfg.p_db = {20};
    cfg.deltas = {DeltaRule::fixed(0.2)};
    cfg.trials = 262'144;
    for (auto _ : state)
        benchmark::DoNotOptimize(run_outage(cfg, {1, {}}));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(cfg.trials));
}
BENCHMARK(BM_OutageSweepPoint)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
