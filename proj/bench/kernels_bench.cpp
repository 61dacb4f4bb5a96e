// Copyright 2026 The qdent Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <numbers>
#include <random>

#include <benchmark/benchmark.h>

#include "qdent/correlation.hpp"
#include "qdent/emitter.hpp"
#include "qdent/multiphoton_model.hpp"
#include "qdent/tomography.hpp"

namespace {

using namespace qdent;

EmitterParams bench_params() {
    EmitterParams p;
    p.p_m = 0.01;
    p.set_all_efficiencies(0.2);
    p.block_pulses = 1 << 20;
    return p;
}

void BM_simulate_serial(benchmark::State& state) {
    const auto p = bench_params();
    for (auto _ : state) {
        benchmark::DoNotOptimize(simulate_pulse_train_serial(p, MeasurementConfig::hbt_x(), state.range(0)));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_simulate_parallel(benchmark::State& state) {
    const auto p = bench_params();
    for (auto _ : state) {
        benchmark::DoNotOptimize(simulate_pulse_train(p, MeasurementConfig::hbt_x(), state.range(0)));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

struct Streams {
    std::vector<std::int64_t> a, b;
};

const Streams& streams() {
    static const Streams s = [] {
        const auto sim = simulate_pulse_train(bench_params(), MeasurementConfig::hbt_x(), 4'000'000);
        return Streams{sim.stream.timestamps(Channel::kXA), sim.stream.timestamps(Channel::kXB)};
    }();
    return s;
}

void BM_correlate_serial(benchmark::State& state) {
    const auto& s = streams();
    for (auto _ : state) benchmark::DoNotOptimize(build_histogram_serial(s.a, s.b, 100, state.range(0)));
}

void BM_correlate_parallel(benchmark::State& state) {
    const auto& s = streams();
    for (auto _ : state) benchmark::DoNotOptimize(build_histogram(s.a, s.b, 100, state.range(0)));
}

void BM_monte_carlo_serial(benchmark::State& state) {
    const auto data = sample_counts(dephased_bell(0.89), 1500, 1);
    for (auto _ : state) {
        benchmark::DoNotOptimize(monte_carlo_errors_serial(data, static_cast<int>(state.range(0)), 2));
    }
}

void BM_monte_carlo_parallel(benchmark::State& state) {
    const auto data = sample_counts(dephased_bell(0.89), 1500, 1);
    for (auto _ : state) {
        benchmark::DoNotOptimize(monte_carlo_errors(data, static_cast<int>(state.range(0)), 2));
    }
}

SweepInputs sweep_inputs(std::int64_t points) {
    SweepInputs in;
    for (std::int64_t i = 0; i < points; ++i) {
        in.thetas.push_back(std::numbers::pi * (0.5 + 4.5 * static_cast<double>(i) / static_cast<double>(points)));
    }
    return in;
}

void BM_sweep_serial(benchmark::State& state) {
    const auto in = sweep_inputs(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(predict_entanglement_sweep_serial(in));
}

void BM_sweep_parallel(benchmark::State& state) {
    const auto in = sweep_inputs(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(predict_entanglement_sweep(in));
}

}  // namespace

BENCHMARK(BM_simulate_serial)->Arg(4'000'000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_simulate_parallel)->Arg(4'000'000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_correlate_serial)->Arg(1'000'000)->Arg(20'000'000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_correlate_parallel)->Arg(1'000'000)->Arg(20'000'000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_monte_carlo_serial)->Arg(100)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_monte_carlo_parallel)->Arg(100)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_sweep_serial)->Arg(4096)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_sweep_parallel)->Arg(4096)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
