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

#include "qdent/correlation.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <omp.h>

#include "gtest/gtest.h"
#include "qdent/emitter.hpp"
#include "qdent/errors.hpp"
#include "qdent/multiphoton_model.hpp"

using namespace qdent;

namespace {

// Every ordered pair, binned with floating-point floor division.
std::vector<std::uint64_t> brute_force(const std::vector<std::int64_t>& a,
                                       const std::vector<std::int64_t>& b, std::int64_t bw,
                                       std::int64_t max_delay, std::int64_t half_bins) {
    std::vector<std::uint64_t> counts(2 * half_bins, 0);
    for (auto ta : a) {
        for (auto tb : b) {
            const std::int64_t d = tb - ta;
            if (d < -max_delay || d > max_delay) continue;
            const auto k = static_cast<std::int64_t>(std::floor(static_cast<double>(d) / bw));
            ++counts[k + half_bins];
        }
    }
    return counts;
}

std::vector<std::int64_t> random_stream(std::mt19937_64& rng, std::size_t n, std::int64_t span) {
    std::uniform_int_distribution<std::int64_t> u(0, span);
    std::vector<std::int64_t> v(n);
    for (auto& t : v) t = u(rng);
    std::sort(v.begin(), v.end());
    return v;
}

PeakTable synthetic_peaks(double base, double eta, double tau_periods, int m_max) {
    PeakTable t;
    t.n_pulses = 0;
    for (int m = -m_max; m <= m_max; ++m) {
        const double y = base * (1.0 + (1.0 / eta - 1.0) * std::exp(-std::abs(m) / tau_periods));
        t.peaks[m] = static_cast<std::uint64_t>(std::llround(y));
    }
    return t;
}

}  // namespace

TEST(correlation, matches_brute_force_pairs) {
    std::mt19937_64 rng(11);
    for (std::int64_t bw : {1, 7, 100, 333}) {
        const auto a = random_stream(rng, 700, 2'000'000);
        const auto b = random_stream(rng, 900, 2'000'000);
        const std::int64_t max_delay = 50'000 + bw / 2;
        const auto h = build_histogram_serial(a, b, bw, max_delay);
        EXPECT_EQ(h.counts, brute_force(a, b, bw, max_delay, h.half_bins)) << "bw=" << bw;
    }
}

TEST(correlation, parallel_matches_serial_reference) {
    std::mt19937_64 rng(12);
    const auto a = random_stream(rng, 60'000, 500'000'000);
    const auto b = random_stream(rng, 50'000, 500'000'000);
    const int saved = omp_get_max_threads();
    omp_set_num_threads(4);
    EXPECT_EQ(build_histogram(a, b, 100, 200'000), build_histogram_serial(a, b, 100, 200'000));
    omp_set_num_threads(saved);
}

TEST(correlation, edge_cases) {
    const std::vector<std::int64_t> none;
    const std::vector<std::int64_t> one = {1000};
    auto h = build_histogram(none, one, 100, 1000);
    EXPECT_EQ(h.total(), 0u);
    EXPECT_EQ(h.counts.size(), 22u);

    // Delays of exactly +-max_delay and zero are all kept.
    const std::vector<std::int64_t> b = {0, 1000, 2000};
    h = build_histogram(one, b, 100, 1000);
    EXPECT_EQ(h.total(), 3u);
    EXPECT_EQ(h.counts[h.half_bins], 1u);
    EXPECT_EQ(h.counts[h.half_bins + 10], 1u);
    EXPECT_EQ(h.counts[h.half_bins - 10], 1u);

    h = build_histogram(one, one, 100, 0);
    EXPECT_EQ(h.counts.size(), 2u);
    EXPECT_EQ(h.counts[1], 1u);

    const std::vector<std::int64_t> unsorted = {5, 3};
    EXPECT_THROW(build_histogram(unsorted, one, 100, 1000), InputError);
    EXPECT_THROW(build_histogram(one, one, 0, 1000), InputError);

    std::ostringstream os;
    write_histogram_csv(os, build_histogram(one, b, 500, 500));
    EXPECT_EQ(os.str(), "delay_ps,count\n-750,0\n-250,0\n250,1\n750,0\n");
}

TEST(correlation, peak_integration) {
    std::vector<std::int64_t> a, b;
    for (int n = 0; n < 200; ++n) a.push_back(n * 12'500);
    for (int n = 0; n < 200; ++n) b.push_back(n * 12'500 + (n % 2 ? 2'999 : -3'000));
    std::sort(b.begin(), b.end());
    auto h = build_histogram(a, b, 100, 60'000);
    const auto p = integrate_peaks(h, 12'500, 3'000);
    EXPECT_EQ(p.max_index(), 4);
    std::uint64_t sum = 0;
    for (const auto& [n, c] : p.peaks) sum += c;
    // Windows are [nT - w, nT + w): both offsets land inside.
    EXPECT_EQ(p.at(0), 200u);
    EXPECT_GT(sum, 1500u);
    EXPECT_THROW(integrate_peaks(h, 12'500, 6'250), ConfigError);
    EXPECT_THROW(p.at(9), EstimationError);
}

TEST(correlation, peaks_invariant_under_halved_bin_width) {
    EmitterParams p;
    p.p_m = 0.01;
    p.set_all_efficiencies(0.3);
    p.jitter_sigma = 400e-12;
    const auto sim = simulate_pulse_train(p, MeasurementConfig::hbt_x(), 1'000'000);
    const auto a = sim.stream.timestamps(Channel::kXA);
    const auto b = sim.stream.timestamps(Channel::kXB);
    const auto coarse = integrate_peaks(build_histogram(a, b, 100, 100'000), 12'500, 3'000);
    const auto fine = integrate_peaks(build_histogram(a, b, 50, 100'000), 12'500, 3'000);
    EXPECT_EQ(coarse.peaks, fine.peaks);
}

TEST(correlation, estimators_recover_simulated_parameters) {
    EmitterParams p;
    p.p_m = 0.01;
    p.set_all_efficiencies(0.5);
    const std::uint64_t n = 4'000'000;
    const auto sim = simulate_pulse_train(p, MeasurementConfig::hbt_x(), n);
    const auto max_delay = static_cast<std::int64_t>(20.0 * p.tau_c() * 1e12) + 3'000;
    auto h = build_histogram(sim.stream.timestamps(Channel::kXA), sim.stream.timestamps(Channel::kXB),
                             100, max_delay);
    h.n_pulses = n;
    const auto peaks = integrate_peaks(h, 12'500, 3'000);

    const double g2_true = g2_from_pm(p.p_m, {p.eta_blink(), p.eta_prep()});
    const auto g2 = g2_poisson(peaks, default_far_range(p.tau_c(), 12'500), p.tau_c());
    EXPECT_TRUE(g2.warnings.empty());
    EXPECT_NEAR(g2.estimate, g2_true, 4.0 * g2.std_error);

    // Shot-noise errors miss the sample-path noise of a finite telegraph record
    // (about 3e4 correlation times here), hence the extra allowance.
    const auto blink = estimate_eta_blink(peaks);
    ASSERT_TRUE(blink.tau_c_seconds.has_value());
    EXPECT_NEAR(blink.eta_blink, 0.29, 4.0 * blink.eta_blink_std + 0.01);
    EXPECT_NEAR(*blink.tau_c_seconds, 1.6e-6, 4.0 * blink.tau_c_std + 0.05 * 1.6e-6);

    const auto tilde = g2_sidepeak(peaks);
    EXPECT_NEAR(tilde.estimate, g2_sidepeak_from_pm(p.p_m, p.eta_prep()),
                4.0 * tilde.std_error + 2e-4);

    const auto cross = simulate_pulse_train(p, MeasurementConfig::cross_corr(), n);
    const auto ch = build_histogram(cross.stream.timestamps(Channel::kXXA),
                                    cross.stream.timestamps(Channel::kXA), 100, 40'000);
    const auto prep = estimate_eta_prep(integrate_peaks(ch, 12'500, 3'000));
    // Side peaks need the dot on in consecutive pulses.
    const double stay_on =
        p.eta_blink() + (1.0 - p.eta_blink()) * std::exp(-12.5e-9 / p.tau_c());
    EXPECT_NEAR(prep.estimate, p.eta_prep() * stay_on, 4.0 * prep.std_error + 2e-3);
}

TEST(correlation, flat_streams_give_unity_and_no_envelope) {
    std::mt19937_64 rng(5);
    const std::int64_t span = 4'000'000'000;
    const auto a = random_stream(rng, 200'000, span);
    const auto b = random_stream(rng, 200'000, span);
    auto h = build_histogram(a, b, 100, 400'000);
    h.n_pulses = span / 12'500;
    const auto peaks = integrate_peaks(h, 12'500, 3'000);
    const auto g2 = g2_poisson(peaks, {10, 30});
    EXPECT_NEAR(g2.estimate, 1.0, 4.0 * g2.std_error);
    const auto blink = estimate_eta_blink(peaks);
    EXPECT_FALSE(blink.tau_c_seconds.has_value());
    EXPECT_NEAR(blink.eta_blink, 1.0, 4.0 * blink.eta_blink_std + 1e-3);
}

TEST(correlation, blinking_fit_on_exact_model) {
    const auto peaks = synthetic_peaks(1e7, 0.3, 20.0, 200);
    const auto r = estimate_eta_blink(peaks);
    ASSERT_TRUE(r.tau_c_seconds.has_value());
    EXPECT_NEAR(r.eta_blink, 0.3, 1e-4);
    EXPECT_NEAR(*r.tau_c_seconds, 20.0 * 12.5e-9, 1e-10);
    EXPECT_LT(r.reduced_chi2, 1e-2);
}

TEST(correlation, blinking_fit_reports_boundary_optimum) {
    PeakTable t;
    for (int m = -40; m <= 40; ++m) t.peaks[m] = static_cast<std::uint64_t>(400'000 - 9'000 * std::abs(m));
    EXPECT_THROW(estimate_eta_blink(t), EstimationError);
    PeakTable tiny;
    tiny.peaks = {{-1, 5}, {0, 1}, {1, 5}};
    EXPECT_THROW(estimate_eta_blink(tiny), EstimationError);
}

TEST(correlation, estimator_errors) {
    PeakTable t;
    t.peaks = {{-1, 0}, {0, 3}, {1, 0}};
    EXPECT_THROW(g2_sidepeak(t), EstimationError);
    EXPECT_THROW(g2_poisson(t, {5, 9}), EstimationError);
    EXPECT_THROW(estimate_eta_prep(PeakTable{}), EstimationError);
    t.peaks = {{-1, 4}, {0, 0}, {1, 4}};
    EXPECT_THROW(estimate_eta_prep(t), EstimationError);
    EXPECT_EQ(default_far_range(1.6e-6, 12'500).min_index, 1280);
    EXPECT_EQ(default_far_range(1.6e-6, 12'500).max_index, 2560);
}

TEST(correlation, poisson_warnings) {
    const auto t = synthetic_peaks(1000, 1.0, 1.0, 20);
    const auto e = g2_poisson(t, {2, 30}, 1e-6);
    EXPECT_EQ(e.warnings.size(), 2u);
    EXPECT_NEAR(e.estimate, 1.0, 1e-12);
    EXPECT_EQ(e.to_json()["method"], "poisson_far_peaks");
}
