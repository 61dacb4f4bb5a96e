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

#include "qdent/emitter.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include <omp.h>

#include "gtest/gtest.h"
#include "qdent/errors.hpp"
#include "test_util.hpp"

using namespace qdent;

namespace {

EmitterParams lossless() {
    EmitterParams p;
    p.set_all_efficiencies(1.0);
    return p;
}

// Same-pulse ordered (a, b) pairs, counted by grouping on pulse index.
std::uint64_t same_pulse_pairs(const DetectionEventStream& s, Channel a, Channel b) {
    std::map<std::int64_t, std::pair<std::uint64_t, std::uint64_t>> per_pulse;
    const std::int64_t t = s.meta.rep_period_ps;
    for (const auto& e : s.events) {
        const std::int64_t n = (e.timestamp_ps + t / 2) / t;
        if (e.channel == a) ++per_pulse[n].first;
        if (e.channel == b) ++per_pulse[n].second;
    }
    std::uint64_t pairs = 0;
    for (const auto& [n, ab] : per_pulse) pairs += ab.first * ab.second;
    return pairs;
}

// 4-sigma band for the time average of a stationary telegraph process.
double telegraph_sigma(const EmitterParams& p, std::uint64_t pulses) {
    const double eta = p.eta_blink();
    const double total = static_cast<double>(pulses) * p.rep_period;
    return std::sqrt(2.0 * eta * (1.0 - eta) * p.tau_c() / total);
}

}  // namespace

TEST(emitter, no_multiphoton_no_zero_delay_coincidence) {
    EmitterParams p = lossless();
    p.p_m = 0.0;
    const auto r = simulate_pulse_train(p, MeasurementConfig::hbt_x(), 1'000'000);
    EXPECT_GT(r.tally.clicks[0] + r.tally.clicks[1], 100'000u);
    EXPECT_EQ(same_pulse_pairs(r.stream, Channel::kXA, Channel::kXB), 0u);
    EXPECT_EQ(r.tally.reexcitations, 0u);
}

TEST(emitter, deterministic_for_fixed_seed) {
    EmitterParams p;
    p.p_m = 0.01;
    p.block_pulses = 100'000;
    const auto a = simulate_pulse_train(p, MeasurementConfig::cross_corr(), 500'000);
    const auto b = simulate_pulse_train(p, MeasurementConfig::cross_corr(), 500'000);
    EXPECT_EQ(a.stream.events, b.stream.events);
    p.seed = 2;
    const auto c = simulate_pulse_train(p, MeasurementConfig::cross_corr(), 500'000);
    EXPECT_NE(a.stream.events, c.stream.events);
}

TEST(emitter, parallel_matches_serial_reference) {
    EmitterParams p;
    p.p_m = 0.02;
    p.block_pulses = 50'000;
    p.dark_rate.fill(2e4);
    p.jitter_sigma = 30e-12;
    const int saved = omp_get_max_threads();
    omp_set_num_threads(4);
    for (auto cfg : {MeasurementConfig::hbt_x(), MeasurementConfig::hbt_xx(),
                     MeasurementConfig::cross_corr(), MeasurementConfig::polarized(Basis::D, Basis::R)}) {
        const auto par = simulate_pulse_train(p, cfg, 420'000);
        const auto ser = simulate_pulse_train_serial(p, cfg, 420'000);
        ASSERT_EQ(par.stream.events, ser.stream.events);
        ASSERT_EQ(par.tally.emissions, ser.tally.emissions);
        ASSERT_EQ(par.tally.on_pulses, ser.tally.on_pulses);
        ASSERT_TRUE(par.stream.is_sorted());
    }
    omp_set_num_threads(saved);
}

TEST(emitter, photon_bookkeeping) {
    EmitterParams p = lossless();
    p.p_m = 0.05;
    const auto r = simulate_pulse_train(p, MeasurementConfig::cross_corr(), 2'000'000);
    const auto photons = r.tally.emissions + r.tally.reexcitations;
    EXPECT_EQ(r.tally.clicks[static_cast<int>(Channel::kXA)], photons);
    EXPECT_EQ(r.tally.clicks[static_cast<int>(Channel::kXXA)], photons);
    EXPECT_EQ(r.stream.events.size(), 2 * photons);
    const double n = static_cast<double>(r.tally.emissions);
    const double frac = static_cast<double>(r.tally.reexcitations) / n;
    EXPECT_NEAR(frac, p.p_m, 4.0 * std::sqrt(p.p_m * (1.0 - p.p_m) / n));

    const auto h = simulate_pulse_train(p, MeasurementConfig::hbt_x(), 1'000'000);
    EXPECT_EQ(h.tally.clicks[0] + h.tally.clicks[1], h.tally.emissions + h.tally.reexcitations);
}

TEST(emitter, blinking_stationarity_and_emission_rate) {
    EmitterParams p;
    const std::uint64_t n = 20'000'000;
    const auto r = simulate_pulse_train(p, MeasurementConfig::hbt_x(), n);
    const double on = static_cast<double>(r.tally.on_pulses) / static_cast<double>(n);
    EXPECT_NEAR(on, 0.29, 4.0 * telegraph_sigma(p, n));
    // emissions / pulses = eta_b * eta_p; blinking dominates the variance.
    const double rate = static_cast<double>(r.tally.emissions) / static_cast<double>(n);
    EXPECT_NEAR(rate, 0.29 * 0.93, 4.0 * 0.93 * telegraph_sigma(p, n) + 1e-4);
}

TEST(emitter, zero_peak_matches_outcome_formula) {
    EmitterParams p;
    p.p_m = 0.01;
    p.set_all_efficiencies(0.5);
    const std::uint64_t n = 4'000'000;
    const auto r = simulate_pulse_train(p, MeasurementConfig::hbt_x(), n);
    const double on = static_cast<double>(r.tally.on_pulses);
    // Ordered A-B pairs from two photons in one pulse: eps^2 / 2.
    const double expected = on * p.eta_prep() * p.p_m * 0.25 / 2.0;
    const double got = static_cast<double>(same_pulse_pairs(r.stream, Channel::kXA, Channel::kXB));
    EXPECT_NEAR(got, expected, 4.0 * std::sqrt(expected));
}

TEST(emitter, polarized_marginals_follow_reduced_state) {
    std::mt19937_64 rng(42);
    EmitterParams p = lossless();
    p.rho0 = testutil::random_state(rng);
    p.p_m = 0.0;
    const std::uint64_t n = 400'000;
    for (auto [sx, sxx] : {std::pair{Basis::D, Basis::R}, std::pair{Basis::H, Basis::A}}) {
        const auto r = simulate_pulse_train(p, MeasurementConfig::polarized(sx, sxx), n);
        const auto probs = born_outcome_probabilities(p.rho0, sx, sxx);
        const double px = probs[0] + probs[1];
        const double pxx = probs[0] + probs[2];
        const double nx = static_cast<double>(r.tally.clicks[4] + r.tally.clicks[5]);
        const double nxx = static_cast<double>(r.tally.clicks[6] + r.tally.clicks[7]);
        EXPECT_NEAR(r.tally.clicks[4] / nx, px, 4.0 * std::sqrt(px * (1 - px) / nx));
        EXPECT_NEAR(r.tally.clicks[6] / nxx, pxx, 4.0 * std::sqrt(pxx * (1 - pxx) / nxx));
        // Independent reduced-state route: Tr(rho_X |s><s|).
        const Matrix4c proj_x = product_projector(PolarizationKet::of(sx).projector(), Matrix2c::Identity());
        EXPECT_NEAR(px, (p.rho0.matrix() * proj_x).trace().real(), 1e-12);
    }
}

TEST(emitter, born_probabilities) {
    const auto hh = born_outcome_probabilities(bell_phi_plus(), Basis::H, Basis::H);
    EXPECT_NEAR(hh[0], 0.5, 1e-15);
    EXPECT_NEAR(hh[1], 0.0, 1e-15);
    EXPECT_NEAR(hh[2], 0.0, 1e-15);
    EXPECT_NEAR(hh[3], 0.5, 1e-15);
    EXPECT_NEAR(born_outcome_probabilities(bell_phi_plus(), Basis::R, Basis::L)[0], 0.5, 1e-15);
    for (double v : born_outcome_probabilities(TwoQubitDensityMatrix::maximally_mixed(), Basis::D, Basis::L)) {
        EXPECT_NEAR(v, 0.25, 1e-15);
    }
    Rng rng(1);
    int pp = 0, pr = 0;
    const int n = 200'000;
    for (int i = 0; i < n; ++i) {
        const auto [x, xx] = born_sample_pair(bell_phi_plus(), Basis::H, Basis::H, rng);
        pp += x && xx;
        pr += x && !xx;
    }
    EXPECT_EQ(pr, 0);
    EXPECT_NEAR(pp / static_cast<double>(n), 0.5, 4.0 * std::sqrt(0.25 / n));
}

TEST(emitter, telegraph_process) {
    Rng rng(3);
    auto fraction = [&](double on, double off, double step, int n) {
        TelegraphProcess tp(on, off, rng);
        int hits = 0;
        for (int i = 0; i < n; ++i) hits += tp.on_at(i * step, rng);
        return hits / static_cast<double>(n);
    };
    EXPECT_NEAR(fraction(1.0, 1.0, 0.5, 400'000), 0.5, 0.01);
    EmitterParams p;
    EXPECT_NEAR(p.eta_blink(), 0.29, 1e-12);
    EXPECT_NEAR(p.tau_c(), 1.6e-6, 1e-18);
    EXPECT_NEAR(fraction(p.blink_tau_on, p.blink_tau_off, 1e-6, 400'000), 0.29, 0.01);
    EXPECT_NEAR(fraction(1.0, 1e-12, 0.5, 1000), 1.0, 1e-3);
    p.set_blinking(0.29, 16.1e-6);
    EXPECT_NEAR(p.tau_c(), 16.1e-6, 1e-17);
    EXPECT_NEAR(p.eta_blink(), 0.29, 1e-12);
}

TEST(emitter, config_and_range_errors) {
    EmitterParams p;
    EXPECT_THROW(simulate_pulse_train(p, MeasurementConfig::hbt_x(), 0), ConfigError);
    EXPECT_THROW(simulate_pulse_train(p, MeasurementConfig::hbt_x(), std::uint64_t{1} << 62), RangeError);
    p.det_eff[0] = 1.5;
    EXPECT_THROW(simulate_pulse_train(p, MeasurementConfig::hbt_x(), 10), ConfigError);
    p = EmitterParams{};
    MeasurementConfig bad;
    bad.mode = static_cast<MeasurementMode>(9);
    EXPECT_THROW(simulate_pulse_train(p, bad, 10), ConfigError);
    EXPECT_THROW(mode_from_name("hbt"), ConfigError);
}

TEST(emitter, channel_set_matches_mode) {
    EmitterParams p = lossless();
    p.dark_rate.fill(1e5);
    const auto cfg = MeasurementConfig::cross_corr();
    const auto r = simulate_pulse_train(p, cfg, 100'000);
    for (const auto& e : r.stream.events) ASSERT_TRUE(cfg.uses(e.channel));
}

TEST(emitter, event_file_round_trip) {
    EmitterParams p;
    p.p_m = 0.01;
    const auto r = simulate_pulse_train(p, MeasurementConfig::polarized(Basis::R, Basis::A), 200'000);
    const auto path = std::filesystem::temp_directory_path() / "qdent_event_roundtrip.qdevt";
    write_event_file(path, r.stream);
    {
        std::ifstream is(path, std::ios::binary);
        char magic[8];
        is.read(magic, 8);
        EXPECT_EQ(std::string(magic, 7), "QDEVT01");
        EXPECT_EQ(std::filesystem::file_size(path), 64 + 9 * r.stream.events.size());
    }
    const auto back = read_event_file(path);
    EXPECT_EQ(back.events, r.stream.events);
    EXPECT_TRUE(back.meta == r.stream.meta);
    std::filesystem::remove(path);

    std::ostringstream csv;
    write_event_csv(csv, r.stream);
    EXPECT_EQ(csv.str().substr(0, 21), "channel,timestamp_ps\n");

    const auto junk = std::filesystem::temp_directory_path() / "qdent_not_events.bin";
    std::ofstream(junk) << "definitely not an event file, but long enough to hold a header ......";
    EXPECT_THROW(read_event_file(junk), InputError);
    std::filesystem::remove(junk);
}

TEST(emitter, digest_tracks_parameters) {
    EmitterParams a, b;
    EXPECT_EQ(a.digest(), b.digest());
    b.p_m = 5.7e-4;
    EXPECT_NE(a.digest(), b.digest());
}
