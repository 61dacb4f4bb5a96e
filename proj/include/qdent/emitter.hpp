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

#ifndef QDENT_EMITTER_HPP
#define QDENT_EMITTER_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <numbers>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "qdent/multiphoton_model.hpp"
#include "qdent/polarization.hpp"

namespace qdent {

using Rng = std::mt19937_64;

enum class Channel : std::uint8_t {
    kXA = 0,
    kXB = 1,
    kXXA = 2,
    kXXB = 3,
    kXPass = 4,
    kXReflect = 5,
    kXXPass = 6,
    kXXReflect = 7,
};
inline constexpr std::size_t kNumChannels = 8;

const char* channel_name(Channel c);

enum class MeasurementMode : std::uint8_t {
    kHbtX = 0,      // X line on a 50/50 splitter -> X_A, X_B
    kHbtXX = 1,     // XX line on a 50/50 splitter -> XX_A, XX_B
    kCrossCorr = 2, // X -> X_A, XX -> XX_A
    kPolarized = 3, // polarizing splitters -> X_pass/X_reflect, XX_pass/XX_reflect
};

const char* mode_name(MeasurementMode m);
// Throws ConfigError for unknown names.
MeasurementMode mode_from_name(std::string_view name);

struct MeasurementConfig {
    MeasurementMode mode = MeasurementMode::kHbtX;
    Basis setting_x = Basis::H;
    Basis setting_xx = Basis::H;

    static MeasurementConfig hbt_x() { return {MeasurementMode::kHbtX}; }
    static MeasurementConfig hbt_xx() { return {MeasurementMode::kHbtXX}; }
    static MeasurementConfig cross_corr() { return {MeasurementMode::kCrossCorr}; }
    static MeasurementConfig polarized(Basis x, Basis xx) {
        return {MeasurementMode::kPolarized, x, xx};
    }

    std::vector<Channel> channels() const;
    bool uses(Channel c) const;
};

// Physical parameters of the blinking, re-exciting cascade source. Times in
// seconds, rates in counts per second. Lifetimes and re-excitation delay are
// typical values for GaAs dots, not fitted quantities; they only shape peaks.
struct EmitterParams {
    double p_m = 5.6e-4;
    RabiCurveParams rabi;
    double theta = std::numbers::pi;
    double blink_tau_on = 2.2535211267605635e-6;
    double blink_tau_off = 5.517241379310345e-6;
    double rep_period = 12.5e-9;
    double tau_xx = 120e-12;
    double tau_x = 270e-12;
    std::array<double, kNumChannels> det_eff = {0.05, 0.05, 0.05, 0.05, 0.05, 0.05, 0.05, 0.05};
    std::array<double, kNumChannels> dark_rate = {};
    TwoQubitDensityMatrix rho0 = bell_phi_plus();
    double reexc_delay = 10e-12;
    double jitter_sigma = 0.0;
    std::uint64_t seed = 1;
    // Pulses per independently seeded block; blinking restarts from the
    // stationary distribution at block boundaries.
    std::uint64_t block_pulses = std::uint64_t{1} << 24;

    // Throws ConfigError on any violated invariant.
    void validate() const;

    double eta_blink() const { return blink_tau_on / (blink_tau_on + blink_tau_off); }
    double tau_c() const { return 1.0 / (1.0 / blink_tau_on + 1.0 / blink_tau_off); }
    double eta_prep() const { return prep_fidelity_model(theta, rabi); }
    std::int64_t rep_period_ps() const;

    // Sets blink_tau_on/off from an on-fraction and correlation time.
    void set_blinking(double eta, double tau_c_seconds);
    void set_all_efficiencies(double eff);

    // FNV-1a digest over a canonical rendering of every field.
    std::uint64_t digest() const;
};

struct DetectionEvent {
    std::int64_t timestamp_ps = 0;
    Channel channel = Channel::kXA;

    friend bool operator==(const DetectionEvent&, const DetectionEvent&) = default;
    friend auto operator<=>(const DetectionEvent& a, const DetectionEvent& b) {
        if (auto c = a.timestamp_ps <=> b.timestamp_ps; c != 0) return c;
        return a.channel <=> b.channel;
    }
};

struct StreamMetadata {
    MeasurementConfig config;
    std::uint64_t n_pulses = 0;
    std::uint64_t params_digest = 0;
    std::int64_t rep_period_ps = 12500;

    friend bool operator==(const StreamMetadata& a, const StreamMetadata& b) {
        return a.config.mode == b.config.mode && a.config.setting_x == b.config.setting_x &&
               a.config.setting_xx == b.config.setting_xx && a.n_pulses == b.n_pulses &&
               a.params_digest == b.params_digest && a.rep_period_ps == b.rep_period_ps;
    }
};

// Time-ordered detector clicks.
struct DetectionEventStream {
    StreamMetadata meta;
    std::vector<DetectionEvent> events;

    // Timestamps of one channel, in order.
    std::vector<std::int64_t> timestamps(Channel c) const;
    bool is_sorted() const;
};

struct SimulationTally {
    std::uint64_t pulses = 0;
    std::uint64_t on_pulses = 0;
    std::uint64_t emissions = 0;      // pulses with at least one cascade
    std::uint64_t reexcitations = 0;  // second cascades
    std::array<std::uint64_t, kNumChannels> clicks = {};

    SimulationTally& operator+=(const SimulationTally& o);
};

struct SimulationResult {
    DetectionEventStream stream;
    SimulationTally tally;
};

// Pulse-by-pulse Monte Carlo. Blocks are simulated concurrently; output is
// independent of thread count.
SimulationResult simulate_pulse_train(const EmitterParams& params, const MeasurementConfig& config,
                                      std::uint64_t n_pulses);
// Same blocks, same seeds, one thread. Reference for the parallel kernel.
SimulationResult simulate_pulse_train_serial(const EmitterParams& params,
                                             const MeasurementConfig& config,
                                             std::uint64_t n_pulses);

// Joint probabilities of (pass, pass), (pass, reflect), (reflect, pass),
// (reflect, reflect) for projective analysis of the X photon on `setting_x`
// and the XX photon on `setting_xx`.
std::array<double, 4> born_outcome_probabilities(const TwoQubitDensityMatrix& rho, Basis setting_x,
                                                 Basis setting_xx);
// Returns {x passed, xx passed}.
std::pair<bool, bool> born_sample_pair(const TwoQubitDensityMatrix& rho, Basis setting_x,
                                       Basis setting_xx, Rng& rng);

// Stationary two-state telegraph process with exponential dwell times.
// Queries must be made at non-decreasing times.
class TelegraphProcess {
   public:
    TelegraphProcess(double tau_on, double tau_off, Rng& rng, double start_time = 0.0);

    bool on_at(double t, Rng& rng) {
        return on_at(t, rng, [](double, double) {});
    }

    // As above; `closed_on` receives [start, end) of every on-interval that
    // ends at or before t.
    template <class OnInterval>
    bool on_at(double t, Rng& rng, OnInterval&& closed_on) {
        while (next_switch_ <= t) {
            if (on_) closed_on(last_switch_, next_switch_);
            on_ = !on_;
            last_switch_ = next_switch_;
            next_switch_ += draw_dwell(rng);
        }
        return on_;
    }

    bool is_on() const { return on_; }
    double last_switch() const { return last_switch_; }
    double on_fraction() const { return tau_on_ / (tau_on_ + tau_off_); }

   private:
    double draw_dwell(Rng& rng) const;

    double tau_on_;
    double tau_off_;
    bool on_;
    double last_switch_;
    double next_switch_;
};

// Seed for block `index` derived from the run seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

// Binary event file: 64-byte header then 9-byte records
// {channel u8, timestamp i64 little-endian}.
void write_event_file(const std::filesystem::path& path, const DetectionEventStream& stream);
DetectionEventStream read_event_file(const std::filesystem::path& path);
void write_event_csv(std::ostream& os, const DetectionEventStream& stream);

}  // namespace qdent

#endif  // QDENT_EMITTER_HPP
