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

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "qdent/errors.hpp"
#include "qdent/text_format.hpp"

namespace qdent {

const char* channel_name(Channel c) {
    switch (c) {
        case Channel::kXA: return "X_A";
        case Channel::kXB: return "X_B";
        case Channel::kXXA: return "XX_A";
        case Channel::kXXB: return "XX_B";
        case Channel::kXPass: return "X_pass";
        case Channel::kXReflect: return "X_reflect";
        case Channel::kXXPass: return "XX_pass";
        case Channel::kXXReflect: return "XX_reflect";
    }
    return "?";
}

const char* mode_name(MeasurementMode m) {
    switch (m) {
        case MeasurementMode::kHbtX: return "hbt_x";
        case MeasurementMode::kHbtXX: return "hbt_xx";
        case MeasurementMode::kCrossCorr: return "cross_corr";
        case MeasurementMode::kPolarized: return "polarized";
    }
    return "?";
}

MeasurementMode mode_from_name(std::string_view name) {
    if (name == "hbt_x") return MeasurementMode::kHbtX;
    if (name == "hbt_xx") return MeasurementMode::kHbtXX;
    if (name == "cross_corr") return MeasurementMode::kCrossCorr;
    if (name == "polarized") return MeasurementMode::kPolarized;
    throw ConfigError("unknown measurement mode '" + std::string(name) + "'");
}

std::vector<Channel> MeasurementConfig::channels() const {
    switch (mode) {
        case MeasurementMode::kHbtX: return {Channel::kXA, Channel::kXB};
        case MeasurementMode::kHbtXX: return {Channel::kXXA, Channel::kXXB};
        case MeasurementMode::kCrossCorr: return {Channel::kXA, Channel::kXXA};
        case MeasurementMode::kPolarized:
            return {Channel::kXPass, Channel::kXReflect, Channel::kXXPass, Channel::kXXReflect};
    }
    throw ConfigError("measurement mode out of range");
}

bool MeasurementConfig::uses(Channel c) const {
    const auto ch = channels();
    return std::find(ch.begin(), ch.end(), c) != ch.end();
}

void EmitterParams::validate() const {
    auto require = [](bool ok, const char* what) {
        if (!ok) throw ConfigError(std::string("invalid emitter parameter: ") + what);
    };
    require(p_m >= 0.0 && p_m < 1.0, "p_m must lie in [0, 1)");
    require(theta >= 0.0, "theta must be non-negative");
    require(rabi.amplitude > 0.0 && rabi.damping >= 0.0, "Rabi curve parameters");
    require(blink_tau_on > 0.0 && blink_tau_off > 0.0, "blinking times must be positive");
    require(std::isfinite(blink_tau_on) && std::isfinite(blink_tau_off), "blinking times");
    require(rep_period > 0.0 && tau_xx > 0.0 && tau_x > 0.0, "times must be positive");
    require(reexc_delay > 0.0, "re-excitation delay must be positive");
    require(jitter_sigma >= 0.0, "jitter sigma must be non-negative");
    require(block_pulses >= 1, "block_pulses must be at least 1");
    require(rep_period_ps() >= 1, "rep_period below 1 ps");
    for (std::size_t i = 0; i < kNumChannels; ++i) {
        require(det_eff[i] >= 0.0 && det_eff[i] <= 1.0, "detection efficiency outside [0, 1]");
        require(dark_rate[i] >= 0.0 && std::isfinite(dark_rate[i]), "dark rate");
    }
    const double f = eta_blink();
    require(f > 0.0 && f < 1.0, "blink on-fraction must lie in (0, 1)");
}

std::int64_t EmitterParams::rep_period_ps() const {
    return static_cast<std::int64_t>(std::llround(rep_period * 1e12));
}

void EmitterParams::set_blinking(double eta, double tau_c_seconds) {
    if (!(eta > 0.0 && eta < 1.0 && tau_c_seconds > 0.0)) {
        throw ConfigError("blinking needs 0 < eta < 1 and tau_c > 0");
    }
    // tau_c = eta * tau_off = (1 - eta) * tau_on
    blink_tau_off = tau_c_seconds / eta;
    blink_tau_on = tau_c_seconds / (1.0 - eta);
}

void EmitterParams::set_all_efficiencies(double eff) { det_eff.fill(eff); }

std::uint64_t EmitterParams::digest() const {
    std::ostringstream os;
    os << fmt17(p_m) << ';' << fmt17(rabi.amplitude) << ';' << fmt17(rabi.damping) << ';'
       << static_cast<int>(rabi.form) << ';' << fmt17(theta) << ';' << fmt17(blink_tau_on) << ';'
       << fmt17(blink_tau_off) << ';' << fmt17(rep_period) << ';' << fmt17(tau_xx) << ';'
       << fmt17(tau_x) << ';';
    for (double e : det_eff) os << fmt17(e) << ',';
    for (double d : dark_rate) os << fmt17(d) << ',';
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c)
            os << fmt17(rho0(r, c).real()) << ',' << fmt17(rho0(r, c).imag()) << ',';
    os << fmt17(reexc_delay) << ';' << fmt17(jitter_sigma) << ';' << seed << ';' << block_pulses;
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : os.str()) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    return h;
}

std::vector<std::int64_t> DetectionEventStream::timestamps(Channel c) const {
    std::vector<std::int64_t> out;
    for (const auto& e : events)
        if (e.channel == c) out.push_back(e.timestamp_ps);
    return out;
}

bool DetectionEventStream::is_sorted() const {
    return std::is_sorted(events.begin(), events.end(),
                          [](const auto& a, const auto& b) { return a.timestamp_ps < b.timestamp_ps; });
}

SimulationTally& SimulationTally::operator+=(const SimulationTally& o) {
    pulses += o.pulses;
    on_pulses += o.on_pulses;
    emissions += o.emissions;
    reexcitations += o.reexcitations;
    for (std::size_t i = 0; i < kNumChannels; ++i) clicks[i] += o.clicks[i];
    return *this;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    // splitmix64 finalizer over (seed, index)
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

TelegraphProcess::TelegraphProcess(double tau_on, double tau_off, Rng& rng, double start_time)
    : tau_on_(tau_on), tau_off_(tau_off), last_switch_(start_time) {
    if (!(tau_on > 0.0 && tau_off > 0.0)) throw DomainError("telegraph dwell times must be positive");
    std::uniform_real_distribution<double> u(0.0, 1.0);
    on_ = u(rng) < on_fraction();
    // Residual dwell of a stationary exponential process is exponential too.
    next_switch_ = start_time + draw_dwell(rng);
}

double TelegraphProcess::draw_dwell(Rng& rng) const {
    std::exponential_distribution<double> dwell(1.0 / (on_ ? tau_on_ : tau_off_));
    return dwell(rng);
}

std::array<double, 4> born_outcome_probabilities(const TwoQubitDensityMatrix& rho, Basis setting_x,
                                                 Basis setting_xx) {
    const Matrix2c px = PolarizationKet::of(setting_x).projector();
    const Matrix2c pxx = PolarizationKet::of(setting_xx).projector();
    const Matrix2c id = Matrix2c::Identity();
    const std::array<Matrix4c, 4> projectors = {
        product_projector(px, pxx), product_projector(px, id - pxx),
        product_projector(id - px, pxx), product_projector(id - px, id - pxx)};
    std::array<double, 4> p{};
    double total = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
        p[i] = std::max(0.0, (rho.matrix() * projectors[i]).trace().real());
        total += p[i];
    }
    for (auto& v : p) v /= total;
    return p;
}

namespace {

std::pair<bool, bool> sample_outcome(const std::array<double, 4>& probs, Rng& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double r = u(rng);
    double acc = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
        acc += probs[i];
        if (r < acc) return {i < 2, i % 2 == 0};
    }
    return {false, false};
}

}  // namespace

std::pair<bool, bool> born_sample_pair(const TwoQubitDensityMatrix& rho, Basis setting_x,
                                       Basis setting_xx, Rng& rng) {
    return sample_outcome(born_outcome_probabilities(rho, setting_x, setting_xx), rng);
}

namespace {

struct BlockOutput {
    std::vector<DetectionEvent> events;
    SimulationTally tally;
};

// Everything the per-block kernel needs, precomputed once per run.
struct RunPlan {
    EmitterParams params;
    MeasurementConfig config;
    std::uint64_t n_pulses = 0;
    std::int64_t rep_ps = 0;
    double eta_prep = 0.0;
    double tau_xx_ps = 0.0;
    double tau_x_ps = 0.0;
    double reexc_ps = 0.0;
    double jitter_ps = 0.0;
    std::array<double, 4> born{};
    std::uint64_t n_blocks = 0;
};

RunPlan make_plan(const EmitterParams& params, const MeasurementConfig& config,
                  std::uint64_t n_pulses) {
    params.validate();
    if (n_pulses < 1) throw ConfigError("n_pulses must be at least 1");
    if (static_cast<unsigned>(config.mode) > static_cast<unsigned>(MeasurementMode::kPolarized)) {
        throw ConfigError("measurement mode out of range");
    }
    RunPlan plan{params, config, n_pulses};
    plan.rep_ps = params.rep_period_ps();
    const auto max_pulses =
        static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max() / plan.rep_ps) / 2;
    if (n_pulses > max_pulses) {
        throw RangeError("n_pulses * rep_period exceeds the picosecond timestamp range");
    }
    plan.eta_prep = params.eta_prep();
    plan.tau_xx_ps = params.tau_xx * 1e12;
    plan.tau_x_ps = params.tau_x * 1e12;
    plan.reexc_ps = params.reexc_delay * 1e12;
    plan.jitter_ps = params.jitter_sigma * 1e12;
    if (config.mode == MeasurementMode::kPolarized) {
        plan.born = born_outcome_probabilities(params.rho0, config.setting_x, config.setting_xx);
    }
    plan.n_blocks = (n_pulses + params.block_pulses - 1) / params.block_pulses;
    return plan;
}

BlockOutput simulate_block(const RunPlan& plan, std::uint64_t block) {
    const auto& p = plan.params;
    const std::uint64_t first = block * p.block_pulses;
    const std::uint64_t last = std::min(plan.n_pulses, first + p.block_pulses);
    const double rep_s = static_cast<double>(plan.rep_ps) * 1e-12;

    Rng rng(derive_seed(p.seed, block));
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    std::exponential_distribution<double> decay_xx(1.0 / plan.tau_xx_ps);
    std::exponential_distribution<double> decay_x(1.0 / plan.tau_x_ps);
    std::normal_distribution<double> jitter(0.0, plan.jitter_ps > 0.0 ? plan.jitter_ps : 1.0);

    BlockOutput out;
    out.tally.pulses = last - first;

    // Blinking is only evaluated at pulse times. On-pulse counting is done
    // interval by interval so that pulses skipped below still get tallied.
    TelegraphProcess blink(p.blink_tau_on, p.blink_tau_off, rng, static_cast<double>(first) * rep_s);
    auto count_on_pulses = [&](double from, double to) {
        const auto lo = std::max<std::uint64_t>(
            first, static_cast<std::uint64_t>(std::max(0.0, std::ceil(from / rep_s))));
        const auto hi = std::min<std::uint64_t>(
            last, static_cast<std::uint64_t>(std::max(0.0, std::ceil(to / rep_s))));
        if (hi > lo) out.tally.on_pulses += hi - lo;
    };

    auto detect = [&](Channel ch, double t_ps) {
        if (uniform(rng) >= p.det_eff[static_cast<std::size_t>(ch)]) return;
        if (plan.jitter_ps > 0.0) t_ps += jitter(rng);
        out.events.push_back({static_cast<std::int64_t>(std::llround(t_ps)), ch});
        ++out.tally.clicks[static_cast<std::size_t>(ch)];
    };

    auto emit_cascade = [&](double t_start_ps) {
        const double t_xx = t_start_ps + decay_xx(rng);
        const double t_x = t_xx + decay_x(rng);
        switch (plan.config.mode) {
            case MeasurementMode::kHbtX:
                detect(uniform(rng) < 0.5 ? Channel::kXA : Channel::kXB, t_x);
                break;
            case MeasurementMode::kHbtXX:
                detect(uniform(rng) < 0.5 ? Channel::kXXA : Channel::kXXB, t_xx);
                break;
            case MeasurementMode::kCrossCorr:
                detect(Channel::kXA, t_x);
                detect(Channel::kXXA, t_xx);
                break;
            case MeasurementMode::kPolarized: {
                const auto [x_pass, xx_pass] = sample_outcome(plan.born, rng);
                detect(x_pass ? Channel::kXPass : Channel::kXReflect, t_x);
                detect(xx_pass ? Channel::kXXPass : Channel::kXXReflect, t_xx);
                break;
            }
        }
    };

    // Pulses that would excite an active dot are drawn by geometric skipping;
    // each is then gated by the blinking state at its time.
    const double eta = plan.eta_prep;
    std::geometric_distribution<std::uint64_t> skip(eta < 1.0 ? (eta > 0.0 ? eta : 0.5) : 0.5);
    std::uint64_t n = first;
    bool done = eta <= 0.0;
    while (!done) {
        if (eta < 1.0) n += skip(rng);
        if (n >= last) break;
        const double t_s = static_cast<double>(n) * rep_s;
        if (blink.on_at(t_s, rng, count_on_pulses)) {
            ++out.tally.emissions;
            const double t0_ps = static_cast<double>(static_cast<std::int64_t>(n) * plan.rep_ps);
            const bool second = uniform(rng) < p.p_m;
            emit_cascade(t0_ps);
            if (second) {
                ++out.tally.reexcitations;
                emit_cascade(t0_ps + plan.reexc_ps);
            }
        }
        ++n;
        done = n >= last;
    }

    blink.on_at(static_cast<double>(last - 1) * rep_s, rng, count_on_pulses);
    if (blink.is_on()) count_on_pulses(blink.last_switch(), static_cast<double>(last) * rep_s);

    for (const Channel ch : plan.config.channels()) {
        const double rate = p.dark_rate[static_cast<std::size_t>(ch)];
        if (rate <= 0.0) continue;
        const double duration_s = static_cast<double>(last - first) * rep_s;
        std::poisson_distribution<std::uint64_t> count(rate * duration_s);
        const std::uint64_t k = count(rng);
        const double t_begin = static_cast<double>(static_cast<std::int64_t>(first) * plan.rep_ps);
        const double span_ps = static_cast<double>(static_cast<std::int64_t>(last - first) * plan.rep_ps);
        for (std::uint64_t i = 0; i < k; ++i) {
            out.events.push_back(
                {static_cast<std::int64_t>(std::floor(t_begin + uniform(rng) * span_ps)), ch});
            ++out.tally.clicks[static_cast<std::size_t>(ch)];
        }
    }

    std::sort(out.events.begin(), out.events.end());
    return out;
}

SimulationResult merge_blocks(const RunPlan& plan, std::vector<BlockOutput>& blocks) {
    SimulationResult result;
    result.stream.meta = {plan.config, plan.n_pulses, plan.params.digest(), plan.rep_ps};
    std::size_t total = 0;
    for (const auto& b : blocks) total += b.events.size();
    result.stream.events.reserve(total);
    for (auto& b : blocks) {
        result.stream.events.insert(result.stream.events.end(), b.events.begin(), b.events.end());
        result.tally += b.tally;
        std::vector<DetectionEvent>().swap(b.events);
    }
    auto& ev = result.stream.events;
    if (!std::is_sorted(ev.begin(), ev.end())) std::sort(ev.begin(), ev.end());
    return result;
}

}  // namespace

SimulationResult simulate_pulse_train_serial(const EmitterParams& params,
                                             const MeasurementConfig& config,
                                             std::uint64_t n_pulses) {
    const RunPlan plan = make_plan(params, config, n_pulses);
    std::vector<BlockOutput> blocks(plan.n_blocks);
    for (std::uint64_t b = 0; b < plan.n_blocks; ++b) blocks[b] = simulate_block(plan, b);
    return merge_blocks(plan, blocks);
}

SimulationResult simulate_pulse_train(const EmitterParams& params, const MeasurementConfig& config,
                                      std::uint64_t n_pulses) {
    const RunPlan plan = make_plan(params, config, n_pulses);
    std::vector<BlockOutput> blocks(plan.n_blocks);
    const auto nb = static_cast<std::int64_t>(plan.n_blocks);
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t b = 0; b < nb; ++b) {
        blocks[static_cast<std::size_t>(b)] = simulate_block(plan, static_cast<std::uint64_t>(b));
    }
    return merge_blocks(plan, blocks);
}

}  // namespace qdent
