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

#ifndef QDENT_CORRELATION_HPP
#define QDENT_CORRELATION_HPP

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace qdent {

// Coincidence counts vs delay t_b - t_a. Bin i covers
// [(i - half_bins) * bin_width, (i - half_bins + 1) * bin_width), so the
// bin range is symmetric about zero delay and bin `half_bins` starts at 0.
struct CorrelationHistogram {
    std::int64_t bin_width_ps = 100;
    std::int64_t max_delay_ps = 0;
    std::int64_t half_bins = 0;
    std::vector<std::uint64_t> counts;
    std::uint64_t clicks_a = 0;
    std::uint64_t clicks_b = 0;
    std::uint64_t n_pulses = 0;

    std::int64_t bin_lower_ps(std::size_t i) const {
        return (static_cast<std::int64_t>(i) - half_bins) * bin_width_ps;
    }
    double bin_center_ps(std::size_t i) const {
        return static_cast<double>(bin_lower_ps(i)) + 0.5 * static_cast<double>(bin_width_ps);
    }
    std::uint64_t total() const;

    CorrelationHistogram& operator+=(const CorrelationHistogram& o);
    friend bool operator==(const CorrelationHistogram&, const CorrelationHistogram&) = default;
};

// Sliding-window correlator over two time-sorted streams: every ordered pair
// (a, b) with |t_b - t_a| <= max_delay is binned. Parallel over shards of
// stream A; result is identical to the serial kernel.
CorrelationHistogram build_histogram(std::span<const std::int64_t> stream_a,
                                     std::span<const std::int64_t> stream_b,
                                     std::int64_t bin_width_ps, std::int64_t max_delay_ps);
CorrelationHistogram build_histogram_serial(std::span<const std::int64_t> stream_a,
                                            std::span<const std::int64_t> stream_b,
                                            std::int64_t bin_width_ps, std::int64_t max_delay_ps);

void write_histogram_csv(std::ostream& os, const CorrelationHistogram& h);

// Integrated coincidences per pulse separation n.
struct PeakTable {
    std::int64_t rep_period_ps = 12500;
    std::int64_t peak_window_ps = 3000;
    std::uint64_t n_pulses = 0;
    std::map<int, std::uint64_t> peaks;

    bool has(int n) const { return peaks.contains(n); }
    std::uint64_t at(int n) const;
    int max_index() const;
    nlohmann::json to_json() const;
};

// Sums bins whose centre lies in [n*T - w, n*T + w) for every n whose window
// fits inside the histogram. When T and w are multiples of the bin width this
// equals counting raw delays, so the table does not depend on bin width.
PeakTable integrate_peaks(const CorrelationHistogram& hist, std::int64_t rep_period_ps,
                          std::int64_t peak_window_ps);

struct Estimate {
    double estimate = 0.0;
    double std_error = 0.0;
    std::string method;
    nlohmann::json windows;
    std::vector<std::string> warnings;

    nlohmann::json to_json() const;
};

// peak[0] / mean(peak[+1], peak[-1]).
Estimate g2_sidepeak(const PeakTable& peaks);

struct FarRange {
    int min_index = 0;
    int max_index = 0;
};

// Default Poisson-level range |n| in [10 tau_c / T, 20 tau_c / T].
FarRange default_far_range(double tau_c_seconds, std::int64_t rep_period_ps);

// peak[0] / mean of peak[n] over min <= |n| <= max. If a correlation time is
// known, ranges inside the bunching envelope get a warning attached.
Estimate g2_poisson(const PeakTable& peaks, FarRange far,
                    std::optional<double> tau_c_seconds = std::nullopt);

struct BlinkingEstimate {
    double eta_blink = 1.0;
    double eta_blink_std = 0.0;
    // Unset when the envelope amplitude is consistent with zero.
    std::optional<double> tau_c_seconds;
    double tau_c_std = 0.0;
    double reduced_chi2 = 0.0;
    std::size_t peaks_used = 0;

    nlohmann::json to_json() const;
};

// Weighted least-squares fit of peak[n], n != 0, to
//   B (1 + ((1 - eta)/eta) exp(-|n| T / tau_c)) (1 - |n|/N_pulses).
// Throws EstimationError when the fit does not converge.
BlinkingEstimate estimate_eta_blink(const PeakTable& peaks, int max_index = 0);

// mean(peak[+1], peak[-1]) / peak[0] from an X-XX cross-correlation.
Estimate estimate_eta_prep(const PeakTable& peaks);

}  // namespace qdent

#endif  // QDENT_CORRELATION_HPP
