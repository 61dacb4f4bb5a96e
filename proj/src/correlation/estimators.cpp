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

#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Dense>

#include "qdent/correlation.hpp"
#include "qdent/errors.hpp"

namespace qdent {

std::uint64_t PeakTable::at(int n) const {
    const auto it = peaks.find(n);
    if (it == peaks.end()) throw EstimationError("peak " + std::to_string(n) + " not in table");
    return it->second;
}

int PeakTable::max_index() const { return peaks.empty() ? 0 : peaks.rbegin()->first; }

nlohmann::json PeakTable::to_json() const {
    nlohmann::json p = nlohmann::json::object();
    for (const auto& [n, c] : peaks) p[std::to_string(n)] = c;
    return {{"rep_period_ps", rep_period_ps},
            {"peak_window_ps", peak_window_ps},
            {"n_pulses", n_pulses},
            {"peaks", p}};
}

PeakTable integrate_peaks(const CorrelationHistogram& hist, std::int64_t rep_period_ps,
                          std::int64_t peak_window_ps) {
    if (rep_period_ps <= 0 || peak_window_ps <= 0) throw ConfigError("peak geometry must be positive");
    if (2 * peak_window_ps >= rep_period_ps) {
        throw ConfigError("peak windows overlap: 2 * peak_window must be below rep_period");
    }
    PeakTable t;
    t.rep_period_ps = rep_period_ps;
    t.peak_window_ps = peak_window_ps;
    t.n_pulses = hist.n_pulses;
    const std::int64_t reach = hist.max_delay_ps - peak_window_ps;
    if (reach < 0) return t;
    const auto n_max = static_cast<int>(reach / rep_period_ps);
    for (int n = -n_max; n <= n_max; ++n) t.peaks[n] = 0;

    const double period = static_cast<double>(rep_period_ps);
    const double window = static_cast<double>(peak_window_ps);
    for (std::size_t i = 0; i < hist.counts.size(); ++i) {
        if (hist.counts[i] == 0) continue;
        const double c = hist.bin_center_ps(i);
        const auto n = static_cast<int>(std::lround(c / period));
        if (n < -n_max || n > n_max) continue;
        const double off = c - n * period;
        if (off >= -window && off < window) t.peaks[n] += hist.counts[i];
    }
    return t;
}

nlohmann::json Estimate::to_json() const {
    return {{"estimate", estimate},
            {"std_error", std_error},
            {"method", method},
            {"windows", windows},
            {"warnings", warnings}};
}

namespace {

nlohmann::json window_json(const PeakTable& p) {
    return {{"rep_period_ps", p.rep_period_ps}, {"peak_window_ps", p.peak_window_ps}};
}

// Poisson error of a count, floored at one count so empty peaks still carry
// an uncertainty.
double count_sigma(double n) { return std::sqrt(std::max(n, 1.0)); }

}  // namespace

Estimate g2_sidepeak(const PeakTable& peaks) {
    if (!peaks.has(0) || !peaks.has(1) || !peaks.has(-1)) {
        throw EstimationError("side-peak normalization needs peaks 0 and +-1");
    }
    const double zero = static_cast<double>(peaks.at(0));
    const double side_sum = static_cast<double>(peaks.at(1) + peaks.at(-1));
    if (side_sum <= 0.0) throw EstimationError("side peaks are empty; g2 is undefined");
    const double side = 0.5 * side_sum;
    Estimate e;
    e.estimate = zero / side;
    e.std_error = std::hypot(count_sigma(zero) / side, e.estimate / std::sqrt(side_sum));
    e.method = "side_peak";
    e.windows = window_json(peaks);
    e.windows["normalization_peaks"] = {-1, 1};
    return e;
}

FarRange default_far_range(double tau_c_seconds, std::int64_t rep_period_ps) {
    const double per = static_cast<double>(rep_period_ps) * 1e-12;
    FarRange f;
    f.min_index = std::max(1, static_cast<int>(std::ceil(10.0 * tau_c_seconds / per)));
    f.max_index = std::max(f.min_index, static_cast<int>(std::floor(20.0 * tau_c_seconds / per)));
    return f;
}

Estimate g2_poisson(const PeakTable& peaks, FarRange far, std::optional<double> tau_c_seconds) {
    if (!peaks.has(0)) throw EstimationError("zero-delay peak missing");
    if (far.min_index < 1 || far.max_index < far.min_index) {
        throw EstimationError("invalid far range");
    }
    Estimate e;
    e.method = "poisson_far_peaks";
    double far_sum = 0.0;
    int used = 0;
    int hi = far.min_index - 1;
    for (const auto& [n, c] : peaks.peaks) {
        const int m = std::abs(n);
        if (m < far.min_index || m > far.max_index) continue;
        far_sum += static_cast<double>(c);
        ++used;
        hi = std::max(hi, m);
    }
    if (used == 0) throw EstimationError("no peaks inside the requested far range");
    if (hi < far.max_index) {
        e.warnings.push_back("far range truncated at |n| = " + std::to_string(hi) +
                             " by the histogram extent");
    }
    const double per = static_cast<double>(peaks.rep_period_ps) * 1e-12;
    if (tau_c_seconds && far.min_index * per < 5.0 * *tau_c_seconds) {
        std::ostringstream os;
        os << "far range starts at " << far.min_index * per * 1e6
           << " us, inside the blinking bunching envelope (tau_c = " << *tau_c_seconds * 1e6
           << " us)";
        e.warnings.push_back(os.str());
    }
    const double zero = static_cast<double>(peaks.at(0));
    const double mean_far = far_sum / used;
    if (mean_far <= 0.0) throw EstimationError("far peaks are empty; g2 is undefined");
    e.estimate = zero / mean_far;
    e.std_error = std::hypot(count_sigma(zero) / mean_far, e.estimate / std::sqrt(far_sum));
    e.windows = window_json(peaks);
    e.windows["far_range"] = {far.min_index, std::min(hi, far.max_index)};
    return e;
}

Estimate estimate_eta_prep(const PeakTable& peaks) {
    if (!peaks.has(0) || !peaks.has(1) || !peaks.has(-1)) {
        throw EstimationError("eta_prep needs peaks 0 and +-1");
    }
    const double zero = static_cast<double>(peaks.at(0));
    if (zero <= 0.0) throw EstimationError("zero-delay cross-correlation peak is empty");
    const double side_sum = static_cast<double>(peaks.at(1) + peaks.at(-1));
    Estimate e;
    e.estimate = 0.5 * side_sum / zero;
    e.std_error = std::hypot(0.5 * count_sigma(side_sum) / zero, e.estimate / std::sqrt(zero));
    e.method = "cross_correlation_side_over_zero";
    e.windows = window_json(peaks);
    return e;
}

nlohmann::json BlinkingEstimate::to_json() const {
    nlohmann::json j = {{"eta_blink", eta_blink},
                        {"eta_blink_std", eta_blink_std},
                        {"reduced_chi2", reduced_chi2},
                        {"peaks_used", peaks_used}};
    if (tau_c_seconds) {
        j["tau_c_s"] = *tau_c_seconds;
        j["tau_c_std_s"] = tau_c_std;
    } else {
        j["tau_c_s"] = nullptr;
    }
    return j;
}

namespace {

struct FoldedPeaks {
    std::vector<double> x;  // separation in seconds
    std::vector<double> y;  // folded counts
    std::vector<double> f;  // finite-record overlap factor
    std::vector<double> w;  // inverse Poisson variance
};

struct LinearFit {
    double base = 0.0;
    double amp = 0.0;
    double chi2 = std::numeric_limits<double>::infinity();
};

LinearFit fit_at(const FoldedPeaks& d, double tau) {
    Eigen::Matrix2d ata = Eigen::Matrix2d::Zero();
    Eigen::Vector2d aty = Eigen::Vector2d::Zero();
    for (std::size_t i = 0; i < d.x.size(); ++i) {
        const double u = d.f[i];
        const double v = d.f[i] * std::exp(-d.x[i] / tau);
        ata(0, 0) += d.w[i] * u * u;
        ata(0, 1) += d.w[i] * u * v;
        ata(1, 1) += d.w[i] * v * v;
        aty(0) += d.w[i] * u * d.y[i];
        aty(1) += d.w[i] * v * d.y[i];
    }
    ata(1, 0) = ata(0, 1);
    LinearFit r;
    if (std::abs(ata.determinant()) <= 1e-300) return r;
    const Eigen::Vector2d sol = ata.ldlt().solve(aty);
    r.base = sol(0);
    r.amp = sol(1);
    r.chi2 = 0.0;
    for (std::size_t i = 0; i < d.x.size(); ++i) {
        const double model = d.f[i] * (r.base + r.amp * std::exp(-d.x[i] / tau));
        r.chi2 += d.w[i] * (d.y[i] - model) * (d.y[i] - model);
    }
    return r;
}

}  // namespace

BlinkingEstimate estimate_eta_blink(const PeakTable& peaks, int max_index) {
    const int m_max = max_index > 0 ? std::min(max_index, peaks.max_index()) : peaks.max_index();
    const double per = static_cast<double>(peaks.rep_period_ps) * 1e-12;
    FoldedPeaks d;
    for (int m = 1; m <= m_max; ++m) {
        if (!peaks.has(m) || !peaks.has(-m)) continue;
        const double y = static_cast<double>(peaks.at(m) + peaks.at(-m));
        d.x.push_back(m * per);
        d.y.push_back(y);
        d.f.push_back(peaks.n_pulses > 0 ? 1.0 - static_cast<double>(m) / peaks.n_pulses : 1.0);
        d.w.push_back(1.0 / std::max(y, 1.0));
    }
    if (d.x.size() < 4) throw EstimationError("blinking fit needs at least 4 peak separations");

    // Profile chi2 over tau on a log grid, then golden-section refinement.
    const double lo = std::log(0.5 * per);
    const double hi = std::log(2.0 * m_max * per);
    constexpr int kGrid = 240;
    int best = 0;
    double best_chi2 = std::numeric_limits<double>::infinity();
    for (int g = 0; g <= kGrid; ++g) {
        const double chi2 = fit_at(d, std::exp(lo + (hi - lo) * g / kGrid)).chi2;
        if (chi2 < best_chi2) {
            best_chi2 = chi2;
            best = g;
        }
    }
    double a = lo + (hi - lo) * std::max(0, best - 1) / kGrid;
    double b = lo + (hi - lo) * std::min(kGrid, best + 1) / kGrid;
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double c1 = b - phi * (b - a), c2 = a + phi * (b - a);
    double f1 = fit_at(d, std::exp(c1)).chi2, f2 = fit_at(d, std::exp(c2)).chi2;
    for (int it = 0; it < 200 && (b - a) > 1e-9; ++it) {
        if (f1 < f2) {
            b = c2; c2 = c1; f2 = f1;
            c1 = b - phi * (b - a);
            f1 = fit_at(d, std::exp(c1)).chi2;
        } else {
            a = c1; c1 = c2; f1 = f2;
            c2 = a + phi * (b - a);
            f2 = fit_at(d, std::exp(c2)).chi2;
        }
    }
    const double tau = std::exp(0.5 * (a + b));
    const LinearFit fit = fit_at(d, tau);
    if (!std::isfinite(fit.chi2) || !(fit.base > 0.0)) {
        throw EstimationError("blinking fit failed: non-finite objective or non-positive baseline");
    }

    // Covariance of (base, amp, tau) from the weighted Jacobian.
    Eigen::Matrix3d jtj = Eigen::Matrix3d::Zero();
    for (std::size_t i = 0; i < d.x.size(); ++i) {
        const double e = std::exp(-d.x[i] / tau);
        const Eigen::Vector3d g(d.f[i], d.f[i] * e, d.f[i] * fit.amp * e * d.x[i] / (tau * tau));
        jtj += d.w[i] * g * g.transpose();
    }
    BlinkingEstimate r;
    r.peaks_used = d.x.size();
    r.reduced_chi2 = fit.chi2 / std::max<double>(1.0, static_cast<double>(d.x.size()) - 3.0);
    // Birge ratio.
    const double inflate = std::max(1.0, r.reduced_chi2);
    const Eigen::Matrix2d jtj_lin = jtj.topLeftCorner<2, 2>();
    const Eigen::Matrix2d cov_lin = inflate * jtj_lin.inverse();
    const double amp_sigma = std::sqrt(std::max(cov_lin(1, 1), 0.0));
    const double s = fit.base + fit.amp;
    r.eta_blink = fit.base / s;

    const bool envelope_resolved = std::abs(fit.amp) > 3.0 * amp_sigma;
    const bool at_edge = best == 0 || best == kGrid;
    if (envelope_resolved && at_edge) {
        std::ostringstream os;
        os << "blinking fit did not converge: tau_c at search boundary (" << tau
           << " s), amplitude " << fit.amp << " +- " << amp_sigma << ", reduced chi2 "
           << r.reduced_chi2;
        throw EstimationError(os.str());
    }
    if (envelope_resolved) {
        const Eigen::Matrix3d cov = inflate * jtj.inverse();
        const Eigen::Vector3d grad(fit.amp / (s * s), -fit.base / (s * s), 0.0);
        r.eta_blink_std = std::sqrt(std::max(0.0, grad.dot(cov * grad)));
        r.tau_c_seconds = tau;
        r.tau_c_std = std::sqrt(std::max(0.0, cov(2, 2)));
    } else {
        const Eigen::Vector2d grad(fit.amp / (s * s), -fit.base / (s * s));
        r.eta_blink_std = std::sqrt(std::max(0.0, grad.dot(cov_lin * grad)));
    }
    return r;
}

}  // namespace qdent
