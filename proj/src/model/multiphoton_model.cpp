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

#include "qdent/multiphoton_model.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numbers>
#include <string>

#include "qdent/errors.hpp"
#include "qdent/text_format.hpp"

namespace qdent {

MultiphotonProbability::MultiphotonProbability(double p_m) : p_m_(p_m) {
    if (!(p_m >= 0.0 && p_m < 1.0)) {
        throw DomainError("p_m must lie in [0, 1), got " + std::to_string(p_m));
    }
}

void EfficiencyFactors::validate() const {
    if (!(eta_blink > 0.0 && eta_blink <= 1.0)) throw DomainError("eta_blink must lie in (0, 1]");
    if (!(eta_prep > 0.0 && eta_prep <= 1.0)) throw DomainError("eta_prep must lie in (0, 1]");
}

void RabiCurveParams::validate() const {
    if (!(amplitude > 0.0)) throw DomainError("Rabi amplitude must be positive");
    if (!(damping >= 0.0)) throw DomainError("Rabi damping must be non-negative");
}

RabiCurveParams RabiCurveParams::from_anchors(double at_pi, double at_two_pi) {
    // (A/2)(1 + x) = at_pi, (A/2)(1 - x^2) = at_two_pi with x = exp(-gamma*pi).
    if (!(at_pi > 0.0 && at_two_pi > 0.0 && at_two_pi < at_pi)) {
        throw DomainError("Rabi anchors need 0 < eta(2pi) < eta(pi)");
    }
    const double x = 1.0 - at_two_pi / at_pi;
    RabiCurveParams p;
    p.damping = -std::log(x) / std::numbers::pi;
    p.amplitude = 2.0 * at_pi / (1.0 + x);
    p.form = RabiForm::kDampedCosine;
    return p;
}

double g2_from_pm(double p_m, const EfficiencyFactors& eff) {
    MultiphotonProbability pm(p_m);
    if (!(eff.product() > 0.0)) throw DomainError("eta_blink * eta_prep must be positive");
    eff.validate();
    const double s = 1.0 + pm.value();
    return 2.0 * pm.value() / (eff.product() * s * s);
}

double g2_sidepeak_from_pm(double p_m, double eta_prep) {
    MultiphotonProbability pm(p_m);
    if (!(eta_prep > 0.0 && eta_prep <= 1.0)) throw DomainError("eta_prep must lie in (0, 1]");
    const double s = 1.0 + pm.value();
    return 2.0 * pm.value() / (eta_prep * s * s);
}

MultiphotonProbability pm_from_g2(double g2, const EfficiencyFactors& eff) {
    if (!(g2 >= 0.0)) throw DomainError("g2 must be non-negative");
    eff.validate();
    const double a = g2 * eff.product();
    if (!(a < 0.5)) {
        throw NoPhysicalSolution("g2 * eta_blink * eta_prep >= 1/2 has no root with p_m < 1");
    }
    // Smaller root of a(1+p)^2 = 2p, rationalized: a / (1 - a + sqrt(1 - 2a)).
    return MultiphotonProbability(a / (1.0 - a + std::sqrt(1.0 - 2.0 * a)));
}

MixingFraction k_from_pm(double p_m) {
    if (!(p_m >= 0.0 && p_m <= 1.0)) throw DomainError("p_m must lie in [0, 1]");
    return MixingFraction(1.0 - 2.0 * p_m / (1.0 + 3.0 * p_m));
}

MixingFraction k_naive_from_g2(double g_x, double g_xx) {
    if (!(g_x >= 0.0 && g_xx >= 0.0)) throw DomainError("g2 values must be non-negative");
    const double one_minus_k = 0.5 * (g_x + g_xx);
    if (one_minus_k > 1.0) throw DomainError("mean g2 above 1 gives negative k");
    return MixingFraction(1.0 - one_minus_k);
}

MixingFraction k_approx_from_g2(double g_x, double g_xx, const EfficiencyFactors& eff,
                                G2Normalization normalization) {
    if (!(g_x >= 0.0 && g_xx >= 0.0)) throw DomainError("g2 values must be non-negative");
    const double factor =
        normalization == G2Normalization::kPoisson ? eff.eta_prep * eff.eta_blink : eff.eta_prep;
    const double one_minus_k = 0.5 * (g_x + g_xx) * factor;
    if (!(one_minus_k >= 0.0 && one_minus_k <= 1.0)) throw DomainError("1 - k outside [0, 1]");
    return MixingFraction(1.0 - one_minus_k);
}

double prep_fidelity_model(double theta, const RabiCurveParams& params) {
    if (!(theta >= 0.0)) throw DomainError("pulse area must be non-negative");
    params.validate();
    const double envelope =
        params.form == RabiForm::kDampedCosine ? std::exp(-params.damping * theta) : 1.0;
    const double v = 0.5 * params.amplitude * (1.0 - envelope * std::cos(theta));
    return std::clamp(v, 0.0, 1.0);
}

GenerationProbabilities p2_from_pm(double p_m, double p_pair) {
    if (!(p_m >= 0.0 && p_m <= 1.0)) throw DomainError("p_m must lie in [0, 1]");
    if (!(p_pair >= 0.0 && p_pair <= 1.0)) throw DomainError("p_pair must lie in [0, 1]");
    return {(1.0 - p_m) * p_pair, p_m * p_pair};
}

namespace {

void check_sweep_inputs(const SweepInputs& in) {
    if (!in.p_m_override.empty() && in.p_m_override.size() != in.thetas.size()) {
        throw DomainError("p_m override length must match the theta grid");
    }
    if (!in.measured_g2.empty() && in.measured_g2.size() != in.thetas.size()) {
        throw DomainError("measured g2 length must match the theta grid");
    }
}

SweepRow evaluate_row(const SweepInputs& in, std::size_t i) {
    SweepRow row;
    row.theta = in.thetas[i];
    const double p_m = in.p_m_override.empty() ? in.p_m : in.p_m_override[i];
    row.eta_prep = prep_fidelity_model(row.theta, in.rabi);
    const EfficiencyFactors eff{in.eta_blink, row.eta_prep};
    row.g2 = g2_from_pm(p_m, eff);
    row.g2_tilde = g2_sidepeak_from_pm(p_m, row.eta_prep);
    const MixingFraction k = k_from_pm(p_m);
    row.one_minus_k = k.one_minus();
    const auto rho = werner_mix(in.rho0, k);
    row.concurrence = concurrence(rho);
    row.fidelity = fidelity_to_phi_plus(rho);
    const double g_naive = in.measured_g2.empty() ? row.g2 : in.measured_g2[i];
    row.concurrence_naive = concurrence(werner_mix(in.rho0, k_naive_from_g2(g_naive, g_naive)));
    return row;
}

}  // namespace

std::vector<SweepRow> predict_entanglement_sweep_serial(const SweepInputs& in) {
    check_sweep_inputs(in);
    std::vector<SweepRow> rows(in.thetas.size());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = evaluate_row(in, i);
    return rows;
}

std::vector<SweepRow> predict_entanglement_sweep(const SweepInputs& in) {
    check_sweep_inputs(in);
    const auto n = static_cast<std::ptrdiff_t>(in.thetas.size());
    std::vector<SweepRow> rows(in.thetas.size());
    std::exception_ptr failure;
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        try {
            rows[i] = evaluate_row(in, static_cast<std::size_t>(i));
        } catch (...) {
#pragma omp critical(qdent_sweep_failure)
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
    return rows;
}

void write_sweep_csv(std::ostream& os, std::span<const SweepRow> rows) {
    os << "theta_rad,eta_prep,g2,g2_tilde,one_minus_k,concurrence,fidelity,concurrence_naive\n";
    for (const auto& r : rows) {
        os << fmt9(r.theta) << ',' << fmt9(r.eta_prep) << ',' << fmt9(r.g2) << ','
           << fmt9(r.g2_tilde) << ',' << fmt9(r.one_minus_k) << ',' << fmt9(r.concurrence) << ','
           << fmt9(r.fidelity) << ',' << fmt9(r.concurrence_naive) << '\n';
    }
}

}  // namespace qdent
