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

#ifndef QDENT_MULTIPHOTON_MODEL_HPP
#define QDENT_MULTIPHOTON_MODEL_HPP

#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "qdent/polarization.hpp"

namespace qdent {

// Relative probability that a successful cascade is followed by re-excitation
// and a second cascade in the same pulse. Lives in [0, 1).
class MultiphotonProbability {
   public:
    explicit MultiphotonProbability(double p_m);
    double value() const { return p_m_; }

   private:
    double p_m_;
};

// Blinking on-fraction and preparation fidelity, both in (0, 1].
struct EfficiencyFactors {
    double eta_blink = 1.0;
    double eta_prep = 1.0;

    void validate() const;
    double product() const { return eta_blink * eta_prep; }
};

enum class RabiForm { kDampedCosine, kUndamped };

// Preparation fidelity vs pulse area: (A/2)(1 - exp(-gamma*theta) cos(theta)).
// The undamped form drops the exponential envelope. Defaults hit 0.93 at a
// pi pulse and 0.14 at 2pi.
struct RabiCurveParams {
    double amplitude = 1.0056976744186046;
    double damping = 0.05193278017753399;
    RabiForm form = RabiForm::kDampedCosine;

    void validate() const;

    // Solves the damped form through eta(pi) = at_pi and eta(2pi) = at_two_pi.
    static RabiCurveParams from_anchors(double at_pi, double at_two_pi);
};

struct GenerationProbabilities {
    double p1 = 0.0;
    double p2 = 0.0;
};

// Which g2 normalization the efficiency-scaled approximation receives.
enum class G2Normalization {
    kPoisson,   // g2 normalized to an equally bright Poisson source
    kSidePeak,  // g~ normalized to the adjacent-pulse peaks (already carries eta_blink)
};

double g2_from_pm(double p_m, const EfficiencyFactors& eff);
double g2_sidepeak_from_pm(double p_m, double eta_prep);

// Physical-branch inverse of g2_from_pm.
MultiphotonProbability pm_from_g2(double g2, const EfficiencyFactors& eff);

// Mixing fraction from the multiphoton probability (small-efficiency limit).
MixingFraction k_from_pm(double p_m);
// 1 - k = (gX + gXX)/2, the autocorrelation-only model.
MixingFraction k_naive_from_g2(double g_x, double g_xx);
// First-order approximation of k from g2 values.
MixingFraction k_approx_from_g2(double g_x, double g_xx, const EfficiencyFactors& eff,
                                G2Normalization normalization = G2Normalization::kPoisson);

double prep_fidelity_model(double theta, const RabiCurveParams& params);

GenerationProbabilities p2_from_pm(double p_m, double p_pair);

struct SweepRow {
    double theta = 0.0;
    double eta_prep = 0.0;
    double g2 = 0.0;
    double g2_tilde = 0.0;
    double one_minus_k = 0.0;
    double concurrence = 0.0;
    double fidelity = 0.0;
    double concurrence_naive = 0.0;
};

struct SweepInputs {
    std::vector<double> thetas;
    double p_m = 5.6e-4;
    double eta_blink = 0.29;
    RabiCurveParams rabi;
    TwoQubitDensityMatrix rho0 = bell_phi_plus();
    // Optional per-theta overrides; empty or same length as thetas.
    std::vector<double> p_m_override;
    std::vector<double> measured_g2;
};

// Model curves for a pulse-area sweep. Rows are evaluated independently.
std::vector<SweepRow> predict_entanglement_sweep(const SweepInputs& in);
std::vector<SweepRow> predict_entanglement_sweep_serial(const SweepInputs& in);

void write_sweep_csv(std::ostream& os, std::span<const SweepRow> rows);

}  // namespace qdent

#endif  // QDENT_MULTIPHOTON_MODEL_HPP
