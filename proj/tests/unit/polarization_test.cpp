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

#include "qdent/polarization.hpp"

#include <random>

#include "gtest/gtest.h"
#include "oracles/wootters_bruteforce.hpp"
#include "qdent/errors.hpp"
#include "test_util.hpp"

using namespace qdent;

TEST(polarization, bell_phi_plus_corners) {
    const auto rho = bell_phi_plus();
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) {
            const bool corner = (r == 0 || r == 3) && (c == 0 || c == 3);
            EXPECT_NEAR(rho(r, c).real(), corner ? 0.5 : 0.0, 1e-15);
            EXPECT_NEAR(rho(r, c).imag(), 0.0, 1e-15);
        }
    }
    EXPECT_NEAR(concurrence(rho), 1.0, 1e-12);
    EXPECT_NEAR(fidelity_to_phi_plus(rho), 1.0, 1e-15);
}

TEST(polarization, dephased_bell) {
    EXPECT_LT((dephased_bell(1.0).matrix() - bell_phi_plus().matrix()).cwiseAbs().maxCoeff(), 1e-15);
    const auto classical = dephased_bell(0.0);
    EXPECT_NEAR(classical(0, 0).real(), 0.5, 0.0);
    EXPECT_NEAR(classical(0, 3).real(), 0.0, 0.0);
    EXPECT_NEAR(concurrence(classical), 0.0, 1e-12);
    EXPECT_NEAR(concurrence(dephased_bell(0.89)), 0.89, 1e-10);
    EXPECT_NEAR(wootters_bruteforce(dephased_bell(0.89).matrix()), 0.89, 1e-10);
    EXPECT_THROW(dephased_bell(1.01), DomainError);
    EXPECT_THROW(dephased_bell(-0.01), DomainError);
}

TEST(polarization, werner_mix_endpoints) {
    std::mt19937_64 rng(7);
    const auto rho0 = testutil::random_state(rng);
    EXPECT_LT((werner_mix(rho0, MixingFraction(1.0)).matrix() - rho0.matrix()).cwiseAbs().maxCoeff(),
              1e-15);
    EXPECT_LT((werner_mix(rho0, MixingFraction(0.0)).matrix() - Matrix4c::Identity() * 0.25)
                  .cwiseAbs()
                  .maxCoeff(),
              1e-15);
    EXPECT_THROW(MixingFraction(1.5), DomainError);
}

TEST(polarization, werner_concurrence_anchor) {
    const auto rho = werner_mix(bell_phi_plus(), MixingFraction(0.998882));
    EXPECT_NEAR(concurrence(rho), 0.998323, 1e-9);
    EXPECT_NEAR(fidelity_to_phi_plus(rho), 0.9991615, 1e-12);
}

TEST(polarization, maximally_mixed) {
    const auto rho = TwoQubitDensityMatrix::maximally_mixed();
    EXPECT_NEAR(concurrence(rho), 0.0, 1e-12);
    EXPECT_NEAR(fidelity_to_phi_plus(rho), 0.25, 1e-15);
}

TEST(polarization, validate_reports) {
    EXPECT_TRUE(validate_density_matrix(bell_phi_plus().matrix()).passed());
    Matrix4c m = Matrix4c::Identity() * 0.275;  // trace 1.1
    const auto report = validate_density_matrix(m);
    EXPECT_FALSE(report.passed());
    EXPECT_FALSE(report.unit_trace);
    EXPECT_TRUE(report.hermitian);
    EXPECT_TRUE(report.positive);
    EXPECT_THROW(TwoQubitDensityMatrix{m}, InvariantViolation);

    Matrix4c neg = Matrix4c::Zero();
    neg(0, 0) = 1.2;
    neg(1, 1) = -0.2;
    EXPECT_FALSE(validate_density_matrix(neg).positive);

    Matrix4c nonherm = bell_phi_plus().matrix();
    nonherm(0, 3) += Complex(0.0, 1e-6);
    EXPECT_FALSE(validate_density_matrix(nonherm).hermitian);
}

TEST(polarization, circular_basis_convention) {
    // R = (H - iV)/sqrt2; |phi+> = (|RL> + |LR>)/sqrt2 in this convention.
    const auto r = PolarizationKet::of(Basis::R).amplitudes();
    EXPECT_NEAR(r(1).imag(), -std::sqrt(0.5), 1e-15);
    const Matrix4c p = product_projector(PolarizationKet::of(Basis::R).projector(),
                                         PolarizationKet::of(Basis::L).projector());
    EXPECT_NEAR((bell_phi_plus().matrix() * p).trace().real(), 0.5, 1e-15);
}

TEST(polarization, json_round_trip_is_bit_exact) {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 20; ++i) {
        const auto rho = testutil::random_state(rng);
        const std::string text = rho.to_json().dump();
        const auto back = TwoQubitDensityMatrix::from_json(nlohmann::json::parse(text));
        for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 4; ++c) {
                EXPECT_EQ(back(r, c).real(), rho(r, c).real());
                EXPECT_EQ(back(r, c).imag(), rho(r, c).imag());
            }
    }
    EXPECT_EQ(bell_phi_plus().to_json()["basis"], "HH,HV,VH,VV");
    EXPECT_THROW(TwoQubitDensityMatrix::from_json(nlohmann::json::object()), InputError);
}

// Property tests over random states and mixing fractions.

TEST(polarization_properties, measures_bounded_and_match_bruteforce) {
    std::mt19937_64 rng(1234);
    for (int i = 0; i < 500; ++i) {
        const auto rho = testutil::random_state(rng);
        const double c = concurrence(rho);
        const double f = fidelity_to_phi_plus(rho);
        ASSERT_GE(c, 0.0);
        ASSERT_LE(c, 1.0);
        ASSERT_GE(f, 0.0);
        ASSERT_LE(f, 1.0);
        ASSERT_NEAR(c, wootters_bruteforce(rho.matrix()), 1e-9);
    }
}

TEST(polarization_properties, werner_closed_forms) {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 300; ++i) {
        const double k = u(rng);
        const double c = u(rng);
        ASSERT_NEAR(concurrence(werner_mix(bell_phi_plus(), MixingFraction(k))),
                    std::max(0.0, (3.0 * k - 1.0) / 2.0), 1e-10);
        ASSERT_NEAR(concurrence(dephased_bell(c)), c, 1e-10);
        ASSERT_NEAR(concurrence(werner_mix(dephased_bell(c), MixingFraction(k))),
                    std::max(0.0, k * c - (1.0 - k) / 2.0), 1e-10);
        const auto rho0 = testutil::random_state(rng);
        ASSERT_NEAR(fidelity_to_phi_plus(werner_mix(rho0, MixingFraction(k))),
                    (1.0 - k) / 4.0 + k * fidelity_to_phi_plus(rho0), 1e-12);
    }
}

TEST(polarization_properties, concurrence_invariant_under_local_unitaries) {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 200; ++i) {
        const auto rho = testutil::random_state(rng);
        const Matrix4c u = product_projector(testutil::random_unitary(rng), testutil::random_unitary(rng));
        Matrix4c rotated = u * rho.matrix() * u.adjoint();
        rotated = 0.5 * (rotated + rotated.adjoint());
        ASSERT_NEAR(concurrence(TwoQubitDensityMatrix(rotated)), concurrence(rho), 1e-9);
    }
}

TEST(polarization_properties, swap_preserves_measures) {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 50; ++i) {
        const auto rho = testutil::random_state(rng);
        const TwoQubitDensityMatrix swapped(swap_qubits(rho.matrix()));
        ASSERT_NEAR(concurrence(swapped), concurrence(rho), 1e-10);
        ASSERT_NEAR(fidelity_to_phi_plus(swapped), fidelity_to_phi_plus(rho), 1e-12);
    }
}
