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

#ifndef QDENT_POLARIZATION_HPP
#define QDENT_POLARIZATION_HPP

#include <array>
#include <complex>
#include <string>
#include <string_view>

#include <Eigen/Dense>
#include <json.hpp>

namespace qdent {

using Complex = std::complex<double>;
using Matrix2c = Eigen::Matrix2cd;
using Matrix4c = Eigen::Matrix4cd;
using Vector2c = Eigen::Vector2cd;
using Vector4c = Eigen::Vector4cd;

// Invariant tolerances for TwoQubitDensityMatrix.
inline constexpr double kHermiticityTol = 1e-12;
inline constexpr double kTraceTol = 1e-9;
inline constexpr double kPsdTol = 1e-10;

// Single-photon polarization basis states used by the analyzers.
// Circular convention: R = (H - iV)/sqrt2, L = (H + iV)/sqrt2.
enum class Basis : unsigned char { H, V, D, A, R, L };

inline constexpr std::array<Basis, 6> kAllBases = {Basis::H, Basis::V, Basis::D,
                                                   Basis::A, Basis::R, Basis::L};

char basis_letter(Basis b);
// Throws InputError on anything other than one of "HVDARL".
Basis basis_from_letter(char c);

// Unit-norm two-component polarization ket.
class PolarizationKet {
   public:
    explicit PolarizationKet(const Vector2c& amplitudes);
    static PolarizationKet of(Basis b);

    const Vector2c& amplitudes() const { return amplitudes_; }
    Matrix2c projector() const { return amplitudes_ * amplitudes_.adjoint(); }

   private:
    Vector2c amplitudes_;
};

struct DensityMatrixReport {
    double hermiticity_residual = 0.0;
    double trace_deviation = 0.0;
    double min_eigenvalue = 0.0;
    bool hermitian = false;
    bool unit_trace = false;
    bool positive = false;

    bool passed() const { return hermitian && unit_trace && positive; }
    std::string describe() const;
};

// Checks a raw 4x4 matrix against the density-matrix invariants.
DensityMatrixReport validate_density_matrix(const Matrix4c& m);

// Two-qubit polarization state of an XX-X photon pair. Basis order is
// |HH>, |HV>, |VH>, |VV>, where the first letter is the X photon and the
// second the XX photon. Always satisfies the invariants checked by
// validate_density_matrix().
class TwoQubitDensityMatrix {
   public:
    // Throws InvariantViolation if `m` is not a valid density matrix.
    explicit TwoQubitDensityMatrix(const Matrix4c& m);

    static TwoQubitDensityMatrix maximally_mixed();
    // Pure state from a (not necessarily normalized) ket.
    static TwoQubitDensityMatrix from_ket(const Vector4c& ket);

    const Matrix4c& matrix() const { return m_; }
    Complex operator()(int row, int col) const { return m_(row, col); }

    nlohmann::json to_json() const;
    // Throws InputError on malformed documents, InvariantViolation on
    // non-physical contents.
    static TwoQubitDensityMatrix from_json(const nlohmann::json& j);

   private:
    Matrix4c m_;
};

// Mixing fraction k in [0, 1].
class MixingFraction {
   public:
    explicit MixingFraction(double k);
    double value() const { return k_; }
    double one_minus() const { return 1.0 - k_; }

   private:
    double k_;
};

TwoQubitDensityMatrix bell_phi_plus();

// (|HH><HH| + |VV><VV|)/2 with |HH><VV| coherence c/2.
TwoQubitDensityMatrix dephased_bell(double coherence);

// (1-k)/4 * Identity + k * rho0.
TwoQubitDensityMatrix werner_mix(const TwoQubitDensityMatrix& rho0, MixingFraction k);

// Wootters concurrence.
double concurrence(const TwoQubitDensityMatrix& rho);

// <phi+| rho |phi+>.
double fidelity_to_phi_plus(const TwoQubitDensityMatrix& rho);

// Local projector |a><a| (x) |b><b| in the two-qubit basis.
Matrix4c product_projector(const Matrix2c& first, const Matrix2c& second);

double trace_distance(const Matrix4c& a, const Matrix4c& b);

// Exchanges the X and XX photons.
Matrix4c swap_qubits(const Matrix4c& m);

}  // namespace qdent

#endif  // QDENT_POLARIZATION_HPP
