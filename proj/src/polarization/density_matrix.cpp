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

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qdent/errors.hpp"
#include "qdent/polarization.hpp"

namespace qdent {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;

Matrix4c hermitian_part(const Matrix4c& m) { return 0.5 * (m + m.adjoint()); }

}  // namespace

char basis_letter(Basis b) {
    switch (b) {
        case Basis::H: return 'H';
        case Basis::V: return 'V';
        case Basis::D: return 'D';
        case Basis::A: return 'A';
        case Basis::R: return 'R';
        case Basis::L: return 'L';
    }
    return '?';
}

Basis basis_from_letter(char c) {
    switch (c) {
        case 'H': return Basis::H;
        case 'V': return Basis::V;
        case 'D': return Basis::D;
        case 'A': return Basis::A;
        case 'R': return Basis::R;
        case 'L': return Basis::L;
        default: break;
    }
    throw InputError(std::string("unknown polarization basis letter '") + c + "'");
}

PolarizationKet::PolarizationKet(const Vector2c& amplitudes) : amplitudes_(amplitudes) {
    if (std::abs(amplitudes_.norm() - 1.0) > 1e-12) {
        throw InvariantViolation("polarization ket is not normalized");
    }
}

PolarizationKet PolarizationKet::of(Basis b) {
    const Complex i(0.0, 1.0);
    Vector2c v;
    switch (b) {
        case Basis::H: v << 1.0, 0.0; break;
        case Basis::V: v << 0.0, 1.0; break;
        case Basis::D: v << kInvSqrt2, kInvSqrt2; break;
        case Basis::A: v << kInvSqrt2, -kInvSqrt2; break;
        case Basis::R: v << kInvSqrt2, -i * kInvSqrt2; break;
        case Basis::L: v << kInvSqrt2, i * kInvSqrt2; break;
    }
    return PolarizationKet(v);
}

std::string DensityMatrixReport::describe() const {
    std::ostringstream os;
    os << "hermiticity residual " << hermiticity_residual << (hermitian ? "" : " (FAIL)")
       << ", trace deviation " << trace_deviation << (unit_trace ? "" : " (FAIL)")
       << ", min eigenvalue " << min_eigenvalue << (positive ? "" : " (FAIL)");
    return os.str();
}

DensityMatrixReport validate_density_matrix(const Matrix4c& m) {
    DensityMatrixReport r;
    r.hermiticity_residual = (m - m.adjoint()).cwiseAbs().maxCoeff();
    r.trace_deviation = std::abs(m.trace() - Complex(1.0, 0.0));
    Eigen::SelfAdjointEigenSolver<Matrix4c> es(hermitian_part(m), Eigen::EigenvaluesOnly);
    r.min_eigenvalue = es.eigenvalues().minCoeff();
    r.hermitian = r.hermiticity_residual <= kHermiticityTol;
    r.unit_trace = r.trace_deviation <= kTraceTol;
    r.positive = r.min_eigenvalue >= -kPsdTol;
    return r;
}

TwoQubitDensityMatrix::TwoQubitDensityMatrix(const Matrix4c& m) : m_(m) {
    const auto report = validate_density_matrix(m_);
    if (!report.passed()) {
        throw InvariantViolation("invalid density matrix: " + report.describe());
    }
}

TwoQubitDensityMatrix TwoQubitDensityMatrix::maximally_mixed() {
    return TwoQubitDensityMatrix(Matrix4c::Identity() * 0.25);
}

TwoQubitDensityMatrix TwoQubitDensityMatrix::from_ket(const Vector4c& ket) {
    const double n = ket.norm();
    if (!(n > 0.0)) throw DomainError("zero ket");
    const Vector4c u = ket / n;
    Matrix4c m = u * u.adjoint();
    m = hermitian_part(m);
    return TwoQubitDensityMatrix(m);
}

nlohmann::json TwoQubitDensityMatrix::to_json() const {
    nlohmann::json re = nlohmann::json::array();
    nlohmann::json im = nlohmann::json::array();
    for (int r = 0; r < 4; ++r) {
        nlohmann::json rr = nlohmann::json::array();
        nlohmann::json ii = nlohmann::json::array();
        for (int c = 0; c < 4; ++c) {
            rr.push_back(m_(r, c).real());
            ii.push_back(m_(r, c).imag());
        }
        re.push_back(rr);
        im.push_back(ii);
    }
    return {{"basis", "HH,HV,VH,VV"}, {"re", re}, {"im", im}};
}

TwoQubitDensityMatrix TwoQubitDensityMatrix::from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("re") || !j.contains("im")) {
        throw InputError("density matrix JSON needs 're' and 'im' arrays");
    }
    if (j.contains("basis") && j.at("basis") != "HH,HV,VH,VV") {
        throw InputError("unsupported density matrix basis order");
    }
    const auto& re = j.at("re");
    const auto& im = j.at("im");
    Matrix4c m;
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) {
            try {
                m(r, c) = Complex(re.at(r).at(c).get<double>(), im.at(r).at(c).get<double>());
            } catch (const nlohmann::json::exception& e) {
                throw InputError(std::string("malformed density matrix JSON: ") + e.what());
            }
        }
    }
    return TwoQubitDensityMatrix(m);
}

MixingFraction::MixingFraction(double k) : k_(k) {
    if (!(k >= 0.0 && k <= 1.0)) {
        throw DomainError("mixing fraction k must lie in [0, 1], got " + std::to_string(k));
    }
}

TwoQubitDensityMatrix bell_phi_plus() {
    Vector4c ket(1.0, 0.0, 0.0, 1.0);
    return TwoQubitDensityMatrix::from_ket(ket);
}

TwoQubitDensityMatrix dephased_bell(double coherence) {
    if (!(coherence >= 0.0 && coherence <= 1.0)) {
        throw DomainError("coherence must lie in [0, 1]");
    }
    Matrix4c m = Matrix4c::Zero();
    m(0, 0) = 0.5;
    m(3, 3) = 0.5;
    m(0, 3) = 0.5 * coherence;
    m(3, 0) = 0.5 * coherence;
    return TwoQubitDensityMatrix(m);
}

TwoQubitDensityMatrix werner_mix(const TwoQubitDensityMatrix& rho0, MixingFraction k) {
    const double kv = k.value();
    Matrix4c m = (1.0 - kv) * 0.25 * Matrix4c::Identity() + kv * rho0.matrix();
    return TwoQubitDensityMatrix(m);
}

double concurrence(const TwoQubitDensityMatrix& rho) {
    // Hermitian form: the lambdas are the singular values of sqrt(rho) sqrt(rho~),
    // i.e. square roots of the eigenvalues of sqrt(rho) rho~ sqrt(rho).
    Matrix4c sy_sy = Matrix4c::Zero();
    sy_sy(0, 3) = -1.0;
    sy_sy(1, 2) = 1.0;
    sy_sy(2, 1) = 1.0;
    sy_sy(3, 0) = -1.0;
    const Matrix4c& m = rho.matrix();
    const Matrix4c flipped = sy_sy * m.conjugate() * sy_sy;

    Eigen::SelfAdjointEigenSolver<Matrix4c> es(hermitian_part(m));
    const Eigen::Vector4d ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    const Matrix4c sqrt_rho = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();

    const Matrix4c product = hermitian_part(sqrt_rho * flipped * sqrt_rho);
    Eigen::SelfAdjointEigenSolver<Matrix4c> ps(product, Eigen::EigenvaluesOnly);
    Eigen::Vector4d lambdas = ps.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    std::sort(lambdas.data(), lambdas.data() + 4, std::greater<>());
    const double c = lambdas(0) - lambdas(1) - lambdas(2) - lambdas(3);
    return std::clamp(c, 0.0, 1.0);
}

double fidelity_to_phi_plus(const TwoQubitDensityMatrix& rho) {
    const Matrix4c& m = rho.matrix();
    const double f = 0.5 * (m(0, 0) + m(0, 3) + m(3, 0) + m(3, 3)).real();
    return std::clamp(f, 0.0, 1.0);
}

Matrix4c product_projector(const Matrix2c& first, const Matrix2c& second) {
    Matrix4c out;
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            for (int c = 0; c < 2; ++c)
                for (int d = 0; d < 2; ++d) out(2 * a + c, 2 * b + d) = first(a, b) * second(c, d);
    return out;
}

double trace_distance(const Matrix4c& a, const Matrix4c& b) {
    Eigen::SelfAdjointEigenSolver<Matrix4c> es(hermitian_part(a - b), Eigen::EigenvaluesOnly);
    return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

Matrix4c swap_qubits(const Matrix4c& m) {
    // |HV> <-> |VH>
    Eigen::PermutationMatrix<4> p;
    p.indices() << 0, 2, 1, 3;
    return p * m * p.transpose();
}

}  // namespace qdent
