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

#include "qdent/tomography.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>

#include "qdent/emitter.hpp"
#include "qdent/text_format.hpp"

namespace qdent {

std::string TomographySetting::label() const { return {basis_letter(x), basis_letter(xx)}; }

const std::array<TomographySetting, kNumSettings>& all_settings() {
    static const auto settings = [] {
        std::array<TomographySetting, kNumSettings> s{};
        std::size_t i = 0;
        for (Basis x : kAllBases)
            for (Basis xx : kAllBases) s[i++] = {x, xx};
        return s;
    }();
    return settings;
}

std::size_t setting_index(const TomographySetting& s) {
    return 6 * static_cast<std::size_t>(s.x) + static_cast<std::size_t>(s.xx);
}

Matrix4c projector_for_setting(const TomographySetting& s) {
    return product_projector(PolarizationKet::of(s.x).projector(),
                             PolarizationKet::of(s.xx).projector());
}

namespace {

const std::array<Matrix4c, kNumSettings>& projectors() {
    static const auto p = [] {
        std::array<Matrix4c, kNumSettings> out;
        for (std::size_t i = 0; i < kNumSettings; ++i) out[i] = projector_for_setting(all_settings()[i]);
        return out;
    }();
    return p;
}

// Probability of setting s for a Hermitian (not necessarily normalized) matrix.
double born(const Matrix4c& m, std::size_t s) { return (m * projectors()[s]).trace().real(); }

}  // namespace

double TomographyDataset::total() const {
    double t = 0.0;
    for (double c : counts) t += c;
    return t;
}

void TomographyDataset::validate() const {
    for (std::size_t i = 0; i < kNumSettings; ++i) {
        if (!(counts[i] >= 0.0) || !std::isfinite(counts[i])) {
            throw InputError("count for setting " + all_settings()[i].label() +
                             " must be finite and non-negative");
        }
    }
}

TomographyDataset TomographyDataset::read_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw InputError("empty tomography dataset");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "setting_x,setting_xx,counts") {
        throw InputError("tomography CSV header must be 'setting_x,setting_xx,counts'");
    }
    TomographyDataset d;
    std::array<bool, kNumSettings> seen{};
    int lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string sx, sxx, cnt;
        if (!std::getline(ls, sx, ',') || !std::getline(ls, sxx, ',') || !std::getline(ls, cnt)) {
            throw InputError("line " + std::to_string(lineno) + ": expected three fields");
        }
        if (sx.size() != 1 || sxx.size() != 1) {
            throw InputError("line " + std::to_string(lineno) + ": settings are single letters");
        }
        const TomographySetting s{basis_from_letter(sx[0]), basis_from_letter(sxx[0])};
        const std::size_t idx = setting_index(s);
        if (seen[idx]) throw InputError("duplicate setting " + s.label());
        seen[idx] = true;
        try {
            std::size_t used = 0;
            d.counts[idx] = std::stod(cnt, &used);
            if (used != cnt.size()) throw std::invalid_argument(cnt);
        } catch (const std::exception&) {
            throw InputError("line " + std::to_string(lineno) + ": bad count '" + cnt + "'");
        }
    }
    std::string missing;
    for (std::size_t i = 0; i < kNumSettings; ++i) {
        if (!seen[i]) missing += (missing.empty() ? "" : ",") + all_settings()[i].label();
    }
    if (!missing.empty()) throw InputError("tomography dataset is missing settings: " + missing);
    d.validate();
    return d;
}

void TomographyDataset::write_csv(std::ostream& os) const {
    os << "setting_x,setting_xx,counts\n";
    for (std::size_t i = 0; i < kNumSettings; ++i) {
        const auto& s = all_settings()[i];
        os << basis_letter(s.x) << ',' << basis_letter(s.xx) << ',' << fmt17(counts[i]) << '\n';
    }
}

std::array<double, kNumSettings> expected_counts(const TwoQubitDensityMatrix& rho, double n0) {
    if (!(n0 >= 0.0)) throw DomainError("count scale must be non-negative");
    std::array<double, kNumSettings> out{};
    for (std::size_t i = 0; i < kNumSettings; ++i) out[i] = n0 * std::max(0.0, born(rho.matrix(), i));
    return out;
}

TomographyDataset noiseless_dataset(const TwoQubitDensityMatrix& rho, double n0) {
    TomographyDataset d;
    d.counts = expected_counts(rho, n0);
    d.count_scale = n0;
    return d;
}

TomographyDataset sample_counts(const TwoQubitDensityMatrix& rho, double n0, std::uint64_t seed) {
    const auto mean = expected_counts(rho, n0);
    Rng rng(seed);
    TomographyDataset d;
    d.count_scale = n0;
    for (std::size_t i = 0; i < kNumSettings; ++i) {
        if (mean[i] <= 0.0) continue;
        std::poisson_distribution<std::uint64_t> pois(mean[i]);
        d.counts[i] = static_cast<double>(pois(rng));
    }
    return d;
}

namespace {

const std::array<Matrix2c, 4>& paulis() {
    static const std::array<Matrix2c, 4> p = [] {
        std::array<Matrix2c, 4> s;
        const Complex i(0.0, 1.0);
        s[0] << 1, 0, 0, 1;
        s[1] << 0, 1, 1, 0;
        s[2] << 0, -i, i, 0;
        s[3] << 1, 0, 0, -1;
        return s;
    }();
    return p;
}

Matrix4c two_qubit_pauli(int k) { return product_projector(paulis()[k / 4], paulis()[k % 4]); }

struct InversionDesign {
    Eigen::Matrix<double, kNumSettings, 16> a;
    Eigen::ColPivHouseholderQR<Eigen::Matrix<double, kNumSettings, 16>> qr;
};

const InversionDesign& inversion_design() {
    static const InversionDesign d = [] {
        InversionDesign out;
        for (std::size_t s = 0; s < kNumSettings; ++s)
            for (int k = 0; k < 16; ++k)
                out.a(static_cast<Eigen::Index>(s), k) =
                    0.25 * (projectors()[s] * two_qubit_pauli(k)).trace().real();
        out.qr.compute(out.a);
        return out;
    }();
    return d;
}

}  // namespace

Matrix4c linear_inversion(const TomographyDataset& data) {
    data.validate();
    const double total = data.total();
    if (!(total > 0.0)) throw InputError("degenerate tomography data: all counts are zero");
    const auto& design = inversion_design();
    if (design.qr.rank() != 16) throw std::logic_error("tomography design matrix is rank deficient");
    // The 36 settings form 9 complete product bases, so the total is 9 N0.
    const double n0 = total / 9.0;
    Eigen::Matrix<double, kNumSettings, 1> f;
    for (std::size_t s = 0; s < kNumSettings; ++s) f(static_cast<Eigen::Index>(s)) = data.counts[s] / n0;
    const Eigen::Matrix<double, 16, 1> r = design.qr.solve(f);
    Matrix4c m = Matrix4c::Zero();
    for (int k = 0; k < 16; ++k) m += 0.25 * r(k) * two_qubit_pauli(k);
    m = 0.5 * (m + m.adjoint());
    return m / m.trace().real();
}

namespace mle_detail {

namespace {

constexpr std::array<std::pair<int, int>, 6> kOffDiagonal = {
    std::pair{1, 0}, std::pair{2, 0}, std::pair{2, 1}, std::pair{3, 0}, std::pair{3, 1}, std::pair{3, 2}};

Matrix4c t_from_params(const Params& t) {
    Matrix4c m = Matrix4c::Zero();
    for (int i = 0; i < 4; ++i) m(i, i) = t(i);
    for (std::size_t k = 0; k < kOffDiagonal.size(); ++k) {
        const auto [r, c] = kOffDiagonal[k];
        m(r, c) = Complex(t(4 + 2 * static_cast<int>(k)), t(5 + 2 * static_cast<int>(k)));
    }
    return m;
}

struct Evaluation {
    double value = -std::numeric_limits<double>::infinity();
    Params grad = Params::Zero();
};

// Profiled likelihood. Sum_s p_s = 9 for every state, so the Poisson-optimal
// count scale is total/9 independent of rho.
Evaluation evaluate(const TomographyDataset& data, const Params& t, Likelihood lk, bool want_grad) {
    const Matrix4c tm = t_from_params(t);
    const Matrix4c m = tm.adjoint() * tm;
    const double tr = m.trace().real();
    Evaluation ev;
    if (!(tr > 0.0)) return ev;
    const double n_hat = data.total() / 9.0;
    std::array<double, kNumSettings> w{};
    std::array<double, kNumSettings> p{};
    double value = 0.0;
    for (std::size_t s = 0; s < kNumSettings; ++s) {
        p[s] = born(m, s) / tr;
        const double n = data.counts[s];
        if (lk == Likelihood::kPoisson) {
            if (n > 0.0) {
                if (!(p[s] > 0.0)) return ev;
                value += n * std::log(n_hat * p[s]);
                w[s] = n / p[s];
            }
            value -= n_hat * p[s];
        } else {
            const double var = std::max(n, 1.0);
            const double r = n - n_hat * p[s];
            value -= 0.5 * r * r / var;
            w[s] = n_hat * r / var;
        }
    }
    ev.value = value;
    if (!want_grad) return ev;
    // dL = Tr(dM G), G = sum_s w_s (Pi_s - p_s I) / tr
    Matrix4c g = Matrix4c::Zero();
    for (std::size_t s = 0; s < kNumSettings; ++s) {
        if (w[s] == 0.0) continue;
        g += w[s] * (projectors()[s] - p[s] * Matrix4c::Identity());
    }
    g /= tr;
    const Matrix4c gt = g * tm.adjoint();  // dL = 2 Re sum_ij (G T^dag)_ji dT_ij
    for (int i = 0; i < 4; ++i) ev.grad(i) = 2.0 * gt(i, i).real();
    for (std::size_t k = 0; k < kOffDiagonal.size(); ++k) {
        const auto [r, c] = kOffDiagonal[k];
        ev.grad(4 + 2 * static_cast<int>(k)) = 2.0 * gt(c, r).real();
        ev.grad(5 + 2 * static_cast<int>(k)) = -2.0 * gt(c, r).imag();
    }
    return ev;
}

}  // namespace

Matrix4c rho_from_params(const Params& t) {
    const Matrix4c tm = t_from_params(t);
    Matrix4c m = tm.adjoint() * tm;
    m = 0.5 * (m + m.adjoint());
    return m / m.trace().real();
}

Params params_from_rho(const Matrix4c& rho) {
    // rho = T^dag T with T lower triangular. With J the reversal permutation,
    // J rho J = L L^dag (Cholesky), so T = (J L J)^dag.
    Eigen::PermutationMatrix<4> j;
    j.indices() << 3, 2, 1, 0;
    const Matrix4c flipped = j * rho * j.transpose();
    Eigen::LLT<Matrix4c> llt(flipped);
    if (llt.info() != Eigen::Success) throw DomainError("starting point is not positive definite");
    const Matrix4c l = llt.matrixL();
    const Matrix4c t = (j * l * j.transpose()).adjoint();
    Params p;
    for (int i = 0; i < 4; ++i) p(i) = t(i, i).real();
    for (std::size_t k = 0; k < kOffDiagonal.size(); ++k) {
        const auto [r, c] = kOffDiagonal[k];
        p(4 + 2 * static_cast<int>(k)) = t(r, c).real();
        p(5 + 2 * static_cast<int>(k)) = t(r, c).imag();
    }
    return p;
}

double objective(const TomographyDataset& data, const Params& t, Likelihood lk) {
    return evaluate(data, t, lk, false).value;
}

Params gradient(const TomographyDataset& data, const Params& t, Likelihood lk) {
    return evaluate(data, t, lk, true).grad;
}

Matrix4c project_to_physical(const Matrix4c& m, double floor) {
    Eigen::SelfAdjointEigenSolver<Matrix4c> es(0.5 * (m + m.adjoint()));
    Eigen::Vector4d ev = es.eigenvalues().cwiseMax(floor);
    ev /= ev.sum();
    Matrix4c out = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
    return 0.5 * (out + out.adjoint());
}

}  // namespace mle_detail

nlohmann::json ReconstructionResult::to_json() const {
    nlohmann::json j = {{"rho", rho.to_json()},
                        {"log_likelihood", log_likelihood},
                        {"fidelity", fidelity},
                        {"concurrence", concurrence},
                        {"count_scale_fit", count_scale_fit},
                        {"iterations", iterations}};
    if (errors) {
        j["errors"] = {{"fidelity_std", errors->fidelity_std},
                       {"concurrence_std", errors->concurrence_std},
                       {"n_resamples", errors->n_resamples},
                       {"failures", errors->failures},
                       {"warnings", errors->warnings}};
    } else {
        j["errors"] = nullptr;
    }
    return j;
}

ReconstructionResult mle_reconstruct(const TomographyDataset& data, const MleOptions& options) {
    using mle_detail::Params;
    data.validate();
    if (!(data.total() > 0.0)) throw InputError("degenerate tomography data: all counts are zero");

    const Matrix4c start = mle_detail::project_to_physical(linear_inversion(data));
    Params t = mle_detail::params_from_rho(start);
    t /= t.norm();

    // BFGS on -L with a monotone backtracking line search.
    auto eval = [&](const Params& x) { return mle_detail::evaluate(data, x, options.likelihood, true); };
    auto cur = eval(t);
    if (!std::isfinite(cur.value)) throw EstimationError("likelihood undefined at the starting point");

    ReconstructionResult res;
    res.initial_log_likelihood = cur.value;
    res.objective_trace.push_back(cur.value);
    Eigen::Matrix<double, 16, 16> h_inv = Eigen::Matrix<double, 16, 16>::Identity();
    bool fresh_hessian = true;
    int small_steps = 0;
    bool converged = false;
    int it = 0;
    for (; it < options.max_iterations; ++it) {
        const Params g = -cur.grad;  // gradient of the minimized function
        Params dir = -h_inv * g;
        double slope = g.dot(dir);
        if (!(slope < 0.0)) {
            h_inv.setIdentity();
            dir = -g;
            slope = -g.squaredNorm();
            fresh_hessian = true;
        }
        if (slope == 0.0) {
            converged = true;
            break;
        }
        double step = 1.0;
        if (fresh_hessian) step = std::min(1.0, 0.1 * t.norm() / std::max(dir.norm(), 1e-300));
        bool accepted = false;
        mle_detail::Evaluation next;
        Params t_next;
        for (int ls = 0; ls < 60; ++ls) {
            t_next = t + step * dir;
            next = eval(t_next);
            if (std::isfinite(next.value) && -next.value <= -cur.value + 1e-4 * step * slope &&
                next.value >= cur.value) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            if (fresh_hessian) {
                converged = true;  // no ascent direction left at machine precision
                break;
            }
            h_inv.setIdentity();
            fresh_hessian = true;
            continue;
        }
        const Params s = t_next - t;
        const Params y = (-next.grad) - g;
        const double sy = s.dot(y);
        if (sy > 1e-300) {
            if (fresh_hessian) h_inv *= sy / y.squaredNorm();
            const double rho_k = 1.0 / sy;
            const Eigen::Matrix<double, 16, 16> id = Eigen::Matrix<double, 16, 16>::Identity();
            h_inv = (id - rho_k * s * y.transpose()) * h_inv * (id - rho_k * y * s.transpose()) +
                    rho_k * s * s.transpose();
            fresh_hessian = false;
        }
        const double improvement = next.value - cur.value;
        t = t_next;
        cur = next;
        res.objective_trace.push_back(cur.value);
        if (improvement <= options.tolerance * std::max(1.0, std::abs(cur.value))) {
            if (++small_steps >= 3) {
                converged = true;
                ++it;
                break;
            }
        } else {
            small_steps = 0;
        }
    }
    if (!converged) {
        throw ConvergenceError("maximum-likelihood reconstruction did not converge in " +
                                   std::to_string(options.max_iterations) + " iterations",
                               mle_detail::rho_from_params(t), cur.value, it);
    }
    res.rho = TwoQubitDensityMatrix(mle_detail::rho_from_params(t));
    res.log_likelihood = cur.value;
    res.fidelity = fidelity_to_phi_plus(res.rho);
    res.concurrence = concurrence(res.rho);
    res.count_scale_fit = data.total() / 9.0;
    res.iterations = it;
    return res;
}

namespace {

struct ResampleOutcome {
    bool ok = false;
    double fidelity = 0.0;
    double concurrence = 0.0;
};

ResampleOutcome run_resample(const TomographyDataset& data, int r, std::uint64_t seed,
                             const MleOptions& options) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
    TomographyDataset resampled = data;
    for (auto& c : resampled.counts) {
        if (c <= 0.0) continue;
        std::poisson_distribution<std::uint64_t> pois(c);
        c = static_cast<double>(pois(rng));
    }
    try {
        const auto res = mle_reconstruct(resampled, options);
        return {true, res.fidelity, res.concurrence};
    } catch (const Error&) {
        return {};
    }
}

MonteCarloErrors summarize(const std::vector<ResampleOutcome>& outcomes) {
    MonteCarloErrors e;
    e.n_resamples = static_cast<int>(outcomes.size());
    double sf = 0.0, sc = 0.0;
    int ok = 0;
    for (const auto& o : outcomes) {
        if (!o.ok) continue;
        sf += o.fidelity;
        sc += o.concurrence;
        ++ok;
    }
    e.failures = e.n_resamples - ok;
    if (e.failures > 0) {
        e.warnings.push_back(std::to_string(e.failures) + " resample(s) failed and were excluded");
    }
    if (e.failures * 10 > e.n_resamples) {
        throw EstimationError("more than 10% of Monte Carlo resamples failed (" +
                              std::to_string(e.failures) + "/" + std::to_string(e.n_resamples) + ")");
    }
    if (ok < 2) throw EstimationError("fewer than two successful resamples");
    const double mf = sf / ok, mc = sc / ok;
    double vf = 0.0, vc = 0.0;
    for (const auto& o : outcomes) {
        if (!o.ok) continue;
        vf += (o.fidelity - mf) * (o.fidelity - mf);
        vc += (o.concurrence - mc) * (o.concurrence - mc);
    }
    e.fidelity_std = std::sqrt(vf / (ok - 1));
    e.concurrence_std = std::sqrt(vc / (ok - 1));
    return e;
}

void check_resample_count(int n) {
    if (n < 2) throw DomainError("Monte Carlo error estimation needs at least 2 resamples");
}

}  // namespace

MonteCarloErrors monte_carlo_errors_serial(const TomographyDataset& data, int n_resamples,
                                           std::uint64_t seed, const MleOptions& options) {
    check_resample_count(n_resamples);
    std::vector<ResampleOutcome> out(static_cast<std::size_t>(n_resamples));
    for (int r = 0; r < n_resamples; ++r) out[static_cast<std::size_t>(r)] = run_resample(data, r, seed, options);
    return summarize(out);
}

MonteCarloErrors monte_carlo_errors(const TomographyDataset& data, int n_resamples,
                                    std::uint64_t seed, const MleOptions& options) {
    check_resample_count(n_resamples);
    std::vector<ResampleOutcome> out(static_cast<std::size_t>(n_resamples));
#pragma omp parallel for schedule(dynamic, 1)
    for (int r = 0; r < n_resamples; ++r) out[static_cast<std::size_t>(r)] = run_resample(data, r, seed, options);
    return summarize(out);
}

}  // namespace qdent
