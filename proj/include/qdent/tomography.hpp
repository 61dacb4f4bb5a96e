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

#ifndef QDENT_TOMOGRAPHY_HPP
#define QDENT_TOMOGRAPHY_HPP

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "qdent/errors.hpp"
#include "qdent/polarization.hpp"

namespace qdent {

inline constexpr std::size_t kNumSettings = 36;

struct TomographySetting {
    Basis x = Basis::H;
    Basis xx = Basis::H;

    friend bool operator==(const TomographySetting&, const TomographySetting&) = default;
    std::string label() const;
};

// Settings in X-major order over H, V, D, A, R, L; index = 6 * x + xx.
const std::array<TomographySetting, kNumSettings>& all_settings();
std::size_t setting_index(const TomographySetting& s);

Matrix4c projector_for_setting(const TomographySetting& s);

// One coincidence count per setting. Counts are stored as doubles so that
// noiseless expected-count datasets can be represented exactly.
struct TomographyDataset {
    std::array<double, kNumSettings> counts{};
    // Expected counts for a unit-probability projection, if known (0 = unknown).
    double count_scale = 0.0;

    double total() const;
    void validate() const;

    // CSV with header setting_x,setting_xx,counts; exactly 36 rows.
    static TomographyDataset read_csv(std::istream& is);
    void write_csv(std::ostream& os) const;
};

std::array<double, kNumSettings> expected_counts(const TwoQubitDensityMatrix& rho, double n0);
TomographyDataset noiseless_dataset(const TwoQubitDensityMatrix& rho, double n0);
TomographyDataset sample_counts(const TwoQubitDensityMatrix& rho, double n0, std::uint64_t seed);

// Least-squares Pauli-coefficient fit; Hermitian, unit trace, possibly not PSD.
Matrix4c linear_inversion(const TomographyDataset& data);

enum class Likelihood { kPoisson, kGaussian };

struct MleOptions {
    double tolerance = 1e-10;
    int max_iterations = 5000;
    Likelihood likelihood = Likelihood::kPoisson;
};

struct MonteCarloErrors {
    double fidelity_std = 0.0;
    double concurrence_std = 0.0;
    int n_resamples = 0;
    int failures = 0;
    std::vector<std::string> warnings;
};

struct ReconstructionResult {
    TwoQubitDensityMatrix rho = TwoQubitDensityMatrix::maximally_mixed();
    double log_likelihood = 0.0;
    double initial_log_likelihood = 0.0;
    double fidelity = 0.0;
    double concurrence = 0.0;
    double count_scale_fit = 0.0;
    int iterations = 0;
    // Objective after every accepted iteration, starting with the initial point.
    std::vector<double> objective_trace;
    std::optional<MonteCarloErrors> errors;

    nlohmann::json to_json() const;
};

class ConvergenceError : public Error {
   public:
    ConvergenceError(const std::string& what, Matrix4c best_iterate, double best_objective,
                     int iterations)
        : Error(what), best(std::move(best_iterate)), objective(best_objective), iterations(iterations) {}
    Matrix4c best;
    double objective;
    int iterations;
};

ReconstructionResult mle_reconstruct(const TomographyDataset& data, const MleOptions& options = {});

// Monte Carlo error bars: every count is redrawn Poisson with its observed
// value as mean and the reconstruction repeated.
MonteCarloErrors monte_carlo_errors(const TomographyDataset& data, int n_resamples,
                                    std::uint64_t seed, const MleOptions& options = {});
MonteCarloErrors monte_carlo_errors_serial(const TomographyDataset& data, int n_resamples,
                                           std::uint64_t seed, const MleOptions& options = {});

namespace mle_detail {

// 16 real parameters of a lower-triangular T: 4 real diagonal entries, then
// (re, im) of T(1,0), T(2,0), T(2,1), T(3,0), T(3,1), T(3,2).
using Params = Eigen::Matrix<double, 16, 1>;

Matrix4c rho_from_params(const Params& t);
Params params_from_rho(const Matrix4c& rho);
// Profiled log-likelihood (count scale fitted in closed form) and its gradient.
double objective(const TomographyDataset& data, const Params& t, Likelihood lk);
Params gradient(const TomographyDataset& data, const Params& t, Likelihood lk);
// PSD projection used as the starting point.
Matrix4c project_to_physical(const Matrix4c& m, double floor = 1e-6);

}  // namespace mle_detail

}  // namespace qdent

#endif  // QDENT_TOMOGRAPHY_HPP
