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

#ifndef QDENT_APP_HPP
#define QDENT_APP_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qdent/emitter.hpp"

namespace qdent::app {

struct EmitterSection {
    EmitterParams params;
    // phi_plus, dephased_bell or file
    std::string state = "phi_plus";
    double coherence = 1.0;
    std::string state_file;
};

struct MeasurementSection {
    MeasurementConfig config;
    std::uint64_t n_pulses = 1'000'000;
    std::string events_file = "events.qdevt";
    std::string events_csv;
};

struct AnalysisSection {
    std::string input;
    // auto, g2 or eta_prep
    std::string kind = "auto";
    std::int64_t bin_width_ps = 100;
    std::int64_t max_delay_ps = 0;
    std::int64_t peak_window_ps = 3000;
    int far_min = 0;
    int far_max = 0;
    double tau_c_hint = 0.0;
    int blink_max_index = 0;
    bool write_histogram = true;
    std::string histogram_file = "histogram.csv";
    std::string estimates_file = "estimates.json";
};

struct TomographySection {
    // simulate or file
    std::string source = "simulate";
    std::string dataset;
    std::string state = "dephased_bell";
    double coherence = 0.89;
    double n0 = 1500.0;
    bool noiseless = false;
    int resamples = 100;
    std::string likelihood = "poisson";
    double tolerance = 1e-10;
    int max_iterations = 5000;
    std::string result_file = "tomography.json";
    std::string dataset_out = "tomography_counts.csv";
};

struct SweepSection {
    // model or empirical
    std::string mode = "model";
    double theta_start = 0.5;
    double theta_stop = 5.0;
    int points = 19;
    // pi (grid in multiples of pi) or rad
    std::string theta_unit = "pi";
    std::vector<double> p_m_override;
    std::vector<double> measured_g2;
    std::string model_file = "sweep_model.csv";
    std::string estimates_file = "sweep_estimates.csv";
    std::uint64_t empirical_pulses = 0;
    std::uint64_t max_pulses = 2'000'000'000;
    double tomo_n0 = 1500.0;
    int tomo_resamples = 20;

    std::vector<double> thetas() const;
};

struct RunConfig {
    std::optional<std::uint64_t> seed;
    EmitterSection emitter;
    MeasurementSection measurement;
    AnalysisSection analysis;
    TomographySection tomography;
    SweepSection sweep;

    // Seed pushed into the emitter parameters; throws ConfigError when unset.
    std::uint64_t require_seed() const;
};

// Throws ConfigError naming the offending section and key.
RunConfig parse_config(std::istream& is, bool require_seed = true);
RunConfig load_config(const std::filesystem::path& path);
std::string to_ini(const RunConfig& cfg);

// Resolves the config file from an explicit path or the QDENT_CONFIG variable.
std::optional<std::filesystem::path> default_config_path();

TwoQubitDensityMatrix resolve_state(const std::string& kind, double coherence,
                                    const std::string& file);

enum class OutputFormat { kJson, kCsv };

struct CommandContext {
    std::filesystem::path out_dir = ".";
    OutputFormat format = OutputFormat::kJson;
    std::ostream* out = nullptr;
};

// Every command prints a summary to ctx.out and writes its files under ctx.out_dir.
nlohmann::json cmd_simulate(const RunConfig& cfg, const CommandContext& ctx);
nlohmann::json cmd_analyze(const RunConfig& cfg, const std::filesystem::path& stream_file,
                           const CommandContext& ctx);
nlohmann::json cmd_tomo(const RunConfig& cfg, const CommandContext& ctx);
nlohmann::json cmd_sweep(const RunConfig& cfg, const CommandContext& ctx);
nlohmann::json cmd_predict(const RunConfig& cfg, const CommandContext& ctx);

// Numbers rounded to 9 significant digits so printed output is stable.
nlohmann::json round_numbers(const nlohmann::json& j);
void print_summary(std::ostream& os, const nlohmann::json& summary, OutputFormat format);

std::uint64_t required_pulses_for_zero_peak(const EmitterParams& p, double zero_peak_counts);

}  // namespace qdent::app

#endif  // QDENT_APP_HPP
