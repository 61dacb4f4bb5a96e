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

#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <omp.h>

#include <CLI11.hpp>

#include "qdent/app.hpp"
#include "qdent/errors.hpp"

namespace {

using namespace qdent;

app::RunConfig effective_config(const std::string& config_flag, std::optional<std::uint64_t> seed) {
    std::optional<std::filesystem::path> path;
    if (!config_flag.empty()) {
        path = config_flag;
    } else {
        path = app::default_config_path();
    }
    app::RunConfig cfg;
    if (path) {
        std::ifstream is(*path);
        if (!is) throw ConfigError("cannot open config file '" + path->string() + "'");
        cfg = app::parse_config(is, !seed.has_value());
    }
    if (seed) {
        cfg.seed = *seed;
        cfg.emitter.params.seed = *seed;
    }
    cfg.require_seed();
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App cli{"Entangled photon-pair source simulation, correlation analysis and tomography"};
    cli.require_subcommand(1);
    cli.fallthrough();

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir = ".";
    int threads = 0;
    std::string format = "json";
    cli.add_option("--config", config_path, "INI configuration file (default: $QDENT_CONFIG)");
    cli.add_option("--seed", seed, "RNG seed; overrides the config file");
    cli.add_option("--out", out_dir, "Output directory");
    cli.add_option("--threads", threads, "Worker thread cap")->check(CLI::NonNegativeNumber);
    cli.add_option("--format", format, "Summary format")->check(CLI::IsMember({"csv", "json"}));

    auto* simulate = cli.add_subcommand("simulate", "Simulate a detection-event stream");
    auto* analyze = cli.add_subcommand("analyze", "Correlate a stream and estimate g2, blinking or eta_prep");
    std::string stream_file;
    analyze->add_option("stream", stream_file, "Event stream file (default: [analysis] input)");
    auto* tomo = cli.add_subcommand("tomo", "Maximum-likelihood two-photon state tomography");
    auto* sweep = cli.add_subcommand("sweep", "Pulse-area sweep: model curves and optional empirical loop");
    auto* predict = cli.add_subcommand("predict", "Model predictions for the configured emitter");
    auto* show = cli.add_subcommand("config", "Print the effective configuration as INI");

    try {
        cli.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = cli.exit(e);
        return rc == 0 ? 0 : static_cast<int>(ExitCode::kConfig);
    }

    try {
        if (threads > 0) omp_set_num_threads(threads);
        const app::RunConfig cfg = effective_config(config_path, seed);
        app::CommandContext ctx;
        ctx.out_dir = out_dir;
        ctx.format = format == "csv" ? app::OutputFormat::kCsv : app::OutputFormat::kJson;
        ctx.out = &std::cout;
        std::filesystem::create_directories(ctx.out_dir);
        if (*simulate) {
            app::cmd_simulate(cfg, ctx);
        } else if (*analyze) {
            app::cmd_analyze(cfg, stream_file, ctx);
        } else if (*tomo) {
            app::cmd_tomo(cfg, ctx);
        } else if (*sweep) {
            app::cmd_sweep(cfg, ctx);
        } else if (*predict) {
            app::cmd_predict(cfg, ctx);
        } else if (*show) {
            std::cout << app::to_ini(cfg);
        }
    } catch (const Error& e) {
        std::cerr << "qdent: " << e.what() << '\n';
        return static_cast<int>(e.exit_code());
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "qdent: " << e.what() << '\n';
        return static_cast<int>(ExitCode::kInputData);
    } catch (const std::exception& e) {
        std::cerr << "qdent: " << e.what() << '\n';
        return static_cast<int>(ExitCode::kNumerical);
    }
    return 0;
}
