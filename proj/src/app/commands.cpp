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
#include <fstream>
#include <ostream>
#include <sstream>

#include "qdent/app.hpp"
#include "qdent/correlation.hpp"
#include "qdent/errors.hpp"
#include "qdent/multiphoton_model.hpp"
#include "qdent/text_format.hpp"
#include "qdent/tomography.hpp"

namespace qdent::app {

namespace {

using nlohmann::json;

std::ofstream open_output(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary);
    if (!os) throw InputError("cannot write '" + path.string() + "'");
    return os;
}

void finish(std::ofstream& os, const std::filesystem::path& path) {
    os.flush();
    if (!os) throw InputError("write to '" + path.string() + "' failed");
}

void write_json(const std::filesystem::path& path, const json& j) {
    auto os = open_output(path);
    os << round_numbers(j).dump(2) << '\n';
    finish(os, path);
}

void emit(const CommandContext& ctx, const json& summary) {
    if (ctx.out != nullptr) print_summary(*ctx.out, summary, ctx.format);
}

void flatten(const json& j, const std::string& prefix, std::ostream& os) {
    if (j.is_object()) {
        for (const auto& [k, v] : j.items()) flatten(v, prefix.empty() ? k : prefix + "." + k, os);
    } else if (j.is_array()) {
        for (std::size_t i = 0; i < j.size(); ++i) flatten(j[i], prefix + "." + std::to_string(i), os);
    } else if (j.is_string()) {
        os << prefix << ',' << j.get<std::string>() << '\n';
    } else {
        os << prefix << ',' << j.dump() << '\n';
    }
}

struct PeakGeometry {
    std::int64_t max_delay_ps = 0;
    FarRange far;
    double tau_c = 0.0;
};

PeakGeometry hbt_geometry(const RunConfig& cfg, std::int64_t rep_ps) {
    PeakGeometry g;
    const auto& a = cfg.analysis;
    g.tau_c = a.tau_c_hint > 0.0 ? a.tau_c_hint : cfg.emitter.params.tau_c();
    g.far = default_far_range(g.tau_c, rep_ps);
    if (a.far_min > 0) g.far.min_index = a.far_min;
    if (a.far_max > 0) g.far.max_index = a.far_max;
    g.far.max_index = std::max(g.far.max_index, g.far.min_index);
    g.max_delay_ps = a.max_delay_ps > 0 ? a.max_delay_ps : g.far.max_index * rep_ps + a.peak_window_ps;
    return g;
}

json peaks_near_zero(const PeakTable& t, int reach) {
    json j = json::object();
    for (int n = -reach; n <= reach; ++n) {
        if (t.has(n)) j[std::to_string(n)] = t.at(n);
    }
    return j;
}

struct G2Analysis {
    Estimate g2;
    Estimate g2_tilde;
    BlinkingEstimate blinking;
    PeakTable peaks;
    CorrelationHistogram hist;
};

G2Analysis analyze_g2(const RunConfig& cfg, const std::vector<std::int64_t>& a,
                      const std::vector<std::int64_t>& b, std::uint64_t n_pulses, std::int64_t rep_ps) {
    const PeakGeometry geo = hbt_geometry(cfg, rep_ps);
    G2Analysis r;
    r.hist = build_histogram(a, b, cfg.analysis.bin_width_ps, geo.max_delay_ps);
    r.hist.n_pulses = n_pulses;
    r.peaks = integrate_peaks(r.hist, rep_ps, cfg.analysis.peak_window_ps);
    r.g2 = g2_poisson(r.peaks, geo.far, geo.tau_c);
    r.g2_tilde = g2_sidepeak(r.peaks);
    r.blinking = estimate_eta_blink(r.peaks, cfg.analysis.blink_max_index);
    return r;
}

struct PrepAnalysis {
    Estimate eta_prep;
    PeakTable peaks;
    CorrelationHistogram hist;
};

PrepAnalysis analyze_prep(const RunConfig& cfg, const std::vector<std::int64_t>& xx,
                          const std::vector<std::int64_t>& x, std::uint64_t n_pulses,
                          std::int64_t rep_ps) {
    const std::int64_t max_delay =
        cfg.analysis.max_delay_ps > 0 ? cfg.analysis.max_delay_ps : 10 * rep_ps + cfg.analysis.peak_window_ps;
    PrepAnalysis r;
    r.hist = build_histogram(xx, x, cfg.analysis.bin_width_ps, max_delay);
    r.hist.n_pulses = n_pulses;
    r.peaks = integrate_peaks(r.hist, rep_ps, cfg.analysis.peak_window_ps);
    r.eta_prep = estimate_eta_prep(r.peaks);
    return r;
}

MleOptions mle_options(const TomographySection& t) {
    MleOptions o;
    o.tolerance = t.tolerance;
    o.max_iterations = t.max_iterations;
    o.likelihood = t.likelihood == "gaussian" ? Likelihood::kGaussian : Likelihood::kPoisson;
    return o;
}

double hbt_zero_peak_rate(const EmitterParams& p) {
    const double ea = p.det_eff[static_cast<std::size_t>(Channel::kXA)];
    const double eb = p.det_eff[static_cast<std::size_t>(Channel::kXB)];
    return p.eta_blink() * p.eta_prep() * p.p_m * ea * eb / 2.0;
}

}  // namespace

json round_numbers(const json& j) {
    if (j.is_object()) {
        json out = json::object();
        for (const auto& [k, v] : j.items()) out[k] = round_numbers(v);
        return out;
    }
    if (j.is_array()) {
        json out = json::array();
        for (const auto& v : j) out.push_back(round_numbers(v));
        return out;
    }
    if (j.is_number_float()) {
        const double v = j.get<double>();
        if (!std::isfinite(v)) return nullptr;
        return std::stod(fmt9(v));
    }
    return j;
}

void print_summary(std::ostream& os, const json& summary, OutputFormat format) {
    const json r = round_numbers(summary);
    if (format == OutputFormat::kJson) {
        os << r.dump(2) << '\n';
    } else {
        os << "key,value\n";
        flatten(r, "", os);
    }
}

std::uint64_t required_pulses_for_zero_peak(const EmitterParams& p, double zero_peak_counts) {
    const double rate = hbt_zero_peak_rate(p);
    if (!(rate > 0.0)) {
        throw ConfigError("the zero-delay peak is empty for these parameters (p_m, efficiency or eta_prep is 0)");
    }
    const double n = std::ceil(zero_peak_counts / rate);
    if (n > 9.0e18) throw RangeError("required pulse count overflows");
    return static_cast<std::uint64_t>(n);
}

json cmd_simulate(const RunConfig& cfg, const CommandContext& ctx) {
    EmitterParams p = cfg.emitter.params;
    p.seed = cfg.require_seed();
    const auto& m = cfg.measurement;
    const auto result = simulate_pulse_train(p, m.config, m.n_pulses);

    const auto events_path = ctx.out_dir / m.events_file;
    if (events_path.has_parent_path()) std::filesystem::create_directories(events_path.parent_path());
    write_event_file(events_path, result.stream);
    if (!m.events_csv.empty()) {
        const auto csv_path = ctx.out_dir / m.events_csv;
        auto os = open_output(csv_path);
        write_event_csv(os, result.stream);
        finish(os, csv_path);
    }

    json clicks = json::object();
    for (Channel c : m.config.channels()) clicks[channel_name(c)] = result.tally.clicks[static_cast<std::size_t>(c)];
    json s = {{"command", "simulate"},
              {"seed", p.seed},
              {"mode", mode_name(m.config.mode)},
              {"pulses", result.tally.pulses},
              {"on_pulses", result.tally.on_pulses},
              {"emissions", result.tally.emissions},
              {"reexcitations", result.tally.reexcitations},
              {"clicks", clicks},
              {"events", result.stream.events.size()},
              {"events_file", events_path.generic_string()},
              {"params_digest", result.stream.meta.params_digest}};
    if (m.config.mode == MeasurementMode::kPolarized) {
        s["setting_x"] = std::string(1, basis_letter(m.config.setting_x));
        s["setting_xx"] = std::string(1, basis_letter(m.config.setting_xx));
    }
    emit(ctx, s);
    return s;
}

json cmd_analyze(const RunConfig& cfg, const std::filesystem::path& stream_file,
                 const CommandContext& ctx) {
    const std::filesystem::path input = stream_file.empty() ? std::filesystem::path(cfg.analysis.input) : stream_file;
    if (input.empty()) throw ConfigError("analyze needs an event stream ([analysis] input or a path argument)");
    const DetectionEventStream stream = read_event_file(input);
    const MeasurementMode mode = stream.meta.config.mode;
    const std::string& kind = cfg.analysis.kind;
    const bool hbt = mode == MeasurementMode::kHbtX || mode == MeasurementMode::kHbtXX;
    if (mode == MeasurementMode::kPolarized) {
        throw ConfigError("[analysis] kind: polarized streams carry no g2 or eta_prep information");
    }
    if ((kind == "g2" && !hbt) || (kind == "eta_prep" && mode != MeasurementMode::kCrossCorr)) {
        throw ConfigError("[analysis] kind: '" + kind + "' does not match stream mode '" +
                          mode_name(mode) + "'");
    }
    const std::int64_t rep_ps = stream.meta.rep_period_ps;
    json s = {{"command", "analyze"},
              {"input", input.generic_string()},
              {"mode", mode_name(mode)},
              {"n_pulses", stream.meta.n_pulses}};
    const CorrelationHistogram* hist = nullptr;
    G2Analysis g2;
    PrepAnalysis prep;
    if (hbt) {
        const bool x = mode == MeasurementMode::kHbtX;
        g2 = analyze_g2(cfg, stream.timestamps(x ? Channel::kXA : Channel::kXXA),
                        stream.timestamps(x ? Channel::kXB : Channel::kXXB), stream.meta.n_pulses, rep_ps);
        hist = &g2.hist;
        s["g2_poisson"] = g2.g2.to_json();
        s["g2_sidepeak"] = g2.g2_tilde.to_json();
        s["g2_ratio"] = g2.g2.estimate > 0.0 ? g2.g2_tilde.estimate / g2.g2.estimate : 0.0;
        s["blinking"] = g2.blinking.to_json();
        s["peaks"] = peaks_near_zero(g2.peaks, 3);
    } else {
        prep = analyze_prep(cfg, stream.timestamps(Channel::kXXA), stream.timestamps(Channel::kXA),
                            stream.meta.n_pulses, rep_ps);
        hist = &prep.hist;
        s["eta_prep"] = prep.eta_prep.to_json();
        s["peaks"] = peaks_near_zero(prep.peaks, 3);
    }
    s["clicks_a"] = hist->clicks_a;
    s["clicks_b"] = hist->clicks_b;
    s["bin_width_ps"] = hist->bin_width_ps;
    s["max_delay_ps"] = hist->max_delay_ps;

    write_json(ctx.out_dir / cfg.analysis.estimates_file, s);
    if (cfg.analysis.write_histogram) {
        const auto path = ctx.out_dir / cfg.analysis.histogram_file;
        auto os = open_output(path);
        write_histogram_csv(os, *hist);
        finish(os, path);
    }
    emit(ctx, s);
    return s;
}

json cmd_tomo(const RunConfig& cfg, const CommandContext& ctx) {
    const auto& t = cfg.tomography;
    const std::uint64_t seed = cfg.require_seed();
    TomographyDataset data;
    if (t.source == "file") {
        std::ifstream is(t.dataset);
        if (!is) throw InputError("cannot open tomography dataset '" + t.dataset + "'");
        data = TomographyDataset::read_csv(is);
    } else {
        const auto rho = resolve_state(t.state, t.coherence, cfg.emitter.state_file);
        data = t.noiseless ? noiseless_dataset(rho, t.n0) : sample_counts(rho, t.n0, derive_seed(seed, 0));
        const auto path = ctx.out_dir / t.dataset_out;
        auto os = open_output(path);
        data.write_csv(os);
        finish(os, path);
    }
    const MleOptions opts = mle_options(t);
    ReconstructionResult r = mle_reconstruct(data, opts);
    if (t.resamples >= 2) r.errors = monte_carlo_errors(data, t.resamples, derive_seed(seed, 1), opts);
    write_json(ctx.out_dir / t.result_file, r.to_json());

    json s = {{"command", "tomo"},
              {"source", t.source},
              {"total_counts", data.total()},
              {"fidelity", r.fidelity},
              {"concurrence", r.concurrence},
              {"log_likelihood", r.log_likelihood},
              {"iterations", r.iterations},
              {"result_file", (ctx.out_dir / t.result_file).generic_string()}};
    if (r.errors) {
        s["fidelity_std"] = r.errors->fidelity_std;
        s["concurrence_std"] = r.errors->concurrence_std;
        s["failed_resamples"] = r.errors->failures;
    }
    emit(ctx, s);
    return s;
}

json cmd_sweep(const RunConfig& cfg, const CommandContext& ctx) {
    const auto& w = cfg.sweep;
    const EmitterParams& base = cfg.emitter.params;
    SweepInputs in;
    in.thetas = w.thetas();
    in.p_m = base.p_m;
    in.eta_blink = base.eta_blink();
    in.rabi = base.rabi;
    in.rho0 = base.rho0;
    in.p_m_override = w.p_m_override;
    in.measured_g2 = w.measured_g2;
    const auto rows = predict_entanglement_sweep(in);
    {
        const auto path = ctx.out_dir / w.model_file;
        auto os = open_output(path);
        write_sweep_csv(os, rows);
        finish(os, path);
    }
    double cmin = rows.front().concurrence, cmax = cmin, gmin = rows.front().g2, gmax = gmin;
    for (const auto& r : rows) {
        cmin = std::min(cmin, r.concurrence);
        cmax = std::max(cmax, r.concurrence);
        gmin = std::min(gmin, r.g2);
        gmax = std::max(gmax, r.g2);
    }
    json s = {{"command", "sweep"},
              {"mode", w.mode},
              {"points", rows.size()},
              {"concurrence_span", cmax - cmin},
              {"g2_ratio_max_min", gmin > 0.0 ? gmax / gmin : 0.0},
              {"model_file", (ctx.out_dir / w.model_file).generic_string()}};

    if (w.mode == "empirical") {
        const std::uint64_t seed = cfg.require_seed();
        // Check every point before spending time on any of them.
        std::vector<std::uint64_t> pulses(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            EmitterParams p = base;
            p.theta = rows[i].theta;
            if (!w.p_m_override.empty()) p.p_m = w.p_m_override[i];
            const std::uint64_t need_min = required_pulses_for_zero_peak(p, 100.0);
            if (w.empirical_pulses > 0) {
                if (w.empirical_pulses < need_min) {
                    throw ConfigError("[sweep] empirical_pulses: " + std::to_string(w.empirical_pulses) +
                                      " pulses give fewer than 100 expected zero-peak counts at theta = " +
                                      fmt9(p.theta) + "; at least " + std::to_string(need_min) +
                                      " pulses are required");
                }
                pulses[i] = w.empirical_pulses;
            } else {
                pulses[i] = required_pulses_for_zero_peak(p, 400.0);
                if (pulses[i] > w.max_pulses) {
                    if (need_min > w.max_pulses) {
                        throw ConfigError("[sweep] max_pulses: theta = " + fmt9(p.theta) + " needs at least " +
                                          std::to_string(need_min) + " pulses for 100 zero-peak counts, above the " +
                                          std::to_string(w.max_pulses) + " cap");
                    }
                    pulses[i] = w.max_pulses;
                }
            }
        }
        const auto path = ctx.out_dir / w.estimates_file;
        auto os = open_output(path);
        os << "theta_rad,n_pulses,g2,g2_err,g2_tilde,g2_tilde_err,eta_prep,eta_prep_err,one_minus_k,"
              "concurrence,concurrence_err,fidelity,fidelity_err\n";
        const MleOptions opts = mle_options(cfg.tomography);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            EmitterParams p = base;
            p.theta = rows[i].theta;
            if (!w.p_m_override.empty()) p.p_m = w.p_m_override[i];
            p.seed = derive_seed(seed, 3 * i);
            const auto hbt = simulate_pulse_train(p, MeasurementConfig::hbt_x(), pulses[i]);
            const auto g = analyze_g2(cfg, hbt.stream.timestamps(Channel::kXA), hbt.stream.timestamps(Channel::kXB),
                                      pulses[i], hbt.stream.meta.rep_period_ps);
            p.seed = derive_seed(seed, 3 * i + 1);
            const auto cross = simulate_pulse_train(p, MeasurementConfig::cross_corr(), pulses[i]);
            const auto pr = analyze_prep(cfg, cross.stream.timestamps(Channel::kXXA),
                                         cross.stream.timestamps(Channel::kXA), pulses[i],
                                         cross.stream.meta.rep_period_ps);
            const double eta_p = std::clamp(pr.eta_prep.estimate, 1e-9, 1.0);
            const MixingFraction k = k_approx_from_g2(g.g2_tilde.estimate, g.g2_tilde.estimate,
                                                      {g.blinking.eta_blink, eta_p}, G2Normalization::kSidePeak);
            const auto state = werner_mix(base.rho0, k);
            const auto counts = sample_counts(state, w.tomo_n0, derive_seed(seed, 3 * i + 2));
            const auto rec = mle_reconstruct(counts, opts);
            double c_err = 0.0, f_err = 0.0;
            if (w.tomo_resamples >= 2) {
                const auto e = monte_carlo_errors(counts, w.tomo_resamples, derive_seed(seed, 3 * i + 2), opts);
                c_err = e.concurrence_std;
                f_err = e.fidelity_std;
            }
            os << fmt9(p.theta) << ',' << pulses[i] << ',' << fmt9(g.g2.estimate) << ','
               << fmt9(g.g2.std_error) << ',' << fmt9(g.g2_tilde.estimate) << ','
               << fmt9(g.g2_tilde.std_error) << ',' << fmt9(pr.eta_prep.estimate) << ','
               << fmt9(pr.eta_prep.std_error) << ',' << fmt9(k.one_minus()) << ','
               << fmt9(rec.concurrence) << ',' << fmt9(c_err) << ',' << fmt9(rec.fidelity) << ','
               << fmt9(f_err) << '\n';
        }
        finish(os, path);
        s["estimates_file"] = path.generic_string();
    }
    emit(ctx, s);
    return s;
}

json cmd_predict(const RunConfig& cfg, const CommandContext& ctx) {
    const EmitterParams& p = cfg.emitter.params;
    const EfficiencyFactors eff{p.eta_blink(), p.eta_prep()};
    eff.validate();
    const MixingFraction k = k_from_pm(p.p_m);
    const auto state = werner_mix(p.rho0, k);
    const auto gen = p2_from_pm(p.p_m, eff.product());
    json s = {{"command", "predict"},
              {"theta_rad", p.theta},
              {"eta_prep", eff.eta_prep},
              {"eta_blink", eff.eta_blink},
              {"tau_c_s", p.tau_c()},
              {"p_m", p.p_m},
              {"p1", gen.p1},
              {"p2", gen.p2},
              {"g2", g2_from_pm(p.p_m, eff)},
              {"g2_tilde", g2_sidepeak_from_pm(p.p_m, eff.eta_prep)},
              {"one_minus_k", k.one_minus()},
              {"concurrence", concurrence(state)},
              {"fidelity", fidelity_to_phi_plus(state)},
              {"hbt_zero_peak_per_pulse", hbt_zero_peak_rate(p)}};
    write_json(ctx.out_dir / "prediction.json", s);
    emit(ctx, s);
    return s;
}

}  // namespace qdent::app
