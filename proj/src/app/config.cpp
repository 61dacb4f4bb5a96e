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

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "qdent/app.hpp"
#include "qdent/errors.hpp"
#include "qdent/text_format.hpp"

namespace qdent::app {

namespace pt = boost::property_tree;

namespace {

constexpr const char* kChannelKeys[kNumChannels] = {"x_a",    "x_b",       "xx_a",    "xx_b",
                                                    "x_pass", "x_reflect", "xx_pass", "xx_reflect"};

std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t");
    const auto e = s.find_last_not_of(" \t");
    return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

class Section {
   public:
    Section(const pt::ptree* tree, std::string name) : tree_(tree), name_(std::move(name)) {}

    bool has(const std::string& key) const {
        return tree_ != nullptr && tree_->find(key) != tree_->not_found();
    }

    template <class T>
    void read(const std::string& key, T& dst) {
        known_.insert(key);
        if (!has(key)) return;
        dst = convert<T>(key, trim(tree_->get<std::string>(key)));
    }

    void reject_unknown() const {
        if (tree_ == nullptr) return;
        for (const auto& [key, child] : *tree_) {
            if (!known_.contains(key)) throw ConfigError(where(key) + "unknown key");
        }
    }

    std::string where(const std::string& key) const { return "[" + name_ + "] " + key + ": "; }

   private:
    template <class T>
    T convert(const std::string& key, const std::string& v) const {
        if constexpr (std::is_same_v<T, std::string>) {
            return v;
        } else if constexpr (std::is_same_v<T, bool>) {
            if (v == "true" || v == "1" || v == "yes") return true;
            if (v == "false" || v == "0" || v == "no") return false;
            throw ConfigError(where(key) + "expected true or false, got '" + v + "'");
        } else if constexpr (std::is_same_v<T, std::vector<double>>) {
            std::vector<double> out;
            std::istringstream is(v);
            std::string item;
            while (std::getline(is, item, ',')) {
                item = trim(item);
                if (!item.empty()) out.push_back(convert<double>(key, item));
            }
            return out;
        } else if constexpr (std::is_same_v<T, Basis>) {
            if (v.size() != 1) throw ConfigError(where(key) + "expected one of H,V,D,A,R,L");
            try {
                return basis_from_letter(v[0]);
            } catch (const Error&) {
                throw ConfigError(where(key) + "expected one of H,V,D,A,R,L, got '" + v + "'");
            }
        } else if constexpr (std::is_same_v<T, MeasurementMode>) {
            try {
                return mode_from_name(v);
            } catch (const Error& e) {
                throw ConfigError(where(key) + e.what());
            }
        } else if constexpr (std::is_same_v<T, RabiForm>) {
            if (v == "damped_cosine") return RabiForm::kDampedCosine;
            if (v == "undamped") return RabiForm::kUndamped;
            throw ConfigError(where(key) + "expected damped_cosine or undamped, got '" + v + "'");
        } else {
            T out{};
            const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
            if (ec != std::errc{} || ptr != v.data() + v.size()) {
                throw ConfigError(where(key) + "cannot parse '" + v + "' as a number");
            }
            if constexpr (std::is_floating_point_v<T>) {
                if (!std::isfinite(out)) throw ConfigError(where(key) + "value must be finite");
            }
            return out;
        }
    }

    const pt::ptree* tree_;
    std::string name_;
    std::set<std::string> known_;
};

void require_file(const std::string& section_key, const std::string& path) {
    if (!path.empty() && !std::filesystem::exists(path)) {
        throw ConfigError(section_key + "referenced file '" + path + "' does not exist");
    }
}

void read_emitter(Section& s, EmitterSection& e) {
    EmitterParams& p = e.params;
    s.read("p_m", p.p_m);
    s.read("theta", p.theta);
    s.read("rabi_amplitude", p.rabi.amplitude);
    s.read("rabi_damping", p.rabi.damping);
    s.read("rabi_form", p.rabi.form);
    s.read("tau_on", p.blink_tau_on);
    s.read("tau_off", p.blink_tau_off);
    double eta = 0.0, tau_c = 0.0;
    s.read("eta_blink", eta);
    s.read("tau_c", tau_c);
    if (s.has("eta_blink") != s.has("tau_c")) {
        throw ConfigError(s.where("eta_blink") + "eta_blink and tau_c must be given together");
    }
    if (s.has("eta_blink")) {
        if (s.has("tau_on") || s.has("tau_off")) {
            throw ConfigError(s.where("eta_blink") + "give either eta_blink/tau_c or tau_on/tau_off");
        }
        if (!(eta > 0.0 && eta < 1.0) || !(tau_c > 0.0)) {
            throw ConfigError(s.where("eta_blink") + "need 0 < eta_blink < 1 and tau_c > 0");
        }
        p.set_blinking(eta, tau_c);
    }
    s.read("rep_period", p.rep_period);
    s.read("tau_xx", p.tau_xx);
    s.read("tau_x", p.tau_x);
    double all = -1.0;
    s.read("efficiency", all);
    if (s.has("efficiency")) p.set_all_efficiencies(all);
    double dark = -1.0;
    s.read("dark_rate", dark);
    if (s.has("dark_rate")) p.dark_rate.fill(dark);
    for (std::size_t c = 0; c < kNumChannels; ++c) {
        s.read(std::string("efficiency_") + kChannelKeys[c], p.det_eff[c]);
        s.read(std::string("dark_rate_") + kChannelKeys[c], p.dark_rate[c]);
    }
    s.read("reexc_delay", p.reexc_delay);
    s.read("jitter_sigma", p.jitter_sigma);
    s.read("block_pulses", p.block_pulses);
    s.read("state", e.state);
    s.read("coherence", e.coherence);
    s.read("state_file", e.state_file);
    if (e.state == "file") require_file(s.where("state_file"), e.state_file);
    try {
        p.rho0 = resolve_state(e.state, e.coherence, e.state_file);
        p.validate();
    } catch (const ConfigError& err) {
        throw ConfigError("[emitter] " + std::string(err.what()));
    } catch (const Error& err) {
        throw ConfigError("[emitter] state: " + std::string(err.what()));
    }
}

void read_measurement(Section& s, MeasurementSection& m) {
    s.read("mode", m.config.mode);
    s.read("setting_x", m.config.setting_x);
    s.read("setting_xx", m.config.setting_xx);
    s.read("n_pulses", m.n_pulses);
    s.read("events_file", m.events_file);
    s.read("events_csv", m.events_csv);
    if (m.n_pulses == 0) throw ConfigError(s.where("n_pulses") + "must be positive");
}

void read_analysis(Section& s, AnalysisSection& a) {
    s.read("input", a.input);
    s.read("kind", a.kind);
    s.read("bin_width_ps", a.bin_width_ps);
    s.read("max_delay_ps", a.max_delay_ps);
    s.read("peak_window_ps", a.peak_window_ps);
    s.read("far_min", a.far_min);
    s.read("far_max", a.far_max);
    s.read("tau_c_hint", a.tau_c_hint);
    s.read("blink_max_index", a.blink_max_index);
    s.read("write_histogram", a.write_histogram);
    s.read("histogram_file", a.histogram_file);
    s.read("estimates_file", a.estimates_file);
    if (a.kind != "auto" && a.kind != "g2" && a.kind != "eta_prep") {
        throw ConfigError(s.where("kind") + "expected auto, g2 or eta_prep");
    }
    if (a.bin_width_ps <= 0) throw ConfigError(s.where("bin_width_ps") + "must be positive");
    if (a.max_delay_ps < 0) throw ConfigError(s.where("max_delay_ps") + "must be non-negative");
    if (a.peak_window_ps <= 0) throw ConfigError(s.where("peak_window_ps") + "must be positive");
    if (a.far_min < 0 || a.far_max < 0 || (a.far_max > 0 && a.far_max < a.far_min)) {
        throw ConfigError(s.where("far_max") + "far range must satisfy 0 <= far_min <= far_max");
    }
    require_file(s.where("input"), a.input);
}

void read_tomography(Section& s, TomographySection& t) {
    s.read("source", t.source);
    s.read("dataset", t.dataset);
    s.read("state", t.state);
    s.read("coherence", t.coherence);
    s.read("n0", t.n0);
    s.read("noiseless", t.noiseless);
    s.read("resamples", t.resamples);
    s.read("likelihood", t.likelihood);
    s.read("tolerance", t.tolerance);
    s.read("max_iterations", t.max_iterations);
    s.read("result_file", t.result_file);
    s.read("dataset_out", t.dataset_out);
    if (t.source != "simulate" && t.source != "file") {
        throw ConfigError(s.where("source") + "expected simulate or file");
    }
    if (t.source == "file" && t.dataset.empty()) {
        throw ConfigError(s.where("dataset") + "required when source = file");
    }
    if (t.likelihood != "poisson" && t.likelihood != "gaussian") {
        throw ConfigError(s.where("likelihood") + "expected poisson or gaussian");
    }
    if (!(t.n0 >= 0.0)) throw ConfigError(s.where("n0") + "must be non-negative");
    if (t.resamples < 0 || t.resamples == 1) {
        throw ConfigError(s.where("resamples") + "use 0 to skip error bars or at least 2");
    }
    if (!(t.tolerance > 0.0)) throw ConfigError(s.where("tolerance") + "must be positive");
    if (t.max_iterations <= 0) throw ConfigError(s.where("max_iterations") + "must be positive");
    require_file(s.where("dataset"), t.dataset);
}

void read_sweep(Section& s, SweepSection& w) {
    s.read("mode", w.mode);
    s.read("theta_start", w.theta_start);
    s.read("theta_stop", w.theta_stop);
    s.read("points", w.points);
    s.read("theta_unit", w.theta_unit);
    s.read("p_m_override", w.p_m_override);
    s.read("measured_g2", w.measured_g2);
    s.read("model_file", w.model_file);
    s.read("estimates_file", w.estimates_file);
    s.read("empirical_pulses", w.empirical_pulses);
    s.read("max_pulses", w.max_pulses);
    s.read("tomo_n0", w.tomo_n0);
    s.read("tomo_resamples", w.tomo_resamples);
    if (w.mode != "model" && w.mode != "empirical") {
        throw ConfigError(s.where("mode") + "expected model or empirical");
    }
    if (w.theta_unit != "pi" && w.theta_unit != "rad") {
        throw ConfigError(s.where("theta_unit") + "expected pi or rad");
    }
    if (w.points < 2) throw ConfigError(s.where("points") + "need at least 2 points");
    if (!(w.theta_stop > w.theta_start)) {
        throw ConfigError(s.where("theta_stop") + "grid must be strictly increasing");
    }
    const auto n = static_cast<std::size_t>(w.points);
    if (!w.p_m_override.empty() && w.p_m_override.size() != n) {
        throw ConfigError(s.where("p_m_override") + "needs exactly one value per grid point");
    }
    if (!w.measured_g2.empty() && w.measured_g2.size() != n) {
        throw ConfigError(s.where("measured_g2") + "needs exactly one value per grid point");
    }
    if (w.tomo_resamples < 0 || w.tomo_resamples == 1) {
        throw ConfigError(s.where("tomo_resamples") + "use 0 or at least 2");
    }
}

const char* rabi_form_name(RabiForm f) {
    return f == RabiForm::kUndamped ? "undamped" : "damped_cosine";
}

std::string join(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + fmt17(v[i]);
    return out;
}

}  // namespace

std::vector<double> SweepSection::thetas() const {
    const double scale = theta_unit == "pi" ? std::numbers::pi : 1.0;
    std::vector<double> out(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i) {
        const double u = theta_start + (theta_stop - theta_start) * i / (points - 1);
        out[static_cast<std::size_t>(i)] = u * scale;
    }
    return out;
}

std::uint64_t RunConfig::require_seed() const {
    if (!seed) throw ConfigError("seed: a top-level seed is mandatory (or pass --seed)");
    return *seed;
}

TwoQubitDensityMatrix resolve_state(const std::string& kind, double coherence,
                                    const std::string& file) {
    if (kind == "phi_plus") return bell_phi_plus();
    if (kind == "dephased_bell") {
        if (!(coherence >= 0.0 && coherence <= 1.0)) {
            throw ConfigError("coherence must lie in [0, 1]");
        }
        return dephased_bell(coherence);
    }
    if (kind == "maximally_mixed") return TwoQubitDensityMatrix::maximally_mixed();
    if (kind == "file") {
        std::ifstream is(file);
        if (!is) throw InputError("cannot open state file '" + file + "'");
        try {
            return TwoQubitDensityMatrix::from_json(nlohmann::json::parse(is));
        } catch (const nlohmann::json::exception& e) {
            throw InputError("state file '" + file + "': " + e.what());
        }
    }
    throw ConfigError("unknown state '" + kind + "' (phi_plus, dephased_bell, maximally_mixed, file)");
}

RunConfig parse_config(std::istream& is, bool require_seed) {
    pt::ptree tree;
    try {
        pt::ini_parser::read_ini(is, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError("config line " + std::to_string(e.line()) + ": " + e.message());
    }
    static const std::set<std::string> kSections = {"emitter", "measurement", "analysis",
                                                    "tomography", "sweep"};
    RunConfig cfg;
    for (const auto& [key, child] : tree) {
        if (kSections.contains(key)) continue;
        if (key != "seed") throw ConfigError("unknown top-level key or section '" + key + "'");
        std::uint64_t seed = 0;
        const std::string v = trim(child.data());
        const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), seed);
        if (ec != std::errc{} || ptr != v.data() + v.size()) {
            throw ConfigError("seed: cannot parse '" + v + "' as an unsigned 64-bit integer");
        }
        cfg.seed = seed;
    }
    if (require_seed && !cfg.seed) throw ConfigError("seed: a top-level seed is mandatory");

    auto section = [&](const char* name) {
        const auto it = tree.find(name);
        return Section(it == tree.not_found() ? nullptr : &it->second, name);
    };
    Section emitter = section("emitter");
    read_emitter(emitter, cfg.emitter);
    emitter.reject_unknown();
    Section measurement = section("measurement");
    read_measurement(measurement, cfg.measurement);
    measurement.reject_unknown();
    Section analysis = section("analysis");
    read_analysis(analysis, cfg.analysis);
    analysis.reject_unknown();
    Section tomography = section("tomography");
    read_tomography(tomography, cfg.tomography);
    tomography.reject_unknown();
    Section sweep = section("sweep");
    read_sweep(sweep, cfg.sweep);
    sweep.reject_unknown();
    if (cfg.seed) cfg.emitter.params.seed = *cfg.seed;
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file '" + path.string() + "'");
    return parse_config(is);
}

std::optional<std::filesystem::path> default_config_path() {
    const char* env = std::getenv("QDENT_CONFIG");
    if (env == nullptr || *env == '\0') return std::nullopt;
    std::filesystem::path p(env);
    if (std::filesystem::is_directory(p)) p /= "qdent.ini";
    return p;
}

std::string to_ini(const RunConfig& cfg) {
    std::ostringstream os;
    if (cfg.seed) os << "seed = " << *cfg.seed << "\n";
    const EmitterParams& p = cfg.emitter.params;
    os << "\n[emitter]\n"
       << "p_m = " << fmt17(p.p_m) << "\n"
       << "theta = " << fmt17(p.theta) << "\n"
       << "rabi_amplitude = " << fmt17(p.rabi.amplitude) << "\n"
       << "rabi_damping = " << fmt17(p.rabi.damping) << "\n"
       << "rabi_form = " << rabi_form_name(p.rabi.form) << "\n"
       << "tau_on = " << fmt17(p.blink_tau_on) << "\n"
       << "tau_off = " << fmt17(p.blink_tau_off) << "\n"
       << "rep_period = " << fmt17(p.rep_period) << "\n"
       << "tau_xx = " << fmt17(p.tau_xx) << "\n"
       << "tau_x = " << fmt17(p.tau_x) << "\n";
    for (std::size_t c = 0; c < kNumChannels; ++c) {
        os << "efficiency_" << kChannelKeys[c] << " = " << fmt17(p.det_eff[c]) << "\n";
    }
    for (std::size_t c = 0; c < kNumChannels; ++c) {
        os << "dark_rate_" << kChannelKeys[c] << " = " << fmt17(p.dark_rate[c]) << "\n";
    }
    os << "reexc_delay = " << fmt17(p.reexc_delay) << "\n"
       << "jitter_sigma = " << fmt17(p.jitter_sigma) << "\n"
       << "block_pulses = " << p.block_pulses << "\n"
       << "state = " << cfg.emitter.state << "\n"
       << "coherence = " << fmt17(cfg.emitter.coherence) << "\n";
    if (!cfg.emitter.state_file.empty()) os << "state_file = " << cfg.emitter.state_file << "\n";

    const auto& m = cfg.measurement;
    os << "\n[measurement]\n"
       << "mode = " << mode_name(m.config.mode) << "\n"
       << "setting_x = " << basis_letter(m.config.setting_x) << "\n"
       << "setting_xx = " << basis_letter(m.config.setting_xx) << "\n"
       << "n_pulses = " << m.n_pulses << "\n"
       << "events_file = " << m.events_file << "\n";
    if (!m.events_csv.empty()) os << "events_csv = " << m.events_csv << "\n";

    const auto& a = cfg.analysis;
    os << "\n[analysis]\n";
    if (!a.input.empty()) os << "input = " << a.input << "\n";
    os << "kind = " << a.kind << "\n"
       << "bin_width_ps = " << a.bin_width_ps << "\n"
       << "max_delay_ps = " << a.max_delay_ps << "\n"
       << "peak_window_ps = " << a.peak_window_ps << "\n"
       << "far_min = " << a.far_min << "\n"
       << "far_max = " << a.far_max << "\n"
       << "tau_c_hint = " << fmt17(a.tau_c_hint) << "\n"
       << "blink_max_index = " << a.blink_max_index << "\n"
       << "write_histogram = " << (a.write_histogram ? "true" : "false") << "\n"
       << "histogram_file = " << a.histogram_file << "\n"
       << "estimates_file = " << a.estimates_file << "\n";

    const auto& t = cfg.tomography;
    os << "\n[tomography]\n"
       << "source = " << t.source << "\n";
    if (!t.dataset.empty()) os << "dataset = " << t.dataset << "\n";
    os << "state = " << t.state << "\n"
       << "coherence = " << fmt17(t.coherence) << "\n"
       << "n0 = " << fmt17(t.n0) << "\n"
       << "noiseless = " << (t.noiseless ? "true" : "false") << "\n"
       << "resamples = " << t.resamples << "\n"
       << "likelihood = " << t.likelihood << "\n"
       << "tolerance = " << fmt17(t.tolerance) << "\n"
       << "max_iterations = " << t.max_iterations << "\n"
       << "result_file = " << t.result_file << "\n"
       << "dataset_out = " << t.dataset_out << "\n";

    const auto& w = cfg.sweep;
    os << "\n[sweep]\n"
       << "mode = " << w.mode << "\n"
       << "theta_start = " << fmt17(w.theta_start) << "\n"
       << "theta_stop = " << fmt17(w.theta_stop) << "\n"
       << "points = " << w.points << "\n"
       << "theta_unit = " << w.theta_unit << "\n";
    if (!w.p_m_override.empty()) os << "p_m_override = " << join(w.p_m_override) << "\n";
    if (!w.measured_g2.empty()) os << "measured_g2 = " << join(w.measured_g2) << "\n";
    os << "model_file = " << w.model_file << "\n"
       << "estimates_file = " << w.estimates_file << "\n"
       << "empirical_pulses = " << w.empirical_pulses << "\n"
       << "max_pulses = " << w.max_pulses << "\n"
       << "tomo_n0 = " << fmt17(w.tomo_n0) << "\n"
       << "tomo_resamples = " << w.tomo_resamples << "\n";
    return os.str();
}

}  // namespace qdent::app
