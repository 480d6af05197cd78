#pragma once

#include <algorithm>
#include <array>
#include <iterator>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <future>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "channels.hpp"
#include "error.hpp"
#include "gaussian.hpp"
#include "heterodyne.hpp"
#include "kerr_state.hpp"
#include "parameters.hpp"
#include "photon_stats.hpp"

#ifndef KERRSQ_VERSION
#define KERRSQ_VERSION "0.1.0"
#endif

namespace kerrsq {

enum class PipelineVariant { gaussian, fock_oracle };

inline std::string to_string(PipelineVariant v) {
    return v == PipelineVariant::gaussian ? "gaussian" : "fock-oracle";
}

inline PipelineVariant variant_from_string(const std::string& s) {
    if (s == "gaussian") return PipelineVariant::gaussian;
    if (s == "fock-oracle") return PipelineVariant::fock_oracle;
    throw config_error("unknown pipeline variant '" + s + "'");
}

struct PipelineOptions {
    std::optional<complex> delta;   // bin center; default: mean-rotation branch
    std::optional<double> gamma;    // noise-width amplitude; default: sqrt(nu) * alpha
    double k_sigma = 8.0;
    double truncation_tolerance = 1e-10;
    bool allow_large = false;
    std::size_t dense_limit_bytes = std::size_t{512} << 20;
    DisplacementSearch search{};
};

/// Bin center at the probe branch of the mean signal photon number beta^2,
/// after probe loss: sqrt(nu) alpha e^{-i phi0 beta^2}.
inline complex default_postselection_center(const Parameters& p) {
    return std::sqrt(p.nu) * p.alpha * std::polar(1.0, -p.phi0 * p.beta * p.beta);
}

inline HeterodyneSettings heterodyne_settings(const Parameters& p, const PipelineOptions& opt) {
    HeterodyneSettings h;
    h.delta = opt.delta.value_or(default_postselection_center(p));
    h.epsilon = p.epsilon;
    h.delta_phi = p.delta_phi;
    h.gamma = opt.gamma.value_or(std::sqrt(p.nu) * p.alpha);
    return h;
}

/// Rough peak memory of the dense Fock path at a given cutoff.
inline std::size_t dense_footprint_bytes(int cutoff) {
    const auto dim = static_cast<std::size_t>(cutoff) + 1;
    return 4 * dim * dim * sizeof(complex);
}

/// Probe-side chain shared by both pipeline variants: coherent product,
/// cross-Kerr, probe loss.
inline BranchState prepare_branches(const Parameters& p, const PipelineOptions& opt) {
    p.validate();
    const int cutoff = fock_cutoff(p.beta, opt.k_sigma);
    BranchState s = make_coherent_product(p.alpha, p.beta, cutoff, opt.truncation_tolerance);
    s = apply_cross_kerr(std::move(s), p.phi0);
    return apply_probe_loss(std::move(s), p.nu);
}

struct PipelineResult {
    GaussianState signal;       // just before displacement and the g2 measurement
    double success_prob = 0.0;
    double trace_raw = 0.0;
    int cutoff = 0;
    HeterodyneSettings settings;
};

/// Kerr -> probe loss -> averaged heterodyne post-selection -> signal loss ->
/// Gaussian moments. Only the Fock bands needed for the moments are formed.
inline PipelineResult run_pipeline(const Parameters& p, const PipelineOptions& opt = {}) {
    const BranchState s = prepare_branches(p, opt);
    const HeterodyneSettings h = heterodyne_settings(p, opt);
    BandedDensity rho = project_heterodyne_banded(s, h, 2);
    rho = apply_signal_loss(rho, p.eta);
    PipelineResult r;
    r.signal = moments_from_density(rho);
    r.success_prob = postselection_probability(s, h.delta, h.epsilon);
    r.trace_raw = rho.trace_raw;
    r.cutoff = s.cutoff();
    r.settings = h;
    return r;
}

struct DenseSignal {
    SignalDensity density; // normalized, after signal loss
    double success_prob = 0.0;
};

/// Same chain with the full Fock density kept (no Gaussian reduction).
/// Refuses cutoffs whose dense footprint exceeds the limit unless allow_large.
inline DenseSignal run_pipeline_dense(const Parameters& p, const PipelineOptions& opt = {}) {
    p.validate();
    const int cutoff = fock_cutoff(p.beta, opt.k_sigma);
    if (!opt.allow_large && dense_footprint_bytes(cutoff) > opt.dense_limit_bytes)
        throw config_error("dense Fock path at cutoff " + std::to_string(cutoff) + " needs about " +
                           std::to_string(dense_footprint_bytes(cutoff) >> 20) +
                           " MiB; pass --allow-large to proceed");
    const BranchState s = prepare_branches(p, opt);
    const HeterodyneSettings h = heterodyne_settings(p, opt);
    SignalDensity rho = project_heterodyne_averaged(s, h);
    rho = apply_signal_loss(rho, p.eta);
    return {rho.normalized(), postselection_probability(s, h.delta, h.epsilon)};
}

/// Optimal displacement and success probability for one parameter point.
struct PointResult {
    DisplacementOptimum optimum;
    double success_prob = 0.0;
};

inline PointResult evaluate_point(const Parameters& p, PipelineVariant variant,
                                  const PipelineOptions& opt = {}) {
    if (variant == PipelineVariant::gaussian) {
        const PipelineResult r = run_pipeline(p, opt);
        return {optimize_displacement(r.signal, p.p_dark, opt.search), r.success_prob};
    }
    const DenseSignal d = run_pipeline_dense(p, opt);
    return {optimize_displacement(d.density, p.p_dark, opt.search), d.success_prob};
}

// ---------------------------------------------------------------------------
// Sweeps

inline constexpr std::array<std::string_view, 9> sweep_names = {
    "eta", "nu", "delta_phi", "epsilon", "p_dark", "phi0", "alpha", "beta", "displacement"};

struct SweepSpec {
    std::string name;
    std::vector<double> values;
};

struct SweepRow {
    std::string swept_name;
    double swept_value = 0.0;
    double n_displacement = 0.0;
    double g2 = 0.0;
    double success_prob = 0.0;
    bool optimum = true; // false for rows of the g2-versus-displacement curve

    friend bool operator==(const SweepRow&, const SweepRow&) = default;
};

struct SweepMetadata {
    Parameters params;
    PipelineVariant variant = PipelineVariant::gaussian;
    std::string version = KERRSQ_VERSION;
    double wall_time_s = 0.0;

    friend bool operator==(const SweepMetadata&, const SweepMetadata&) = default;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    SweepMetadata metadata;

    void validate() const {
        if (rows.empty()) throw config_error("sweep result has no rows");
        for (const auto& r : rows) {
            if (!(r.g2 > 0.0)) throw numerical_error("sweep row with non-positive g2");
            if (!(r.success_prob >= 0.0 && r.success_prob <= 1.0))
                throw numerical_error("sweep row with success probability outside [0, 1]");
        }
    }

    /// Rows of the optimum kind only, in sweep order.
    std::vector<SweepRow> optima() const {
        std::vector<SweepRow> out;
        std::copy_if(rows.begin(), rows.end(), std::back_inserter(out), [](const SweepRow& r) { return r.optimum; });
        return out;
    }

    friend bool operator==(const SweepResult&, const SweepResult&) = default;
};

namespace detail {

inline std::vector<SweepRow> sweep_point(const Parameters& base, const SweepSpec& spec, double value,
                                         const std::vector<double>& grid, PipelineVariant variant,
                                         const PipelineOptions& opt) {
    std::vector<SweepRow> rows;
    Parameters p = base;
    parameter_ref(p, spec.name) = value;
    if (variant == PipelineVariant::gaussian) {
        const PipelineResult r = run_pipeline(p, opt);
        const DisplacementOptimum o = optimize_displacement(r.signal, p.p_dark, opt.search);
        rows.push_back({spec.name, value, o.n_opt, o.g2_min, r.success_prob, true});
        for (double n : grid)
            rows.push_back({spec.name, value, n, g2_click(with_displacement(r.signal, n, o.axis), p.p_dark),
                            r.success_prob, false});
    } else {
        const DenseSignal d = run_pipeline_dense(p, opt);
        const DisplacementOptimum o = optimize_displacement(d.density, p.p_dark, opt.search);
        rows.push_back({spec.name, value, o.n_opt, o.g2_min, d.success_prob, true});
        const GaussianState m = moments_from_density(d.density, 1e-6);
        const complex mean_amp{0.5 * m.mean(0), 0.5 * m.mean(1)};
        for (double n : grid) {
            const complex target = std::sqrt(n) * complex(o.axis(0), o.axis(1));
            rows.push_back({spec.name, value, n,
                            g2_click(displaced_populations(d.density, target - mean_amp), p.p_dark),
                            d.success_prob, false});
        }
    }
    return rows;
}

} // namespace detail

/// Run every sweep value as an independent task; rows are merged in input order.
inline SweepResult sweep(const Parameters& base, const SweepSpec& spec,
                         const std::vector<double>& displacement_grid = {},
                         PipelineVariant variant = PipelineVariant::gaussian,
                         const PipelineOptions& opt = {}, unsigned max_threads = 0) {
    if (std::find(sweep_names.begin(), sweep_names.end(), spec.name) == sweep_names.end())
        throw config_error("invalid sweep name '" + spec.name + "'");
    if (spec.values.empty()) throw config_error("sweep has no values");
    base.validate();

    const auto t0 = std::chrono::steady_clock::now();
    SweepResult result;
    result.metadata.params = base;
    result.metadata.variant = variant;

    if (spec.name == "displacement") {
        // single pipeline run; g2 at each requested mean photon number along the best axis
        for (double n : spec.values)
            if (!(n > 0.0)) throw config_error("displacement sweep values are mean photon numbers > 0");
        const std::vector<double> grid = spec.values;
        auto rows = detail::sweep_point(base, {"epsilon", {}}, base.epsilon, grid, variant, opt);
        for (auto& row : rows) {
            row.swept_name = "displacement";
            row.swept_value = row.n_displacement;
        }
        result.rows = std::move(rows);
        result.metadata.wall_time_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.validate();
        return result;
    }

    if (max_threads == 0) max_threads = std::max(1u, std::thread::hardware_concurrency());
    std::vector<std::vector<SweepRow>> parts(spec.values.size());
    for (std::size_t start = 0; start < spec.values.size(); start += max_threads) {
        const std::size_t stop = std::min(spec.values.size(), start + max_threads);
        std::vector<std::future<std::vector<SweepRow>>> jobs;
        for (std::size_t i = start; i < stop; ++i)
            jobs.push_back(std::async(std::launch::async, detail::sweep_point, std::cref(base), std::cref(spec),
                                      spec.values[i], std::cref(displacement_grid), variant, std::cref(opt)));
        for (std::size_t i = start; i < stop; ++i) parts[i] = jobs[i - start].get();
    }

    for (auto& part : parts) result.rows.insert(result.rows.end(), part.begin(), part.end());
    result.metadata.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.validate();
    return result;
}

// ---------------------------------------------------------------------------
// Output

enum class OutputFormat { csv, json };

inline OutputFormat format_from_string(const std::string& s) {
    if (s == "csv") return OutputFormat::csv;
    if (s == "json") return OutputFormat::json;
    throw config_error("unknown output format '" + s + "' (expected csv|json)");
}

inline constexpr const char* csv_header = "swept_name,swept_value,n_displacement,g2,success_prob,optimum";

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string to_csv(const SweepResult& r) {
    r.validate();
    std::ostringstream os;
    os << csv_header << '\n';
    for (const auto& row : r.rows)
        os << row.swept_name << ',' << format_double(row.swept_value) << ',' << format_double(row.n_displacement)
           << ',' << format_double(row.g2) << ',' << format_double(row.success_prob) << ','
           << (row.optimum ? 1 : 0) << '\n';
    return os.str();
}

inline nlohmann::json to_json(const Parameters& p) {
    nlohmann::json j;
    for (auto name : parameter_names) j[std::string(name)] = parameter_value(p, name);
    return j;
}

inline Parameters parameters_from_json(const nlohmann::json& j) {
    Parameters p;
    for (auto name : parameter_names) parameter_ref(p, name) = j.at(std::string(name)).get<double>();
    return p;
}

inline nlohmann::json to_json(const SweepResult& r) {
    r.validate();
    nlohmann::json j;
    j["metadata"] = {{"parameters", to_json(r.metadata.params)},
                     {"variant", to_string(r.metadata.variant)},
                     {"version", r.metadata.version},
                     {"wall_time_s", r.metadata.wall_time_s}};
    j["rows"] = nlohmann::json::array();
    for (const auto& row : r.rows)
        j["rows"].push_back({{"swept_name", row.swept_name},
                             {"swept_value", row.swept_value},
                             {"n_displacement", row.n_displacement},
                             {"g2", row.g2},
                             {"success_prob", row.success_prob},
                             {"optimum", row.optimum}});
    return j;
}

inline SweepResult sweep_result_from_json(const nlohmann::json& j) {
    SweepResult r;
    const auto& m = j.at("metadata");
    r.metadata.params = parameters_from_json(m.at("parameters"));
    r.metadata.variant = variant_from_string(m.at("variant").get<std::string>());
    r.metadata.version = m.at("version").get<std::string>();
    r.metadata.wall_time_s = m.at("wall_time_s").get<double>();
    for (const auto& row : j.at("rows"))
        r.rows.push_back({row.at("swept_name").get<std::string>(), row.at("swept_value").get<double>(),
                          row.at("n_displacement").get<double>(), row.at("g2").get<double>(),
                          row.at("success_prob").get<double>(), row.at("optimum").get<bool>()});
    r.validate();
    return r;
}

inline std::string render(const SweepResult& r, OutputFormat format) {
    return format == OutputFormat::csv ? to_csv(r) : to_json(r).dump(2) + "\n";
}

/// Writes the result to `path` ("-" for stdout).
inline void emit(const SweepResult& r, OutputFormat format, const std::string& path) {
    const std::string text = render(r, format);
    if (path == "-" || path.empty()) {
        std::fwrite(text.data(), 1, text.size(), stdout);
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << text;
    if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

// ---------------------------------------------------------------------------
// Configuration files: one `key = value` per line, `#` starts a comment.
// Keys: set, any parameter name, delta_re, delta_im, gamma, k_sigma.

struct Config {
    Parameters params = optimistic_set();
    PipelineOptions options;
};

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline double parse_number(const std::string& text, const std::string& key) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        throw config_error("value for '" + key + "' is not a number: '" + text + "'");
    }
    if (used != text.size()) throw config_error("value for '" + key + "' is not a number: '" + text + "'");
    return v;
}

/// Applies `key = value` lines on top of `base`. A `set` line replaces all
/// physical parameters with the named set; later lines override.
inline Config parse_config(const std::string& text, Config base = {}) {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    std::optional<double> dre, dim;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw config_error("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key == "set") {
            base.params = named_set(value);
        } else if (key == "delta_re") {
            dre = parse_number(value, key);
        } else if (key == "delta_im") {
            dim = parse_number(value, key);
        } else if (key == "gamma") {
            base.options.gamma = parse_number(value, key);
        } else if (key == "k_sigma") {
            base.options.k_sigma = parse_number(value, key);
        } else if (std::find(parameter_names.begin(), parameter_names.end(), key) != parameter_names.end()) {
            parameter_ref(base.params, key) = parse_number(value, key);
        } else {
            throw config_error("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        }
    }
    if (dre || dim) {
        const complex prev = base.options.delta.value_or(complex{});
        base.options.delta = complex(dre.value_or(prev.real()), dim.value_or(prev.imag()));
    }
    base.params.validate();
    return base;
}

/// "a,b,c" or "lo:hi:count" (inclusive, linear) or "lo:hi:count:log" (geometric).
inline std::vector<double> parse_value_list(const std::string& text, const std::string& key) {
    std::vector<std::string> parts;
    const char sep = text.find(':') != std::string::npos ? ':' : ',';
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, sep);) parts.push_back(trim(item));
    std::vector<double> out;
    if (sep == ',') {
        for (const auto& p : parts) {
            if (p.empty()) throw config_error("empty entry in list for '" + key + "'");
            out.push_back(parse_number(p, key));
        }
        return out;
    }
    if (parts.size() < 3 || parts.size() > 4 || (parts.size() == 4 && parts[3] != "log"))
        throw config_error("range for '" + key + "' must be lo:hi:count or lo:hi:count:log");
    const double lo = parse_number(parts[0], key), hi = parse_number(parts[1], key);
    const double count = parse_number(parts[2], key);
    if (!(count >= 1.0) || count != std::floor(count)) throw config_error("range count for '" + key + "' must be a positive integer");
    const int n = static_cast<int>(count);
    const bool geometric = parts.size() == 4;
    if (geometric && !(lo > 0.0 && hi > 0.0)) throw config_error("log range for '" + key + "' needs positive bounds");
    for (int i = 0; i < n; ++i) {
        const double t = n == 1 ? 0.0 : static_cast<double>(i) / (n - 1);
        out.push_back(geometric ? std::exp(std::log(lo) + t * (std::log(hi) - std::log(lo))) : lo + t * (hi - lo));
    }
    return out;
}

inline Config load_config(const std::string& path, Config base = {}) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot read config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), std::move(base));
}

} // namespace kerrsq
