// kerrsq: command-line driver for the cross-Kerr squeezing model.
//
// Exit codes: 0 success, 1 I/O or unexpected failure, 2 invalid
// configuration, 3 numerical-validity failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "kerrsq.hpp"

namespace {

using namespace kerrsq;
using nlohmann::json;

constexpr int exit_io = 1;
constexpr int exit_config = 2;
constexpr int exit_numerical = 3;

struct Common {
    std::string config_path;
    std::string set_name;
    std::string out = "-";
    std::string format = "csv";
    std::optional<double> eta, nu, delta_phi, epsilon, p_dark, phi0, alpha, beta;
    std::optional<double> delta_re, delta_im, gamma, k_sigma;
    bool oracle = false;
    bool allow_large = false;
};

void add_parameter_flags(CLI::App* app, Common& c) {
    app->add_option("--config", c.config_path, "key = value configuration file");
    app->add_option("--out", c.out, "output path, - for stdout")->capture_default_str();
    app->add_option("--format", c.format, "csv or json")->capture_default_str();
    app->add_option("--eta", c.eta, "signal transmission");
    app->add_option("--nu", c.nu, "probe transmission");
    app->add_option("--delta-phi", c.delta_phi, "heterodyne phase noise (rad)");
    app->add_option("--epsilon", c.epsilon, "post-selection envelope width");
    app->add_option("--p-dark", c.p_dark, "dark-count probability per detector");
    app->add_option("--phi0", c.phi0, "cross-Kerr phase per photon (rad)");
    app->add_option("--alpha", c.alpha, "probe amplitude");
    app->add_option("--beta", c.beta, "signal amplitude");
    app->add_option("--delta-re", c.delta_re, "bin center, real part");
    app->add_option("--delta-im", c.delta_im, "bin center, imaginary part");
    app->add_option("--gamma", c.gamma, "amplitude in the phase-noise width law");
    app->add_option("--k-sigma", c.k_sigma, "Fock cutoff width in standard deviations");
    app->add_flag("--allow-large", c.allow_large, "permit dense Fock runs above the memory gate");
}

/// Layering: base -> --set -> config file -> individual flags.
Config resolve(const Common& c, Config base) {
    if (!c.set_name.empty()) base.params = named_set(c.set_name);
    if (!c.config_path.empty()) base = load_config(c.config_path, base);
    auto apply = [](double& field, const std::optional<double>& v) {
        if (v) field = *v;
    };
    Parameters& p = base.params;
    apply(p.eta, c.eta);
    apply(p.nu, c.nu);
    apply(p.delta_phi, c.delta_phi);
    apply(p.epsilon, c.epsilon);
    apply(p.p_dark, c.p_dark);
    apply(p.phi0, c.phi0);
    apply(p.alpha, c.alpha);
    apply(p.beta, c.beta);
    if (c.delta_re || c.delta_im) {
        const complex prev = base.options.delta.value_or(complex{});
        base.options.delta = complex(c.delta_re.value_or(prev.real()), c.delta_im.value_or(prev.imag()));
    }
    if (c.gamma) base.options.gamma = *c.gamma;
    if (c.k_sigma) base.options.k_sigma = *c.k_sigma;
    if (c.allow_large) base.options.allow_large = true;
    p.validate();
    return base;
}

void write_text(const std::string& text, const std::string& path) {
    if (path == "-" || path.empty()) {
        std::fwrite(text.data(), 1, text.size(), stdout);
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << text;
    if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

std::string key_value_csv(const std::vector<std::pair<std::string, std::string>>& rows) {
    std::string s = "key,value\n";
    for (const auto& [k, v] : rows) s += k + "," + v + "\n";
    return s;
}

json matrix_json(const Eigen::MatrixXd& m) {
    json j = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
        j.push_back(row);
    }
    return j;
}

// ---------------------------------------------------------------------------

int cmd_run(const Common& c) {
    const Config cfg = resolve(c, {});
    const OutputFormat fmt = format_from_string(c.format);
    const Parameters& p = cfg.params;
    const auto t0 = std::chrono::steady_clock::now();

    GaussianState signal;
    double success = 0.0;
    std::optional<double> exact_at_opt;
    DisplacementOptimum opt;
    const HeterodyneSettings h = heterodyne_settings(p, cfg.options);
    const int cutoff = fock_cutoff(p.beta, cfg.options.k_sigma);
    if (c.oracle) {
        const DenseSignal d = run_pipeline_dense(p, cfg.options);
        signal = moments_from_density(d.density, 1e-6);
        success = d.success_prob;
        opt = optimize_displacement(d.density, p.p_dark, cfg.options.search);
        const complex mean_amp{0.5 * signal.mean(0), 0.5 * signal.mean(1)};
        const complex target = std::sqrt(opt.n_opt) * complex(opt.axis(0), opt.axis(1));
        exact_at_opt = g2_exact(displaced_populations(d.density, target - mean_amp));
    } else {
        const PipelineResult r = run_pipeline(p, cfg.options);
        signal = r.signal;
        success = r.success_prob;
        opt = optimize_displacement(signal, p.p_dark, cfg.options.search);
    }
    const WilliamsonForm w = williamson(signal);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const PipelineVariant variant = c.oracle ? PipelineVariant::fock_oracle : PipelineVariant::gaussian;

    if (!opt.interior)
        std::cerr << "warning: optimum at the upper edge of the displacement bracket\n";

    if (fmt == OutputFormat::json) {
        json j;
        j["parameters"] = to_json(p);
        j["variant"] = to_string(variant);
        j["version"] = KERRSQ_VERSION;
        j["cutoff"] = cutoff;
        j["delta"] = {h.delta.real(), h.delta.imag()};
        j["envelope_width"] = h.width();
        j["success_prob"] = success;
        j["covariance"] = matrix_json(signal.cov);
        j["mean"] = {signal.mean(0), signal.mean(1)};
        j["williamson"] = {{"r", w.r}, {"V", w.V}, {"theta", w.theta}};
        j["optimum"] = {{"n_opt", opt.n_opt},
                        {"g2_min", opt.g2_min},
                        {"axis", {opt.axis(0), opt.axis(1)}},
                        {"curvature", opt.curvature},
                        {"interior", opt.interior}};
        if (exact_at_opt) j["optimum"]["g2_exact"] = *exact_at_opt;
        j["wall_time_s"] = wall;
        write_text(j.dump(2) + "\n", c.out);
    } else {
        std::vector<std::pair<std::string, std::string>> rows = {
            {"variant", to_string(variant)},
            {"cutoff", std::to_string(cutoff)},
            {"delta_re", format_double(h.delta.real())},
            {"delta_im", format_double(h.delta.imag())},
            {"envelope_width", format_double(h.width())},
            {"success_prob", format_double(success)},
            {"cov_xx", format_double(signal.cov(0, 0))},
            {"cov_xp", format_double(signal.cov(0, 1))},
            {"cov_pp", format_double(signal.cov(1, 1))},
            {"mean_x", format_double(signal.mean(0))},
            {"mean_p", format_double(signal.mean(1))},
            {"williamson_r", format_double(w.r)},
            {"williamson_V", format_double(w.V)},
            {"williamson_theta", format_double(w.theta)},
            {"n_opt", format_double(opt.n_opt)},
            {"g2_min", format_double(opt.g2_min)},
            {"axis_x", format_double(opt.axis(0))},
            {"axis_p", format_double(opt.axis(1))},
            {"curvature", format_double(opt.curvature)},
            {"interior", opt.interior ? "1" : "0"}};
        if (exact_at_opt) rows.emplace_back("g2_exact", format_double(*exact_at_opt));
        write_text(key_value_csv(rows), c.out);
    }
    return 0;
}

int cmd_sweep(const Common& c, const std::string& name, const std::string& values, const std::string& grid,
              unsigned threads) {
    const Config cfg = resolve(c, {});
    const OutputFormat fmt = format_from_string(c.format);
    const SweepSpec spec{name, parse_value_list(values, "values")};
    const std::vector<double> g = grid.empty() ? std::vector<double>{} : parse_value_list(grid, "grid");
    const PipelineVariant variant = c.oracle ? PipelineVariant::fock_oracle : PipelineVariant::gaussian;
    const SweepResult r = sweep(cfg.params, spec, g, variant, cfg.options, threads);
    emit(r, fmt, c.out);
    return 0;
}

Config wigner_defaults() {
    Config cfg;
    const double a = std::sqrt(10.0);
    cfg.params = {.eta = 0.7, .nu = 1.0, .delta_phi = 0.0, .epsilon = 0.3,
                  .p_dark = 0.0, .phi0 = 0.4, .alpha = a, .beta = a};
    return cfg;
}

int cmd_wigner(const Common& c, double extent, int points, bool envelope) {
    const Config cfg = resolve(c, wigner_defaults());
    const OutputFormat fmt = format_from_string(c.format);
    if (!(extent > 0.0) || points < 2) throw config_error("wigner grid needs extent > 0 and points >= 2");
    const Parameters& p = cfg.params;
    const int cutoff = fock_cutoff(p.beta, cfg.options.k_sigma);
    if (!cfg.options.allow_large && dense_footprint_bytes(cutoff) > cfg.options.dense_limit_bytes)
        throw config_error("dense Fock state at cutoff " + std::to_string(cutoff) +
                           " exceeds the memory gate; pass --allow-large to proceed");

    const BranchState s = prepare_branches(p, cfg.options);
    const HeterodyneSettings h = heterodyne_settings(p, cfg.options);
    SignalDensity rho = envelope ? project_heterodyne_averaged(s, h) : project_heterodyne(s, h.delta);
    rho = apply_signal_loss(rho, p.eta).normalized();
    const std::vector<double> axis = linspace(-extent, extent, points);
    const WignerGrid w = fock_wigner_grid(rho, axis, axis);
    if (w.tail_warning) std::cerr << "warning: " << w.warning << "\n";

    if (fmt == OutputFormat::json) {
        json j;
        j["parameters"] = to_json(p);
        j["delta"] = {h.delta.real(), h.delta.imag()};
        j["envelope"] = envelope;
        j["cutoff"] = cutoff;
        j["xs"] = w.xs;
        j["ps"] = w.ps;
        j["values"] = matrix_json(w.values);
        j["min"] = w.min();
        j["integral"] = w.integral();
        j["tail_warning"] = w.tail_warning;
        write_text(j.dump() + "\n", c.out);
    } else {
        std::ostringstream os;
        os << "x,p,W\n";
        for (std::size_t i = 0; i < w.xs.size(); ++i)
            for (std::size_t k = 0; k < w.ps.size(); ++k)
                os << format_double(w.xs[i]) << ',' << format_double(w.ps[k]) << ','
                   << format_double(w.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k))) << '\n';
        write_text(os.str(), c.out);
    }
    std::cerr << "min W = " << w.min() << ", grid integral = " << w.integral() << "\n";
    return 0;
}

int cmd_twopeak(const Common& c) {
    Config base;
    const double a = std::sqrt(30.0);
    base.params = {.eta = 1.0, .nu = 1.0, .delta_phi = 0.0, .epsilon = 0.3,
                   .p_dark = 0.0, .phi0 = 0.4, .alpha = a, .beta = a};
    base.options.delta = complex(-3.41, 2.09);
    const Config cfg = resolve(c, base);
    const OutputFormat fmt = format_from_string(c.format);
    const Parameters& p = cfg.params;
    const TwoPeakResult r = two_peak_amplitudes(p.alpha, p.beta, p.phi0, *cfg.options.delta);

    if (fmt == OutputFormat::json) {
        json j;
        j["parameters"] = to_json(p);
        j["delta"] = {cfg.options.delta->real(), cfg.options.delta->imag()};
        j["peaks"] = r.peaks;
        j["separation"] = r.separation ? json(*r.separation) : json(nullptr);
        j["mean_rotation"] = r.mean_rotation;
        j["selection_angle"] = r.selection_angle;
        json amps = json::array();
        for (const auto& z : r.amplitudes) amps.push_back({z.real(), z.imag()});
        j["amplitudes"] = amps;
        write_text(j.dump(2) + "\n", c.out);
    } else {
        std::ostringstream os;
        os << "n,re,im,probability\n";
        for (std::size_t n = 0; n < r.amplitudes.size(); ++n)
            os << n << ',' << format_double(r.amplitudes[n].real()) << ',' << format_double(r.amplitudes[n].imag())
               << ',' << format_double(std::norm(r.amplitudes[n])) << '\n';
        write_text(os.str(), c.out);
    }
    std::cerr << "peaks:";
    for (int k : r.peaks) std::cerr << ' ' << k;
    std::cerr << "\nseparation: " << (r.separation ? std::to_string(*r.separation) : std::string("none"))
              << "\nselection angle: " << r.selection_angle << " rad\nmean rotation: " << r.mean_rotation
              << " rad\n";
    return 0;
}

int cmd_optomech(const Common& c, double g, double omega, const std::string& times, int N, int M) {
    const OutputFormat fmt = format_from_string(c.format);
    if (N < 0 || M < 0) throw config_error("photon numbers must be >= 0");
    const std::vector<double> ts = parse_value_list(times, "times");
    json rows = json::array();
    std::ostringstream os;
    os << "t,kappa,overlap,baseline_overlap,equivalent_g_multiplier\n";
    for (double t : ts) {
        const OptomechReport r = optomech_report(g, omega, t, N, M);
        const double k = phonon_kappa(g, omega, t);
        os << format_double(t) << ',' << format_double(k) << ',' << format_double(r.overlap) << ','
           << format_double(r.baseline_overlap) << ',' << format_double(r.equivalent_g_multiplier) << '\n';
        rows.push_back({{"t", t},
                        {"kappa", k},
                        {"overlap", r.overlap},
                        {"baseline_overlap", r.baseline_overlap},
                        {"equivalent_g_multiplier", r.equivalent_g_multiplier}});
    }
    if (fmt == OutputFormat::json)
        write_text(json{{"g", g}, {"omega_m", omega}, {"N", N}, {"M", M}, {"rows", rows}}.dump(2) + "\n", c.out);
    else
        write_text(os.str(), c.out);
    return 0;
}

int cmd_selftest() {
    bool ok = true;
    for (const auto& r : run_selftest()) {
        std::printf("%s  %-55s %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.detail.c_str());
        ok = ok && r.passed;
    }
    return ok ? 0 : exit_numerical;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cross-Kerr number-squeezing simulator"};
    app.set_version_flag("--version", std::string(KERRSQ_VERSION));
    app.require_subcommand(1);

    Common common;

    auto* run = app.add_subcommand("run", "one pipeline evaluation and displacement optimization");
    add_parameter_flags(run, common);
    run->add_option("--set", common.set_name, "current | achievable | optimistic");
    run->add_flag("--oracle", common.oracle, "dense Fock path instead of the Gaussian reduction");

    std::string sweep_name, sweep_values, sweep_grid;
    unsigned threads = 0;
    auto* sw = app.add_subcommand("sweep", "sweep one parameter (or the displacement)");
    add_parameter_flags(sw, common);
    sw->add_option("--set", common.set_name, "current | achievable | optimistic");
    sw->add_flag("--oracle", common.oracle, "dense Fock path instead of the Gaussian reduction");
    sw->add_option("--name", sweep_name, "eta|nu|delta_phi|epsilon|p_dark|phi0|alpha|beta|displacement")->required();
    sw->add_option("--values", sweep_values, "a,b,c or lo:hi:count[:log]")->required();
    sw->add_option("--grid", sweep_grid, "mean photon numbers for the g2-versus-displacement curve");
    sw->add_option("--threads", threads, "worker threads (0 = hardware concurrency)");

    double extent = 8.0;
    int points = 161;
    bool envelope = false;
    auto* wg = app.add_subcommand("wigner", "Wigner function of the post-selected signal on a grid");
    add_parameter_flags(wg, common);
    wg->add_option("--extent", extent, "grid half-width in x and p")->capture_default_str();
    wg->add_option("--points", points, "grid points per axis")->capture_default_str();
    wg->add_flag("--envelope", envelope, "average over the post-selection envelope instead of a sharp outcome");

    auto* tp = app.add_subcommand("twopeak", "Fock amplitudes after lossless post-selection");
    add_parameter_flags(tp, common);

    double g = 0.1, omega = 1.0;
    std::string times = "0:6.283185307179586:21";
    int N = 0, M = 16;
    auto* om = app.add_subcommand("optomech", "phonon-branch overlap table");
    om->add_option("--out", common.out, "output path, - for stdout");
    om->add_option("--format", common.format, "csv or json");
    om->add_option("--g", g, "coupling")->capture_default_str();
    om->add_option("--omega", omega, "mechanical frequency")->capture_default_str();
    om->add_option("--times", times, "a,b,c or lo:hi:count")->capture_default_str();
    om->add_option("-N", N, "photon number of the first branch")->capture_default_str();
    om->add_option("-M", M, "photon number of the second branch")->capture_default_str();

    auto* st = app.add_subcommand("selftest", "property checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : exit_config;
    }

    try {
        if (*run) return cmd_run(common);
        if (*sw) return cmd_sweep(common, sweep_name, sweep_values, sweep_grid, threads);
        if (*wg) return cmd_wigner(common, extent, points, envelope);
        if (*tp) return cmd_twopeak(common);
        if (*om) return cmd_optomech(common, g, omega, times, N, M);
        if (*st) return cmd_selftest();
    } catch (const config_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_config;
    } catch (const numerical_error& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return exit_numerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_io;
    }
    return exit_config;
}
