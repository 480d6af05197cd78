#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "channels.hpp"
#include "exotic_states.hpp"
#include "gaussian.hpp"
#include "heterodyne.hpp"
#include "kerr_state.hpp"
#include "photon_stats.hpp"

namespace kerrsq {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

namespace detail {

inline std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

inline CheckResult check_coherent_click() {
    double worst = 0.0;
    for (double a = 0.1; a <= 3.0 + 1e-12; a += 0.1)
        worst = std::max(worst, std::abs(g2_click(GaussianState::coherent({a, 0.3 * a}), 0.0) - 1.0));
    return {"g2_click(coherent) = 1", worst < 1e-8, "max deviation " + sci(worst)};
}

inline CheckResult check_g2_exact() {
    const double single = g2_exact(SignalDensity::fock(1, 4));
    const int cutoff = 200;
    const double nbar = 0.4;
    SignalDensity th{Eigen::MatrixXcd::Zero(cutoff + 1, cutoff + 1), 1.0};
    for (int n = 0; n <= cutoff; ++n) th.rho(n, n) = std::pow(nbar, n) / std::pow(1.0 + nbar, n + 1);
    const double thermal = g2_exact(th);
    const bool ok = std::abs(single) < 1e-15 && std::abs(thermal - 2.0) < 1e-6;
    return {"g2_exact(|1>) = 0, g2_exact(thermal) = 2", ok,
            "single " + sci(single) + ", thermal " + sci(thermal)};
}

inline CheckResult check_signal_loss() {
    const SignalDensity rho = project_heterodyne(
        apply_probe_loss(apply_cross_kerr(make_coherent_product(2.0, 2.0, 40), 0.4), 0.7), {1.0, 1.2});
    const SignalDensity ab = apply_signal_loss(apply_signal_loss(rho, 0.8), 0.6);
    const SignalDensity once = apply_signal_loss(rho, 0.48);
    const double semigroup = (ab.rho - once.rho).cwiseAbs().maxCoeff();
    const double trace = std::abs(once.trace() - rho.trace()) / rho.trace();
    return {"signal loss semigroup and trace", semigroup < 1e-10 && trace < 1e-10,
            "semigroup " + sci(semigroup) + ", trace " + sci(trace)};
}

inline CheckResult check_probe_loss() {
    const BranchState s = apply_cross_kerr(make_coherent_product(2.0, 2.0, 40), 0.4);
    const auto twice = apply_probe_loss(apply_probe_loss(s, 0.8), 0.6).decoherence_matrix();
    const auto once = apply_probe_loss(s, 0.48).decoherence_matrix();
    const double err = (twice - once).cwiseAbs().maxCoeff();
    return {"probe loss semigroup", err < 1e-12, "max |dD| " + sci(err)};
}

inline CheckResult check_williamson() {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0, margin = 1.0;
    for (int i = 0; i < 200; ++i) {
        const GaussianState g = GaussianState::squeezed_thermal(1.0 + 3.0 * u(rng), 1.5 * u(rng), M_PI * u(rng));
        const WilliamsonForm w = williamson(g);
        worst = std::max(worst, (w.covariance() - g.cov).cwiseAbs().maxCoeff());
        const GaussianState two = apply_symplectic(tensor(g, GaussianState::thermal(u(rng))),
                                                   beamsplitter_symplectic(u(rng)));
        margin = std::min(margin, uncertainty_margin(two));
    }
    return {"williamson round trip, uncertainty under symplectics", worst < 1e-10 && margin > -1e-10,
            "round trip " + sci(worst) + ", min margin " + sci(margin)};
}

inline CheckResult check_povm() {
    const BranchState s = apply_probe_loss(apply_cross_kerr(make_coherent_product(2.0, 2.0, 40), 0.4), 0.7);
    const double h = 0.1;
    double total = 0.0;
    for (double x = -7.0; x <= 7.0; x += h)
        for (double y = -7.0; y <= 7.0; y += h) total += project_heterodyne(s, {x, y}).trace_raw * h * h;
    return {"heterodyne POVM completeness", std::abs(total - 1.0) < 1e-3, "integral " + sci(total)};
}

inline CheckResult check_sharp_limit() {
    const BranchState s = apply_probe_loss(apply_cross_kerr(make_coherent_product(2.0, 2.0, 40), 0.4), 0.7);
    const complex delta{1.0, 1.2};
    const SignalDensity sharp = project_heterodyne(s, delta);
    const SignalDensity avg = project_heterodyne_averaged(s, {delta, 1e-4, 0.0, 0.0});
    const double err = (sharp.rho - avg.rho).cwiseAbs().maxCoeff() / sharp.rho.cwiseAbs().maxCoeff();
    return {"averaged projection -> sharp projection", err < 1e-6, "relative " + sci(err)};
}

} // namespace detail

/// Quick property checks exercised by `kerrsq selftest`.
inline std::vector<CheckResult> run_selftest() {
    std::vector<std::function<CheckResult()>> checks = {
        detail::check_coherent_click, detail::check_g2_exact, detail::check_signal_loss,
        detail::check_probe_loss,     detail::check_williamson, detail::check_povm,
        detail::check_sharp_limit};
    std::vector<CheckResult> out;
    for (const auto& c : checks) {
        try {
            out.push_back(c());
        } catch (const std::exception& e) {
            out.push_back({"(exception)", false, e.what()});
        }
    }
    return out;
}

} // namespace kerrsq
