#pragma once

#include <cmath>
#include <complex>
#include <string>

#include <Eigen/Dense>

#include "channels.hpp"
#include "coherent.hpp"
#include "error.hpp"
#include "kerr_state.hpp"

namespace kerrsq {

/// Noisy, binned heterodyne post-selection on the probe.
///
/// `delta` is the bin center in the heterodyne plane and `epsilon` the width
/// of the Gaussian acceptance envelope. Technical phase noise `delta_phi`
/// scales with the detected amplitude `gamma` and widens the envelope that
/// washes out the conditional state (see envelope_width), but does not change
/// which outcomes are accepted.
struct HeterodyneSettings {
    complex delta{};
    double epsilon = 0.3;
    double delta_phi = 0.0;
    double gamma = 0.0;

    void validate() const {
        if (!(epsilon > 0.0)) throw config_error("epsilon must be > 0");
        if (!(delta_phi >= 0.0 && delta_phi < M_PI)) throw config_error("delta_phi must lie in [0, pi)");
        if (!(gamma >= 0.0)) throw config_error("gamma must be >= 0");
    }

    double width() const;
};

/// Delta = sqrt(epsilon^2 + (gamma tan(delta_phi / 2))^2).
inline double envelope_width(double epsilon, double delta_phi, double gamma) {
    if (!(delta_phi < M_PI)) throw config_error("delta_phi must be < pi");
    return std::hypot(epsilon, gamma * std::tan(0.5 * delta_phi));
}

inline double HeterodyneSettings::width() const {
    return envelope_width(epsilon, delta_phi, gamma);
}

/// log of the Gaussian-averaged projection kernel
///
///     K = (1 / 2 pi Delta^2) int exp(-|d' - delta|^2 / 2 Delta^2) <d'|mu_m><mu_n|d'> d^2 d'
///       = <mu_n|mu_m> exp(-(mu_m - delta) conj(mu_n - delta) / s) / s,  s = 1 + 2 Delta^2.
///
/// Delta = 0 gives the sharp kernel <delta|mu_m><mu_n|delta>.
inline complex log_projection_kernel(complex mu_m, complex mu_n, complex delta, double Delta) {
    const double s = 1.0 + 2.0 * Delta * Delta;
    return log_coherent_overlap(mu_n, mu_m) - (mu_m - delta) * std::conj(mu_n - delta) / s -
           std::log(s);
}

inline complex averaged_projection_kernel(complex mu_m, complex mu_n, complex delta, double Delta) {
    if (!(Delta > 0.0)) throw config_error("envelope width must be > 0");
    return std::exp(log_projection_kernel(mu_m, mu_n, delta, Delta));
}

namespace detail {

inline complex projected_entry(const BranchState& s, int m, int n, complex delta, double Delta) {
    const complex cc = s.coeffs[static_cast<std::size_t>(m)] * std::conj(s.coeffs[static_cast<std::size_t>(n)]);
    if (cc == complex{}) return {};
    const complex lg = s.log_decoherence(m, n) +
                       log_projection_kernel(s.probe_amps[static_cast<std::size_t>(m)],
                                             s.probe_amps[static_cast<std::size_t>(n)], delta, Delta);
    return cc * std::exp(lg) / M_PI;
}

inline SignalDensity project_dense(const BranchState& s, complex delta, double Delta) {
    const int dim = s.cutoff() + 1;
    SignalDensity out{Eigen::MatrixXcd::Zero(dim, dim), 0.0};
    for (int m = 0; m < dim; ++m) {
        out.rho(m, m) = projected_entry(s, m, m, delta, Delta).real();
        for (int n = m + 1; n < dim; ++n) {
            const complex v = projected_entry(s, m, n, delta, Delta);
            out.rho(m, n) = v;
            out.rho(n, m) = std::conj(v);
        }
    }
    out.trace_raw = out.trace();
    if (!(out.trace_raw >= 1e-300))
        throw empty_bin_error("post-selection bin at delta = (" + std::to_string(delta.real()) + ", " +
                              std::to_string(delta.imag()) + ") has vanishing probability");
    return out;
}

} // namespace detail

/// Sharp heterodyne outcome delta: rho_s[m,n] = c_m c_n* D[m,n] <delta|mu_m><mu_n|delta> / pi.
/// Unnormalized; trace_raw is the Husimi density of the probe at delta.
inline SignalDensity project_heterodyne(const BranchState& state, complex delta) {
    return detail::project_dense(state, delta, 0.0);
}

/// Outcome delta averaged over the Gaussian envelope of width settings.width().
inline SignalDensity project_heterodyne_averaged(const BranchState& state,
                                                 const HeterodyneSettings& settings) {
    settings.validate();
    return detail::project_dense(state, settings.delta, settings.width());
}

/// Same as project_heterodyne_averaged but only the bands |m - n| <= bandwidth
/// are formed. O(cutoff * bandwidth) work and memory.
inline BandedDensity project_heterodyne_banded(const BranchState& state,
                                               const HeterodyneSettings& settings,
                                               int bandwidth = 2) {
    settings.validate();
    const double Delta = settings.width();
    const int dim = state.cutoff() + 1;
    BandedDensity out;
    for (int j = 0; j <= bandwidth; ++j) {
        Eigen::VectorXcd b = Eigen::VectorXcd::Zero(std::max(dim - j, 0));
        for (int m = 0; m + j < dim; ++m) b(m) = detail::projected_entry(state, m, m + j, settings.delta, Delta);
        if (j == 0) b = b.real().cast<complex>();
        out.bands.push_back(std::move(b));
    }
    out.trace_raw = out.trace();
    if (!(out.trace_raw >= 1e-300))
        throw empty_bin_error("post-selection bin has vanishing probability");
    return out;
}

/// Probability that an outcome passes the envelope exp(-|d' - delta|^2 / 2 eps^2):
///
///     P = 2 eps^2 / (1 + 2 eps^2) * sum_n |c_n|^2 exp(-|mu_n - delta|^2 / (1 + 2 eps^2)).
///
/// Acceptance is governed by epsilon alone; phase noise only affects the
/// conditional state.
inline double postselection_probability(const BranchState& state, complex delta, double epsilon) {
    if (!(epsilon > 0.0)) throw config_error("epsilon must be > 0");
    const double s = 1.0 + 2.0 * epsilon * epsilon;
    double acc = 0.0;
    for (std::size_t n = 0; n < state.coeffs.size(); ++n)
        acc += std::norm(state.coeffs[n]) * std::exp(-std::norm(state.probe_amps[n] - delta) / s);
    return (2.0 * epsilon * epsilon / s) * acc;
}

} // namespace kerrsq
