#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "channels.hpp"
#include "coherent.hpp"
#include "error.hpp"
#include "kerr_state.hpp"

namespace kerrsq {

/// Variance of the photon-number posterior after a phase measurement of
/// precision sigma on a Poissonian prior with mean m_bar:
/// (m_bar sigma^2 / phi0^2) / (m_bar + sigma^2 / phi0^2).
inline double bayesian_posterior_variance(double m_bar, double sigma, double phi0) {
    if (!(m_bar > 0.0 && sigma > 0.0 && phi0 > 0.0))
        throw config_error("bayesian_posterior_variance: inputs must be > 0");
    const double likelihood_var = (sigma / phi0) * (sigma / phi0);
    return m_bar * likelihood_var / (m_bar + likelihood_var);
}

struct WignerGrid {
    std::vector<double> xs;
    std::vector<double> ps;
    Eigen::MatrixXd values; // values(i, j) = W(xs[i], ps[j])
    bool tail_warning = false;
    std::string warning;

    double min() const { return values.minCoeff(); }

    /// Riemann sum over the (uniform) grid.
    double integral() const {
        if (xs.size() < 2 || ps.size() < 2) return 0.0;
        return values.sum() * (xs[1] - xs[0]) * (ps[1] - ps[0]);
    }
};

/// Wigner function of a Fock density at one phase-space point, via the
/// Laguerre-form recurrence over the |m><n| kernels. O(N^2) per point.
inline double fock_wigner_value(const Eigen::MatrixXcd& rho, double x, double p) {
    const int dim = static_cast<int>(rho.rows());
    const std::complex<double> A{0.5 * x, 0.5 * p};
    std::vector<std::complex<double>> w(static_cast<std::size_t>(dim));
    w[0] = std::exp(-2.0 * std::norm(A)) / std::numbers::pi;
    double acc = rho(0, 0).real() * w[0].real();
    for (int n = 1; n < dim; ++n) {
        w[static_cast<std::size_t>(n)] = 2.0 * A * w[static_cast<std::size_t>(n - 1)] / std::sqrt(double(n));
        acc += 2.0 * std::real(rho(0, n) * w[static_cast<std::size_t>(n)]);
    }
    for (int m = 1; m < dim; ++m) {
        auto idx = [](int i) { return static_cast<std::size_t>(i); };
        std::complex<double> temp = w[idx(m)];
        w[idx(m)] = (2.0 * std::conj(A) * temp - std::sqrt(double(m)) * w[idx(m - 1)]) / std::sqrt(double(m));
        acc += std::real(rho(m, m) * w[idx(m)]);
        for (int n = m + 1; n < dim; ++n) {
            const std::complex<double> next =
                (2.0 * A * w[idx(n - 1)] - std::sqrt(double(m)) * temp) / std::sqrt(double(n));
            temp = w[idx(n)];
            w[idx(n)] = next;
            acc += 2.0 * std::real(rho(m, n) * w[idx(n)]);
        }
    }
    // density per dx dp with x = a + a^dag
    return 0.5 * acc;
}

/// Exact (non-Gaussian) Wigner function of a Fock density on a grid.
/// Flags a tail warning when the grid reaches radii the Fock cutoff cannot
/// represent, or when the state has weight near the cutoff.
inline WignerGrid fock_wigner_grid(const SignalDensity& density, std::vector<double> xs,
                                   std::vector<double> ps) {
    if (xs.empty() || ps.empty()) throw config_error("fock_wigner_grid: empty grid");
    const SignalDensity d = density.normalized();
    WignerGrid out{std::move(xs), std::move(ps), {}, false, {}};
    out.values.resize(static_cast<Eigen::Index>(out.xs.size()), static_cast<Eigen::Index>(out.ps.size()));
    for (std::size_t i = 0; i < out.xs.size(); ++i)
        for (std::size_t j = 0; j < out.ps.size(); ++j)
            out.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                fock_wigner_value(d.rho, out.xs[i], out.ps[j]);

    double r2 = 0.0;
    for (double x : out.xs)
        for (double p : out.ps) r2 = std::max(r2, x * x + p * p);
    const int cutoff = d.cutoff();
    double top = 0.0;
    for (int n = cutoff - std::max(cutoff / 10, 1) + 1; n <= cutoff; ++n) top += d.rho(n, n).real();
    if (r2 / 4.0 > cutoff) {
        out.tail_warning = true;
        out.warning = "grid extent reaches photon number " + std::to_string(r2 / 4.0) +
                      " beyond the Fock cutoff " + std::to_string(cutoff);
    } else if (top > 1e-8) {
        out.tail_warning = true;
        out.warning = "state has weight " + std::to_string(top) + " in the top Fock levels";
    }
    return out;
}

inline std::vector<double> linspace(double lo, double hi, int count) {
    std::vector<double> v(static_cast<std::size_t>(std::max(count, 1)));
    for (int i = 0; i < count; ++i) v[static_cast<std::size_t>(i)] = count == 1 ? lo : lo + (hi - lo) * i / (count - 1);
    return v;
}

struct TwoPeakResult {
    std::vector<complex> amplitudes;
    std::vector<int> peaks;            // ascending Fock index
    std::optional<int> separation;     // between the two largest peaks
    double mean_rotation = 0.0;        // phi0 * beta^2 mod 2 pi
    double selection_angle = 0.0;      // arg(delta) mod 2 pi

    bool has_two_peaks() const { return separation.has_value(); }
};

/// Local maxima of |c_n|^2 above 10% of the global maximum, at least 3 indices apart.
inline std::vector<int> detect_peaks(const std::vector<complex>& amps, double rel_threshold = 0.1,
                                     int min_gap = 3) {
    const int n = static_cast<int>(amps.size());
    std::vector<double> p(amps.size());
    for (std::size_t i = 0; i < amps.size(); ++i) p[i] = std::norm(amps[i]);
    const double pmax = *std::max_element(p.begin(), p.end());
    std::vector<int> cand;
    for (int i = 0; i < n; ++i) {
        const double v = p[static_cast<std::size_t>(i)];
        const double left = i > 0 ? p[static_cast<std::size_t>(i - 1)] : -1.0;
        const double right = i + 1 < n ? p[static_cast<std::size_t>(i + 1)] : -1.0;
        if (v >= rel_threshold * pmax && v >= left && v > right) cand.push_back(i);
    }
    std::sort(cand.begin(), cand.end(), [&](int a, int b) { return p[static_cast<std::size_t>(a)] > p[static_cast<std::size_t>(b)]; });
    std::vector<int> kept;
    for (int c : cand)
        if (std::all_of(kept.begin(), kept.end(), [&](int k) { return std::abs(k - c) >= min_gap; }))
            kept.push_back(c);
    std::sort(kept.begin(), kept.end());
    return kept;
}

/// Lossless, noiseless post-selection of the probe on delta:
/// c_n proportional to <n|beta> <delta|alpha e^{-i phi0 n}>, normalized.
inline TwoPeakResult two_peak_amplitudes(double alpha, double beta, double phi0, complex delta) {
    const BranchState s = apply_cross_kerr(make_coherent_product(alpha, beta, fock_cutoff(beta)), phi0);
    TwoPeakResult out;
    out.amplitudes.resize(s.coeffs.size());
    double norm = 0.0;
    for (std::size_t n = 0; n < s.coeffs.size(); ++n) {
        out.amplitudes[n] = s.coeffs[n] * coherent_overlap(delta, s.probe_amps[n]);
        norm += std::norm(out.amplitudes[n]);
    }
    if (!(norm > 1e-300)) throw empty_bin_error("two_peak_amplitudes: post-selection outcome has zero weight");
    for (auto& c : out.amplitudes) c /= std::sqrt(norm);

    out.peaks = detect_peaks(out.amplitudes);
    if (out.peaks.size() >= 2) {
        std::vector<int> by_height = out.peaks;
        std::sort(by_height.begin(), by_height.end(), [&](int a, int b) {
            return std::norm(out.amplitudes[static_cast<std::size_t>(a)]) >
                   std::norm(out.amplitudes[static_cast<std::size_t>(b)]);
        });
        out.separation = std::abs(by_height[0] - by_height[1]);
    }
    const double two_pi = 2.0 * std::numbers::pi;
    out.mean_rotation = std::fmod(phi0 * beta * beta, two_pi);
    if (out.mean_rotation < 0.0) out.mean_rotation += two_pi;
    out.selection_angle = std::arg(delta);
    if (out.selection_angle < 0.0) out.selection_angle += two_pi;
    return out;
}

/// Phonon coherent amplitude kappa(t) = (4 g / omega_m) sin^2(omega_m t / 2).
inline double phonon_kappa(double g, double omega_m, double t) {
    if (!(omega_m > 0.0)) throw config_error("omega_m must be > 0");
    const double s = std::sin(0.5 * omega_m * t);
    return 4.0 * g / omega_m * s * s;
}

/// Overlap exp(-|M - N|^2 |kappa(t)|^2) between the phonon branches of a
/// (|N> + |M>)/sqrt(2) photon superposition.
inline double optomech_overlap(double g, double omega_m, double t, int N, int M) {
    if (N < 0 || M < 0) throw config_error("photon numbers must be >= 0");
    const double k = phonon_kappa(g, omega_m, t);
    const double dn = static_cast<double>(M - N);
    return std::exp(-dn * dn * k * k);
}

struct OptomechReport {
    double overlap = 1.0;
    double baseline_overlap = 1.0;  // M = 1, N = 0
    double equivalent_g_multiplier = 1.0;
};

inline OptomechReport optomech_report(double g, double omega_m, double t, int N, int M) {
    return {optomech_overlap(g, omega_m, t, N, M), optomech_overlap(g, omega_m, t, 0, 1),
            static_cast<double>(std::abs(M - N))};
}

} // namespace kerrsq
