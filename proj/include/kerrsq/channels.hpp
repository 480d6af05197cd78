#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "coherent.hpp"
#include "error.hpp"
#include "kerr_state.hpp"

namespace kerrsq {

/// Signal-mode density matrix in the Fock basis 0..cutoff.
///
/// `rho` may be unnormalized. `trace_raw` records the trace at the point the
/// state was produced by a post-selection (it carries the outcome density)
/// and survives normalization.
struct SignalDensity {
    Eigen::MatrixXcd rho;
    double trace_raw = 1.0;

    int cutoff() const { return static_cast<int>(rho.rows()) - 1; }
    double trace() const { return rho.trace().real(); }

    SignalDensity normalized() const {
        const double t = trace();
        if (!(t > 0.0)) throw numerical_error("cannot normalize a density with zero trace");
        return {rho / t, trace_raw};
    }

    static SignalDensity from_pure(const std::vector<complex>& amps) {
        Eigen::VectorXcd v(static_cast<Eigen::Index>(amps.size()));
        for (std::size_t i = 0; i < amps.size(); ++i) v(static_cast<Eigen::Index>(i)) = amps[i];
        Eigen::MatrixXcd rho = v * v.adjoint();
        return {rho, rho.trace().real()};
    }

    static SignalDensity fock(int n, int cutoff) {
        Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(cutoff + 1, cutoff + 1);
        rho(n, n) = 1.0;
        return {rho, 1.0};
    }
};

/// The first few super-diagonals of a signal density: band j holds
/// rho[m, m + j] for m = 0..cutoff - j. Sub-diagonals follow by Hermiticity.
/// Sufficient for first and second moments, and closed under photon loss.
struct BandedDensity {
    std::vector<Eigen::VectorXcd> bands;
    double trace_raw = 1.0;

    int cutoff() const { return static_cast<int>(bands.at(0).size()) - 1; }
    int bandwidth() const { return static_cast<int>(bands.size()) - 1; }
    double trace() const { return bands.at(0).real().sum(); }

    BandedDensity normalized() const {
        const double t = trace();
        if (!(t > 0.0)) throw numerical_error("cannot normalize a density with zero trace");
        BandedDensity out = *this;
        for (auto& b : out.bands) b /= t;
        return out;
    }

    static BandedDensity from_dense(const SignalDensity& d, int bandwidth) {
        BandedDensity out;
        out.trace_raw = d.trace_raw;
        const int dim = d.cutoff() + 1;
        for (int j = 0; j <= bandwidth; ++j) {
            Eigen::VectorXcd b = Eigen::VectorXcd::Zero(std::max(dim - j, 0));
            for (int m = 0; m + j < dim; ++m) b(m) = d.rho(m, m + j);
            out.bands.push_back(std::move(b));
        }
        return out;
    }
};

/// Probe loss: a beamsplitter of transmission nu couples the probe to a
/// vacuum environment that is traced out. Branch amplitudes shrink by sqrt(nu)
/// and the environment keeps sqrt(1 - nu) mu_n, which is what decoheres D.
inline BranchState apply_probe_loss(BranchState state, double nu) {
    if (!(nu >= 0.0 && nu <= 1.0)) throw config_error("probe transmission must lie in [0, 1]");
    if (nu == 1.0) return state;
    const double keep = std::sqrt(nu);
    const double leak = std::sqrt(1.0 - nu);
    std::vector<complex> env(state.probe_amps.size());
    for (std::size_t n = 0; n < env.size(); ++n) {
        env[n] = leak * state.probe_amps[n];
        state.probe_amps[n] *= keep;
    }
    state.environment.push_back(std::move(env));
    return state;
}

namespace detail {

/// log of the amplitude-damping Kraus element <n-k|A_k|n>
/// = sqrt(C(n,k) eta^(n-k) (1-eta)^k), for 0 < eta < 1.
struct KrausTable {
    std::vector<double> log_factorial;
    double log_eta;
    double log_loss;

    KrausTable(int cutoff, double eta)
        : log_factorial(static_cast<std::size_t>(cutoff) + 1),
          log_eta(std::log(eta)),
          log_loss(std::log1p(-eta)) {
        for (int n = 0; n <= cutoff; ++n)
            log_factorial[static_cast<std::size_t>(n)] = std::lgamma(n + 1.0);
    }

    double log_amp(int n, int k) const {
        const auto f = [this](int i) { return log_factorial[static_cast<std::size_t>(i)]; };
        return 0.5 * (f(n) - f(k) - f(n - k) + (n - k) * log_eta + k * log_loss);
    }
};

} // namespace detail

/// Amplitude damping with transmission eta: rho -> sum_k A_k rho A_k^dagger.
/// The Kraus sum is exact within the truncation (k runs to the top index).
inline SignalDensity apply_signal_loss(const SignalDensity& in, double eta) {
    if (!(eta >= 0.0 && eta <= 1.0)) throw config_error("signal transmission must lie in [0, 1]");
    if (eta == 1.0) return in;
    const int dim = in.cutoff() + 1;
    SignalDensity out{Eigen::MatrixXcd::Zero(dim, dim), in.trace_raw};
    if (eta == 0.0) {
        out.rho(0, 0) = in.rho.trace();
        return out;
    }
    const detail::KrausTable table(in.cutoff(), eta);
    // amp(k, n) = <n-k|A_k|n>
    Eigen::MatrixXd amp = Eigen::MatrixXd::Zero(dim, dim);
    for (int n = 0; n < dim; ++n)
        for (int k = 0; k <= n; ++k) amp(k, n) = std::exp(table.log_amp(n, k));

    for (int m = 0; m < dim; ++m) {
        for (int n = m; n < dim; ++n) {
            complex acc{};
            for (int k = 0; n + k < dim; ++k)
                acc += amp(k, m + k) * amp(k, n + k) * in.rho(m + k, n + k);
            out.rho(m, n) = acc;
            out.rho(n, m) = std::conj(acc);
        }
    }
    return out;
}

/// Band-restricted amplitude damping. Band j of the output depends only on
/// band j of the input, so no information outside the stored bands is needed.
inline BandedDensity apply_signal_loss(const BandedDensity& in, double eta) {
    if (!(eta >= 0.0 && eta <= 1.0)) throw config_error("signal transmission must lie in [0, 1]");
    if (eta == 1.0) return in;
    const int dim = in.cutoff() + 1;
    BandedDensity out;
    out.trace_raw = in.trace_raw;
    for (const auto& b : in.bands) out.bands.emplace_back(Eigen::VectorXcd::Zero(b.size()));
    if (eta == 0.0) {
        out.bands[0](0) = in.trace();
        return out;
    }
    const detail::KrausTable table(in.cutoff(), eta);
    for (int j = 0; j <= in.bandwidth(); ++j) {
        const auto& src = in.bands[static_cast<std::size_t>(j)];
        auto& dst = out.bands[static_cast<std::size_t>(j)];
        for (int s = 0; s + j < dim; ++s) {
            const complex v = src(s);
            if (v == complex{}) continue;
            // source entry (s, s+j) feeds (s-k, s+j-k) for k = 0..s
            for (int k = 0; k <= s; ++k)
                dst(s - k) += std::exp(table.log_amp(s, k) + table.log_amp(s + j, k)) * v;
        }
    }
    return out;
}

} // namespace kerrsq
