#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "coherent.hpp"
#include "error.hpp"

namespace kerrsq {

/// Two-mode state in coherent-branch form
///
///     rho = sum_{m,n} c_m conj(c_n) D[m,n] |m><n| (x) |mu_m><mu_n|
///
/// with the signal in Fock index m, n and the probe in coherent branch
/// mu_m, mu_n. The decoherence factor D is not stored densely. Every probe
/// loss event leaves behind a traced environment mode whose branch
/// amplitudes are kept in `environment`; D[m,n] is the product of the
/// environment overlaps <e_n|e_m> and is evaluated on demand.
struct BranchState {
    std::vector<complex> coeffs;
    std::vector<complex> probe_amps;
    std::vector<std::vector<complex>> environment;

    int cutoff() const { return static_cast<int>(coeffs.size()) - 1; }

    double norm() const {
        double s = 0.0;
        for (const auto& c : coeffs) s += std::norm(c);
        return s;
    }

    complex log_decoherence(int m, int n) const {
        complex acc{};
        for (const auto& env : environment)
            acc += log_coherent_overlap(env[static_cast<std::size_t>(n)],
                                        env[static_cast<std::size_t>(m)]);
        return acc;
    }

    complex decoherence(int m, int n) const {
        if (environment.empty()) return 1.0;
        return std::exp(log_decoherence(m, n));
    }

    /// Dense D. O(cutoff^2) memory; intended for small cutoffs.
    Eigen::MatrixXcd decoherence_matrix() const {
        const int dim = cutoff() + 1;
        Eigen::MatrixXcd d(dim, dim);
        for (int m = 0; m < dim; ++m)
            for (int n = 0; n < dim; ++n) d(m, n) = decoherence(m, n);
        return d;
    }
};

/// N_max = ceil(beta^2 + k_sigma * beta + 10).
inline int fock_cutoff(double beta, double k_sigma = 8.0) {
    if (!(beta >= 0.0) || !(k_sigma > 0.0))
        throw config_error("fock_cutoff requires beta >= 0 and k_sigma > 0");
    return static_cast<int>(std::ceil(beta * beta + k_sigma * beta + 10.0));
}

/// |beta>|alpha> with the signal expanded in Fock states up to `cutoff`.
/// Throws truncation_error if the dropped Poisson weight exceeds `tolerance`.
inline BranchState make_coherent_product(double alpha, double beta, int cutoff,
                                         double tolerance = 1e-10) {
    if (cutoff < 1) throw config_error("cutoff must be >= 1");
    if (!(alpha >= 0.0) || !(beta >= 0.0))
        throw config_error("coherent amplitudes must be real and >= 0");

    BranchState s;
    s.coeffs = coherent_amplitudes(beta, cutoff);
    s.probe_amps.assign(s.coeffs.size(), complex{alpha, 0.0});

    const double deficit = std::max(0.0, 1.0 - s.norm());
    if (deficit > tolerance)
        throw truncation_error("Fock cutoff " + std::to_string(cutoff) +
                                   " drops signal weight " + std::to_string(deficit),
                               deficit);
    return s;
}

/// exp(-i phi0 n_a n_b): rotates probe branch n by -phi0 * n. Exact.
inline BranchState apply_cross_kerr(BranchState state, double phi0) {
    if (phi0 == 0.0) return state;
    for (std::size_t n = 0; n < state.probe_amps.size(); ++n)
        state.probe_amps[n] *= std::polar(1.0, -phi0 * static_cast<double>(n));
    return state;
}

} // namespace kerrsq
