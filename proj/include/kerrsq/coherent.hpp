#pragma once

#include <cmath>
#include <complex>
#include <vector>

namespace kerrsq {

using complex = std::complex<double>;

/// log <mu|nu> for coherent states, written so that large amplitudes do not
/// cancel catastrophically: Re = -|mu - nu|^2 / 2, Im = Im(conj(mu) nu).
inline complex log_coherent_overlap(complex mu, complex nu) {
    return {-0.5 * std::norm(mu - nu), std::imag(std::conj(mu) * nu)};
}

/// <mu|nu> = exp(-|mu|^2/2 - |nu|^2/2 + conj(mu) nu).
inline complex coherent_overlap(complex mu, complex nu) {
    return std::exp(log_coherent_overlap(mu, nu));
}

/// Fock amplitudes <n|gamma>, n = 0..cutoff, evaluated in log space.
inline std::vector<complex> coherent_amplitudes(complex gamma, int cutoff) {
    std::vector<complex> out(static_cast<std::size_t>(cutoff) + 1, complex{});
    const double r = std::abs(gamma);
    if (r == 0.0) {
        out[0] = 1.0;
        return out;
    }
    const double phase = std::arg(gamma);
    const double log_r = std::log(r);
    for (int n = 0; n <= cutoff; ++n) {
        const double log_mag = -0.5 * r * r + n * log_r - 0.5 * std::lgamma(n + 1.0);
        out[static_cast<std::size_t>(n)] = std::polar(std::exp(log_mag), n * phase);
    }
    return out;
}

} // namespace kerrsq
