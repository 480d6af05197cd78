#pragma once

#include <array>
#include <cmath>
#include <string>
#include <string_view>

#include "error.hpp"

namespace kerrsq {

/// One experiment configuration.
///
/// `eta` and `nu` are the signal and probe arm transmissions, `delta_phi`
/// the technical heterodyne phase noise (radians), `epsilon` the width of the
/// post-selection envelope in the heterodyne plane, `p_dark` the dark-count
/// probability per detector and counting window, `phi0` the phase shift per
/// signal photon, and `alpha`/`beta` the real probe and signal amplitudes.
struct Parameters {
    double eta = 1.0;
    double nu = 1.0;
    double delta_phi = 0.0;
    double epsilon = 0.3;
    double p_dark = 0.0;
    double phi0 = 0.0;
    double alpha = 0.0;
    double beta = 0.0;

    void validate() const {
        auto in_unit = [](double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; };
        if (!in_unit(eta)) throw config_error("eta must lie in [0, 1]");
        if (!in_unit(nu)) throw config_error("nu must lie in [0, 1]");
        if (!(std::isfinite(p_dark) && p_dark >= 0.0 && p_dark < 1.0))
            throw config_error("p_dark must lie in [0, 1)");
        if (!(std::isfinite(epsilon) && epsilon > 0.0)) throw config_error("epsilon must be > 0");
        if (!(std::isfinite(delta_phi) && delta_phi >= 0.0 && delta_phi < M_PI))
            throw config_error("delta_phi must lie in [0, pi)");
        if (!std::isfinite(phi0)) throw config_error("phi0 must be finite");
        if (!(std::isfinite(alpha) && alpha >= 0.0)) throw config_error("alpha must be >= 0");
        if (!(std::isfinite(beta) && beta >= 0.0)) throw config_error("beta must be >= 0");
    }

    friend bool operator==(const Parameters&, const Parameters&) = default;
};

inline constexpr std::array<std::string_view, 8> parameter_names = {
    "eta", "nu", "delta_phi", "epsilon", "p_dark", "phi0", "alpha", "beta"};

namespace detail {
template <class P>
auto& parameter_field(P& p, std::string_view name) {
    if (name == "eta") return p.eta;
    if (name == "nu") return p.nu;
    if (name == "delta_phi") return p.delta_phi;
    if (name == "epsilon") return p.epsilon;
    if (name == "p_dark") return p.p_dark;
    if (name == "phi0") return p.phi0;
    if (name == "alpha") return p.alpha;
    if (name == "beta") return p.beta;
    throw config_error("unknown parameter '" + std::string(name) + "'");
}
} // namespace detail

inline double& parameter_ref(Parameters& p, std::string_view name) {
    return detail::parameter_field(p, name);
}

inline double parameter_value(const Parameters& p, std::string_view name) {
    return detail::parameter_field(p, name);
}

// Named parameter sets.
inline Parameters current_set() {
    return {.eta = 0.5, .nu = 0.5, .delta_phi = 0.02, .epsilon = 0.3,
            .p_dark = 0.1, .phi0 = 0.00002, .alpha = 50, .beta = 50};
}

inline Parameters achievable_set() {
    return {.eta = 0.5, .nu = 0.5, .delta_phi = 0.01, .epsilon = 0.3,
            .p_dark = 0.001, .phi0 = 0.00002, .alpha = 70, .beta = 70};
}

inline Parameters optimistic_set() {
    return {.eta = 0.5, .nu = 0.5, .delta_phi = 0.01, .epsilon = 0.3,
            .p_dark = 0.0001, .phi0 = 0.00002, .alpha = 70, .beta = 70};
}

inline Parameters named_set(std::string_view name) {
    if (name == "current") return current_set();
    if (name == "achievable" || name == "optimally-achievable") return achievable_set();
    if (name == "optimistic") return optimistic_set();
    throw config_error("unknown parameter set '" + std::string(name) +
                       "' (expected current|achievable|optimistic)");
}

} // namespace kerrsq
