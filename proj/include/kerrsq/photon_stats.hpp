#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "channels.hpp"
#include "coherent.hpp"
#include "error.hpp"
#include "gaussian.hpp"

namespace kerrsq {

/// g2(0) = Tr[rho a^dag a^dag a a] / Tr[rho a^dag a]^2 from Fock populations.
inline double g2_exact(const SignalDensity& density) {
    const double tr = density.trace();
    if (!(tr > 0.0)) throw numerical_error("g2_exact: zero trace");
    double n1 = 0.0, n2 = 0.0;
    for (int m = 0; m <= density.cutoff(); ++m) {
        const double p = density.rho(m, m).real() / tr;
        n1 += m * p;
        n2 += m * (m - 1.0) * p;
    }
    if (!(n1 > 1e-300)) throw numerical_error("g2_exact: zero mean photon number");
    return n2 / (n1 * n1);
}

/// Singles and coincidence probabilities of a 50/50 split followed by two
/// click detectors with dark-count probability p_dark each.
struct ClickProbabilities {
    double ca = 0.0; // click on detector 1, anything on 2
    double ac = 0.0;
    double cc = 0.0;

    double g2() const {
        const double singles = ca * ac;
        if (!(singles > 1e-300)) throw numerical_error("g2_click: vanishing singles probability");
        return cc / singles;
    }
};

namespace detail {

/// Combine no-click probabilities conditioned on no dark count.
/// P(cc) = 1 - P(na)P(dbar) - P(an)P(dbar) + P(nn)P(dbar)^2.
inline ClickProbabilities combine_clicks(double p_na, double p_an, double p_nn, double p_dark) {
    if (!(p_dark >= 0.0 && p_dark < 1.0)) throw config_error("p_dark must lie in [0, 1)");
    const double quiet = 1.0 - p_dark;
    ClickProbabilities c;
    c.ca = 1.0 - p_na * quiet;
    c.ac = 1.0 - p_an * quiet;
    c.cc = c.ac - p_na * quiet + p_nn * quiet * quiet;
    return c;
}

} // namespace detail

inline ClickProbabilities click_probabilities(const GaussianState& g, double p_dark) {
    if (g.modes() != 1) throw config_error("click_probabilities: single-mode input required");
    const GaussianState split =
        apply_symplectic(tensor(g, GaussianState::vacuum(1)), beamsplitter_symplectic(0.5));
    return detail::combine_clicks(joint_vacuum_probability(reduced(split, 0)),
                                  joint_vacuum_probability(reduced(split, 1)),
                                  joint_vacuum_probability(split), p_dark);
}

inline double g2_click(const GaussianState& g, double p_dark) {
    return click_probabilities(g, p_dark).g2();
}

/// Click model evaluated directly on Fock populations: a photon reaches a
/// given output of the 50/50 splitter with probability 1/2, so
/// P(na) = P(an) = sum_n p_n 2^-n and P(nn) = p_0.
inline ClickProbabilities click_probabilities(const SignalDensity& density, double p_dark) {
    const double tr = density.trace();
    double none_one = 0.0;
    double half = 1.0;
    for (int n = 0; n <= density.cutoff(); ++n) {
        none_one += density.rho(n, n).real() / tr * half;
        half *= 0.5;
    }
    return detail::combine_clicks(none_one, none_one, density.rho(0, 0).real() / tr, p_dark);
}

inline double g2_click(const SignalDensity& density, double p_dark) {
    return click_probabilities(density, p_dark).g2();
}

namespace detail {

inline int displacement_padding(std::complex<double> gamma) {
    const double r = std::abs(gamma);
    return static_cast<int>(std::ceil(r * r + 8.0 * r + 10.0));
}

/// First `dim_in` columns of D(gamma) in a Fock space of dimension dim_in + padding.
/// <m|D|n> = sqrt(n!/m!) gamma^(m-n) e^{-|gamma|^2/2} L_n^(m-n)(|gamma|^2) for m >= n,
/// and the (-conj(gamma)) counterpart with m and n exchanged; Laguerre values
/// from the forward three-term recurrence, prefactors in log space.
inline Eigen::MatrixXcd displacement_columns(std::complex<double> gamma, int dim_in, int padding) {
    const int dim = dim_in + padding;
    Eigen::MatrixXcd D(dim, dim_in);
    const double x = std::norm(gamma), r = std::abs(gamma);
    const double phase = std::arg(gamma);
    auto laguerre = [x](int n, int a) {
        double prev = 1.0;
        if (n == 0) return prev;
        double cur = 1.0 + a - x;
        for (int k = 1; k < n; ++k) {
            const double next = ((2.0 * k + 1.0 + a - x) * cur - (k + a) * prev) / (k + 1.0);
            prev = cur;
            cur = next;
        }
        return cur;
    };
    for (int n = 0; n < dim_in; ++n)
        for (int m = 0; m < dim; ++m) {
            const int lo = std::min(m, n), d = std::abs(m - n);
            const double log_mag = 0.5 * (std::lgamma(lo + 1.0) - std::lgamma(lo + d + 1.0)) - 0.5 * x +
                                   (d > 0 ? d * std::log(r) : 0.0);
            const double value = d > 0 && r == 0.0 ? 0.0 : std::exp(log_mag) * laguerre(lo, d);
            // m >= n: gamma^d; m < n: (-conj gamma)^d
            const double angle = m >= n ? d * phase : d * (M_PI - phase);
            D(m, n) = std::polar(value, angle);
        }
    return D;
}

} // namespace detail

/// D(gamma) rho D(gamma)^dagger in a Fock space enlarged by `padding` levels
/// (default: enough for the displaced coherent tail).
inline SignalDensity displace_density(const SignalDensity& density, std::complex<double> gamma,
                                      int padding = -1) {
    if (padding < 0) padding = detail::displacement_padding(gamma);
    const Eigen::MatrixXcd D = detail::displacement_columns(gamma, density.cutoff() + 1, padding);
    return {D * density.rho * D.adjoint(), density.trace_raw};
}

/// Diagonal of D(gamma) rho D(gamma)^dagger only, as a density with zero coherences.
inline SignalDensity displaced_populations(const SignalDensity& density, std::complex<double> gamma) {
    const Eigen::MatrixXcd D =
        detail::displacement_columns(gamma, density.cutoff() + 1, detail::displacement_padding(gamma));
    const Eigen::VectorXd pops = (D * density.rho).cwiseProduct(D.conjugate()).rowwise().sum().real();
    return {pops.cast<std::complex<double>>().asDiagonal(), density.trace_raw};
}

/// Result of the displacement optimization.
struct DisplacementOptimum {
    double n_opt = 0.0;      // mean photon number of the coherent part, |d|^2 / 4
    double g2_min = 1.0;
    Eigen::Vector2d axis{1.0, 0.0}; // unit direction of the displacement in (x, p)
    double curvature = 0.0;  // d^2 g2 / d nbar^2 at the optimum
    bool interior = true;    // false if the optimum sits at the upper bracket edge
};

struct DisplacementSearch {
    double n_min = 1e-3;
    double n_max = 4.0;
    int grid_points = 161;
    double tolerance = 1e-4; // on log(nbar)
};

namespace detail {

/// Scan log-spaced nbar, then golden-section refinement around the best grid
/// point. `f(nbar)` is the objective along one axis.
inline DisplacementOptimum minimize_along(const std::function<double(double)>& f,
                                          const DisplacementSearch& opt) {
    const double lo = std::log(opt.n_min);
    const double hi = std::log(opt.n_max);
    const int pts = std::max(opt.grid_points, 5);
    std::vector<double> xs(static_cast<std::size_t>(pts)), ys(xs.size());
    for (int i = 0; i < pts; ++i) {
        xs[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (pts - 1);
        ys[static_cast<std::size_t>(i)] = f(std::exp(xs[static_cast<std::size_t>(i)]));
    }
    const auto best = static_cast<int>(std::min_element(ys.begin(), ys.end()) - ys.begin());
    const double scale = std::max(1.0, std::abs(ys[static_cast<std::size_t>(best)]));
    if (best == 0 && ys[0] < ys[1] - 1e-12 * scale)
        throw numerical_error("displacement optimum lies below the search bracket (nbar < " +
                              std::to_string(opt.n_min) + ")");

    DisplacementOptimum out;
    if (best == pts - 1) {
        out.n_opt = opt.n_max;
        out.g2_min = ys.back();
        out.interior = false;
        return out;
    }
    double a = xs[static_cast<std::size_t>(std::max(best - 1, 0))];
    double b = xs[static_cast<std::size_t>(best + 1)];
    const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - ratio * (b - a), d = a + ratio * (b - a);
    double fc = f(std::exp(c)), fd = f(std::exp(d));
    while (b - a > opt.tolerance) {
        if (fc < fd) {
            b = d; d = c; fd = fc;
            c = b - ratio * (b - a);
            fc = f(std::exp(c));
        } else {
            a = c; c = d; fc = fd;
            d = a + ratio * (b - a);
            fd = f(std::exp(d));
        }
    }
    const double x = 0.5 * (a + b);
    out.n_opt = std::exp(x);
    out.g2_min = f(out.n_opt);
    if (ys[static_cast<std::size_t>(best)] < out.g2_min) {
        out.n_opt = std::exp(xs[static_cast<std::size_t>(best)]);
        out.g2_min = ys[static_cast<std::size_t>(best)];
    }
    const double h = 1e-2 * out.n_opt;
    out.curvature = (f(out.n_opt + h) - 2.0 * out.g2_min + f(out.n_opt - h)) / (h * h);
    return out;
}

inline Eigen::Matrix2d principal_axes(const Eigen::MatrixXd& cov) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(Eigen::Matrix2d(cov.topLeftCorner(2, 2)));
    return es.eigenvectors();
}

} // namespace detail

/// g with its displacement replaced by 2 sqrt(nbar) * axis.
inline GaussianState with_displacement(const GaussianState& g, double nbar, const Eigen::Vector2d& axis) {
    return displace(g, 2.0 * std::sqrt(nbar) * axis.normalized() - g.mean);
}

/// Minimize the click-model g2 over the displacement magnitude, trying both
/// principal axes of the covariance matrix.
inline DisplacementOptimum optimize_displacement(const GaussianState& g, double p_dark,
                                                 const DisplacementSearch& search = {}) {
    if (g.modes() != 1) throw config_error("optimize_displacement: single-mode state required");
    const Eigen::Matrix2d axes = detail::principal_axes(g.cov);
    DisplacementOptimum best;
    best.g2_min = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 2; ++k) {
        const Eigen::Vector2d axis = axes.col(k);
        auto f = [&](double n) { return g2_click(with_displacement(g, n, axis), p_dark); };
        DisplacementOptimum o = detail::minimize_along(f, search);
        o.axis = axis;
        if (o.g2_min < best.g2_min) best = o;
    }
    return best;
}

/// Fock-basis counterpart: the state is displaced in the Fock basis and the
/// click model evaluated on exact populations, bypassing the Gaussian
/// reduction. Axes come from the state's second moments.
inline DisplacementOptimum optimize_displacement(const SignalDensity& density, double p_dark,
                                                 const DisplacementSearch& search = {}) {
    const SignalDensity rho = density.normalized();
    const GaussianState moments = moments_from_density(rho, 1e-6);
    const std::complex<double> mean_amp{0.5 * moments.mean(0), 0.5 * moments.mean(1)};
    const Eigen::Matrix2d axes = detail::principal_axes(moments.cov);
    DisplacementOptimum best;
    best.g2_min = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 2; ++k) {
        const Eigen::Vector2d axis = axes.col(k);
        auto f = [&](double n) {
            const std::complex<double> target = std::sqrt(n) * std::complex<double>(axis(0), axis(1));
            return g2_click(displaced_populations(rho, target - mean_amp), p_dark);
        };
        DisplacementOptimum o = detail::minimize_along(f, search);
        o.axis = axis;
        if (o.g2_min < best.g2_min) best = o;
    }
    return best;
}

} // namespace kerrsq
