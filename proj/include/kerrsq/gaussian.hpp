#pragma once

#include <cmath>
#include <complex>
#include <numbers>

#include <Eigen/Dense>

#include "channels.hpp"
#include "error.hpp"

namespace kerrsq {

// Quadrature convention used throughout the library:
//
//     x = a + a^dagger,   p = -i (a - a^dagger),   [x, p] = 2i
//
// so the vacuum covariance is the identity, a coherent state |gamma> has
// displacement (2 Re gamma, 2 Im gamma), and its mean photon number is |d|^2 / 4.
// Vectors are ordered (x1, p1, x2, p2).

/// Gaussian state of one or two modes: symmetrized covariance matrix and
/// displacement vector.
struct GaussianState {
    Eigen::MatrixXd cov;
    Eigen::VectorXd mean;

    int modes() const { return static_cast<int>(mean.size()) / 2; }

    static GaussianState vacuum(int modes = 1) {
        return {Eigen::MatrixXd::Identity(2 * modes, 2 * modes), Eigen::VectorXd::Zero(2 * modes)};
    }

    static GaussianState coherent(std::complex<double> gamma) {
        GaussianState g = vacuum(1);
        g.mean << 2.0 * gamma.real(), 2.0 * gamma.imag();
        return g;
    }

    static GaussianState thermal(double nbar) {
        return {(2.0 * nbar + 1.0) * Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Zero(2)};
    }

    /// Thermal variance V, squeezing r (x squeezed for r > 0), rotated by theta.
    static GaussianState squeezed_thermal(double V, double r, double theta = 0.0,
                                          std::complex<double> gamma = {});

    double mean_photon_number() const {
        return 0.25 * (cov.trace() + mean.squaredNorm()) - 0.5 * modes();
    }
};

inline Eigen::Matrix2d rotation2(double theta) {
    Eigen::Matrix2d r;
    r << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
    return r;
}

inline GaussianState GaussianState::squeezed_thermal(double V, double r, double theta,
                                                     std::complex<double> gamma) {
    GaussianState g = coherent(gamma);
    const Eigen::Matrix2d R = rotation2(theta);
    g.cov = V * R * Eigen::Vector2d(std::exp(-2.0 * r), std::exp(2.0 * r)).asDiagonal() * R.transpose();
    return g;
}

/// Symplectic form for `modes` modes, block diagonal in [[0, 1], [-1, 0]].
inline Eigen::MatrixXd symplectic_form(int modes) {
    Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(2 * modes, 2 * modes);
    for (int k = 0; k < modes; ++k) {
        omega(2 * k, 2 * k + 1) = 1.0;
        omega(2 * k + 1, 2 * k) = -1.0;
    }
    return omega;
}

inline bool is_symplectic(const Eigen::MatrixXd& S, double tolerance = 1e-10) {
    if (S.rows() != S.cols() || S.rows() % 2 != 0) return false;
    const Eigen::MatrixXd omega = symplectic_form(static_cast<int>(S.rows()) / 2);
    return (S * omega * S.transpose() - omega).cwiseAbs().maxCoeff() <= tolerance;
}

/// Smallest eigenvalue of M + i Omega. Non-negative for physical states.
inline double uncertainty_margin(const GaussianState& g) {
    const Eigen::MatrixXcd h = g.cov.cast<std::complex<double>>() +
                               std::complex<double>(0.0, 1.0) * symplectic_form(g.modes()).cast<std::complex<double>>();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

inline bool is_physical(const GaussianState& g, double tolerance = 1e-8) {
    return (g.cov - g.cov.transpose()).cwiseAbs().maxCoeff() <= tolerance &&
           uncertainty_margin(g) >= -tolerance;
}

/// Single-mode Gaussian state from <a>, <a^2> and <a^dagger a>.
inline GaussianState from_moments(std::complex<double> a, std::complex<double> a2, double n,
                                  double tolerance = 1e-8) {
    const std::complex<double> A = a2 - a * a;
    const double N = n - std::norm(a);
    GaussianState g;
    g.cov.resize(2, 2);
    g.cov << 2.0 * N + 1.0 + 2.0 * A.real(), 2.0 * A.imag(),
             2.0 * A.imag(), 2.0 * N + 1.0 - 2.0 * A.real();
    g.mean.resize(2);
    g.mean << 2.0 * a.real(), 2.0 * a.imag();
    if (!is_physical(g, tolerance))
        throw gaussian_validity_error(
            "second moments violate the uncertainty relation (margin " +
            std::to_string(uncertainty_margin(g)) + "); the Gaussian reduction is invalid here");
    return g;
}

/// Moments of a Fock density, normalized internally.
inline GaussianState moments_from_density(const SignalDensity& density, double tolerance = 1e-8) {
    const SignalDensity d = density.normalized();
    std::complex<double> a{}, a2{};
    double n = 0.0;
    const int dim = d.cutoff() + 1;
    for (int m = 0; m < dim; ++m) {
        n += m * d.rho(m, m).real();
        if (m + 1 < dim) a += std::sqrt(m + 1.0) * d.rho(m + 1, m);
        if (m + 2 < dim) a2 += std::sqrt((m + 1.0) * (m + 2.0)) * d.rho(m + 2, m);
    }
    return from_moments(a, a2, n, tolerance);
}

inline GaussianState moments_from_density(const BandedDensity& density, double tolerance = 1e-8) {
    if (density.bandwidth() < 2) throw config_error("moments need bands 0..2");
    const BandedDensity d = density.normalized();
    std::complex<double> a{}, a2{};
    double n = 0.0;
    const int dim = d.cutoff() + 1;
    for (int m = 0; m < dim; ++m) {
        n += m * d.bands[0](m).real();
        if (m + 1 < dim) a += std::sqrt(m + 1.0) * std::conj(d.bands[1](m));
        if (m + 2 < dim) a2 += std::sqrt((m + 1.0) * (m + 2.0)) * std::conj(d.bands[2](m));
    }
    return from_moments(a, a2, n, tolerance);
}

/// M = V R(theta) diag(e^{2r}, e^{-2r}) R(theta)^T with V >= 1, r >= 0, theta in [0, pi).
struct WilliamsonForm {
    double r = 0.0;
    double V = 1.0;
    double theta = 0.0;

    Eigen::Matrix2d covariance() const {
        const Eigen::Matrix2d R = rotation2(theta);
        return V * R * Eigen::Vector2d(std::exp(2.0 * r), std::exp(-2.0 * r)).asDiagonal() * R.transpose();
    }
};

inline WilliamsonForm williamson(const GaussianState& g) {
    if (g.modes() != 1) throw config_error("williamson: single-mode state required");
    if (!is_physical(g)) throw gaussian_validity_error("williamson: non-physical covariance matrix");
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(Eigen::Matrix2d(g.cov));
    const double lo = es.eigenvalues()(0);
    const double hi = es.eigenvalues()(1);
    WilliamsonForm w;
    w.V = std::sqrt(lo * hi);
    w.r = 0.25 * std::log(hi / lo);
    const Eigen::Vector2d major = es.eigenvectors().col(1);
    w.theta = std::atan2(major(1), major(0));
    if (w.theta < 0.0) w.theta += std::numbers::pi;
    if (w.theta >= std::numbers::pi) w.theta -= std::numbers::pi;
    return w;
}

/// M -> S M S^T, d -> S d.
inline GaussianState apply_symplectic(const GaussianState& g, const Eigen::MatrixXd& S) {
    if (S.rows() != g.cov.rows() || S.cols() != g.cov.cols())
        throw config_error("symplectic matrix dimension mismatch");
    if (!is_symplectic(S)) throw config_error("matrix is not symplectic");
    return {S * g.cov * S.transpose(), S * g.mean};
}

/// Two-mode beamsplitter with cos(theta) = sqrt(T). T = 1 is the identity and
/// T = 0 exchanges the modes (with a pi phase on one of them).
inline Eigen::MatrixXd beamsplitter_symplectic(double transmissivity) {
    if (!(transmissivity >= 0.0 && transmissivity <= 1.0))
        throw config_error("transmissivity must lie in [0, 1]");
    const double c = std::sqrt(transmissivity);
    const double s = std::sqrt(1.0 - transmissivity);
    Eigen::MatrixXd S(4, 4);
    S << c, 0, s, 0,
         0, c, 0, s,
        -s, 0, c, 0,
         0, -s, 0, c;
    return S;
}

/// Single-mode phase rotation a -> a e^{i theta}.
inline Eigen::MatrixXd phase_rotation_symplectic(double theta) {
    return rotation2(theta);
}

inline GaussianState displace(const GaussianState& g, const Eigen::VectorXd& d0) {
    if (d0.size() != g.mean.size()) throw config_error("displacement dimension mismatch");
    return {g.cov, g.mean + d0};
}

/// Direct sum of two single-mode states.
inline GaussianState tensor(const GaussianState& a, const GaussianState& b) {
    const auto na = a.mean.size();
    const auto nb = b.mean.size();
    GaussianState out{Eigen::MatrixXd::Zero(na + nb, na + nb), Eigen::VectorXd(na + nb)};
    out.cov.topLeftCorner(na, na) = a.cov;
    out.cov.bottomRightCorner(nb, nb) = b.cov;
    out.mean << a.mean, b.mean;
    return out;
}

/// Marginal state of one mode (the others traced out).
inline GaussianState reduced(const GaussianState& g, int mode) {
    if (mode < 0 || mode >= g.modes()) throw config_error("mode index out of range");
    return {g.cov.block(2 * mode, 2 * mode, 2, 2), g.mean.segment(2 * mode, 2)};
}

/// Wigner density, normalized to unit integral over (x, p) in this convention:
/// W(r) = exp(-(r - d)^T M^{-1} (r - d) / 2) / ((2 pi)^n sqrt(det M)).
inline double wigner_value(const GaussianState& g, const Eigen::VectorXd& r) {
    const double det = g.cov.determinant();
    if (!(det > 0.0)) throw numerical_error("wigner_value: singular covariance matrix");
    const Eigen::VectorXd dr = r - g.mean;
    const double q = dr.dot(g.cov.ldlt().solve(dr));
    return std::exp(-0.5 * q) / (std::pow(2.0 * std::numbers::pi, g.modes()) * std::sqrt(det));
}

/// <0...0|rho|0...0> = 2^n / sqrt(det(M + I)) exp(-d^T (M + I)^{-1} d / 2).
inline double joint_vacuum_probability(const GaussianState& g) {
    const int n = g.modes();
    if (n < 1 || n > 2) throw config_error("joint_vacuum_probability supports 1 or 2 modes");
    const Eigen::MatrixXd s = g.cov + Eigen::MatrixXd::Identity(2 * n, 2 * n);
    const double q = g.mean.dot(s.ldlt().solve(g.mean));
    return std::pow(2.0, n) / std::sqrt(s.determinant()) * std::exp(-0.5 * q);
}

} // namespace kerrsq
