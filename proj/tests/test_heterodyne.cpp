#include <cmath>

#include <gtest/gtest.h>

#include "kerrsq/heterodyne.hpp"
#include "oracles.hpp"

using namespace kerrsq;

namespace {

BranchState lossy_kerr(double alpha, double beta, double phi0, double nu, int cutoff) {
    return apply_probe_loss(apply_cross_kerr(make_coherent_product(alpha, beta, cutoff), phi0), nu);
}

double max_abs(const Eigen::MatrixXcd& m) { return m.cwiseAbs().maxCoeff(); }

// (1 / 2 pi Delta^2) int exp(-|d - delta|^2 / 2 Delta^2) <d|mu_m><mu_n|d> d^2 d by midpoint quadrature.
complex kernel_by_quadrature(complex mu_m, complex mu_n, complex delta, double Delta) {
    const double half = 8.0 * std::max(Delta, 1.0);
    auto f = [&](double x, double y) {
        const complex d{x, y};
        return std::exp(-std::norm(d - delta) / (2.0 * Delta * Delta)) * coherent_overlap(d, mu_m) *
               coherent_overlap(mu_n, d);
    };
    return oracle::quadrature_2d(f, delta.real() - half, delta.real() + half, delta.imag() - half,
                                 delta.imag() + half, 400) /
           (2.0 * M_PI * Delta * Delta);
}

} // namespace

TEST(EnvelopeWidth, Limits) {
    EXPECT_DOUBLE_EQ(envelope_width(0.3, 0.0, 123.0), 0.3);
    EXPECT_NEAR(envelope_width(0.0, 0.02, 35.0), 35.0 * std::tan(0.01), 1e-15);
    const double noise = 70.0 * std::sqrt(0.5) * std::tan(0.005);
    EXPECT_NEAR(envelope_width(0.3, 0.01, 70.0 * std::sqrt(0.5)), std::sqrt(0.09 + noise * noise), 1e-15);
    EXPECT_NEAR(envelope_width(0.3, 0.01, 70.0 * std::sqrt(0.5)), 0.38891, 1e-5);
    EXPECT_THROW(envelope_width(0.3, M_PI, 1.0), config_error);
}

TEST(Settings, Validation) {
    EXPECT_THROW((HeterodyneSettings{0.0, 0.0, 0.0, 0.0}.validate()), config_error);
    EXPECT_THROW((HeterodyneSettings{0.0, 0.3, -0.1, 0.0}.validate()), config_error);
    EXPECT_THROW((HeterodyneSettings{0.0, 0.3, 0.0, -1.0}.validate()), config_error);
    EXPECT_NO_THROW((HeterodyneSettings{0.0, 0.3, 0.01, 10.0}.validate()));
}

TEST(Kernel, SharpLimitOnOwnBranch) {
    const complex mu{2.0, -1.0};
    EXPECT_NEAR(std::abs(averaged_projection_kernel(mu, mu, mu, 1e-6) - 1.0), 0.0, 1e-6);
    EXPECT_THROW(averaged_projection_kernel(mu, mu, mu, 0.0), config_error);
}

TEST(Kernel, DiagonalMatchesQuadrature) {
    const complex mu{1.0, 0.5}, delta{0.3, 0.2};
    for (double Delta : {0.2, 0.5, 1.3}) {
        const complex k = averaged_projection_kernel(mu, mu, delta, Delta);
        EXPECT_NEAR(k.imag(), 0.0, 1e-15);
        EXPECT_GT(k.real(), 0.0);
        EXPECT_NEAR(std::abs(k - kernel_by_quadrature(mu, mu, delta, Delta)), 0.0, 1e-8) << Delta;
    }
}

TEST(Kernel, OffDiagonalMatchesQuadrature) {
    const complex mu_m{1.0, 0.5}, mu_n{0.6, 0.9}, delta{0.3, 0.2};
    for (double Delta : {0.3, 0.8})
        EXPECT_NEAR(std::abs(averaged_projection_kernel(mu_m, mu_n, delta, Delta) -
                             kernel_by_quadrature(mu_m, mu_n, delta, Delta)),
                    0.0, 1e-8);
}

TEST(Kernel, AveragingWashesOutCoherences) {
    // The sharp kernel factorizes, so its normalized coherence
    // |K_mn| / sqrt(K_mm K_nn) is exactly 1; averaging makes it strictly smaller.
    const double a = std::sqrt(30.0);
    const BranchState s = apply_cross_kerr(make_coherent_product(a, a, fock_cutoff(a)), 0.4);
    const complex delta{-3.41, 2.09};
    auto coherence = [&](int m, int n, double Delta) {
        const complex mm = s.probe_amps[static_cast<std::size_t>(m)];
        const complex mn = s.probe_amps[static_cast<std::size_t>(n)];
        const double lmn = log_projection_kernel(mm, mn, delta, Delta).real();
        const double lmm = log_projection_kernel(mm, mm, delta, Delta).real();
        const double lnn = log_projection_kernel(mn, mn, delta, Delta).real();
        return std::exp(lmn - 0.5 * (lmm + lnn));
    };
    int checked = 0;
    for (int m = 10; m < 50; m += 3)
        for (int n = m + 1; n < 50; n += 5) {
            EXPECT_NEAR(coherence(m, n, 0.0), 1.0, 1e-12);
            const double c = coherence(m, n, 0.3);
            EXPECT_LT(c, 1.0) << m << "," << n;
            EXPECT_LT(coherence(m, n, 0.6), c) << m << "," << n;
            ++checked;
        }
    EXPECT_GT(checked, 20);
}

TEST(Projection, ProductStateKeepsSignal) {
    const BranchState s = make_coherent_product(2.0, 1.5, 40);
    const SignalDensity sharp = project_heterodyne(s, 2.0).normalized();
    const SignalDensity avg = project_heterodyne_averaged(s, {{1.7, 0.4}, 0.3, 0.01, 2.0}).normalized();
    const SignalDensity input = SignalDensity::from_pure(s.coeffs).normalized();
    EXPECT_LT(max_abs(sharp.rho - input.rho), 1e-14);
    EXPECT_LT(max_abs(avg.rho - input.rho), 1e-14);
    EXPECT_NEAR(project_heterodyne(s, 2.0).trace_raw, s.norm() / M_PI, 1e-14);
}

TEST(Projection, HermitianPositive) {
    const BranchState s = lossy_kerr(2.0, 2.0, 0.4, 0.7, 40);
    const SignalDensity rho = project_heterodyne_averaged(s, {{1.0, 1.2}, 0.3, 0.05, 1.5});
    EXPECT_LT(max_abs(rho.rho - rho.rho.adjoint()), 1e-16);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho.normalized().rho);
    EXPECT_GT(es.eigenvalues().minCoeff(), -1e-10);
    EXPECT_NEAR(rho.normalized().trace(), 1.0, 1e-14);
    EXPECT_DOUBLE_EQ(rho.trace_raw, rho.trace());
}

TEST(Projection, FarBinSuppressed) {
    const BranchState s = apply_cross_kerr(make_coherent_product(2.0, 2.0, 40), 0.4);
    const complex delta{9.0, -7.0};
    double nearest = 1e300;
    for (auto mu : s.probe_amps) nearest = std::min(nearest, std::norm(delta - mu));
    EXPECT_LT(project_heterodyne(s, delta).trace_raw, std::exp(-nearest));
    EXPECT_THROW(project_heterodyne(s, {1e3, 0.0}), empty_bin_error);
}

TEST(Projection, SharpLimitOfAveraged) {
    const BranchState s = lossy_kerr(2.0, 2.0, 0.4, 0.7, 40);
    const complex delta{1.0, 1.2};
    const SignalDensity sharp = project_heterodyne(s, delta);
    const SignalDensity avg = project_heterodyne_averaged(s, {delta, 1e-4, 0.0, 0.0});
    EXPECT_LT(max_abs(sharp.rho - avg.rho) / max_abs(sharp.rho), 1e-6);
}

TEST(Projection, BandedMatchesDense) {
    const BranchState s = lossy_kerr(3.0, 2.5, 0.2, 0.6, 50);
    const HeterodyneSettings h{{2.0, -1.0}, 0.3, 0.02, 3.0};
    const SignalDensity dense = project_heterodyne_averaged(s, h);
    const BandedDensity banded = project_heterodyne_banded(s, h, 2);
    const BandedDensity ref = BandedDensity::from_dense(dense, 2);
    for (int j = 0; j <= 2; ++j)
        EXPECT_LT((banded.bands[static_cast<std::size_t>(j)] - ref.bands[static_cast<std::size_t>(j)]).cwiseAbs().maxCoeff(), 1e-16);
    EXPECT_NEAR(banded.trace_raw, dense.trace_raw, 1e-15);
}

TEST(Projection, PovmCompleteness) {
    const BranchState s = lossy_kerr(2.0, 2.0, 0.4, 0.7, 40);
    const double h = 0.1;
    double total = 0.0;
    for (double x = -7.0; x <= 7.0; x += h)
        for (double y = -7.0; y <= 7.0; y += h) total += project_heterodyne(s, {x, y}).trace_raw * h * h;
    EXPECT_NEAR(total, s.norm(), 1e-3);
}

TEST(Postselection, AcceptEverything) {
    const BranchState s = lossy_kerr(5.0, 3.0, 0.1, 0.8, 60);
    EXPECT_NEAR(postselection_probability(s, {1.0, 2.0}, 1e6), 1.0, 1e-6);
    EXPECT_THROW(postselection_probability(s, 0.0, 0.0), config_error);
}

TEST(Postselection, MatchesQuadratureOfHusimi) {
    const BranchState s = lossy_kerr(2.0, 2.0, 0.4, 0.7, 40);
    const complex delta{1.0, 1.2};
    const double eps = 0.3;
    auto f = [&](double x, double y) {
        return complex(project_heterodyne(s, {x, y}).trace_raw *
                       std::exp(-std::norm(complex(x, y) - delta) / (2.0 * eps * eps)));
    };
    const double quad = oracle::quadrature_2d(f, -1.5, 3.5, -1.3, 3.7, 150).real();
    EXPECT_NEAR(postselection_probability(s, delta, eps), quad, 1e-8);
}

TEST(Postselection, MonotoneInEpsilon) {
    const BranchState s = lossy_kerr(6.0, 5.0, 0.05, 0.5, 80);
    const complex delta = s.probe_amps[25];
    double prev = 0.0;
    for (double eps = 0.05; eps <= 3.0; eps += 0.05) {
        const double p = postselection_probability(s, delta, eps);
        EXPECT_GE(p, prev);
        EXPECT_LE(p, 1.0);
        prev = p;
    }
}

TEST(Postselection, GaussianTailOffTheRing) {
    // A single-branch probe displaced radially by r from the bin center:
    // P = 2 eps^2 / s * exp(-r^2 / s), s = 1 + 2 eps^2.
    const BranchState s = make_coherent_product(10.0, 0.0, 5);
    const double eps = 0.3, sfac = 1.0 + 2.0 * eps * eps;
    for (double r : {0.5, 1.5, 3.0, 4.0}) {
        const double expected = 2.0 * eps * eps / sfac * std::exp(-r * r / sfac);
        EXPECT_NEAR(postselection_probability(s, 10.0 + r, eps), expected, 1e-15);
    }
    EXPECT_LT(postselection_probability(s, 13.0, eps), 1e-4);
}
