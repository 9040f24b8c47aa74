#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <random>

#include "cma/kernels.hpp"
#include "cma/ma_operator.hpp"
#include "cma/spectral.hpp"

using namespace cma;

namespace {

GridField random_field(const TorusSpec& s, unsigned seed, double amp) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-amp, amp);
    std::vector<double> v(s.size());
    for (auto& x : v) x = u(rng);
    return GridField(s, std::move(v));
}

// Smooth, band-limited sample for the operator paths.
GridField smooth_field(const TorusSpec& s) {
    GridField f(s);
    for (std::size_t i = 0; i < f.size(); ++i) {
        const auto x = s.coords(i);
        f.mutable_values()[i] = 0.01 * std::cos(2 * M_PI * (x[0] + x[1])) + 0.008 * std::sin(2 * M_PI * (x[2] - x[3])) +
                                0.005 * std::cos(2 * M_PI * (x[0] + 2 * x[3]));
    }
    return f;
}

// Eigenvalues of [[a, b], [conj b, d]] through the characteristic polynomial.
std::pair<double, double> quadratic_eigs(double a, double d, std::complex<double> b) {
    const double tr = a + d, det = a * d - std::norm(b);
    const double disc = std::sqrt(tr * tr / 4 - det);
    return {tr / 2 - disc, tr / 2 + disc};
}

}  // namespace

TEST(Herm, EigenvaluesMatchCharacteristicPolynomial) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-2, 2);
    for (int k = 0; k < 200; ++k) {
        const HermPoint p{u(rng), u(rng), u(rng), u(rng)};
        const auto [lo, hi] = quadratic_eigs(p.h11, p.h22, {p.re12, p.im12});
        EXPECT_NEAR(herm::min_eig(2, p), lo, 1e-12);
        EXPECT_NEAR(herm::max_eig(2, p), hi, 1e-12);
        EXPECT_NEAR(herm::det(2, p), lo * hi, 1e-10);
    }
}

TEST(Herm, ContractionsAgreeWithExplicitInverse) {
    const HermPoint P{2.0, 3.0, 0.5, -0.25}, Q{1.0, -1.0, 0.3, 0.7};
    // P^{-1} = adj(P) / det(P) with adj = [[p22, -p12], [-conj p12, p11]].
    const std::complex<double> p12(P.re12, P.im12), q12(Q.re12, Q.im12);
    const double det = P.h11 * P.h22 - std::norm(p12);
    // trace(adj(P) Q) = p22 q11 - p12 conj(q12) - conj(p12) q12 + p11 q22.
    const double tr = P.h22 * Q.h11 + P.h11 * Q.h22 - 2 * std::real(p12 * std::conj(q12));
    EXPECT_NEAR(herm::adj_contract(2, P, Q), tr, 1e-14);
    EXPECT_NEAR(herm::inv_contract(2, P, Q), tr / det, 1e-14);
    EXPECT_NEAR(herm::inv_trace(2, P), (P.h11 + P.h22) / det, 1e-14);
}

TEST(Kernels, IntegrateClosedForms) {
    const TorusSpec s(1, 32);
    GridField f(s);
    for (std::size_t i = 0; i < f.size(); ++i) {
        const auto x = s.coords(i);
        f.mutable_values()[i] = 1.0 + std::pow(std::cos(2 * M_PI * x[0]), 2);
    }
    EXPECT_NEAR(integrate(f), 1.5, 1e-14);
    EXPECT_NEAR(lp_norm(GridField(s, -2.0), 3.0), 2.0, 1e-14);
    EXPECT_NEAR(lp_quasi_norm(GridField(s, 4.0), 0.5), 4.0, 1e-13);
    EXPECT_NEAR(log_integral_exp(GridField(s, 800.0)), 800.0, 1e-12);
}

TEST(Kernels, SerialAndParallelAreBitIdentical) {
    const TorusSpec s(2, 16);
    const auto f = random_field(s, 11, 1.0);
    const double a = reduce_sum(Exec::serial, f.size(), [&](std::size_t i) { return f[i]; });
    const double b = reduce_sum(Exec::parallel, f.size(), [&](std::size_t i) { return f[i]; });
    EXPECT_EQ(a, b);
    EXPECT_EQ(integrate(f, Exec::serial), integrate(f, Exec::parallel));
    EXPECT_EQ(lp_norm(f, 2.5, Exec::serial), lp_norm(f, 2.5, Exec::parallel));

    const auto phi = smooth_field(s);
    const auto A = HermitianFormField::identity(s);
    EXPECT_EQ(ma_density(A, phi, Exec::serial).values(), ma_density(A, phi, Exec::parallel).values());
    EXPECT_EQ(linearized_apply(A, phi, f, Exec::serial).values(), linearized_apply(A, phi, f, Exec::parallel).values());
    const auto H = complex_hessian(phi);
    EXPECT_EQ(min_eigenvalue(H, Exec::serial), min_eigenvalue(H, Exec::parallel));
    EXPECT_EQ(det_field(H, Exec::serial).values(), det_field(H, Exec::parallel).values());
}

TEST(Kernels, SolverIsBitIdenticalAcrossExecutionModes) {
    const TorusSpec s(2, 8);
    const auto A = HermitianFormField::identity(s);
    const auto F = ma_density(A, smooth_field(s));
    SolveOptions so, po;
    so.exec = Exec::serial;
    po.exec = Exec::parallel;
    const auto a = solve_ma_detailed(A, F, GridField(s), 1e-11, so);
    const auto b = solve_ma_detailed(A, F, GridField(s), 1e-11, po);
    EXPECT_EQ(a.phi.values(), b.phi.values());
    EXPECT_EQ(a.krylov_iterations, b.krylov_iterations);
}

TEST(Kernels, ExceptionsInsideParallelLoopsPropagate) {
    EXPECT_THROW(for_each_point(Exec::parallel, 1000,
                                [](std::size_t i) {
                                    if (i == 517) throw InputError("boom");
                                }),
                 InputError);
}

TEST(Kernels, NormPreconditions) {
    const TorusSpec s(1, 8);
    EXPECT_THROW(lp_norm(GridField(s, 1.0), 0.5), InputError);
    EXPECT_THROW(lp_quasi_norm(GridField(s, 1.0), 0.0), InputError);
}
