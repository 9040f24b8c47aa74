#include <gtest/gtest.h>

#include <cmath>

#include "cma/kernels.hpp"
#include "cma/ma_operator.hpp"
#include "cma/spectral.hpp"

using namespace cma;

namespace {

GridField sample(const TorusSpec& s, double (*f)(const Point&)) {
    GridField g(s);
    for (std::size_t i = 0; i < s.size(); ++i) g.mutable_values()[i] = f(s.coords(i));
    return g;
}

double phi_sep(const Point& x) { return 0.03 * std::cos(2 * M_PI * x[0]) + 0.02 * std::sin(2 * M_PI * (x[2] + x[3])); }
double phi_mixed(const Point& x) {
    return 0.02 * std::cos(2 * M_PI * (x[0] + x[2])) + 0.015 * std::sin(2 * M_PI * (x[1] - x[3]));
}
double phi_n1(const Point& x) { return 0.02 * std::cos(2 * M_PI * x[0]) + 0.005 * std::sin(2 * M_PI * (x[0] + 2 * x[1])); }

}  // namespace

TEST(Alpha, CoefficientsAndChecks) {
    const TorusSpec s(2, 16);
    AlphaModel a{2, 1.0, 0.25};
    const auto A = a.coefficients(s, 0.1);
    const auto x = s.coords(37);
    EXPECT_NEAR(A.at(37).h11, 1.0 - std::cos(2 * M_PI * x[0]) + 0.1, 1e-15);
    EXPECT_NEAR(A.at(37).h22, 1.0 - std::cos(2 * M_PI * x[2]) + 0.1, 1e-15);
    EXPECT_EQ(A.at(37).re12, 0.0);
    // a = I + H(rho).
    auto Hr = complex_hessian(a.rho(s));
    Hr.add_identity(1.0);
    const auto A0 = a.coefficients(s);
    for (std::size_t i = 0; i < s.size(); i += 11) EXPECT_NEAR(Hr.at(i).h11, A0.at(i).h11, 1e-12);
    const auto c = check_alpha(a, s);
    EXPECT_GE(c.min_eig, -1e-12);
    EXPECT_NEAR(c.mass, 1.0, 1e-12);
    EXPECT_TRUE(c.eps0_admissible);
    // Integrable |x|^{-1/2} singularity per sheet: finite, slowly refining.
    EXPECT_TRUE(std::isfinite(c.inv_det_norm_fine));
    EXPECT_LT(c.refinement_ratio, 1.5);
    EXPECT_NEAR(check_alpha(AlphaModel{2, 0.5, 0.25}, s).refinement_ratio, 1.0, 1e-6);
    EXPECT_FALSE(check_alpha(AlphaModel{1, 1.0, 0.6}, TorusSpec(1, 16)).eps0_admissible);
    EXPECT_THROW((AlphaModel{1, 1.5, 0.25}).validate(), InputError);
    GridField eta = a.eta(s);
    eta += a.rho(s);
    EXPECT_EQ(eta.sup_abs(), 0.0);
}

TEST(MaDensity, SeparableProductMatchesDirectDeterminant) {
    const TorusSpec s(2, 16);
    const auto phi = sample(s, phi_sep);
    const auto A = AlphaModel{2, 0.5, 0.25}.coefficients(s, 0.01);
    const auto F = ma_density(A, phi);
    const auto H = complex_hessian(phi);
    for (std::size_t i = 0; i < s.size(); ++i) {
        const auto a = A.at(i), h = H.at(i);
        // Separable phi: the off-diagonal vanishes and the density is a product.
        EXPECT_NEAR(h.re12, 0.0, 1e-13);
        EXPECT_NEAR(F[i], (a.h11 + h.h11) * (a.h22 + h.h22), 1e-12);
    }
}

TEST(MaDensity, PositivityCheck) {
    const TorusSpec s(1, 16);
    const auto A = HermitianFormField::identity(s);
    EXPECT_TRUE(positivity_check(A, sample(s, phi_n1)).ok);
    GridField big = sample(s, phi_n1);
    big *= 20.0;
    const auto r = positivity_check(A, big);
    EXPECT_FALSE(r.ok);
    EXPECT_LT(r.min_eig, 0.0);
    EXPECT_THROW(linearized_apply(A, big, big), SolverError);
}

TEST(Linearized, MatchesDirectionalDerivativeOfLogDet) {
    const TorusSpec s(2, 12);
    const auto phi = sample(s, phi_mixed);
    const auto u = sample(s, phi_sep);
    const auto A = AlphaModel{2, 0.5, 0.25}.coefficients(s, 0.05);
    const auto L = linearized_apply(A, phi, u);
    const double t = 1e-5;
    const auto Fp = ma_density(A, phi + t * u), Fm = ma_density(A, phi + (-t) * u);
    for (std::size_t i = 0; i < s.size(); i += 5)
        EXPECT_NEAR(L[i], (std::log(Fp[i]) - std::log(Fm[i])) / (2 * t), 1e-7);
}

TEST(Solver, N1MatchesPoissonOracle) {
    const TorusSpec s(1, 64);
    const auto A = HermitianFormField::identity(s);
    const auto phi = sample(s, phi_n1);
    const auto F = ma_density(A, phi);
    const auto oracle = poisson_oracle_n1(F);
    const auto r = solve_ma_detailed(A, F, GridField(s), 1e-12);
    GridField d = r.phi;
    d -= oracle;
    EXPECT_LT(d.sup_abs(), 1e-10);
    d = oracle;
    d -= phi;
    EXPECT_LT(d.sup_abs(), 1e-13);
    EXPECT_LE(r.residual, 1e-12);
    EXPECT_NEAR(integrate(r.phi), 0.0, 1e-15);
}

TEST(Solver, N1DegenerateReferenceMatchesOracle) {
    const TorusSpec s(1, 64);
    const auto A = AlphaModel{1, 1.0, 0.25}.coefficients(s, 0.01);
    GridField F(s, 1.01);
    const auto oracle = poisson_oracle_n1(A, F);
    const auto phi = solve_ma(A, F, GridField(s), 1e-12);
    GridField d = phi;
    d -= oracle;
    EXPECT_LT(d.sup_abs(), 1e-10);
}

TEST(Solver, N2ManufacturedRecovery) {
    const TorusSpec s(2, 12);
    const auto A = AlphaModel{2, 0.5, 0.25}.coefficients(s, 0.1);
    const auto phi = sample(s, phi_mixed);
    const auto F = ma_density(A, phi);
    const auto r = solve_ma_detailed(A, F, GridField(s), 1e-12);
    GridField d = r.phi;
    d -= phi;
    EXPECT_LT(d.sup_abs(), 1e-10);
    EXPECT_GE(r.residual_history.size(), 2u);
    for (std::size_t k = 1; k < r.residual_history.size(); ++k)
        EXPECT_LT(r.residual_history[k], r.residual_history[k - 1]);
}

TEST(Solver, RejectsIncompatibleDataAndBadStart) {
    const TorusSpec s(1, 16);
    const auto A = HermitianFormField::identity(s);
    try {
        solve_ma(A, GridField(s, 2.0), GridField(s), 1e-10);
        FAIL() << "expected a compatibility error";
    } catch (const SolverError& e) {
        EXPECT_EQ(e.kind(), SolverError::Kind::compatibility);
    }
    GridField bad = sample(s, phi_n1);
    bad *= 20.0;
    try {
        solve_ma(A, GridField(s, 1.0), bad, 1e-10);
        FAIL() << "expected a positivity error";
    } catch (const SolverError& e) {
        EXPECT_EQ(e.kind(), SolverError::Kind::positivity);
    }
    EXPECT_THROW(solve_ma(A, GridField(s, 1.0), GridField(s), 0.0), InputError);
    EXPECT_THROW(poisson_oracle_n1(GridField(s, 1.5)), SolverError);
}

TEST(Solver, NormalizesWithinCompatibilityTolerance) {
    const TorusSpec s(1, 16);
    const auto A = HermitianFormField::identity(s);
    const auto phi = solve_ma(A, GridField(s, 1.0 + 1e-9), GridField(s), 1e-12);
    EXPECT_LT(phi.sup_abs(), 1e-12);
}

TEST(Solver, IterationCapIsReported) {
    const TorusSpec s(2, 12);
    const auto A = HermitianFormField::identity(s);
    const auto F = ma_density(A, sample(s, phi_mixed));
    SolveOptions o;
    o.max_newton = 1;
    try {
        solve_ma_detailed(A, F, GridField(s), 1e-13, o);
        FAIL() << "expected the cap to trigger";
    } catch (const SolverError& e) {
        EXPECT_EQ(e.kind(), SolverError::Kind::iteration_cap);
    }
}
