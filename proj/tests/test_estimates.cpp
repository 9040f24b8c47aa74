#include <gtest/gtest.h>

#include <cmath>

#include "cma/estimates.hpp"
#include "cma/spectral.hpp"

using namespace cma;

namespace {

GridField sample(const TorusSpec& s, double (*f)(const Point&)) {
    GridField g(s);
    for (std::size_t i = 0; i < s.size(); ++i) g.mutable_values()[i] = f(s.coords(i));
    return g;
}

double phi1(const Point& x) { return 0.02 * std::cos(2 * M_PI * x[0]) + 0.01 * std::sin(2 * M_PI * (x[0] - x[1])); }
double phi2(const Point& x) {
    return 0.015 * std::cos(2 * M_PI * (x[0] + x[2])) + 0.01 * std::sin(2 * M_PI * (x[1] - x[3])) +
           0.01 * std::cos(2 * M_PI * x[3]);
}
double phi2_diag(const Point& x) { return 0.02 * std::cos(2 * M_PI * x[0]) + 0.015 * std::sin(2 * M_PI * x[3]); }

std::vector<ContinuationState> states_with_sup(const TorusSpec& s, const std::vector<double>& sups) {
    std::vector<ContinuationState> out;
    double eps = 0.25;
    for (double v : sups) {
        ContinuationState st;
        st.eps = eps;
        GridField f(s);
        f.mutable_values()[0] = v;
        st.phi = f;
        out.push_back(st);
        eps *= 0.5;
    }
    return out;
}

}  // namespace

TEST(Siu, N1ResidualIsTwoCOverMetric) {
    // n = 1: log q has Laplacian H(f) when f = log q, so lhs equals H(f) / G and the
    // residual reduces to 2 C g0 / G pointwise.
    const TorusSpec s(1, 32);
    const double eps = 0.05, g0 = 1.0 + eps;
    const auto Phi = sample(s, phi1);
    const auto H = complex_hessian(Phi);
    GridField f(s);
    for (std::size_t i = 0; i < s.size(); ++i) f.mutable_values()[i] = std::log((g0 + H.at(i).h11) / g0);
    for (double C : {0.0, 1.5}) {
        const auto r = siu_residual(Phi, f, eps, C);
        for (std::size_t i = 0; i < s.size(); ++i) EXPECT_NEAR(r[i], 2 * C * g0 / (g0 + H.at(i).h11), 1e-6);
    }
}

TEST(Siu, RejectsNonPositiveMetric) {
    const TorusSpec s(1, 16);
    GridField Phi = sample(s, phi1);
    Phi *= 40.0;
    EXPECT_THROW(siu_residual(Phi, GridField(s), 0.1, 0.0), InputError);
}

TEST(Comparison, ClosedFormsAtSimplePoints) {
    const TorusSpec s1(1, 32);
    const double eps = 0.1, g0 = 1.1, C = 2.0;
    const auto Phi = sample(s1, phi1);
    const auto psi = sample(s1, phi1);
    const auto G = complex_hessian(Phi);
    const auto r = comparison_residual(Phi, psi, C, eps);
    for (std::size_t i = 0; i < s1.size(); i += 3) EXPECT_NEAR(r[i], C * g0 / (g0 + G.at(i).h11), 1e-12);

    // n = 2 with Phi = 0: trace(Q) / (2 g0) + 2 C.
    const TorusSpec s2(2, 8);
    const auto psi2 = sample(s2, phi2);
    const auto Q = complex_hessian(psi2);
    const auto r2 = comparison_residual(GridField(s2), psi2, C, eps);
    for (std::size_t i = 0; i < s2.size(); i += 13)
        EXPECT_NEAR(r2[i], (Q.at(i).h11 + Q.at(i).h22) / (2 * g0) + 2 * C, 1e-12);
}

TEST(Comparison, PreconditionOnPsiHessian) {
    const TorusSpec s(2, 8);
    const auto psi = sample(s, phi2);
    EXPECT_THROW(comparison_residual(GridField(s), psi, 0.0), InputError);
    EXPECT_NO_THROW(comparison_residual(GridField(s), psi, 2.0));
}

TEST(TraceIdentity, DefectIsRoundoffForDiagonalAndGeneralPhi) {
    EXPECT_LT(trace_identity_defect(sample(TorusSpec(2, 12), phi2_diag), 0.01), 1e-12);
    EXPECT_LT(trace_identity_defect(sample(TorusSpec(2, 12), phi2), 0.01), 1e-12);
    EXPECT_LT(trace_identity_defect(sample(TorusSpec(1, 32), phi1), 0.2), 1e-12);
}

TEST(MaxPrinciple, ProbeAtZeroPotential) {
    const TorusSpec s(1, 16);
    ContinuationState st;
    st.eps = 0.0;
    st.phi = GridField(s);
    st.Phi = GridField(s);
    GridField psi(s);
    psi.mutable_values()[37] = 0.5;
    const auto p = max_principle_probe(st, psi, 1.0);
    EXPECT_EQ(p.argmax_index, 37u);
    EXPECT_NEAR(p.S_max, 0.5, 1e-15);
    EXPECT_NEAR(p.sum_inverse_at_argmax, 1.0, 1e-15);
    EXPECT_NEAR(p.global_weighted_sup, std::exp(0.5), 1e-14);
}

TEST(WeightedC2, ExcludesPoleNeighbourhood) {
    const TorusSpec s(1, 16);
    GridField psi(s);
    const std::size_t c = s.ravel({8, 8, 0, 0});
    psi.mutable_values()[c] = 3.0;
    psi.mutable_values()[0] = 1.0;
    const std::vector<SingularPoint> centers{{s.coords(c), 1.0}};
    const auto w = weighted_c2(GridField(s), 0.0, psi, 1.0, centers);
    EXPECT_NEAR(w.weighted, std::exp(1.0), 1e-14);
    EXPECT_NEAR(w.unweighted, 1.0, 1e-15);
    EXPECT_NEAR(weighted_c2(GridField(s), 0.0, psi, 1.0, {}).weighted, std::exp(3.0), 1e-13);
}

TEST(Holder, MatchesExactGradientOracle) {
    const TorusSpec s(1, 32);
    const double a = 0.05, gamma = 0.5;
    GridField phi(s);
    std::vector<double> gx(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        const auto x = s.coords(i);
        phi.mutable_values()[i] = a * std::sin(2 * M_PI * x[0]);
        gx[i] = 2 * M_PI * a * std::cos(2 * M_PI * x[0]);
    }
    double best = 0;
    for (int off = 1; off * s.h() <= 0.25 + 1e-12; off *= 2)
        for (std::size_t i = 0; i < s.size(); ++i) {
            auto idx = s.unravel(i);
            idx[0] = (idx[0] + off) % s.N;
            best = std::max(best, std::fabs(gx[i] - gx[s.ravel(idx)]) / std::pow(off * s.h(), gamma));
        }
    EXPECT_NEAR(holder_seminorm(phi, gamma, SingularSet{}, 2 * s.h()), best, 1e-10 * best);
}

TEST(Holder, Preconditions) {
    const TorusSpec s(1, 16);
    const GridField phi(s);
    EXPECT_THROW(holder_seminorm(phi, 0.5, SingularSet{}, 1.5 * s.h()), InputError);
    EXPECT_THROW(holder_seminorm(phi, 1.0, SingularSet{}, 2 * s.h()), InputError);
    SingularSet Y;
    Y.points = {{{0.5, 0.5, 0, 0}, 1.0}};
    EXPECT_THROW(holder_seminorm(phi, 0.5, Y, 2.0), InputError);
}

TEST(Sobolev, ConditionPredicateAndPatchGuard) {
    const TorusSpec s(1, 32);
    const auto phi = sample(s, phi1);
    Patch patch{{0.5, 0.5, 0, 0}, 0.2};
    EXPECT_TRUE(sobolev_holder_probe(phi, 12.0, 0.5, patch, 2.0).condition_ok);
    EXPECT_FALSE(sobolev_holder_probe(phi, 4.0, 0.5, patch, 2.0).condition_ok);
    const auto r = sobolev_holder_probe(phi, 12.0, 0.5, patch, 2.0);
    EXPECT_GT(r.lhs, 0.0);
    EXPECT_GT(r.rhs, 0.0);
    EXPECT_NEAR(r.ratio, r.lhs / r.rhs, 1e-15);
    SingularSet Y;
    Y.points = {{{0.55, 0.5, 0, 0}, 1.0}};
    EXPECT_THROW(sobolev_holder_probe(phi, 12.0, 0.5, patch, 2.0, &Y), InputError);
    EXPECT_THROW(sobolev_holder_probe(phi, 0.5, 0.5, patch, 2.0), InputError);
}

TEST(Trend, SlopeAgainstMinusLogEps) {
    std::vector<double> eps{0.25, 0.125, 0.0625, 0.03125}, v;
    for (double e : eps) v.push_back(3.0 - 2.0 * std::log(e));
    const auto t = trend(eps, v);
    EXPECT_NEAR(t.slope, 2.0, 1e-12);
    EXPECT_DOUBLE_EQ(t.first, v.front());
    EXPECT_DOUBLE_EQ(t.max, v.back());
    EXPECT_DOUBLE_EQ(t.min, v.front());
    EXPECT_EQ(trend({0.1}, {1.0}).slope, 0.0);
}

TEST(Verdicts, C0UniformityOnSyntheticStates) {
    const TorusSpec s(1, 8);
    EXPECT_EQ(c0_uniformity(states_with_sup(s, {1.0, 1.0})).status, Status::inconclusive);
    EXPECT_EQ(c0_uniformity(states_with_sup(s, {1.0, 1.02, 0.99, 1.0})).status, Status::holds);
    const auto bad = c0_uniformity(states_with_sup(s, {1.0, 1.2, 1.4, 1.6}));
    EXPECT_EQ(bad.status, Status::violated);
    ASSERT_TRUE(bad.witness.has_value());
    EXPECT_EQ(bad.witness->rung, 3);
    EXPECT_EQ(to_string(Status::violated), "violated");
}

TEST(Verdicts, ReportOnTrivialScenarioHolds) {
    Scenario sc;
    sc.name = "trivial";
    sc.spec = TorusSpec(1, 16);
    sc.alpha = AlphaModel{1, 0.0, 0.25};
    sc.psi1.n = sc.psi2.n = 1;
    for (double e = 0.0625; e >= 1.0 / 4096; e *= 0.5) sc.eps_schedule.push_back(e);
    sc = enforce_mass_balance(sc);
    sc.C = resolve_constant(sc);
    const auto run = run_continuation(sc);
    ASSERT_FALSE(run.failed) << run.error;
    const auto R = build_report(sc, run.states);
    for (const auto& v : R.verdicts) EXPECT_EQ(v.status, Status::holds) << v.name << ": " << v.detail;
    ASSERT_NE(R.find("delta_vanishing"), nullptr);
    EXPECT_EQ(R.find("no_such_verdict"), nullptr);
    EXPECT_FALSE(R.any(Status::violated));
    EXPECT_EQ(kondrakov_dimension(sc), 2.0);
}
