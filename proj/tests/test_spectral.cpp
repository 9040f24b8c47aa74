#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "cma/kernels.hpp"
#include "cma/pluripotential.hpp"
#include "cma/spectral.hpp"

using namespace cma;

namespace {

TrigPoly sample_poly(int n) {
    TrigPoly p;
    p.constant = 0.3;
    if (n == 1) {
        p.terms = {{{1, 0, 0, 0}, 0.2, 0.0}, {{1, 2, 0, 0}, 0.0, -0.1}, {{0, 3, 0, 0}, 0.05, 0.02}};
    } else {
        p.terms = {{{1, 0, 0, 1}, 0.2, 0.1}, {{0, 1, 2, 0}, -0.1, 0.0}, {{1, -1, 1, 1}, 0.0, 0.07}};
    }
    return p;
}

// Central differences on the closed form: sixth order on the diagonal, fourth order mixed.
double fd_second(const TrigPoly& p, Point x, int a, int b, double d) {
    auto f = [&](double sa, double sb) {
        Point y = x;
        y[a] += sa;
        y[b] += sb;
        return p.value(y);
    };
    if (a == b) {
        return (2 * f(3 * d, 0) - 27 * f(2 * d, 0) + 270 * f(d, 0) - 490 * f(0, 0) + 270 * f(-d, 0) - 27 * f(-2 * d, 0) +
                2 * f(-3 * d, 0)) /
               (180 * d * d);
    }
    // Mixed derivative: central cross stencil with one Richardson step.
    auto cross = [&](double e) { return (f(e, e) - f(e, -e) - f(-e, e) + f(-e, -e)) / (4 * e * e); };
    return (4 * cross(d) - cross(2 * d)) / 3;
}

// Complex Hessian (h11, h22, re h12, im h12) from real second derivatives:
// d^2/dz_j dzbar_k = (1/4)[(d_xj d_xk + d_yj d_yk) + i(d_xj d_yk - d_yj d_xk)].
std::array<double, 4> fd_complex_hessian(const TrigPoly& p, const Point& x, int n) {
    const double d = 1e-3;
    auto D = [&](int a, int b) { return fd_second(p, x, a, b, d); };
    std::array<double, 4> h{};
    h[0] = 0.25 * (D(0, 0) + D(1, 1));
    if (n == 2) {
        h[1] = 0.25 * (D(2, 2) + D(3, 3));
        h[2] = 0.25 * (D(0, 2) + D(1, 3));
        h[3] = 0.25 * (D(0, 3) - D(1, 2));
    }
    return h;
}

}  // namespace

TEST(Spectral, ComplexHessianMatchesClosedFormOnTrigPolys) {
    for (int n : {1, 2}) {
        const TorusSpec s(n, n == 1 ? 32 : 12);
        const auto p = sample_poly(n);
        const auto H = complex_hessian(p.sample(s));
        double err = 0;
        for (std::size_t i = 0; i < s.size(); ++i) {
            const auto e = p.complex_hessian(s.coords(i), n);
            const auto q = H.at(i);
            err = std::max({err, std::fabs(q.h11 - e[0]), std::fabs(q.h22 - e[1]), std::fabs(q.re12 - e[2]),
                            std::fabs(q.im12 - e[3])});
        }
        EXPECT_LT(err, 1e-12) << "n = " << n;
    }
}

TEST(Spectral, ComplexHessianMatchesFiniteDifferenceOracle) {
    // The finite-difference path is independent of both the FFT and the closed-form symbols.
    for (int n : {1, 2}) {
        const TorusSpec s(n, n == 1 ? 32 : 12);
        const auto p = sample_poly(n);
        const auto H = complex_hessian(p.sample(s));
        double err = 0;
        for (std::size_t i = 0; i < s.size(); i += 7) {
            const auto e = fd_complex_hessian(p, s.coords(i), n);
            const auto q = H.at(i);
            err = std::max({err, std::fabs(q.h11 - e[0]), std::fabs(q.h22 - e[1]), std::fabs(q.re12 - e[2]),
                            std::fabs(q.im12 - e[3])});
        }
        EXPECT_LT(err, 1e-5) << "n = " << n;
    }
}

TEST(Spectral, LaplacianIntegratesToZero) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    for (int n : {1, 2}) {
        const TorusSpec s(n, 16);
        std::vector<double> v(s.size());
        for (auto& x : v) x = g(rng);
        const GridField f(s, v);
        EXPECT_LE(std::fabs(integrate(half_laplacian(f))), 1e-12 * lp_norm(f, 2.0));
        EXPECT_LE(std::fabs(integrate(flat_laplacian(f))), 1e-12 * lp_norm(f, 2.0));
    }
}

TEST(Spectral, FlatLaplacianIsTraceOfComplexHessian) {
    const TorusSpec s(2, 8);
    const auto f = sample_poly(2).sample(s);
    const auto a = flat_laplacian(f), b = half_laplacian(f);
    for (std::size_t i = 0; i < f.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
}

TEST(Spectral, InverseLaplacianRoundTripsMeanZeroFields) {
    const TorusSpec s(1, 32);
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g;
    std::vector<double> v(s.size());
    for (auto& x : v) x = g(rng);
    GridField f(s, v);
    f += -integrate(f);
    const auto u = inverse_half_laplacian(f);
    EXPECT_NEAR(integrate(u), 0.0, 1e-14);
    const auto back = half_laplacian(u);
    for (std::size_t i = 0; i < f.size(); ++i) EXPECT_NEAR(back[i], f[i], 1e-11);
}

TEST(Spectral, HeatMultiplierOnSingleMode) {
    const TorusSpec s(1, 16);
    TrigPoly p;
    p.terms = {{{2, 1, 0, 0}, 1.0, 0.0}};
    const double eps = 0.01;
    const auto out = heat(p.sample(s), eps);
    const double mult = std::exp(-4 * M_PI * M_PI * eps * 5);
    const auto in = p.sample(s);
    for (std::size_t i = 0; i < out.size(); ++i) EXPECT_NEAR(out[i], mult * in[i], 1e-13);
    EXPECT_THROW(heat(in, -1.0), InputError);
}

TEST(Spectral, GradientOfSingleMode) {
    const TorusSpec s(1, 16);
    TrigPoly p;
    p.terms = {{{1, 3, 0, 0}, 0.0, 1.0}};
    const auto g = gradient(p.sample(s));
    ASSERT_EQ(g.size(), 2u);
    for (std::size_t i = 0; i < s.size(); ++i) {
        const auto x = s.coords(i);
        const double c = std::cos(2 * M_PI * (x[0] + 3 * x[1]));
        EXPECT_NEAR(g[0][i], 2 * M_PI * c, 1e-11);
        EXPECT_NEAR(g[1][i], 6 * M_PI * c, 1e-11);
    }
}

TEST(Spectral, RealHessianUpperTriangleOrder) {
    const TorusSpec s(1, 16);
    TrigPoly p;
    p.terms = {{{1, 2, 0, 0}, 1.0, 0.0}};
    const auto H = real_hessian(p.sample(s));
    ASSERT_EQ(H.size(), 3u);
    const auto x = s.coords(9);
    const double c = std::cos(2 * M_PI * (x[0] + 2 * x[1]));
    const double q = 4 * M_PI * M_PI;
    EXPECT_NEAR(H[0][9], -q * c, 1e-10);
    EXPECT_NEAR(H[1][9], -2 * q * c, 1e-10);
    EXPECT_NEAR(H[2][9], -4 * q * c, 1e-10);
}
