#include "cma/ma_operator.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>

#include "cma/spectral.hpp"

namespace cma {

namespace {

constexpr double kPi = std::numbers::pi;

using Vec = std::vector<double>;

double dot(Exec ex, const Vec& a, const Vec& b) {
    return reduce_sum(ex, a.size(), [&](std::size_t i) { return a[i] * b[i]; });
}

double norm2(Exec ex, const Vec& a) { return std::sqrt(dot(ex, a, a)); }

struct GmresStats {
    int iterations = 0;
    double rel_residual = 0.0;
};

// Right-preconditioned restarted GMRES for A x = b; x starts at zero.
GmresStats gmres(Exec ex, const std::function<Vec(const Vec&)>& A, const std::function<Vec(const Vec&)>& Pinv,
                 const Vec& b, Vec& x, double rtol, int restart, int max_iter) {
    const std::size_t m = b.size();
    x.assign(m, 0.0);
    GmresStats st;
    const double bnorm = norm2(ex, b);
    if (bnorm == 0.0) return st;
    const double target = rtol * bnorm;
    Vec r = b;
    double beta = bnorm;
    while (st.iterations < max_iter) {
        std::vector<Vec> V;
        V.reserve(restart + 1);
        V.emplace_back(m);
        for_each_point(ex, m, [&](std::size_t i) { V[0][i] = r[i] / beta; });
        std::vector<std::vector<double>> H(restart + 1, std::vector<double>(restart, 0.0));
        std::vector<double> cs(restart, 0.0), sn(restart, 0.0), g(restart + 1, 0.0);
        g[0] = beta;
        int j = 0;
        for (; j < restart && st.iterations < max_iter; ++j) {
            Vec w = A(Pinv(V[j]));
            for (int i = 0; i <= j; ++i) {
                H[i][j] = dot(ex, w, V[i]);
                const double hij = H[i][j];
                const Vec& vi = V[i];
                for_each_point(ex, m, [&](std::size_t k) { w[k] -= hij * vi[k]; });
            }
            H[j + 1][j] = norm2(ex, w);
            ++st.iterations;
            for (int i = 0; i < j; ++i) {
                const double t = cs[i] * H[i][j] + sn[i] * H[i + 1][j];
                H[i + 1][j] = -sn[i] * H[i][j] + cs[i] * H[i + 1][j];
                H[i][j] = t;
            }
            const double den = std::hypot(H[j][j], H[j + 1][j]);
            const double hn = H[j + 1][j];
            cs[j] = den == 0 ? 1.0 : H[j][j] / den;
            sn[j] = den == 0 ? 0.0 : H[j + 1][j] / den;
            H[j][j] = den;
            H[j + 1][j] = 0.0;
            g[j + 1] = -sn[j] * g[j];
            g[j] = cs[j] * g[j];
            if (hn > 0 && std::fabs(g[j + 1]) > target) {
                V.emplace_back(m);
                for_each_point(ex, m, [&](std::size_t k) { V[j + 1][k] = w[k] / hn; });
            } else {
                ++j;
                break;
            }
        }
        std::vector<double> y(j, 0.0);
        for (int i = j - 1; i >= 0; --i) {
            double s = g[i];
            for (int k = i + 1; k < j; ++k) s -= H[i][k] * y[k];
            y[i] = H[i][i] == 0 ? 0.0 : s / H[i][i];
        }
        Vec comb(m, 0.0);
        for (int i = 0; i < j; ++i) {
            const double yi = y[i];
            const Vec& vi = V[i];
            for_each_point(ex, m, [&](std::size_t k) { comb[k] += yi * vi[k]; });
        }
        const Vec dx = Pinv(comb);
        for_each_point(ex, m, [&](std::size_t k) { x[k] += dx[k]; });
        const Vec Ax = A(x);
        for_each_point(ex, m, [&](std::size_t k) { r[k] = b[k] - Ax[k]; });
        const double prev = beta;
        beta = norm2(ex, r);
        st.rel_residual = beta / bnorm;
        if (beta <= target) break;
        // The part of b outside the discrete range (Nyquist content) cannot be reduced.
        if (beta > 0.9 * prev) break;
    }
    return st;
}

void remove_mean(Exec ex, Vec& v) {
    const double mean = reduce_sum(ex, v.size(), [&](std::size_t i) { return v[i]; }) / v.size();
    for_each_point(ex, v.size(), [&](std::size_t i) { v[i] -= mean; });
}

}  // namespace

void AlphaModel::validate() const {
    if (n != 1 && n != 2) throw InputError("alpha: n must be 1 or 2");
    if (!(t >= 0.0 && t <= 1.0)) throw InputError("alpha: t must lie in [0, 1]");
    if (!(eps0 > 0.0)) throw InputError("alpha: eps0 must be positive");
}

GridField AlphaModel::rho(const TorusSpec& spec) const {
    std::vector<double> v(spec.size());
    const double c = t / (kPi * kPi);
    for_each_point(default_exec(), v.size(), [&](std::size_t i) {
        const auto x = spec.coords(i);
        double s = 0.0;
        for (int j = 0; j < spec.n; ++j) s += std::cos(2.0 * kPi * x[2 * j]);
        v[i] = c * s;
    });
    return GridField(spec, std::move(v));
}

GridField AlphaModel::eta(const TorusSpec& spec) const { return -1.0 * rho(spec); }

HermitianFormField AlphaModel::coefficients(const TorusSpec& spec, double eps) const {
    HermitianFormField a(spec);
    for_each_point(default_exec(), a.size(), [&](std::size_t i) {
        const auto x = spec.coords(i);
        a.h11[i] = 1.0 - t * std::cos(2.0 * kPi * x[0]) + eps;
        if (spec.n == 2) a.h22[i] = 1.0 - t * std::cos(2.0 * kPi * x[2]) + eps;
    });
    return a;
}

double AlphaModel::det_value(const Point& x, double eps) const {
    double d = 1.0;
    for (int j = 0; j < n; ++j) d *= 1.0 - t * std::cos(2.0 * kPi * x[2 * j]) + eps;
    return d;
}

AlphaCheck check_alpha(const AlphaModel& alpha, const TorusSpec& spec) {
    alpha.validate();
    AlphaCheck c;
    const auto a = alpha.coefficients(spec);
    c.min_eig = min_eigenvalue(a);
    c.mass = integrate(det_field(a));
    auto norm_at = [&](int N) {
        const TorusSpec sp(spec.n, N);
        const double sh = 0.5 / N;
        const double s = reduce_sum(default_exec(), sp.size(), [&](std::size_t i) {
            Point x = sp.coords(i);
            for (auto& v : x) v += sh;
            return std::pow(alpha.det_value(x), -alpha.eps0);
        });
        return std::pow(s / static_cast<double>(sp.size()), 1.0 / alpha.eps0);
    };
    c.inv_det_norm = norm_at(spec.N);
    c.inv_det_norm_fine = norm_at(2 * spec.N);
    c.refinement_ratio = c.inv_det_norm_fine / c.inv_det_norm;
    c.eps0_admissible = alpha.t < 1.0 || alpha.eps0 < 0.5;
    return c;
}

GridField ma_density(const HermitianFormField& a, const GridField& phi, Exec ex) {
    if (a.spec() != phi.spec()) throw InputError("ma_density: grid mismatch");
    const auto H = complex_hessian(phi);
    const int n = a.spec().n;
    std::vector<double> d(phi.size());
    for_each_point(ex, d.size(), [&](std::size_t i) {
        const HermPoint A = a.at(i), P = H.at(i);
        d[i] = herm::det(n, {A.h11 + P.h11, A.h22 + P.h22, A.re12 + P.re12, A.im12 + P.im12});
    });
    return GridField(phi.spec(), std::move(d));
}

namespace {

HermitianFormField metric(const HermitianFormField& a, const HermitianFormField& Hphi) {
    HermitianFormField G = a;
    G += Hphi;
    return G;
}

}  // namespace

PositivityResult positivity_check(const HermitianFormField& a, const GridField& phi, Exec ex) {
    const auto G = metric(a, complex_hessian(phi));
    PositivityResult r;
    r.min_eig = min_eigenvalue(G, ex);
    r.ok = r.min_eig >= kPositivityMargin;
    return r;
}

GridField linearized_apply(const HermitianFormField& a, const GridField& phi, const GridField& u, Exec ex) {
    const auto G = metric(a, complex_hessian(phi));
    if (min_eigenvalue(G, ex) <= 0.0)
        throw SolverError(SolverError::Kind::singular_metric, "linearized_apply: metric is not positive");
    const auto Hu = complex_hessian(u);
    const int n = a.spec().n;
    std::vector<double> out(u.size());
    for_each_point(ex, out.size(), [&](std::size_t i) { out[i] = herm::inv_contract(n, G.at(i), Hu.at(i)); });
    return GridField(u.spec(), std::move(out));
}

SolveResult solve_ma_detailed(const HermitianFormField& a, const GridField& F_in, const GridField& phi0, double tol,
                              const SolveOptions& opt) {
    const auto& spec = a.spec();
    if (F_in.spec() != spec || phi0.spec() != spec) throw InputError("solve_ma: grid mismatch");
    if (!(tol > 0)) throw InputError("solve_ma: tol must be positive");
    const Exec ex = opt.exec;
    const int n = spec.n;
    const std::size_t m = spec.size();
    if (F_in.min() <= 0.0) throw SolverError(SolverError::Kind::compatibility, "solve_ma: F must be positive");
    const double mass_a = integrate(det_field(a, ex), ex);
    const double mass_F = integrate(F_in, ex);
    if (std::fabs(mass_F - mass_a) > kCompatibilityTol * mass_a)
        throw SolverError(SolverError::Kind::compatibility,
                          "solve_ma: integral of F (" + std::to_string(mass_F) + ") differs from integral of det a (" +
                              std::to_string(mass_a) + ")");
    // Remove the residual mismatch so the discrete problem is exactly compatible.
    Vec logF(m);
    const double lscale = std::log(mass_a / mass_F);
    for_each_point(ex, m, [&](std::size_t i) { logF[i] = std::log(F_in[i]) + lscale; });

    SolveResult res;
    Vec phi = phi0.values();
    remove_mean(ex, phi);
    GridField phiF(spec, phi);
    HermitianFormField Hphi = complex_hessian(phiF);
    {
        const double me = min_eigenvalue(metric(a, Hphi), ex);
        if (me < kPositivityMargin)
            throw SolverError(SolverError::Kind::positivity,
                              "solve_ma: initial guess violates positivity (min eig " + std::to_string(me) + ")");
    }

    Vec detG(m), r(m);
    auto evaluate_state = [&](const HermitianFormField& Hp, Vec& det_out, Vec& r_out, double& min_eig) {
        min_eig = -reduce_max(ex, m, [&](std::size_t i) {
            const HermPoint A = a.at(i), P = Hp.at(i);
            return -herm::min_eig(n, {A.h11 + P.h11, A.h22 + P.h22, A.re12 + P.re12, A.im12 + P.im12});
        });
        if (min_eig < kPositivityMargin) return std::numeric_limits<double>::infinity();
        for_each_point(ex, m, [&](std::size_t i) {
            const HermPoint A = a.at(i), P = Hp.at(i);
            det_out[i] = herm::det(n, {A.h11 + P.h11, A.h22 + P.h22, A.re12 + P.re12, A.im12 + P.im12});
            r_out[i] = std::log(det_out[i]) - logF[i];
        });
        return reduce_max(ex, m, [&](std::size_t i) { return std::fabs(r_out[i]); });
    };

    double me = 0.0;
    double rnorm = evaluate_state(Hphi, detG, r, me);
    res.residual_history.push_back(rnorm);

    while (rnorm > tol) {
        if (res.newton_steps >= opt.max_newton)
            throw SolverError(SolverError::Kind::iteration_cap,
                              "solve_ma: Newton iteration cap reached (residual " + std::to_string(rnorm) + ")");
        const auto G = metric(a, Hphi);
        const double mass_G = reduce_sum(ex, m, [&](std::size_t i) { return detG[i]; });
        const double c = reduce_sum(ex, m, [&](std::size_t i) { return r[i] * detG[i]; }) / mass_G;
        Vec b(m);
        for_each_point(ex, m, [&](std::size_t i) { b[i] = -detG[i] * (r[i] - c); });
        remove_mean(ex, b);

        auto L = [&](const Vec& u) {
            const auto Hu = complex_hessian(GridField(spec, u));
            Vec out(m);
            for_each_point(ex, m, [&](std::size_t i) { out[i] = herm::adj_contract(n, G.at(i), Hu.at(i)); });
            return out;
        };
        auto Pinv = [&](const Vec& v) { return inverse_half_laplacian(GridField(spec, v)).values(); };
        const double eta = std::clamp(0.1 * rnorm, 1e-13, 1e-3);
        Vec delta;
        const auto st = gmres(ex, L, Pinv, b, delta, eta, opt.gmres_restart, opt.gmres_max_iter);
        res.krylov_iterations += st.iterations;
        remove_mean(ex, delta);
        const auto Hdelta = complex_hessian(GridField(spec, delta));

        double lambda = 1.0;
        bool accepted = false, any_positive = false;
        Vec det_try(m), r_try(m);
        HermitianFormField H_try(spec);
        while (lambda >= opt.min_step) {
            H_try = Hdelta;
            H_try *= lambda;
            H_try += Hphi;
            double me_try = 0.0;
            const double rn_try = evaluate_state(H_try, det_try, r_try, me_try);
            if (std::isfinite(rn_try)) any_positive = true;
            if (std::isfinite(rn_try) && rn_try < rnorm) {
                for_each_point(ex, m, [&](std::size_t i) { phi[i] += lambda * delta[i]; });
                remove_mean(ex, phi);
                Hphi = std::move(H_try);
                detG.swap(det_try);
                r.swap(r_try);
                rnorm = rn_try;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        ++res.newton_steps;
        if (!accepted) {
            if (!any_positive)
                throw SolverError(SolverError::Kind::positivity,
                                  "solve_ma: no step length down to 2^-20 keeps a + H phi > 0");
            throw SolverError(SolverError::Kind::iteration_cap,
                              "solve_ma: residual stagnated at " + std::to_string(rnorm));
        }
        res.residual_history.push_back(rnorm);
    }
    // Re-zeroing the mean leaves H phi unchanged, so the residual stands.
    res.phi = GridField(spec, std::move(phi));
    res.residual = rnorm;
    return res;
}

GridField solve_ma(const HermitianFormField& a, const GridField& F, const GridField& phi0, double tol) {
    return solve_ma_detailed(a, F, phi0, tol).phi;
}

GridField poisson_oracle_n1(const HermitianFormField& a, const GridField& F) {
    if (a.spec().n != 1 || F.spec() != a.spec()) throw InputError("poisson_oracle_n1: requires n = 1 and matching grids");
    GridField rhs = F;
    rhs -= GridField(a.spec(), a.h11);
    const double mass_a = integrate(GridField(a.spec(), a.h11));
    if (std::fabs(integrate(rhs)) > 1e-10 * mass_a)
        throw SolverError(SolverError::Kind::compatibility, "poisson_oracle_n1: integral of F differs from that of a");
    return inverse_half_laplacian(rhs);
}

GridField poisson_oracle_n1(const GridField& F) {
    return poisson_oracle_n1(HermitianFormField::identity(F.spec()), F);
}

}  // namespace cma
