#include "cma/estimates.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <complex>
#include <limits>
#include <sstream>

#include "cma/kernels.hpp"
#include "cma/ma_operator.hpp"
#include "cma/spectral.hpp"

namespace cma {

namespace {

using cplx = std::complex<double>;

struct Eig2 {
    double lam[2];
    cplx v[2][2];  // v[j] is the unit eigenvector for lam[j]
};

Eig2 eig2(const HermPoint& G) {
    Eig2 e;
    const double a = G.h11, d = G.h22;
    const cplx b(G.re12, G.im12);
    const double m = 0.5 * (a + d);
    const double r = std::hypot(0.5 * (a - d), std::abs(b));
    e.lam[0] = m - r;
    e.lam[1] = m + r;
    for (int j = 0; j < 2; ++j) {
        const double lam = e.lam[j];
        cplx c1[2] = {b, cplx(lam - a)};
        cplx c2[2] = {cplx(lam - d), std::conj(b)};
        const double n1 = std::sqrt(std::norm(c1[0]) + std::norm(c1[1]));
        const double n2 = std::sqrt(std::norm(c2[0]) + std::norm(c2[1]));
        if (r == 0.0 || (n1 == 0.0 && n2 == 0.0)) {
            e.v[j][0] = j == 0 ? 1.0 : 0.0;
            e.v[j][1] = j == 0 ? 0.0 : 1.0;
        } else if (n1 >= n2) {
            e.v[j][0] = c1[0] / n1;
            e.v[j][1] = c1[1] / n1;
        } else {
            e.v[j][0] = c2[0] / n2;
            e.v[j][1] = c2[1] / n2;
        }
    }
    return e;
}

// v^* Q v for Hermitian Q.
double quad_form(const HermPoint& Q, const cplx v[2]) {
    const cplx q12(Q.re12, Q.im12);
    return Q.h11 * std::norm(v[0]) + Q.h22 * std::norm(v[1]) + 2.0 * std::real(std::conj(v[0]) * q12 * v[1]);
}

HermitianFormField metric(const GridField& Phi, double eps) {
    auto G = complex_hessian(Phi);
    G.add_identity(1.0 + eps);
    return G;
}

void require_positive(const HermitianFormField& G, const char* who) {
    if (min_eigenvalue(G) <= 0.0) throw InputError(std::string(who) + ": metric is not positive");
}

std::string fmt(double v) {
    std::ostringstream o;
    o.precision(6);
    o << v;
    return o.str();
}

std::vector<unsigned char> away_from_centers(const TorusSpec& spec, const std::vector<SingularPoint>& centers,
                                             double radius) {
    std::vector<unsigned char> mask(spec.size(), 1);
    if (centers.empty()) return mask;
    const double r2 = radius * radius;
    for_each_point(default_exec(), mask.size(), [&](std::size_t i) {
        const auto x = spec.coords(i);
        for (const auto& c : centers)
            if (periodic_dist2(x, c.center, spec.real_dim()) <= r2) {
                mask[i] = 0;
                break;
            }
    });
    return mask;
}

}  // namespace

std::string to_string(Status s) {
    switch (s) {
        case Status::holds: return "holds";
        case Status::violated: return "violated";
        case Status::inconclusive: return "inconclusive";
    }
    return "?";
}

SiuParts siu_parts(const GridField& Phi, const GridField& f, double eps, double C) {
    const auto& spec = Phi.spec();
    const int n = spec.n;
    const double g0 = 1.0 + eps;
    const auto G = metric(Phi, eps);
    require_positive(G, "siu_residual");
    std::vector<double> q(Phi.size());
    for (std::size_t i = 0; i < q.size(); ++i) {
        q[i] = herm::trace(n, G.at(i)) / g0;
        if (!(q[i] > 0)) throw InputError("siu_residual: n + Delta Phi <= 0");
    }
    std::vector<double> logq(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) logq[i] = std::log(q[i]);
    const auto Hl = complex_hessian(GridField(spec, std::move(logq)));
    const auto lapf = half_laplacian(f);
    SiuParts p{GridField(spec), GridField(spec)};
    auto& L = p.lhs.mutable_values();
    auto& R = p.rhs.mutable_values();
    for_each_point(default_exec(), q.size(), [&](std::size_t i) {
        const HermPoint Gi = G.at(i);
        L[i] = herm::inv_contract(n, Gi, Hl.at(i));
        R[i] = (lapf[i] / g0 - C) / q[i] - C * g0 * herm::inv_trace(n, Gi);
    });
    return p;
}

GridField siu_residual(const GridField& Phi, const GridField& f, double eps, double C) {
    auto p = siu_parts(Phi, f, eps, C);
    p.lhs -= p.rhs;
    return p.lhs;
}

GridField comparison_residual(const GridField& Phi, const GridField& psi, double C, double eps) {
    const auto& spec = Phi.spec();
    const int n = spec.n;
    const double g0 = 1.0 + eps;
    const auto Hpsi = complex_hessian(psi);
    {
        auto A = Hpsi;
        A.add_identity(C);
        const double me = min_eigenvalue(A);
        if (me < -kMinEigTol)
            throw InputError("comparison_residual: C I + H(psi) has eigenvalue " + fmt(me) + " < -1e-8");
    }
    const auto G = metric(Phi, eps);
    require_positive(G, "comparison_residual");
    std::vector<double> out(Phi.size());
    for_each_point(default_exec(), out.size(), [&](std::size_t i) {
        const HermPoint Gi = G.at(i), Qi = Hpsi.at(i);
        double lhs, inv_tr, q;
        if (n == 1) {
            lhs = Qi.h11 / Gi.h11;
            inv_tr = 1.0 / Gi.h11;
            q = Gi.h11 / g0;
        } else {
            const Eig2 e = eig2(Gi);
            lhs = quad_form(Qi, e.v[0]) / e.lam[0] + quad_form(Qi, e.v[1]) / e.lam[1];
            inv_tr = 1.0 / e.lam[0] + 1.0 / e.lam[1];
            q = (e.lam[0] + e.lam[1]) / g0;
        }
        const double lap_eps = herm::trace(n, Qi) / g0;
        out[i] = lhs - (lap_eps / q - C * g0 * inv_tr);
    });
    return GridField(spec, std::move(out));
}

double trace_identity_defect(const GridField& Phi, double eps) {
    const auto& spec = Phi.spec();
    const int n = spec.n;
    const double g0 = 1.0 + eps;
    const auto g0I = HermitianFormField::identity(spec, g0);
    const GridField lhs = linearized_apply(g0I, Phi, Phi);
    const auto G = metric(Phi, eps);
    return reduce_max(default_exec(), Phi.size(), [&](std::size_t i) {
        const HermPoint Gi = G.at(i);
        double s;
        if (n == 1) {
            s = g0 / Gi.h11;
        } else {
            const double m = 0.5 * (Gi.h11 + Gi.h22);
            const double r = std::hypot(0.5 * (Gi.h11 - Gi.h22), std::hypot(Gi.re12, Gi.im12));
            s = g0 / (m - r) + g0 / (m + r);
        }
        return std::fabs(lhs[i] - (n - s));
    });
}

MaxPrincipleProbe max_principle_probe(const ContinuationState& st, const GridField& psi2_eps, double C) {
    const auto& spec = st.Phi.spec();
    const int n = spec.n;
    const double g0 = 1.0 + st.eps;
    const auto G = metric(st.Phi, st.eps);
    MaxPrincipleProbe r;
    r.S_max = -std::numeric_limits<double>::infinity();
    r.global_weighted_sup = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < st.Phi.size(); ++i) {
        const double q = herm::trace(n, G.at(i)) / g0;
        if (!(q > 0)) throw InputError("max_principle_probe: n + Delta Phi <= 0");
        const double S = -2.0 * C * st.Phi[i] + psi2_eps[i] + std::log(q);
        if (S > r.S_max) {
            r.S_max = S;
            r.argmax_index = i;
        }
        r.global_weighted_sup = std::max(r.global_weighted_sup, q * std::exp(psi2_eps[i] - 2.0 * C * st.Phi[i]));
    }
    r.argmax = spec.coords(r.argmax_index);
    r.sum_inverse_at_argmax = g0 * herm::inv_trace(n, G.at(r.argmax_index));
    return r;
}

WeightedC2 weighted_c2(const GridField& Phi, double eps, const GridField& psi2hat, double C,
                       const std::vector<SingularPoint>& centers) {
    const auto& spec = Phi.spec();
    const int n = spec.n;
    const double g0 = 1.0 + eps;
    const auto G = metric(Phi, eps);
    const auto mask = away_from_centers(spec, centers, spec.h() * (1.0 + 1e-9));
    WeightedC2 w;
    w.weighted = reduce_max(default_exec(), Phi.size(), [&](std::size_t i) {
        if (!mask[i]) return -std::numeric_limits<double>::infinity();
        const double q = herm::trace(n, G.at(i)) / g0;
        return q * std::exp(psi2hat[i] - 2.0 * C * Phi[i]);
    });
    w.unweighted = reduce_max(default_exec(), Phi.size(), [&](std::size_t i) {
        if (!mask[i]) return -std::numeric_limits<double>::infinity();
        return herm::trace(n, G.at(i)) / g0;
    });
    return w;
}

namespace {

// Max of |grad(x) - grad(x + 2^k h e_a)| / (2^k h)^gamma over points where mask is set for both ends.
double stencil_holder(const std::vector<GridField>& grad, double gamma, const std::vector<unsigned char>& mask,
                      bool& any_pair) {
    const auto& spec = grad[0].spec();
    const int D = spec.real_dim();
    const int N = spec.N;
    double best = 0.0;
    any_pair = false;
    for (int off = 1; off * spec.h() <= 0.25 + 1e-12; off *= 2) {
        const double denom = std::pow(off * spec.h(), gamma);
        for (int ax = 0; ax < D; ++ax) {
            bool pair_here = false;
            const double v = reduce_max(default_exec(), spec.size(), [&](std::size_t i) {
                if (!mask[i]) return 0.0;
                auto idx = spec.unravel(i);
                idx[ax] = (idx[ax] + off) % N;
                const std::size_t j = spec.ravel(idx);
                if (!mask[j]) return 0.0;
                double s = 0.0;
                for (int c = 0; c < D; ++c) {
                    const double d = grad[c][i] - grad[c][j];
                    s += d * d;
                }
                return std::sqrt(s) / denom;
            });
            for (std::size_t i = 0; i < spec.size() && !pair_here; ++i) {
                if (!mask[i]) continue;
                auto idx = spec.unravel(i);
                idx[ax] = (idx[ax] + off) % N;
                if (mask[spec.ravel(idx)]) pair_here = true;
            }
            any_pair = any_pair || pair_here;
            best = std::max(best, v);
        }
    }
    return best;
}

}  // namespace

double holder_seminorm(const GridField& phi, double gamma, const SingularSet& Y, double exclusion_radius) {
    const auto& spec = phi.spec();
    if (!(gamma > 0 && gamma < 1)) throw InputError("holder_seminorm: gamma must lie in (0, 1)");
    if (exclusion_radius < 2.0 * spec.h() * (1.0 - 1e-12))
        throw InputError("holder_seminorm: exclusion radius must be >= 2h");
    std::vector<unsigned char> mask(spec.size(), 1);
    if (!Y.points.empty()) {
        const double r2 = exclusion_radius * exclusion_radius * (1.0 - 1e-12);
        for_each_point(default_exec(), mask.size(), [&](std::size_t i) {
            const auto x = spec.coords(i);
            for (const auto& p : Y.points)
                if (periodic_dist2(x, p.center, spec.real_dim()) < r2) {
                    mask[i] = 0;
                    break;
                }
        });
    }
    bool any = false;
    const auto g = gradient(phi);
    const double v = stencil_holder(g, gamma, mask, any);
    if (!any) throw InputError("holder_seminorm: exclusion covers the whole grid");
    return v;
}

SobolevHolder sobolev_holder_probe(const GridField& phi, double q, double gamma, const Patch& patch, double d,
                                   const SingularSet* Y) {
    const auto& spec = phi.spec();
    const int D = spec.real_dim();
    if (!(q >= 1)) throw InputError("sobolev_holder_probe: q must be >= 1");
    if (!(gamma > 0 && gamma < 1)) throw InputError("sobolev_holder_probe: gamma must lie in (0, 1)");
    auto inside = [&](const Point& x) {
        for (int a = 0; a < D; ++a)
            if (std::fabs(wrap_delta(x[a] - patch.center[a])) > patch.halfwidth + 1e-12) return false;
        return true;
    };
    if (Y)
        for (const auto& p : Y->points)
            if (inside(p.center)) throw InputError("sobolev_holder_probe: patch contains a singular point");
    std::vector<unsigned char> mask(spec.size());
    for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = inside(spec.coords(i)) ? 1 : 0;
    SobolevHolder r;
    bool any = false;
    r.lhs = stencil_holder(gradient(phi), gamma, mask, any);
    const auto Hr = real_hessian(phi);
    const double s = reduce_sum(default_exec(), spec.size(), [&](std::size_t i) {
        if (!mask[i]) return 0.0;
        double f2 = 0.0;
        int c = 0;
        for (int x = 0; x < D; ++x)
            for (int y = x; y < D; ++y, ++c) f2 += (x == y ? 1.0 : 2.0) * Hr[c][i] * Hr[c][i];
        return std::pow(std::sqrt(f2), q);
    });
    r.rhs = std::pow(s / static_cast<double>(spec.size()) * TorusSpec::volume(), 1.0 / q);
    r.ratio = r.rhs > 0 ? r.lhs / r.rhs : 0.0;
    r.condition_ok = q * (1.0 - gamma) > d;
    return r;
}

double kondrakov_dimension(const Scenario& sc) {
    return sc.estimates.kondrakov_d > 0 ? sc.estimates.kondrakov_d : 2.0 * sc.spec.n;
}

SingularSet holder_singular_set(const Scenario& sc, double gamma, double d) {
    return singular_set(sc.psi2, d / (1.0 - gamma));
}

Patch default_patch(const Scenario& sc) {
    Patch p;
    p.center = sc.estimates.patch_center;
    p.halfwidth = sc.estimates.patch_halfwidth;
    if (p.halfwidth < 0) {
        const auto centers = pole_centers(sc.psi2);
        if (!centers.empty()) {
            for (int a = 0; a < 4; ++a) p.center[a] = std::fmod(centers[0].center[a] + 0.5, 1.0);
            p.halfwidth = 0.125;
        } else {
            p.halfwidth = 0.25;
        }
    }
    return p;
}

RungDiagnostics rung_diagnostics(const Scenario& sc, const ContinuationState& st, const RegularizedData& rd) {
    const auto& spec = sc.spec;
    const int n = spec.n;
    const double eps = st.eps;
    const double g0 = 1.0 + eps;
    RungDiagnostics dg;
    dg.sup_phi = st.phi.sup_abs();

    const auto centers = pole_centers(sc.psi2);
    const GridField psi2hat = evaluate(sc.psi2, spec, 0.0);
    const auto w = weighted_c2(st.Phi, eps, psi2hat, sc.C, centers);
    dg.weighted_c2 = w.weighted;
    dg.unweighted_c2 = w.unweighted;

    const auto mp = max_principle_probe(st, rd.psi2_eps, sc.C);
    dg.argmax = mp.argmax;
    dg.S_max = mp.S_max;
    dg.sum_inverse_at_argmax = mp.sum_inverse_at_argmax;
    dg.mp_weighted_sup = mp.global_weighted_sup;

    GridField f = st.F;
    for (auto& v : f.mutable_values()) v = std::log(v) - n * std::log(g0);
    const auto parts = siu_parts(st.Phi, f, eps, sc.estimates.siu_C);
    dg.siu_min = std::numeric_limits<double>::infinity();
    double scale = 1.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double r = parts.lhs[i] - parts.rhs[i];
        scale = std::max(scale, std::fabs(parts.lhs[i]));
        if (r < dg.siu_min) {
            dg.siu_min = r;
            dg.siu_argmin = spec.coords(i);
        }
    }
    dg.siu_scale = scale;

    const auto cr = comparison_residual(st.Phi, rd.psi2_eps, sc.C, eps);
    const std::size_t ci = static_cast<std::size_t>(std::min_element(cr.values().begin(), cr.values().end()) -
                                                    cr.values().begin());
    dg.comparison_min = cr[ci];
    dg.comparison_argmin = spec.coords(ci);

    dg.trace_defect = trace_identity_defect(st.Phi, eps);

    {
        const auto lhs = ma_density(HermitianFormField::identity(spec, g0), st.Phi);
        const auto rhs = ma_density(sc.alpha.coefficients(spec, eps), st.phi);
        double m = 0.0;
        for (std::size_t i = 0; i < lhs.size(); ++i) m = std::max(m, std::fabs(lhs[i] - rhs[i]));
        dg.shift_defect = m;
    }

    dg.psi1_laplacian_floor = std::max(0.0, -half_laplacian(rd.psi1_eps).min());

    const double d = kondrakov_dimension(sc);
    for (double gamma : sc.estimates.gammas) {
        const auto Y = holder_singular_set(sc, gamma, d);
        for (double rh : sc.estimates.exclusion_radii)
            dg.holder.push_back({gamma, rh, holder_seminorm(st.phi, gamma, Y, rh * spec.h())});
    }
    if (!sc.estimates.gammas.empty()) {
        const double gamma = sc.estimates.gammas.front();
        const auto Y = holder_singular_set(sc, gamma, d);
        const auto sh = sobolev_holder_probe(st.phi, sc.estimates.kondrakov_q, gamma, default_patch(sc), d, &Y);
        dg.sobolev_lhs = sh.lhs;
        dg.sobolev_rhs = sh.rhs;
        dg.sobolev_condition_ok = sh.condition_ok;
    }
    return dg;
}

TrendFit trend(const std::vector<double>& eps, const std::vector<double>& v) {
    TrendFit t;
    if (v.empty()) return t;
    t.first = v.front();
    t.last = v.back();
    t.min = *std::min_element(v.begin(), v.end());
    t.max = *std::max_element(v.begin(), v.end());
    const std::size_t m = v.size();
    if (m < 2) return t;
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < m; ++i) {
        mx += -std::log(eps[i]);
        my += v[i];
    }
    mx /= m;
    my /= m;
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < m; ++i) {
        const double x = -std::log(eps[i]) - mx;
        sxy += x * (v[i] - my);
        sxx += x * x;
    }
    t.slope = sxx > 0 ? sxy / sxx : 0.0;
    return t;
}

namespace {

constexpr double kC0Variation = 0.25;
constexpr double kC0Slope = 0.01;
constexpr double kC2Band = 2.0;
constexpr double kMaxPrincipleGrowth = 1.25;
constexpr double kComparisonTol = 1e-8;
constexpr double kTraceTol = 1e-10;
constexpr double kMeanTol = 1e-10;

Verdict make(const std::string& name, Status s, const std::string& detail) {
    Verdict v;
    v.name = name;
    v.status = s;
    v.detail = detail;
    return v;
}

Witness witness_at(int rung, std::vector<std::pair<std::string, double>> values, std::optional<Point> pt = {}) {
    Witness w;
    w.rung = rung;
    w.values = std::move(values);
    w.point = pt;
    return w;
}

std::vector<double> eps_of(const std::vector<ContinuationState>& states) {
    std::vector<double> e;
    for (const auto& s : states) e.push_back(s.eps);
    return e;
}

}  // namespace

Verdict c0_uniformity(const std::vector<ContinuationState>& states) {
    if (states.size() < 3) return make("c0_uniformity", Status::inconclusive, "fewer than three rungs");
    std::vector<double> v;
    for (const auto& s : states) v.push_back(s.phi.sup_abs());
    const auto t = trend(eps_of(states), v);
    const double band = kC0Variation * t.first + 1e-12;
    int worst = 0;
    double worst_dev = -1;
    for (std::size_t k = 0; k < v.size(); ++k)
        if (std::fabs(v[k] - t.first) > worst_dev) {
            worst_dev = std::fabs(v[k] - t.first);
            worst = static_cast<int>(k);
        }
    const bool ok = worst_dev <= band && t.max <= (1.0 + kC0Variation) * t.first + 1e-12 && t.slope <= kC0Slope;
    Verdict out = make("c0_uniformity", ok ? Status::holds : Status::violated,
                       "sup|phi| first " + fmt(t.first) + ", max " + fmt(t.max) + ", slope " + fmt(t.slope) +
                           " per e-fold");
    if (!ok) out.witness = witness_at(worst, {{"sup_phi", v[worst]}, {"first", t.first}, {"slope", t.slope}});
    return out;
}

Verdict c2_uniformity(const std::vector<ContinuationState>& states, const QuasiPshModel& psi2, const AlphaModel& alpha,
                      double C) {
    if (states.size() < 3) return make("c2_uniformity", Status::inconclusive, "fewer than three rungs");
    const auto& spec = states.front().phi.spec();
    const GridField psi2hat = evaluate(psi2, spec, 0.0);
    const auto centers = pole_centers(psi2);
    std::vector<double> W;
    for (const auto& s : states) W.push_back(weighted_c2(shift_potential(s, alpha), s.eps, psi2hat, C, centers).weighted);
    const auto t = trend(eps_of(states), W);
    int bad = -1;
    for (std::size_t k = 0; k < W.size(); ++k)
        if (W[k] > kC2Band * t.first || W[k] < t.first / kC2Band) {
            bad = static_cast<int>(k);
            break;
        }
    Verdict out = make("c2_uniformity", bad < 0 ? Status::holds : Status::violated,
                       "weighted sup first " + fmt(t.first) + ", range [" + fmt(t.min) + ", " + fmt(t.max) +
                           "], slope " + fmt(t.slope));
    if (bad >= 0) out.witness = witness_at(bad, {{"weighted_c2", W[bad]}, {"first", t.first}});
    return out;
}

const Verdict* EstimateReport::find(const std::string& name) const {
    for (const auto& v : verdicts)
        if (v.name == name) return &v;
    return nullptr;
}

bool EstimateReport::any(Status s) const {
    return std::any_of(verdicts.begin(), verdicts.end(), [s](const Verdict& v) { return v.status == s; });
}

EstimateReport build_report(const Scenario& sc, const std::vector<ContinuationState>& states) {
    EstimateReport R;
    R.scenario = sc.name;
    R.C = sc.C;
    R.C_overridden = sc.C_override.has_value();
    const auto& spec = sc.spec;
    const int n = spec.n;
    for (const auto& s : states) {
        R.eps.push_back(s.eps);
        R.rungs.push_back(s.diagnostics);
        R.psi1_laplacian_floor = std::max(R.psi1_laplacian_floor, s.diagnostics.psi1_laplacian_floor);
    }
    auto col = [&](auto get) {
        std::vector<double> v;
        for (const auto& r : R.rungs) v.push_back(get(r));
        return v;
    };
    R.c0_trend = trend(R.eps, col([](const RungDiagnostics& r) { return r.sup_phi; }));
    R.c2_trend = trend(R.eps, col([](const RungDiagnostics& r) { return r.weighted_c2; }));
    R.unweighted_trend = trend(R.eps, col([](const RungDiagnostics& r) { return r.unweighted_c2; }));
    R.scalars.push_back({"C", sc.C});
    R.scalars.push_back({"C_with_psi1_fold", sc.C + R.psi1_laplacian_floor});
    R.scalars.push_back({"kappa", sc.kappa});
    // Embedding condition q(1 - gamma) > d under both readings of d.
    if (!sc.estimates.gammas.empty()) {
        const double qg = sc.estimates.kondrakov_q * (1.0 - sc.estimates.gammas.front());
        R.scalars.push_back({"kondrakov_ok_d_n", qg > n ? 1.0 : 0.0});
        R.scalars.push_back({"kondrakov_ok_d_2n", qg > 2 * n ? 1.0 : 0.0});
        if (!R.rungs.empty() && R.rungs.back().sobolev_rhs > 0)
            R.scalars.push_back({"sobolev_ratio_final", R.rungs.back().sobolev_lhs / R.rungs.back().sobolev_rhs});
    }

    // Reference form.
    {
        const auto ac = check_alpha(sc.alpha, spec);
        const bool ok = ac.min_eig >= -1e-10 && ac.mass > 0 && ac.eps0_admissible;
        Verdict v = make("alpha_conditions", ok ? Status::holds : Status::violated,
                         "min eig " + fmt(ac.min_eig) + ", mass " + fmt(ac.mass) + ", L^eps0 norm of 1/det " +
                             fmt(ac.inv_det_norm) + " (refinement ratio " + fmt(ac.refinement_ratio) + ")");
        if (!ok) v.witness = witness_at(-1, {{"min_eig", ac.min_eig}, {"mass", ac.mass}, {"eps0", sc.alpha.eps0}});
        R.verdicts.push_back(v);
        R.scalars.push_back({"alpha_inv_det_ratio", ac.refinement_ratio});
    }

    // Density integrability: analytic margins at psi2 pole centres plus the refinement ratio.
    {
        const auto centers = pole_centers(sc.psi2);
        double worst_margin = std::numeric_limits<double>::infinity();
        std::optional<Point> worst_pt;
        for (const auto& c : centers) {
            const double m = n - sc.p * c.lelong;
            if (m < worst_margin) {
                worst_margin = m;
                worst_pt = c.center;
            }
        }
        const auto dl = density_lp_check(sc.psi1, sc.psi2, sc.p, spec);
        Status st = Status::holds;
        if (worst_margin <= -kBorderline || dl.flagged)
            st = Status::violated;
        else if (std::fabs(worst_margin) < kBorderline)
            st = Status::inconclusive;
        std::string detail = "L^p norm " + fmt(dl.norm) + " at N, " + fmt(dl.norm_fine) + " at 2N (ratio " +
                             fmt(dl.ratio) + ")";
        if (std::isfinite(worst_margin)) detail += ", worst margin n - p nu = " + fmt(worst_margin);
        Verdict v = make("hypothesis_i", st, detail);
        if (st != Status::holds)
            v.witness = witness_at(-1, {{"margin", worst_margin}, {"ratio", dl.ratio}, {"p", sc.p}}, worst_pt);
        R.verdicts.push_back(v);
        R.scalars.push_back({"density_lp_ratio", dl.ratio});
    }

    // Mass balance.
    {
        const double mass_a = integrate(det_field(sc.alpha.coefficients(spec)));
        GridField g = evaluate(sc.psi1, spec, 0.0);
        g -= evaluate(sc.psi2, spec, 0.0);
        const double mass_e = std::exp(log_integral_exp(g));
        const double rel = std::fabs(mass_e - mass_a) / mass_a;
        Verdict v = make("hypothesis_ii", rel <= 1e-10 ? Status::holds : Status::violated,
                         "relative mass mismatch " + fmt(rel));
        if (rel > 1e-10) v.witness = witness_at(-1, {{"mass_alpha", mass_a}, {"mass_density", mass_e}});
        R.verdicts.push_back(v);
    }

    // Lelong numbers and the integrability dichotomy at each psi2 pole centre.
    if (sc.psi2.has_poles()) {
        bool ok = true, skoda_ok = true, skoda_border = false;
        Witness wl, ws;
        for (const auto& c : pole_centers(sc.psi2)) {
            const auto le = lelong_estimate(sc.psi2, c.center, spec.h());
            if (!le.consistent && ok) {
                ok = false;
                wl = witness_at(-1, {{"analytic", le.analytic}, {"numeric", le.numeric}}, c.center);
            }
            const auto sk = skoda_integrability(sc.psi2, sc.p, c.center);
            if (sk.declared == Integrability::borderline) skoda_border = true;
            if (!sk.numeric_agrees && skoda_ok) {
                skoda_ok = false;
                ws = witness_at(-1, {{"margin", sk.margin}, {"ratio_coarse", sk.ratio_coarse}, {"ratio_fine", sk.ratio_fine}},
                                c.center);
            }
            R.scalars.push_back({"lelong_numeric", le.numeric});
            R.scalars.push_back({"skoda_margin", sk.margin});
            R.scalars.push_back({"skoda_ratio_fine", sk.ratio_fine});
        }
        Verdict v = make("lelong_consistency", ok ? Status::holds : Status::violated,
                         "circle-max slope vs analytic weight, 5% tolerance");
        if (!ok) v.witness = wl;
        R.verdicts.push_back(v);
        Verdict s = make("skoda_dichotomy",
                         !skoda_ok ? Status::violated : (skoda_border ? Status::inconclusive : Status::holds),
                         "shell-ratio quadrature at two refinements vs sign of n - p nu");
        if (!skoda_ok) s.witness = ws;
        R.verdicts.push_back(s);
    }

    if (states.empty()) {
        R.verdicts.push_back(make("continuation", Status::violated, "no rung solved"));
        return R;
    }

    // Normalization constant.
    {
        const std::size_t m = states.size();
        const double last = std::fabs(states.back().delta_eps);
        bool dec = true;
        for (std::size_t k = (m >= 3 ? m - 3 : 0); k + 1 < m; ++k)
            if (std::fabs(states[k + 1].delta_eps) > std::fabs(states[k].delta_eps)) dec = false;
        const bool ok = last <= 1e-2 && dec;
        Verdict v = make("delta_vanishing", ok ? Status::holds : Status::violated,
                         "|delta| at final rung " + fmt(last) + (dec ? ", decreasing" : ", not decreasing"));
        if (!ok) v.witness = witness_at(static_cast<int>(m) - 1, {{"delta", states.back().delta_eps}});
        R.verdicts.push_back(v);
    }

    // Rung consistency and normalization of phi.
    {
        int bad = -1;
        double worst = 0;
        for (std::size_t k = 0; k < states.size(); ++k) {
            const double mean = std::fabs(integrate(states[k].phi));
            worst = std::max(worst, mean);
            if ((states[k].residual > sc.tol || mean > kMeanTol) && bad < 0) bad = static_cast<int>(k);
        }
        Verdict v = make("rung_consistency", bad < 0 ? Status::holds : Status::violated,
                         "equation residual <= tol and |mean phi| <= 1e-10 at every rung (max |mean| " + fmt(worst) +
                             ")");
        if (bad >= 0)
            v.witness = witness_at(bad, {{"residual", states[bad].residual}, {"mean", integrate(states[bad].phi)}});
        R.verdicts.push_back(v);
    }

    R.verdicts.push_back(c0_uniformity(states));
    R.verdicts.push_back(c2_uniformity(states, sc.psi2, sc.alpha, sc.C));

    // Maximum principle: bound value at the argmax of S.
    {
        const double first = R.rungs.front().sum_inverse_at_argmax;
        int bad = -1;
        for (std::size_t k = 0; k < R.rungs.size(); ++k)
            if (R.rungs[k].sum_inverse_at_argmax > kMaxPrincipleGrowth * first * (1 + 1e-12)) {
                bad = static_cast<int>(k);
                break;
            }
        Verdict v = make("max_principle_bound", bad < 0 ? Status::holds : Status::violated,
                         "sum of inverse eigenvalues at argmax S, first rung " + fmt(first));
        if (bad >= 0)
            v.witness = witness_at(bad, {{"sum_inverse", R.rungs[bad].sum_inverse_at_argmax}, {"first", first}},
                                   R.rungs[bad].argmax);
        R.verdicts.push_back(v);
    }

    // Second-order inequality.
    {
        int bad = -1;
        double worst = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < R.rungs.size(); ++k) {
            const auto& r = R.rungs[k];
            worst = std::min(worst, r.siu_min / r.siu_scale);
            if (r.siu_min < -sc.estimates.siu_tol * r.siu_scale && bad < 0) bad = static_cast<int>(k);
        }
        Verdict v = make("siu_inequality", bad < 0 ? Status::holds : Status::violated,
                         "min residual / scale " + fmt(worst) + " (tolerance " + fmt(sc.estimates.siu_tol) + ")");
        if (bad >= 0)
            v.witness = witness_at(bad, {{"min_residual", R.rungs[bad].siu_min}, {"scale", R.rungs[bad].siu_scale}},
                                   R.rungs[bad].siu_argmin);
        R.verdicts.push_back(v);
    }

    // Comparison lemma.
    {
        int bad = -1;
        double worst = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < R.rungs.size(); ++k) {
            worst = std::min(worst, R.rungs[k].comparison_min);
            if (R.rungs[k].comparison_min < -kComparisonTol && bad < 0) bad = static_cast<int>(k);
        }
        Verdict v = make("comparison_lemma", bad < 0 ? Status::holds : Status::violated, "min residual " + fmt(worst));
        if (bad >= 0)
            v.witness = witness_at(bad, {{"min_residual", R.rungs[bad].comparison_min}}, R.rungs[bad].comparison_argmin);
        R.verdicts.push_back(v);
    }

    // Trace and shift identities.
    {
        int bad = -1, bad_shift = -1;
        double worst = 0, worst_shift = 0;
        for (std::size_t k = 0; k < R.rungs.size(); ++k) {
            worst = std::max(worst, R.rungs[k].trace_defect);
            worst_shift = std::max(worst_shift, R.rungs[k].shift_defect);
            if (R.rungs[k].trace_defect > kTraceTol && bad < 0) bad = static_cast<int>(k);
            if (R.rungs[k].shift_defect > 10.0 * sc.tol && bad_shift < 0) bad_shift = static_cast<int>(k);
        }
        Verdict v = make("trace_identity", bad < 0 ? Status::holds : Status::violated, "max defect " + fmt(worst));
        if (bad >= 0) v.witness = witness_at(bad, {{"defect", R.rungs[bad].trace_defect}});
        R.verdicts.push_back(v);
        Verdict s = make("shift_identity", bad_shift < 0 ? Status::holds : Status::violated,
                         "max pointwise defect " + fmt(worst_shift) + " (tolerance 10 tol = " + fmt(10.0 * sc.tol) + ")");
        if (bad_shift >= 0) s.witness = witness_at(bad_shift, {{"defect", R.rungs[bad_shift].shift_defect}});
        R.verdicts.push_back(s);
    }

    // Limit extraction.
    if (states.size() >= 3) {
        const auto lim = extract_limit(states, sc.estimates.cauchy_tol);
        R.cauchy_table = lim.cauchy_table;
        Status st = Status::holds;
        if (!lim.cauchy)
            st = Status::violated;
        else if (!lim.converged)
            st = Status::inconclusive;
        Verdict v = make("cauchy_limit", st,
                         "last difference " + fmt(lim.cauchy_table.back()) + (lim.cauchy ? "" : ", differences not decreasing"));
        if (st != Status::holds)
            v.witness = witness_at(static_cast<int>(states.size()) - 1, {{"last_difference", lim.cauchy_table.back()}});
        R.verdicts.push_back(v);
    }
    return R;
}

}  // namespace cma
