#include "cma/pluripotential.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "cma/kernels.hpp"
#include "cma/spectral.hpp"

namespace cma {

namespace {

constexpr double kPi = std::numbers::pi;

double phase(const TrigTerm& t, const Point& x) {
    return 2.0 * kPi * (t.k[0] * x[0] + t.k[1] * x[1] + t.k[2] * x[2] + t.k[3] * x[3]);
}

bool same_point(const Point& a, const Point& b, int dim) { return periodic_dist2(a, b, dim) < 1e-24; }

// Smooth step g(t) = e^{-1/t} / (e^{-1/t} + e^{-1/(1-t)}) on (0, 1).
double smooth_step(double t) {
    if (t <= 0) return 0.0;
    if (t >= 1) return 1.0;
    const double a = std::exp(-1.0 / t), b = std::exp(-1.0 / (1.0 - t));
    return a / (a + b);
}

double pole_value(const Pole& pole, const Point& x, int dim, double s, double clamp_h) {
    double d2;
    double chi = 1.0;
    if (pole.profile == PoleProfile::cutoff) {
        d2 = periodic_dist2(x, pole.center, dim);
        chi = cutoff_chi(std::sqrt(d2), pole.r0, pole.r1);
        if (chi == 0.0) return 0.0;
    } else {
        d2 = 0.0;
        for (int a = 0; a < dim; ++a) {
            const double sn = std::sin(kPi * (x[a] - pole.center[a]));
            d2 += sn * sn;
        }
        d2 /= kPi * kPi;
    }
    double arg;
    if (s > 0) {
        arg = d2 + s * s;
    } else {
        arg = std::max(d2, clamp_h * clamp_h);
        if (arg == 0.0) return -std::numeric_limits<double>::infinity();
    }
    return pole.weight * chi * std::log(arg);
}

}  // namespace

double TrigPoly::value(const Point& x) const {
    double v = constant;
    for (const auto& t : terms) {
        const double th = phase(t, x);
        v += t.a_cos * std::cos(th) + t.a_sin * std::sin(th);
    }
    return v;
}

std::array<double, 4> TrigPoly::complex_hessian(const Point& x, int n) const {
    std::array<double, 4> h{0, 0, 0, 0};
    const double q = kPi * kPi;
    for (const auto& t : terms) {
        const double th = phase(t, x);
        const double v = t.a_cos * std::cos(th) + t.a_sin * std::sin(th);
        const auto& k = t.k;
        h[0] += -q * (k[0] * k[0] + k[1] * k[1]) * v;
        if (n == 2) {
            h[1] += -q * (k[2] * k[2] + k[3] * k[3]) * v;
            h[2] += -q * (k[0] * k[2] + k[1] * k[3]) * v;
            h[3] += -q * (k[0] * k[3] - k[1] * k[2]) * v;
        }
    }
    return h;
}

GridField TrigPoly::sample(const TorusSpec& spec) const {
    std::vector<double> v(spec.size());
    for_each_point(default_exec(), v.size(), [&](std::size_t i) { v[i] = value(spec.coords(i)); });
    return GridField(spec, std::move(v));
}

double cutoff_chi(double d, double r0, double r1) {
    if (d <= r0) return 1.0;
    if (d >= r1) return 0.0;
    return 1.0 - smooth_step((d - r0) / (r1 - r0));
}

void QuasiPshModel::validate() const {
    if (n != 1 && n != 2) throw InputError("model: n must be 1 or 2");
    auto check_terms = [&](const TrigPoly& tp) {
        if (!std::isfinite(tp.constant)) throw InputError("model: non-finite constant");
        for (const auto& t : tp.terms) {
            if (!std::isfinite(t.a_cos) || !std::isfinite(t.a_sin))
                throw InputError("model: non-finite trigonometric coefficient");
            if (n == 1 && (t.k[2] != 0 || t.k[3] != 0))
                throw InputError("model: wavevector has components beyond the real dimension");
        }
    };
    check_terms(smooth);
    if (logdet_of) check_terms(*logdet_of);
    for (const auto& p : poles) {
        if (!(p.weight > 0) || !std::isfinite(p.weight)) throw InputError("model: pole weight must be positive");
        if (!(p.s >= 0) || !std::isfinite(p.s)) throw InputError("model: pole smoothing must be >= 0");
        for (int a = 0; a < 2 * n; ++a)
            if (!(p.center[a] >= 0.0 && p.center[a] < 1.0))
                throw InputError("model: pole center outside the fundamental domain");
        if (p.profile == PoleProfile::cutoff) {
            if (!(p.r0 > 0 && p.r0 < p.r1))
                throw InputError("model: cutoff radii must satisfy 0 < r0 < r1");
            if (!(p.r1 < 0.25))
                throw InputError("model: cutoff radius r1 must be < 1/4 so the cutoff ball does not wrap the seam");
        }
    }
}

double QuasiPshModel::value(const Point& x, double s_override, double clamp_h) const {
    const int dim = 2 * n;
    double v = smooth.value(x);
    if (logdet_of) {
        auto h = logdet_of->complex_hessian(x, n);
        HermPoint P{1.0 + h[0], 1.0 + h[1], h[2], h[3]};
        const double d = herm::det(n, P);
        if (!(d > 0) || herm::min_eig(n, P) <= 0)
            throw InputError("model: I + H(phi_star) is not positive");
        v += std::log(d);
    }
    for (const auto& p : poles) {
        const double s = s_override >= 0 ? s_override : p.s;
        v += pole_value(p, x, dim, s, clamp_h);
    }
    return v;
}

GridField evaluate(const QuasiPshModel& model, const TorusSpec& spec, std::optional<double> s_override) {
    if (model.n != spec.n) throw InputError("evaluate: model and grid dimensions differ");
    if (s_override && !(*s_override >= 0)) throw InputError("evaluate: s_override must be >= 0");
    const double so = s_override ? *s_override : -1.0;
    std::vector<double> v(spec.size());
    for_each_point(default_exec(), v.size(), [&](std::size_t i) { v[i] = model.value(spec.coords(i), so, spec.h()); });
    return GridField(spec, std::move(v));
}

double hessian_lower_bound_field(const GridField& psi, const std::vector<unsigned char>* mask) {
    const auto H = complex_hessian(psi);
    const int n = psi.spec().n;
    const std::size_t m = H.size();
    auto feasible = [&](double C) {
        const double worst = reduce_max(default_exec(), m, [&](std::size_t i) {
            if (mask && !(*mask)[i]) return -std::numeric_limits<double>::infinity();
            return -herm::min_eig(n, herm::add_identity(H.at(i), C));
        });
        return -worst >= -kMinEigTol;
    };
    if (feasible(0.0)) return 0.0;
    double hi = 1.0;
    while (!feasible(hi)) hi *= 2.0;
    double lo = hi == 1.0 ? 0.0 : hi / 2.0;
    while (hi - lo > kLowerBoundTol) {
        const double mid = 0.5 * (lo + hi);
        if (feasible(mid))
            hi = mid;
        else
            lo = mid;
    }
    return hi;
}

double hessian_lower_bound(const QuasiPshModel& model, const TorusSpec& spec, const std::vector<double>& s_values,
                           const std::vector<unsigned char>* mask) {
    double C = 0.0;
    if (s_values.empty()) return hessian_lower_bound(model, spec);
    for (double s : s_values) C = std::max(C, hessian_lower_bound_field(evaluate(model, spec, s), mask));
    return C;
}

double hessian_lower_bound(const QuasiPshModel& model, const TorusSpec& spec) {
    return hessian_lower_bound_field(evaluate(model, spec));
}

RegularizeResult regularize_checked(const QuasiPshModel& model, const TorusSpec& spec, double eps) {
    if (!(eps > 0)) throw InputError("regularize: eps must be positive");
    const GridField base = evaluate(model, spec, std::sqrt(eps));
    RegularizeResult r;
    r.value = heat(base, eps);
    r.C = hessian_lower_bound_field(base);
    auto H = complex_hessian(r.value);
    H.add_identity(r.C);
    r.min_eig = min_eigenvalue(H);
    if (r.min_eig < -kMinEigTol)
        throw ContractError("regularize: min eig(C I + H(psi_eps)) = " + std::to_string(r.min_eig) +
                            " at eps = " + std::to_string(eps));
    if (eps <= 0.1) {
        const GridField lower = evaluate(model, spec, 0.0);
        double m = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < lower.size(); ++i) m = std::min(m, r.value[i] - (lower[i] - 1.0));
        r.lower_margin = m;
        r.lower_checked = true;
        if (m < 0)
            throw ContractError("regularize: psi_eps < psi - 1 by " + std::to_string(-m) + " at eps = " +
                                std::to_string(eps));
    }
    return r;
}

GridField regularize(const QuasiPshModel& model, const TorusSpec& spec, double eps) {
    return regularize_checked(model, spec, eps).value;
}

double lelong_number(const QuasiPshModel& model, const Point& x) {
    double nu = 0.0;
    for (const auto& p : model.poles)
        if (same_point(p.center, x, 2 * model.n)) nu += p.weight;
    return nu;
}

namespace {

std::vector<Point> sphere_directions(int n) {
    std::vector<Point> dirs;
    if (n == 1) {
        for (int i = 0; i < 64; ++i) {
            const double th = 2.0 * kPi * i / 64.0;
            dirs.push_back({std::cos(th), std::sin(th), 0, 0});
        }
        return dirs;
    }
    for (int a = -1; a <= 1; ++a)
        for (int b = -1; b <= 1; ++b)
            for (int c = -1; c <= 1; ++c)
                for (int d = -1; d <= 1; ++d) {
                    const double r = std::sqrt(double(a * a + b * b + c * c + d * d));
                    if (r == 0) continue;
                    dirs.push_back({a / r, b / r, c / r, d / r});
                }
    return dirs;
}

std::vector<double> least_squares(const std::vector<std::vector<double>>& A, const std::vector<double>& y) {
    const Eigen::Index m = static_cast<Eigen::Index>(A.size()), k = static_cast<Eigen::Index>(A[0].size());
    Eigen::MatrixXd M(m, k);
    Eigen::VectorXd b(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = 0; j < k; ++j) M(i, j) = A[i][j];
        b(i) = y[i];
    }
    const Eigen::VectorXd x = M.colPivHouseholderQr().solve(b);
    return std::vector<double>(x.data(), x.data() + k);
}

double probe_radius(const QuasiPshModel& model, const Point& x) {
    double r = 0.1;
    for (const auto& p : model.poles)
        if (p.profile == PoleProfile::cutoff && same_point(p.center, x, 2 * model.n)) r = std::min(r, p.r0 / 2.0);
    return r;
}

}  // namespace

LelongEstimate lelong_estimate(const QuasiPshModel& model, const Point& x, double h) {
    LelongEstimate e;
    e.analytic = lelong_number(model, x);
    e.r_hi = probe_radius(model, x);
    e.r_lo = 4.0 * h;
    if (e.r_lo > e.r_hi / 4.0) e.r_lo = e.r_hi / 4.0;
    const auto dirs = sphere_directions(model.n);
    const int dim = 2 * model.n;
    const int K = 10;
    std::vector<std::vector<double>> A;
    std::vector<double> y;
    for (int j = 0; j < K; ++j) {
        const double r = e.r_lo * std::pow(e.r_hi / e.r_lo, double(j) / (K - 1));
        double mx = -std::numeric_limits<double>::infinity();
        for (const auto& d : dirs) {
            Point z = x;
            for (int a = 0; a < dim; ++a) z[a] = x[a] + r * d[a];
            mx = std::max(mx, model.value(z, 0.0, 0.0));
        }
        const double t = r / e.r_hi;
        // max over circles ~ nu log r^2 + b + smooth corrections in r.
        A.push_back({std::log(r * r), 1.0, t, t * t});
        y.push_back(mx);
    }
    e.numeric = least_squares(A, y)[0];
    if (e.analytic > 0)
        e.consistent = std::fabs(e.numeric - e.analytic) <= 0.05 * e.analytic;
    else
        e.consistent = std::fabs(e.numeric) <= 0.05;
    return e;
}

std::string to_string(Integrability v) {
    switch (v) {
        case Integrability::integrable: return "integrable";
        case Integrability::not_integrable: return "not-integrable";
        case Integrability::borderline: return "borderline";
    }
    return "?";
}

SkodaShells default_shells(const QuasiPshModel& model, const Point& x, int refinement) {
    SkodaShells s;
    s.radius = probe_radius(model, x);
    s.points_per_axis = (model.n == 1 ? 64 : 16) << refinement;
    return s;
}

std::vector<double> shell_integrals(const QuasiPshModel& model, double p, const Point& x, const SkodaShells& sh) {
    const int dim = 2 * model.n;
    const int M = sh.points_per_axis;
    const int sub = std::max(1, static_cast<int>(std::lround(std::log2(sh.ratio))));
    const double sub_ratio = std::pow(sh.ratio, 1.0 / sub);
    std::size_t total = 1;
    for (int a = 0; a < dim; ++a) total *= static_cast<std::size_t>(M);
    std::vector<double> out;
    for (int k = 0; k < sh.shells; ++k) {
        double I = 0.0;
        for (int j = 0; j < sub; ++j) {
            const double Ro = sh.radius * std::pow(sh.ratio, -k) * std::pow(sub_ratio, -j);
            const double Ri = Ro / sub_ratio;
            const double hh = 2.0 * Ro / M;
            double cell = 1.0;
            for (int a = 0; a < dim; ++a) cell *= hh;
            I += cell * reduce_sum(default_exec(), total, [&](std::size_t idx) {
                Point z = x;
                double r2 = 0.0;
                std::size_t rem = idx;
                for (int a = 0; a < dim; ++a) {
                    const int ia = static_cast<int>(rem % M);
                    rem /= M;
                    const double off = -Ro + (ia + 0.5) * hh;
                    z[a] = x[a] + off;
                    r2 += off * off;
                }
                if (r2 < Ri * Ri || r2 >= Ro * Ro) return 0.0;
                return std::exp(-p * model.value(z, 0.0, 0.0));
            });
        }
        out.push_back(I);
    }
    return out;
}

Integrability classify_shell_ratio(double q) {
    if (q >= 1.5) return Integrability::not_integrable;
    if (q < 1.0) return Integrability::integrable;
    return Integrability::borderline;
}

SkodaResult skoda_integrability(const QuasiPshModel& model, double p, const Point& x) {
    if (!(p >= 1.0)) throw InputError("skoda_integrability: p must be >= 1");
    SkodaResult r;
    const double nu = lelong_number(model, x);
    r.margin = model.n - p * nu;
    if (std::fabs(r.margin) < kBorderline)
        r.declared = Integrability::borderline;
    else
        r.declared = r.margin > 0 ? Integrability::integrable : Integrability::not_integrable;
    auto ratio = [&](int refinement) {
        const auto I = shell_integrals(model, p, x, default_shells(model, x, refinement));
        return std::pow(I.back() / I.front(), 1.0 / (I.size() - 1));
    };
    r.ratio_coarse = ratio(0);
    r.ratio_fine = ratio(1);
    r.numeric_coarse = classify_shell_ratio(r.ratio_coarse);
    r.numeric_fine = classify_shell_ratio(r.ratio_fine);
    r.numeric_agrees = r.numeric_coarse == r.numeric_fine &&
                       (r.declared == Integrability::borderline || r.numeric_coarse == r.declared);
    return r;
}

std::vector<SingularPoint> pole_centers(const QuasiPshModel& model) {
    std::vector<SingularPoint> out;
    const int dim = 2 * model.n;
    for (const auto& p : model.poles) {
        auto it = std::find_if(out.begin(), out.end(), [&](const SingularPoint& s) { return same_point(s.center, p.center, dim); });
        if (it == out.end())
            out.push_back({p.center, p.weight});
        else
            it->lelong += p.weight;
    }
    return out;
}

SingularSet singular_set(const QuasiPshModel& model, double p) {
    if (!(p > 0)) throw InputError("singular_set: p must be positive");
    SingularSet Y;
    Y.threshold = model.n / p;
    for (const auto& c : pole_centers(model))
        if (p * c.lelong >= model.n * (1.0 - 1e-12)) Y.points.push_back(c);
    return Y;
}

bool SingularSet::contains_near(const Point& x, double radius, int dim) const {
    for (const auto& s : points)
        if (periodic_dist2(x, s.center, dim) < radius * radius) return true;
    return false;
}

DensityLpCheck density_lp_check(const QuasiPshModel& psi1, const QuasiPshModel& psi2, double p, const TorusSpec& spec) {
    if (!(p > 1)) throw InputError("density_lp_check: p must be > 1");
    auto norm_at = [&](const TorusSpec& sp) {
        GridField g = evaluate(psi1, sp, 0.0);
        g -= evaluate(psi2, sp, 0.0);
        g *= p;
        return std::exp(log_integral_exp(g) / p);
    };
    DensityLpCheck r;
    r.norm = norm_at(spec);
    r.norm_fine = norm_at(TorusSpec(spec.n, 2 * spec.N));
    r.ratio = r.norm_fine / r.norm;
    r.flagged = r.ratio > 1.5;
    return r;
}

}  // namespace cma
