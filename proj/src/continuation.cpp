#include "cma/continuation.hpp"

#include <cmath>

#include "cma/estimates.hpp"
#include "cma/kernels.hpp"
#include "cma/spectral.hpp"

namespace cma {

std::vector<double> default_schedule() {
    std::vector<double> s;
    for (double e = 0.25; e >= std::ldexp(1.0, -12) * 0.999; e *= 0.5) s.push_back(e);
    return s;
}

void Scenario::validate() const {
    if (psi1.n != spec.n || psi2.n != spec.n || alpha.n != spec.n)
        throw InputError("scenario: model dimensions differ from the torus");
    alpha.validate();
    psi1.validate();
    psi2.validate();
    if (!(p > 1.0)) throw InputError("scenario: hypothesis exponent p must be > 1");
    if (eps_schedule.empty()) throw InputError("scenario: empty eps schedule");
    if (eps_schedule.front() > 0.5) throw InputError("scenario: eps schedule must have max <= 0.5");
    for (std::size_t i = 0; i < eps_schedule.size(); ++i) {
        if (!(eps_schedule[i] > 0)) throw InputError("scenario: eps values must be positive");
        if (i > 0 && !(eps_schedule[i] < eps_schedule[i - 1]))
            throw InputError("scenario: eps schedule must be strictly decreasing");
    }
    if (!(tol > 0)) throw InputError("scenario: solver tol must be positive");
}

Scenario enforce_mass_balance(Scenario sc) {
    const auto a = sc.alpha.coefficients(sc.spec);
    const double mass_a = integrate(det_field(a));
    GridField g = evaluate(sc.psi1, sc.spec, 0.0);
    g -= evaluate(sc.psi2, sc.spec, 0.0);
    const double log_mass = log_integral_exp(g);
    if (!(mass_a > 0) || !std::isfinite(mass_a) || !std::isfinite(log_mass))
        throw InputError("mass balance: zero or non-finite mass");
    const double kappa = std::log(mass_a) - log_mass;
    sc.psi1.smooth.constant += kappa;
    sc.kappa += kappa;
    g += kappa;
    const double check = std::exp(log_integral_exp(g));
    if (std::fabs(check - mass_a) > 1e-10 * mass_a) throw InputError("mass balance: could not equalize masses");
    sc.mass_balanced = true;
    return sc;
}

RegularizedData regularized_data(const Scenario& sc, double eps) {
    RegularizedData d;
    d.eps = eps;
    d.psi1_eps = regularize(sc.psi1, sc.spec, eps);
    d.psi2_eps = regularize(sc.psi2, sc.spec, eps);
    GridField g = d.psi1_eps;
    g -= d.psi2_eps;
    std::vector<double> E(g.size());
    for (std::size_t i = 0; i < E.size(); ++i) E[i] = std::exp(g[i]);
    GridField Ef(sc.spec, std::move(E));
    const double target = integrate(det_field(sc.alpha.coefficients(sc.spec, eps)));
    d.delta = target / integrate(Ef) - 1.0;
    Ef *= 1.0 + d.delta;
    d.F = std::move(Ef);
    return d;
}

double delta_eps(const Scenario& sc, double eps) { return regularized_data(sc, eps).delta; }

double resolve_constant(const Scenario& sc) {
    if (sc.C_override) return *sc.C_override;
    std::vector<double> s;
    for (double e : sc.eps_schedule) s.push_back(std::sqrt(e));
    return hessian_lower_bound(sc.psi2, sc.spec, s);
}

ContinuationRun run_continuation(const Scenario& sc, const ContinuationOptions& opt) {
    ContinuationRun run;
    if (!sc.mass_balanced) throw InputError("run_continuation: scenario is not mass balanced");
    GridField prev(sc.spec, 0.0);
    for (std::size_t k = 0; k < sc.eps_schedule.size(); ++k) {
        const double eps = sc.eps_schedule[k];
        try {
            auto rd = regularized_data(sc, eps);
            const auto a = sc.alpha.coefficients(sc.spec, eps);
            GridField phi0(sc.spec, 0.0);
            bool warm = false;
            if (opt.warm_start && k > 0 && positivity_check(a, prev).ok) {
                phi0 = prev;
                warm = true;
            }
            auto sr = solve_ma_detailed(a, rd.F, phi0, sc.tol);
            ContinuationState st;
            st.eps = eps;
            st.delta_eps = rd.delta;
            st.phi = std::move(sr.phi);
            st.F = rd.F;
            st.newton_steps = sr.newton_steps;
            st.krylov_iterations = sr.krylov_iterations;
            st.residual = sr.residual;
            st.warm_started = warm;
            st.Phi = shift_potential(st, sc.alpha);
            if (opt.diagnostics) st.diagnostics = rung_diagnostics(sc, st, rd);
            prev = st.phi;
            if (opt.on_rung) opt.on_rung(st);
            run.states.push_back(std::move(st));
        } catch (const SolverError& e) {
            run.failed = true;
            run.solver_error = true;
            run.failed_rung = static_cast<int>(k);
            run.error = "rung " + std::to_string(k) + " (eps = " + std::to_string(eps) + "): " + e.what();
            break;
        } catch (const Error& e) {
            run.failed = true;
            run.failed_rung = static_cast<int>(k);
            run.error = "rung " + std::to_string(k) + " (eps = " + std::to_string(eps) + "): " + e.what();
            break;
        }
    }
    return run;
}

GridField shift_potential(const ContinuationState& state, const AlphaModel& alpha) {
    GridField Phi = state.phi;
    Phi += alpha.rho(state.phi.spec());
    return Phi;
}

LimitResult extract_limit(const std::vector<ContinuationState>& states, double cauchy_tol) {
    if (states.size() < 3) throw InputError("extract_limit: needs at least three states");
    LimitResult r;
    for (std::size_t k = 0; k + 1 < states.size(); ++k) {
        GridField d = states[k + 1].phi;
        d -= states[k].phi;
        r.cauchy_table.push_back(d.sup_abs());
    }
    r.phi_limit = states.back().phi;
    const auto& t = r.cauchy_table;
    const std::size_t m = t.size();
    r.cauchy = true;
    for (std::size_t k = (m >= 3 ? m - 3 : 0); k + 1 < m; ++k)
        if (t[k + 1] > t[k] * (1.0 + 1e-12) + 1e-15) r.cauchy = false;
    r.converged = t.back() <= cauchy_tol;
    return r;
}

}  // namespace cma
