#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cma/ma_operator.hpp"
#include "cma/pluripotential.hpp"
#include "cma/torus.hpp"

namespace cma {

struct EstimateSettings {
    std::vector<double> gammas{0.5};
    // Exclusion radii around the singular set, in units of h.
    std::vector<double> exclusion_radii{2.0, 8.0};
    double kondrakov_q = 12.0;
    // Dimension parameter d in q(1 - gamma) > d; 0 selects the real dimension 2n.
    double kondrakov_d = 0.0;
    double cauchy_tol = 1e-2;
    // Curvature constant for the second-order inequality; the flat torus gives 0.
    double siu_C = 0.0;
    // Relative tolerance for the second-order inequality.
    double siu_tol = 1e-4;
    // Sobolev/Holder patch: centre and half-width; a negative half-width picks a default.
    Point patch_center{0.5, 0.5, 0.5, 0.5};
    double patch_halfwidth = -1.0;
};

struct Scenario {
    std::string name;
    TorusSpec spec;
    AlphaModel alpha;
    QuasiPshModel psi1, psi2;
    double p = 2.0;
    std::vector<double> eps_schedule;
    double tol = 1e-10;
    std::optional<double> C_override;
    // Resolved constant for the maximum-principle chain.
    double C = 0.0;
    // Constant added to psi1 by enforce_mass_balance.
    double kappa = 0.0;
    bool mass_balanced = false;
    EstimateSettings estimates;

    void validate() const;
};

std::vector<double> default_schedule();

struct HolderSample {
    double gamma = 0.0;
    double radius_h = 0.0;
    double value = 0.0;
};

struct RungDiagnostics {
    double sup_phi = 0.0;
    double weighted_c2 = 0.0;        // sup q exp(psi2hat - 2 C Phi), q = n + Delta_eps Phi
    double unweighted_c2 = 0.0;      // sup q, same points
    Point argmax{0, 0, 0, 0};        // grid argmax of S
    double S_max = 0.0;
    double sum_inverse_at_argmax = 0.0;
    double mp_weighted_sup = 0.0;    // sup q exp(psi2eps - 2 C Phi)
    double siu_min = 0.0;
    double siu_scale = 1.0;
    Point siu_argmin{0, 0, 0, 0};
    double comparison_min = 0.0;
    Point comparison_argmin{0, 0, 0, 0};
    double trace_defect = 0.0;
    double shift_defect = 0.0;
    double psi1_laplacian_floor = 0.0;  // max(0, -min Delta psi1_eps)
    std::vector<HolderSample> holder;
    double sobolev_lhs = 0.0;
    double sobolev_rhs = 0.0;
    bool sobolev_condition_ok = false;
};

struct ContinuationState {
    double eps = 0.0;
    double delta_eps = 0.0;
    GridField phi;
    GridField Phi;
    GridField F;
    int newton_steps = 0;
    int krylov_iterations = 0;
    double residual = 0.0;
    bool warm_started = false;
    RungDiagnostics diagnostics;
};

struct RegularizedData {
    double eps = 0.0;
    GridField psi1_eps, psi2_eps;
    GridField F;
    double delta = 0.0;
};

Scenario enforce_mass_balance(Scenario scenario);
RegularizedData regularized_data(const Scenario& scenario, double eps);
double delta_eps(const Scenario& scenario, double eps);

// Scenario constant: max over the schedule's smoothings of the Hessian bound of psi2.
double resolve_constant(const Scenario& scenario);

struct ContinuationOptions {
    bool diagnostics = true;
    bool warm_start = true;
    std::function<void(const ContinuationState&)> on_rung;
};

struct ContinuationRun {
    std::vector<ContinuationState> states;
    bool failed = false;
    int failed_rung = -1;
    std::string error;
    bool solver_error = false;
};

ContinuationRun run_continuation(const Scenario& scenario, const ContinuationOptions& opt = {});

GridField shift_potential(const ContinuationState& state, const AlphaModel& alpha);

struct LimitResult {
    GridField phi_limit;
    std::vector<double> cauchy_table;
    bool converged = false;
    bool cauchy = true;   // differences non-increasing over the last three
};

LimitResult extract_limit(const std::vector<ContinuationState>& states, double cauchy_tol);

}  // namespace cma
