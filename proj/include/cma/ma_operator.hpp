#pragma once

#include <vector>

#include "cma/kernels.hpp"
#include "cma/pluripotential.hpp"
#include "cma/torus.hpp"

namespace cma {

// alpha = omega + i ddbar(rho), rho = (t / pi^2) sum_j cos(2 pi x_j), so the
// coefficient matrix is diag(1 - t cos(2 pi x_j)).  For t = 1 it degenerates
// quadratically on each sheet {x_j = 0}.
struct AlphaModel {
    int n = 1;
    double t = 0.0;
    double eps0 = 0.25;

    void validate() const;
    GridField rho(const TorusSpec& spec) const;
    GridField eta(const TorusSpec& spec) const;
    HermitianFormField coefficients(const TorusSpec& spec, double eps = 0.0) const;
    double det_value(const Point& x, double eps = 0.0) const;
};

struct AlphaCheck {
    double min_eig = 0.0;
    double mass = 0.0;
    // (integral det(a)^{-eps0})^{1/eps0} on the cell-centred grid at N and 2N.
    double inv_det_norm = 0.0;
    double inv_det_norm_fine = 0.0;
    double refinement_ratio = 0.0;
    // Analytic: eps0 < 1/2 is required when t = 1.
    bool eps0_admissible = false;
};

AlphaCheck check_alpha(const AlphaModel& alpha, const TorusSpec& spec);

constexpr double kPositivityMargin = 1e-10;
constexpr double kCompatibilityTol = 1e-8;

GridField ma_density(const HermitianFormField& a, const GridField& phi, Exec ex = default_exec());

struct PositivityResult {
    bool ok = false;
    double min_eig = 0.0;
};
PositivityResult positivity_check(const HermitianFormField& a, const GridField& phi, Exec ex = default_exec());

// trace((a + H phi)^{-1} H u).
GridField linearized_apply(const HermitianFormField& a, const GridField& phi, const GridField& u,
                           Exec ex = default_exec());

struct SolveOptions {
    int max_newton = 200;
    int gmres_restart = 20;
    int gmres_max_iter = 400;
    double min_step = 1.0 / (1 << 20);
    Exec exec = default_exec();
};

struct SolveResult {
    GridField phi;
    int newton_steps = 0;
    int krylov_iterations = 0;
    double residual = 0.0;              // final sup |log det - log F|
    std::vector<double> residual_history;
};

SolveResult solve_ma_detailed(const HermitianFormField& a, const GridField& F, const GridField& phi0, double tol,
                              const SolveOptions& opt = {});
GridField solve_ma(const HermitianFormField& a, const GridField& F, const GridField& phi0, double tol);

// n = 1 reduction: (a + Delta phi) = F is linear.
GridField poisson_oracle_n1(const GridField& F);
GridField poisson_oracle_n1(const HermitianFormField& a, const GridField& F);

}  // namespace cma
