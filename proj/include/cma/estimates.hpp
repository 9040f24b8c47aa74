#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cma/continuation.hpp"
#include "cma/pluripotential.hpp"
#include "cma/torus.hpp"

namespace cma {

enum class Status { holds, violated, inconclusive };
std::string to_string(Status s);

struct Witness {
    int rung = -1;
    std::optional<Point> point;
    std::vector<std::pair<std::string, double>> values;
};

struct Verdict {
    std::string name;
    Status status = Status::inconclusive;
    std::string detail;
    std::optional<Witness> witness;
};

// Reference metric g0 = (1 + eps) I; G = g0 + H(Phi); q = trace(g0^{-1} G) = n + Delta_eps Phi.
// Second-order inequality residual
//   Delta_Phi log q - [(Delta_eps f - C) / q - C trace(G^{-1} g0)].
GridField siu_residual(const GridField& Phi, const GridField& f, double eps, double C);

struct SiuParts {
    GridField lhs, rhs;
};
SiuParts siu_parts(const GridField& Phi, const GridField& f, double eps, double C);

// Delta_Phi psi - [Delta_eps psi / q - C trace(G^{-1} g0)], with Delta_Phi psi formed in the
// eigenframe of G.  Throws InputError unless C I + H(psi) >= -1e-8.
GridField comparison_residual(const GridField& Phi, const GridField& psi, double C, double eps = 0.0);

// max |Delta_Phi Phi - (n - sum_j g0 / lambda_j)|, the two sides computed independently.
double trace_identity_defect(const GridField& Phi, double eps);

struct MaxPrincipleProbe {
    std::size_t argmax_index = 0;
    Point argmax{0, 0, 0, 0};
    double S_max = 0.0;
    double sum_inverse_at_argmax = 0.0;
    double global_weighted_sup = 0.0;
};

// S = -2 C Phi + psi2_eps + log q.
MaxPrincipleProbe max_principle_probe(const ContinuationState& state, const GridField& psi2_eps, double C);

// sup over grid points at distance > h from every pole center of q exp(psi2hat - 2 C Phi),
// together with sup q over the same points.
struct WeightedC2 {
    double weighted = 0.0;
    double unweighted = 0.0;
};
WeightedC2 weighted_c2(const GridField& Phi, double eps, const GridField& psi2hat, double C,
                       const std::vector<SingularPoint>& centers);

double holder_seminorm(const GridField& phi, double gamma, const SingularSet& Y, double exclusion_radius);

struct Patch {
    Point center{0.5, 0.5, 0.5, 0.5};
    double halfwidth = 0.25;
};

struct SobolevHolder {
    double lhs = 0.0;  // C^{1,gamma} seminorm on the patch
    double rhs = 0.0;  // L^q norm of the real Hessian on the patch
    double ratio = 0.0;
    bool condition_ok = false;
};

SobolevHolder sobolev_holder_probe(const GridField& phi, double q, double gamma, const Patch& patch, double d,
                                   const SingularSet* Y = nullptr);

double kondrakov_dimension(const Scenario& sc);
SingularSet holder_singular_set(const Scenario& sc, double gamma, double d);
Patch default_patch(const Scenario& sc);

RungDiagnostics rung_diagnostics(const Scenario& sc, const ContinuationState& st, const RegularizedData& rd);

struct TrendFit {
    double first = 0.0, min = 0.0, max = 0.0, last = 0.0;
    double slope = 0.0;  // least squares against -log eps
};
TrendFit trend(const std::vector<double>& eps, const std::vector<double>& values);

Verdict c0_uniformity(const std::vector<ContinuationState>& states);
Verdict c2_uniformity(const std::vector<ContinuationState>& states, const QuasiPshModel& psi2, const AlphaModel& alpha,
                      double C);

struct EstimateReport {
    std::string scenario;
    double C = 0.0;
    bool C_overridden = false;
    double psi1_laplacian_floor = 0.0;  // folded into the reported constant
    std::vector<double> eps;
    std::vector<RungDiagnostics> rungs;
    std::vector<double> cauchy_table;
    TrendFit c0_trend, c2_trend, unweighted_trend;
    std::vector<std::pair<std::string, double>> scalars;
    std::vector<Verdict> verdicts;

    const Verdict* find(const std::string& name) const;
    bool any(Status s) const;
};

// Scenario-level verdicts derived from the rung diagnostics plus hypothesis checks.
EstimateReport build_report(const Scenario& sc, const std::vector<ContinuationState>& states);

}  // namespace cma
