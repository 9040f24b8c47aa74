#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "cma/torus.hpp"

namespace cma {

using Point = std::array<double, 4>;

// a_cos cos(2 pi k.x) + a_sin sin(2 pi k.x).
struct TrigTerm {
    std::array<int, 4> k{0, 0, 0, 0};
    double a_cos = 0.0;
    double a_sin = 0.0;
};

// A closed-form trigonometric polynomial with its exact derivatives.
struct TrigPoly {
    double constant = 0.0;
    std::vector<TrigTerm> terms;

    double value(const Point& x) const;
    // Complex Hessian entries (h11, h22, re12, im12) at x.
    std::array<double, 4> complex_hessian(const Point& x, int n) const;
    GridField sample(const TorusSpec& spec) const;
    bool empty() const { return constant == 0.0 && terms.empty(); }
};

enum class PoleProfile {
    // c chi(d) log(d^2 + s^2) with a smooth compactly supported cutoff chi.
    cutoff,
    // c log(u + s^2), u = sum_a sin^2(pi d_a) / pi^2; periodic, u ~ d^2 near the center.
    periodic,
};

struct Pole {
    Point center{0, 0, 0, 0};
    double weight = 0.0;
    double s = 0.0;
    PoleProfile profile = PoleProfile::cutoff;
    double r0 = 0.1;
    double r1 = 0.2;
};

struct QuasiPshModel {
    int n = 1;
    TrigPoly smooth;
    // Optional term log det(I + H(phi_star)); phi_star must keep I + H(phi_star) > 0.
    std::optional<TrigPoly> logdet_of;
    std::vector<Pole> poles;

    void validate() const;
    bool has_poles() const { return !poles.empty(); }
    // Pointwise value; a negative s_override means "use each pole's own s".
    // clamp_h > 0 floors the squared distance at clamp_h^2 when the effective s is 0.
    double value(const Point& x, double s_override = -1.0, double clamp_h = 0.0) const;
};

double cutoff_chi(double d, double r0, double r1);

GridField evaluate(const QuasiPshModel& model, const TorusSpec& spec,
                   std::optional<double> s_override = std::nullopt);

// Smallest C >= 0 (to 1e-3) with min eig(C I + H(evaluate(model, s))) >= -1e-8 on the
// grid, maximized over the given smoothings.  An optional mask restricts the probe.
double hessian_lower_bound(const QuasiPshModel& model, const TorusSpec& spec,
                           const std::vector<double>& s_values,
                           const std::vector<unsigned char>* mask = nullptr);
double hessian_lower_bound(const QuasiPshModel& model, const TorusSpec& spec);
// Bisection on a sampled field.
double hessian_lower_bound_field(const GridField& psi, const std::vector<unsigned char>* mask = nullptr);

constexpr double kMinEigTol = 1e-8;
constexpr double kLowerBoundTol = 1e-3;

struct RegularizeResult {
    GridField value;
    double C = 0.0;
    double min_eig = 0.0;
    double lower_margin = 0.0;  // min of output - (evaluate(model, 0) - 1)
    bool lower_checked = false;
};

// Heat smoothing at time eps of evaluate(model, sqrt(eps)).  Throws ContractError if
// min eig(C I + H(out)) < -1e-8, or (for eps <= 0.1) out < evaluate(model, 0) - 1.
RegularizeResult regularize_checked(const QuasiPshModel& model, const TorusSpec& spec, double eps);
GridField regularize(const QuasiPshModel& model, const TorusSpec& spec, double eps);

struct LelongEstimate {
    double analytic = 0.0;
    double numeric = 0.0;
    bool consistent = false;
    double r_lo = 0.0, r_hi = 0.0;
};

double lelong_number(const QuasiPshModel& model, const Point& x);
LelongEstimate lelong_estimate(const QuasiPshModel& model, const Point& x, double h);

enum class Integrability { integrable, not_integrable, borderline };
std::string to_string(Integrability v);

struct SkodaResult {
    Integrability declared = Integrability::borderline;
    double margin = 0.0;
    // Numeric shell-ratio verdicts at two quadrature refinements.
    Integrability numeric_coarse = Integrability::borderline;
    Integrability numeric_fine = Integrability::borderline;
    double ratio_coarse = 0.0;
    double ratio_fine = 0.0;
    bool numeric_agrees = false;
};

constexpr double kBorderline = 0.05;

SkodaResult skoda_integrability(const QuasiPshModel& model, double p, const Point& x);

struct SkodaShells {
    double radius = 0.0;       // outer radius of the first shell
    double ratio = 16.0;       // radius ratio between consecutive shells
    int shells = 3;
    int points_per_axis = 0;   // Cartesian midpoint points per axis and shell
};
SkodaShells default_shells(const QuasiPshModel& model, const Point& x, int refinement);
// Integrals of exp(-p psi) over consecutive dyadic shells around x.
std::vector<double> shell_integrals(const QuasiPshModel& model, double p, const Point& x,
                                    const SkodaShells& shells);
Integrability classify_shell_ratio(double q);

struct SingularPoint {
    Point center;
    double lelong = 0.0;
};

struct SingularSet {
    std::vector<SingularPoint> points;
    double threshold = 0.0;
    bool contains_near(const Point& x, double radius, int dim) const;
};

SingularSet singular_set(const QuasiPshModel& model, double p);
// Distinct pole centers with their total weights.
std::vector<SingularPoint> pole_centers(const QuasiPshModel& model);

struct DensityLpCheck {
    double norm = 0.0;       // at the working resolution
    double norm_fine = 0.0;  // at 2N
    double ratio = 0.0;
    bool flagged = false;    // ratio > 1.5
};

DensityLpCheck density_lp_check(const QuasiPshModel& psi1, const QuasiPshModel& psi2, double p,
                                const TorusSpec& spec);

}  // namespace cma
