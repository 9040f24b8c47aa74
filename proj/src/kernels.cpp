#include "cma/kernels.hpp"

#include <atomic>

namespace cma {

namespace {
std::atomic<Exec> g_exec{Exec::parallel};
}

Exec default_exec() { return g_exec.load(); }
void set_default_exec(Exec e) { g_exec.store(e); }

GridField min_eigenvalue_field(const HermitianFormField& H, Exec ex) {
    const int n = H.spec().n;
    std::vector<double> out(H.size());
    for_each_point(ex, H.size(), [&](std::size_t i) { out[i] = herm::min_eig(n, H.at(i)); });
    return GridField(H.spec(), std::move(out));
}

GridField det_field(const HermitianFormField& H, Exec ex) {
    const int n = H.spec().n;
    std::vector<double> out(H.size());
    for_each_point(ex, H.size(), [&](std::size_t i) { out[i] = herm::det(n, H.at(i)); });
    return GridField(H.spec(), std::move(out));
}

double min_eigenvalue(const HermitianFormField& H, Exec ex) {
    const int n = H.spec().n;
    return -reduce_max(ex, H.size(), [&](std::size_t i) { return -herm::min_eig(n, H.at(i)); });
}

double integrate(const GridField& f, Exec ex) {
    const double* v = f.data();
    const double s = reduce_sum(ex, f.size(), [v](std::size_t i) { return v[i]; });
    return s / static_cast<double>(f.size()) * TorusSpec::volume();
}

double lp_quasi_norm(const GridField& f, double p, Exec ex) {
    if (!(p > 0)) throw InputError("lp_quasi_norm: p must be positive");
    const double* v = f.data();
    const double m = f.sup_abs();
    if (m == 0.0) return 0.0;
    // Scale by the max to avoid overflow of |f|^p.
    const double s = reduce_sum(ex, f.size(), [=](std::size_t i) { return std::pow(std::fabs(v[i]) / m, p); });
    return m * std::pow(s / static_cast<double>(f.size()) * TorusSpec::volume(), 1.0 / p);
}

double lp_norm(const GridField& f, double p, Exec ex) {
    if (!(p >= 1.0)) throw InputError("lp_norm: p must be >= 1");
    return lp_quasi_norm(f, p, ex);
}

double log_integral_exp(const GridField& g, Exec ex) {
    const double* v = g.data();
    const double m = g.max();
    const double s = reduce_sum(ex, g.size(), [=](std::size_t i) { return std::exp(v[i] - m); });
    return m + std::log(s / static_cast<double>(g.size()) * TorusSpec::volume());
}

}  // namespace cma
