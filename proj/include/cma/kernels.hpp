#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <exception>
#include <limits>
#include <vector>

#include "cma/torus.hpp"

namespace cma {

// Pointwise loops run either as a plain loop (the reference path) or under
// OpenMP.  Sums are always formed over fixed-size chunks added in index order,
// so both paths produce bit-identical results for any thread count.
enum class Exec { serial, parallel };

Exec default_exec();
void set_default_exec(Exec e);

constexpr std::size_t kReduceChunk = 4096;

template <class F>
void for_each_point(Exec ex, std::size_t m, F&& f) {
    const long long mm = static_cast<long long>(m);
    if (ex == Exec::parallel) {
        // Exceptions must not escape the parallel region; the first one is rethrown.
        std::exception_ptr err;
#pragma omp parallel for schedule(static)
        for (long long i = 0; i < mm; ++i) {
            try {
                f(static_cast<std::size_t>(i));
            } catch (...) {
#pragma omp critical(cma_for_each_point)
                if (!err) err = std::current_exception();
            }
        }
        if (err) std::rethrow_exception(err);
    } else {
        for (long long i = 0; i < mm; ++i) f(static_cast<std::size_t>(i));
    }
}

template <class F>
double reduce_sum(Exec ex, std::size_t m, F&& f) {
    const std::size_t nchunk = (m + kReduceChunk - 1) / kReduceChunk;
    std::vector<double> partial(nchunk, 0.0);
    auto body = [&](std::size_t c) {
        const std::size_t lo = c * kReduceChunk, hi = std::min(m, lo + kReduceChunk);
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) s += f(i);
        partial[c] = s;
    };
    for_each_point(ex, nchunk, body);
    double s = 0.0;
    for (double v : partial) s += v;
    return s;
}

template <class F>
double reduce_max(Exec ex, std::size_t m, F&& f) {
    const std::size_t nchunk = (m + kReduceChunk - 1) / kReduceChunk;
    std::vector<double> partial(nchunk, -std::numeric_limits<double>::infinity());
    auto body = [&](std::size_t c) {
        const std::size_t lo = c * kReduceChunk, hi = std::min(m, lo + kReduceChunk);
        double s = -std::numeric_limits<double>::infinity();
        for (std::size_t i = lo; i < hi; ++i) s = std::max(s, f(i));
        partial[c] = s;
    };
    for_each_point(ex, nchunk, body);
    double s = -std::numeric_limits<double>::infinity();
    for (double v : partial) s = std::max(s, v);
    return s;
}

// 2x2 (or 1x1) Hermitian algebra on HermPoint.
namespace herm {

inline double det(int n, const HermPoint& p) {
    if (n == 1) return p.h11;
    return p.h11 * p.h22 - (p.re12 * p.re12 + p.im12 * p.im12);
}

inline double min_eig(int n, const HermPoint& p) {
    if (n == 1) return p.h11;
    const double d = p.h11 - p.h22;
    const double r = std::sqrt(d * d + 4.0 * (p.re12 * p.re12 + p.im12 * p.im12));
    return 0.5 * ((p.h11 + p.h22) - r);
}

inline double max_eig(int n, const HermPoint& p) {
    if (n == 1) return p.h11;
    const double d = p.h11 - p.h22;
    const double r = std::sqrt(d * d + 4.0 * (p.re12 * p.re12 + p.im12 * p.im12));
    return 0.5 * ((p.h11 + p.h22) + r);
}

inline double trace(int n, const HermPoint& p) { return n == 1 ? p.h11 : p.h11 + p.h22; }

// trace(adj(P) Q).
inline double adj_contract(int n, const HermPoint& P, const HermPoint& Q) {
    if (n == 1) return Q.h11;
    return P.h22 * Q.h11 + P.h11 * Q.h22 - 2.0 * (P.re12 * Q.re12 + P.im12 * Q.im12);
}

// trace(P^{-1} Q).
inline double inv_contract(int n, const HermPoint& P, const HermPoint& Q) {
    return adj_contract(n, P, Q) / det(n, P);
}

// trace(P^{-1}).
inline double inv_trace(int n, const HermPoint& P) {
    if (n == 1) return 1.0 / P.h11;
    return (P.h11 + P.h22) / det(n, P);
}

inline HermPoint add_identity(HermPoint p, double s) {
    p.h11 += s;
    p.h22 += s;
    return p;
}

}  // namespace herm

GridField min_eigenvalue_field(const HermitianFormField& H, Exec ex = default_exec());
GridField det_field(const HermitianFormField& H, Exec ex = default_exec());
double min_eigenvalue(const HermitianFormField& H, Exec ex = default_exec());

double integrate(const GridField& f, Exec ex = default_exec());
// (integral |f|^p)^{1/p}; p >= 1.
double lp_norm(const GridField& f, double p, Exec ex = default_exec());
// Same quadrature for 0 < p < 1, where it is only a quasi-norm.
double lp_quasi_norm(const GridField& f, double p, Exec ex = default_exec());
// log of (integral exp(g)) computed with a max shift.
double log_integral_exp(const GridField& g, Exec ex = default_exec());

}  // namespace cma
