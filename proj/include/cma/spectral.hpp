#pragma once

#include <array>
#include <complex>
#include <memory>
#include <vector>

#include "cma/kernels.hpp"
#include "cma/torus.hpp"

namespace cma {

// Trigonometric differentiation on the torus grid, backed by FFTW real
// transforms.  Modes carrying a Nyquist index on any axis are dropped from
// every derivative symbol (they are not differentiable on the grid), which
// keeps derivatives real and the discrete Hessian exactly Hermitian.
class Spectral {
public:
    using cplx = std::complex<double>;

    static std::shared_ptr<const Spectral> get(const TorusSpec& spec);
    explicit Spectral(const TorusSpec& spec);
    ~Spectral();
    Spectral(const Spectral&) = delete;
    Spectral& operator=(const Spectral&) = delete;

    const TorusSpec& spec() const { return spec_; }
    std::size_t spectral_size() const { return nspec_; }

    std::vector<cplx> forward(const std::vector<double>& f) const;
    // Unnormalized inverse; the result is scaled by 1/M here.
    std::vector<double> inverse(const std::vector<cplx>& c) const;

    // Integer wavenumber on axis a, and whether a Nyquist index is present.
    int k(std::size_t s, int a) const { return kw_[s * 4 + a]; }
    bool nyquist(std::size_t s) const { return nyq_[s] != 0; }

    // Applies a real symbol sym(k0..k3, nyquist) to f.
    template <class Sym>
    std::vector<double> apply(const std::vector<cplx>& fhat, Sym&& sym) const {
        std::vector<cplx> g(fhat.size());
        for_each_point(default_exec(), fhat.size(), [&](std::size_t s) {
            g[s] = fhat[s] * sym(k(s, 0), k(s, 1), k(s, 2), k(s, 3), nyquist(s));
        });
        return inverse(g);
    }

private:
    TorusSpec spec_;
    std::size_t nspec_ = 0;
    std::vector<int> kw_;
    std::vector<unsigned char> nyq_;
    void* plan_fwd_ = nullptr;
    void* plan_inv_ = nullptr;
};

HermitianFormField complex_hessian(const GridField& f);
// Trace of complex_hessian, formed from the same components.
GridField half_laplacian(const GridField& f);
// One-transform Laplacian with the same symbol; equal to half_laplacian up to round-off.
GridField flat_laplacian(const GridField& f);
// Mean-zero u with flat Laplacian u = f on the resolvable modes.
GridField inverse_half_laplacian(const GridField& f);
// Spectral multiplier exp(-eps * 4 pi^2 |k|^2) on all modes.
GridField heat(const GridField& f, double eps);
// Real gradient, one field per real axis.
std::vector<GridField> gradient(const GridField& f);
// Real Hessian d^2 f / dx_a dx_b for a <= b, in row-major upper-triangle order.
std::vector<GridField> real_hessian(const GridField& f);

}  // namespace cma
