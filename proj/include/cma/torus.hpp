#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "cma/error.hpp"

namespace cma {

// Flat torus C^n / Z^{2n} sampled on N points per real axis.
// Real axes are ordered (x1, y1, x2, y2); the last axis varies fastest.
// dV is Lebesgue measure on [0,1)^{2n}, so Vol = 1 and densities are
// plain determinant ratios against the identity form.
struct TorusSpec {
    int n = 1;
    int N = 8;

    TorusSpec() = default;
    TorusSpec(int n_, int N_);

    int real_dim() const { return 2 * n; }
    std::size_t size() const;
    double h() const { return 1.0 / N; }
    static constexpr double volume() { return 1.0; }

    // Multi-index <-> flat index.
    std::array<int, 4> unravel(std::size_t idx) const;
    std::size_t ravel(const std::array<int, 4>& i) const;
    std::array<double, 4> coords(std::size_t idx) const;

    bool operator==(const TorusSpec& o) const { return n == o.n && N == o.N; }
    bool operator!=(const TorusSpec& o) const { return !(*this == o); }
};

// Periodic displacement x - a folded into [-1/2, 1/2).
double wrap_delta(double d);
double periodic_dist2(const std::array<double, 4>& x, const std::array<double, 4>& a, int dim);

class GridField {
public:
    GridField() = default;
    explicit GridField(const TorusSpec& spec, double fill = 0.0);
    GridField(const TorusSpec& spec, std::vector<double> values);

    const TorusSpec& spec() const { return spec_; }
    std::size_t size() const { return values_.size(); }
    const std::vector<double>& values() const { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }

    // Mutable access bypasses the finiteness check; call validate() after.
    std::vector<double>& mutable_values() { return values_; }
    double* data() { return values_.data(); }
    const double* data() const { return values_.data(); }
    void validate() const;

    GridField& operator+=(const GridField& o);
    GridField& operator-=(const GridField& o);
    GridField& operator*=(double s);
    GridField& operator+=(double s);

    double max() const;
    double min() const;
    double sup_abs() const;
    std::size_t argmax() const;

private:
    TorusSpec spec_;
    std::vector<double> values_;
};

GridField operator+(GridField a, const GridField& b);
GridField operator-(GridField a, const GridField& b);
GridField operator*(double s, GridField a);

// Pointwise Hermitian n x n matrix, n <= 2, stored by its upper triangle:
// h11, h22 real diagonals and h12 = re12 + i im12.  The lower entry is the
// conjugate by construction, so symmetry is exact.
struct HermPoint {
    double h11 = 0, h22 = 0, re12 = 0, im12 = 0;
};

class HermitianFormField {
public:
    HermitianFormField() = default;
    explicit HermitianFormField(const TorusSpec& spec);

    static HermitianFormField identity(const TorusSpec& spec, double scale = 1.0);
    // Builds from full complex matrices (row-major h[j][k] as (re, im) pairs),
    // symmetrizing as (M + M^*)/2.
    static HermitianFormField from_matrices(const TorusSpec& spec,
                                            const std::vector<std::array<double, 8>>& m);

    const TorusSpec& spec() const { return spec_; }
    std::size_t size() const { return h11.size(); }
    HermPoint at(std::size_t i) const;
    void set(std::size_t i, const HermPoint& p);

    HermitianFormField& operator+=(const HermitianFormField& o);
    HermitianFormField& add_identity(double s);
    HermitianFormField& operator*=(double s);

    // n = 1 leaves the last three empty.
    std::vector<double> h11, h22, re12, im12;

private:
    TorusSpec spec_;
};

HermitianFormField operator+(HermitianFormField a, const HermitianFormField& b);

GridField trace(const HermitianFormField& H);

}  // namespace cma
