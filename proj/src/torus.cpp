#include "cma/torus.hpp"

#include <algorithm>
#include <cmath>

namespace cma {

TorusSpec::TorusSpec(int n_, int N_) : n(n_), N(N_) {
    if (n != 1 && n != 2) throw InputError("torus: complex dimension must be 1 or 2");
    if (N < 8 || N % 2 != 0) throw InputError("torus: N must be even and >= 8");
}

std::size_t TorusSpec::size() const {
    std::size_t m = 1;
    for (int a = 0; a < real_dim(); ++a) m *= static_cast<std::size_t>(N);
    return m;
}

std::array<int, 4> TorusSpec::unravel(std::size_t idx) const {
    std::array<int, 4> i{0, 0, 0, 0};
    for (int a = real_dim() - 1; a >= 0; --a) {
        i[a] = static_cast<int>(idx % N);
        idx /= N;
    }
    return i;
}

std::size_t TorusSpec::ravel(const std::array<int, 4>& i) const {
    std::size_t idx = 0;
    for (int a = 0; a < real_dim(); ++a) {
        int v = ((i[a] % N) + N) % N;
        idx = idx * N + static_cast<std::size_t>(v);
    }
    return idx;
}

std::array<double, 4> TorusSpec::coords(std::size_t idx) const {
    auto i = unravel(idx);
    std::array<double, 4> x{0, 0, 0, 0};
    for (int a = 0; a < real_dim(); ++a) x[a] = static_cast<double>(i[a]) / N;
    return x;
}

double wrap_delta(double d) {
    d -= std::floor(d + 0.5);
    return d;
}

double periodic_dist2(const std::array<double, 4>& x, const std::array<double, 4>& a, int dim) {
    double s = 0;
    for (int k = 0; k < dim; ++k) {
        double d = wrap_delta(x[k] - a[k]);
        s += d * d;
    }
    return s;
}

GridField::GridField(const TorusSpec& spec, double fill)
    : spec_(spec), values_(spec.size(), fill) {
    if (!std::isfinite(fill)) throw InputError("GridField: non-finite fill value");
}

GridField::GridField(const TorusSpec& spec, std::vector<double> values)
    : spec_(spec), values_(std::move(values)) {
    if (values_.size() != spec_.size()) throw InputError("GridField: size does not match grid");
    validate();
}

void GridField::validate() const {
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (!std::isfinite(values_[i]))
            throw InputError("GridField: non-finite value at index " + std::to_string(i));
    }
}

static void require_same(const TorusSpec& a, const TorusSpec& b) {
    if (a != b) throw InputError("grid mismatch");
}

GridField& GridField::operator+=(const GridField& o) {
    require_same(spec_, o.spec_);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
    return *this;
}

GridField& GridField::operator-=(const GridField& o) {
    require_same(spec_, o.spec_);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
    return *this;
}

GridField& GridField::operator*=(double s) {
    for (auto& v : values_) v *= s;
    return *this;
}

GridField& GridField::operator+=(double s) {
    for (auto& v : values_) v += s;
    return *this;
}

double GridField::max() const { return *std::max_element(values_.begin(), values_.end()); }
double GridField::min() const { return *std::min_element(values_.begin(), values_.end()); }

double GridField::sup_abs() const {
    double m = 0;
    for (double v : values_) m = std::max(m, std::fabs(v));
    return m;
}

std::size_t GridField::argmax() const {
    return static_cast<std::size_t>(std::max_element(values_.begin(), values_.end()) - values_.begin());
}

GridField operator+(GridField a, const GridField& b) { return a += b; }
GridField operator-(GridField a, const GridField& b) { return a -= b; }
GridField operator*(double s, GridField a) { return a *= s; }

HermitianFormField::HermitianFormField(const TorusSpec& spec) : spec_(spec) {
    h11.assign(spec.size(), 0.0);
    if (spec.n == 2) {
        h22.assign(spec.size(), 0.0);
        re12.assign(spec.size(), 0.0);
        im12.assign(spec.size(), 0.0);
    }
}

HermitianFormField HermitianFormField::identity(const TorusSpec& spec, double scale) {
    HermitianFormField H(spec);
    std::fill(H.h11.begin(), H.h11.end(), scale);
    std::fill(H.h22.begin(), H.h22.end(), scale);
    return H;
}

HermitianFormField HermitianFormField::from_matrices(const TorusSpec& spec,
                                                     const std::vector<std::array<double, 8>>& m) {
    if (m.size() != spec.size()) throw InputError("HermitianFormField: size does not match grid");
    HermitianFormField H(spec);
    for (std::size_t i = 0; i < m.size(); ++i) {
        const auto& e = m[i];
        // e = {re00, im00, re01, im01, re10, im10, re11, im11}
        for (double v : e)
            if (!std::isfinite(v)) throw InputError("HermitianFormField: non-finite entry");
        H.h11[i] = e[0];
        if (spec.n == 2) {
            H.h22[i] = e[6];
            H.re12[i] = 0.5 * (e[2] + e[4]);
            H.im12[i] = 0.5 * (e[3] - e[5]);
        }
    }
    return H;
}

HermPoint HermitianFormField::at(std::size_t i) const {
    HermPoint p;
    p.h11 = h11[i];
    if (spec_.n == 2) {
        p.h22 = h22[i];
        p.re12 = re12[i];
        p.im12 = im12[i];
    }
    return p;
}

void HermitianFormField::set(std::size_t i, const HermPoint& p) {
    h11[i] = p.h11;
    if (spec_.n == 2) {
        h22[i] = p.h22;
        re12[i] = p.re12;
        im12[i] = p.im12;
    }
}

HermitianFormField& HermitianFormField::operator+=(const HermitianFormField& o) {
    require_same(spec_, o.spec_);
    for (std::size_t i = 0; i < h11.size(); ++i) h11[i] += o.h11[i];
    for (std::size_t i = 0; i < h22.size(); ++i) {
        h22[i] += o.h22[i];
        re12[i] += o.re12[i];
        im12[i] += o.im12[i];
    }
    return *this;
}

HermitianFormField& HermitianFormField::add_identity(double s) {
    for (auto& v : h11) v += s;
    for (auto& v : h22) v += s;
    return *this;
}

HermitianFormField& HermitianFormField::operator*=(double s) {
    for (auto* vec : {&h11, &h22, &re12, &im12})
        for (auto& v : *vec) v *= s;
    return *this;
}

HermitianFormField operator+(HermitianFormField a, const HermitianFormField& b) { return a += b; }

GridField trace(const HermitianFormField& H) {
    std::vector<double> t(H.h11);
    if (H.spec().n == 2)
        for (std::size_t i = 0; i < t.size(); ++i) t[i] += H.h22[i];
    return GridField(H.spec(), std::move(t));
}

}  // namespace cma
