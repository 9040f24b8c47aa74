#include "cma/spectral.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstring>
#include <map>
#include <mutex>
#include <numbers>

namespace cma {

namespace {

std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

struct FftwBuffer {
    explicit FftwBuffer(std::size_t bytes) : p(fftw_malloc(bytes)) {
        if (!p) throw std::bad_alloc();
    }
    ~FftwBuffer() { fftw_free(p); }
    FftwBuffer(const FftwBuffer&) = delete;
    FftwBuffer& operator=(const FftwBuffer&) = delete;
    void* p;
};

constexpr double kPi = std::numbers::pi;

}  // namespace

std::shared_ptr<const Spectral> Spectral::get(const TorusSpec& spec) {
    static std::mutex cache_mutex;
    static std::map<std::pair<int, int>, std::shared_ptr<const Spectral>> cache;
    std::lock_guard<std::mutex> lock(cache_mutex);
    auto key = std::make_pair(spec.n, spec.N);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    auto s = std::make_shared<const Spectral>(spec);
    cache.emplace(key, s);
    return s;
}

Spectral::Spectral(const TorusSpec& spec) : spec_(spec) {
    const int D = spec.real_dim();
    const int N = spec.N;
    const int Nh = N / 2 + 1;
    nspec_ = spec.size() / N * Nh;
    kw_.assign(nspec_ * 4, 0);
    nyq_.assign(nspec_, 0);
    for (std::size_t s = 0; s < nspec_; ++s) {
        std::size_t rem = s;
        int last = static_cast<int>(rem % Nh);
        rem /= Nh;
        bool nq = (last == N / 2);
        kw_[s * 4 + (D - 1)] = last;
        for (int a = D - 2; a >= 0; --a) {
            int idx = static_cast<int>(rem % N);
            rem /= N;
            if (idx == N / 2) nq = true;
            kw_[s * 4 + a] = idx <= N / 2 ? idx : idx - N;
        }
        nyq_[s] = nq ? 1 : 0;
    }

    std::vector<int> dims(D, N);
    std::lock_guard<std::mutex> lock(planner_mutex());
    FftwBuffer in(sizeof(double) * spec.size());
    FftwBuffer out(sizeof(fftw_complex) * nspec_);
    plan_fwd_ = fftw_plan_dft_r2c(D, dims.data(), static_cast<double*>(in.p),
                                  static_cast<fftw_complex*>(out.p), FFTW_ESTIMATE);
    plan_inv_ = fftw_plan_dft_c2r(D, dims.data(), static_cast<fftw_complex*>(out.p),
                                  static_cast<double*>(in.p), FFTW_ESTIMATE);
    if (!plan_fwd_ || !plan_inv_) throw Error("FFTW planning failed");
}

Spectral::~Spectral() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    if (plan_fwd_) fftw_destroy_plan(static_cast<fftw_plan>(plan_fwd_));
    if (plan_inv_) fftw_destroy_plan(static_cast<fftw_plan>(plan_inv_));
}

std::vector<Spectral::cplx> Spectral::forward(const std::vector<double>& f) const {
    if (f.size() != spec_.size()) throw InputError("spectral: size mismatch");
    FftwBuffer in(sizeof(double) * f.size());
    FftwBuffer out(sizeof(fftw_complex) * nspec_);
    std::memcpy(in.p, f.data(), sizeof(double) * f.size());
    fftw_execute_dft_r2c(static_cast<fftw_plan>(plan_fwd_), static_cast<double*>(in.p),
                         static_cast<fftw_complex*>(out.p));
    std::vector<cplx> c(nspec_);
    std::memcpy(static_cast<void*>(c.data()), out.p, sizeof(fftw_complex) * nspec_);
    return c;
}

std::vector<double> Spectral::inverse(const std::vector<cplx>& c) const {
    if (c.size() != nspec_) throw InputError("spectral: size mismatch");
    FftwBuffer in(sizeof(fftw_complex) * nspec_);
    FftwBuffer out(sizeof(double) * spec_.size());
    std::memcpy(in.p, static_cast<const void*>(c.data()), sizeof(fftw_complex) * nspec_);
    fftw_execute_dft_c2r(static_cast<fftw_plan>(plan_inv_), static_cast<fftw_complex*>(in.p),
                         static_cast<double*>(out.p));
    std::vector<double> f(spec_.size());
    const double scale = 1.0 / static_cast<double>(spec_.size());
    const double* o = static_cast<const double*>(out.p);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = o[i] * scale;
    return f;
}

// Even symbols are unambiguous on Nyquist modes, so pure second derivatives keep them.
// A mixed product k_x k_y is dropped when either factor sits on a Nyquist index: there the
// sign of k is undetermined and the symbol would not be real-even.
HermitianFormField complex_hessian(const GridField& f) {
    const auto& spec = f.spec();
    auto sp = Spectral::get(spec);
    auto fh = sp->forward(f.values());
    const double q = kPi * kPi;
    const int half = spec.N / 2;
    auto mix = [half](int x, int y) { return (std::abs(x) == half || std::abs(y) == half) ? 0 : x * y; };
    HermitianFormField H(spec);
    H.h11 = sp->apply(fh, [q](int a, int b, int, int, bool) { return -q * (a * a + b * b); });
    if (spec.n == 1) return H;
    H.h22 = sp->apply(fh, [q](int, int, int c, int d, bool) { return -q * (c * c + d * d); });
    H.re12 = sp->apply(fh, [q, mix](int a, int b, int c, int d, bool) { return -q * (mix(a, c) + mix(b, d)); });
    H.im12 = sp->apply(fh, [q, mix](int a, int b, int c, int d, bool) { return -q * (mix(a, d) - mix(b, c)); });
    return H;
}

GridField half_laplacian(const GridField& f) { return trace(complex_hessian(f)); }

GridField flat_laplacian(const GridField& f) {
    auto sp = Spectral::get(f.spec());
    const double q = kPi * kPi;
    return GridField(f.spec(), sp->apply(sp->forward(f.values()), [q](int a, int b, int c, int d, bool) {
        return -q * (a * a + b * b + c * c + d * d);
    }));
}

GridField inverse_half_laplacian(const GridField& f) {
    auto sp = Spectral::get(f.spec());
    const double q = kPi * kPi;
    return GridField(f.spec(), sp->apply(sp->forward(f.values()), [q](int a, int b, int c, int d, bool) {
        const int k2 = a * a + b * b + c * c + d * d;
        return k2 == 0 ? 0.0 : -1.0 / (q * k2);
    }));
}

GridField heat(const GridField& f, double eps) {
    if (!(eps >= 0)) throw InputError("heat: eps must be nonnegative");
    auto sp = Spectral::get(f.spec());
    const double q = 4.0 * kPi * kPi * eps;
    return GridField(f.spec(), sp->apply(sp->forward(f.values()), [q](int a, int b, int c, int d, bool) {
        return std::exp(-q * (a * a + b * b + c * c + d * d));
    }));
}

std::vector<GridField> gradient(const GridField& f) {
    auto sp = Spectral::get(f.spec());
    auto fh = sp->forward(f.values());
    const int half = f.spec().N / 2;
    std::vector<GridField> g;
    for (int ax = 0; ax < f.spec().real_dim(); ++ax) {
        g.emplace_back(f.spec(), sp->apply(fh, [ax, half](int a, int b, int c, int d, bool) {
            const int kk[4] = {a, b, c, d};
            return std::abs(kk[ax]) == half ? Spectral::cplx(0.0) : Spectral::cplx(0.0, 2.0 * kPi * kk[ax]);
        }));
    }
    return g;
}

std::vector<GridField> real_hessian(const GridField& f) {
    auto sp = Spectral::get(f.spec());
    auto fh = sp->forward(f.values());
    const int D = f.spec().real_dim();
    const int half = f.spec().N / 2;
    std::vector<GridField> out;
    for (int x = 0; x < D; ++x)
        for (int y = x; y < D; ++y)
            out.emplace_back(f.spec(), sp->apply(fh, [x, y, half](int a, int b, int c, int d, bool) {
                const int kk[4] = {a, b, c, d};
                if (x != y && (std::abs(kk[x]) == half || std::abs(kk[y]) == half)) return 0.0;
                return -4.0 * kPi * kPi * kk[x] * kk[y];
            }));
    return out;
}

}  // namespace cma
