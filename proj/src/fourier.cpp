#include "decumulate/fourier.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace decumulate {

namespace {

// FFTW planning is not thread-safe; execution on distinct plans is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

double frequency(std::size_t k, std::size_t N, double h) {
    const double kk = k <= N / 2 ? static_cast<double>(k) : static_cast<double>(k) - static_cast<double>(N);
    return 2.0 * std::numbers::pi * kk / (static_cast<double>(N) * h);
}

struct TailGrid {
    std::vector<double> x;
    std::vector<double> mass;
};

TailGrid density_masses(const LogCharFn1& log_char) {
    constexpr std::size_t N = 1 << 17;
    constexpr double L = 120.0;
    const double h = L / static_cast<double>(N);
    std::vector<std::complex<double>> buf(N);
    for (std::size_t k = 0; k < N; ++k) buf[k] = std::exp(log_char(frequency(k, N, h)));
    fftw_plan plan;
    {
        std::lock_guard lock(planner_mutex());
        plan = fftw_plan_dft_1d(static_cast<int>(N), reinterpret_cast<fftw_complex*>(buf.data()),
                                reinterpret_cast<fftw_complex*>(buf.data()), FFTW_FORWARD, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(plan);
    }
    TailGrid g;
    g.x.resize(N);
    g.mass.resize(N);
    for (std::size_t j = 0; j < N; ++j) {
        g.x[j] = j <= N / 2 ? static_cast<double>(j) * h : (static_cast<double>(j) - static_cast<double>(N)) * h;
        g.mass[j] = std::max(buf[j].real() / static_cast<double>(N), 0.0);
    }
    return g;
}

double tail_from(const TailGrid& g, double d) {
    double t = 0.0;
    for (std::size_t j = 0; j < g.x.size(); ++j)
        if (std::abs(g.x[j]) > d) t += g.mass[j];
    return t;
}

}  // namespace

std::size_t good_fft_size(std::size_t n) {
    for (std::size_t m = std::max<std::size_t>(n, 1);; ++m) {
        std::size_t r = m;
        for (std::size_t p : {2, 3, 5, 7})
            while (r % p == 0) r /= p;
        if (r == 1) return m;
    }
}

double tail_mass(const LogCharFn1& log_char, double d) { return tail_from(density_masses(log_char), d); }

double tail_displacement(const LogCharFn1& log_char, double tol) {
    const auto g = density_masses(log_char);
    double lo = 0.0;
    double hi = 50.0;
    if (tail_from(g, hi) >= tol) return hi;
    while (hi - lo > 0.01) {
        const double mid = 0.5 * (lo + hi);
        (tail_from(g, mid) < tol ? hi : lo) = mid;
    }
    return hi;
}

struct Propagator1D::Impl {
    std::vector<double> real;
    std::vector<std::complex<double>> spec;
    std::vector<std::complex<double>> phi;
    fftw_plan forward = nullptr;
    fftw_plan backward = nullptr;
};

Propagator1D::Propagator1D(std::size_t n, double h, std::size_t pad, const LogCharFn1& log_char)
    : n_(n), pad_(pad), impl_(std::make_unique<Impl>()) {
    if (n < 2 || !(h > 0.0)) throw std::invalid_argument("Propagator1D: need at least two nodes and h > 0");
    N_ = good_fft_size(n + 2 * pad);
    impl_->real.resize(N_);
    impl_->spec.resize(N_ / 2 + 1);
    impl_->phi.resize(N_ / 2 + 1);
    for (std::size_t k = 0; k <= N_ / 2; ++k)
        impl_->phi[k] = std::exp(log_char(frequency(k, N_, h))) / static_cast<double>(N_);
    std::lock_guard lock(planner_mutex());
    impl_->forward = fftw_plan_dft_r2c_1d(static_cast<int>(N_), impl_->real.data(),
                                          reinterpret_cast<fftw_complex*>(impl_->spec.data()), FFTW_ESTIMATE);
    impl_->backward = fftw_plan_dft_c2r_1d(static_cast<int>(N_), reinterpret_cast<fftw_complex*>(impl_->spec.data()),
                                           impl_->real.data(), FFTW_ESTIMATE);
}

Propagator1D::~Propagator1D() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(impl_->forward);
    fftw_destroy_plan(impl_->backward);
}

void Propagator1D::apply(std::span<double> values) {
    if (values.size() != n_) throw std::invalid_argument("Propagator1D::apply: size mismatch");
    auto& a = impl_->real;
    // Data sits at [pad, pad + n); everything else repeats the nearest edge.
    for (std::size_t k = 0; k < N_; ++k) {
        const std::ptrdiff_t src = std::clamp<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(k) -
                                                                  static_cast<std::ptrdiff_t>(pad_),
                                                              0, static_cast<std::ptrdiff_t>(n_) - 1);
        a[k] = values[static_cast<std::size_t>(src)];
    }
    fftw_execute(impl_->forward);
    for (std::size_t k = 0; k < impl_->spec.size(); ++k) impl_->spec[k] *= impl_->phi[k];
    fftw_execute(impl_->backward);
    for (std::size_t k = 0; k < n_; ++k) values[k] = a[k + pad_];
}

struct Propagator2D::Impl {
    double* real = nullptr;
    fftw_complex* spec = nullptr;
    std::vector<std::complex<double>> phi;
    fftw_plan forward = nullptr;
    fftw_plan backward = nullptr;
};

Propagator2D::Propagator2D(std::size_t nx, double hx, std::size_t pad_x, std::size_t ny, double hy,
                           std::size_t pad_y, const LogCharFn2& log_char)
    : nx_(nx), ny_(ny), pad_x_(pad_x), pad_y_(pad_y), impl_(std::make_unique<Impl>()) {
    if (nx < 2 || ny < 2 || !(hx > 0.0) || !(hy > 0.0))
        throw std::invalid_argument("Propagator2D: need at least two nodes per axis and positive spacing");
    Nx_ = good_fft_size(nx + 2 * pad_x);
    Ny_ = good_fft_size(ny + 2 * pad_y);
    const std::size_t nc = Ny_ / 2 + 1;
    impl_->real = fftw_alloc_real(Nx_ * Ny_);
    impl_->spec = fftw_alloc_complex(Nx_ * nc);
    if (!impl_->real || !impl_->spec) throw std::bad_alloc();
    impl_->phi.resize(Nx_ * nc);
    const double norm = 1.0 / (static_cast<double>(Nx_) * static_cast<double>(Ny_));
    for (std::size_t i = 0; i < Nx_; ++i) {
        const double wx = frequency(i, Nx_, hx);
        for (std::size_t j = 0; j < nc; ++j)
            impl_->phi[i * nc + j] = std::exp(log_char(wx, frequency(j, Ny_, hy))) * norm;
    }
    std::lock_guard lock(planner_mutex());
    impl_->forward = fftw_plan_dft_r2c_2d(static_cast<int>(Nx_), static_cast<int>(Ny_), impl_->real, impl_->spec,
                                          FFTW_ESTIMATE);
    impl_->backward = fftw_plan_dft_c2r_2d(static_cast<int>(Nx_), static_cast<int>(Ny_), impl_->spec, impl_->real,
                                           FFTW_ESTIMATE);
}

Propagator2D::~Propagator2D() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(impl_->forward);
    fftw_destroy_plan(impl_->backward);
    fftw_free(impl_->real);
    fftw_free(impl_->spec);
}

void Propagator2D::apply(std::span<double> values) {
    if (values.size() != nx_ * ny_) throw std::invalid_argument("Propagator2D::apply: size mismatch");
    double* a = impl_->real;
    const auto clamp_src = [](std::size_t k, std::size_t pad, std::size_t n) {
        return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(
            static_cast<std::ptrdiff_t>(k) - static_cast<std::ptrdiff_t>(pad), 0, static_cast<std::ptrdiff_t>(n) - 1));
    };
    for (std::size_t i = 0; i < Nx_; ++i) {
        const double* row = values.data() + clamp_src(i, pad_x_, nx_) * ny_;
        double* dst = a + i * Ny_;
        for (std::size_t j = 0; j < pad_y_; ++j) dst[j] = row[0];
        std::copy(row, row + ny_, dst + pad_y_);
        for (std::size_t j = pad_y_ + ny_; j < Ny_; ++j) dst[j] = row[ny_ - 1];
    }
    fftw_execute(impl_->forward);
    auto* spec = reinterpret_cast<std::complex<double>*>(impl_->spec);
    const std::size_t total = impl_->phi.size();
    for (std::size_t k = 0; k < total; ++k) spec[k] *= impl_->phi[k];
    fftw_execute(impl_->backward);
    for (std::size_t i = 0; i < nx_; ++i)
        std::copy(a + (i + pad_x_) * Ny_ + pad_y_, a + (i + pad_x_) * Ny_ + pad_y_ + ny_, values.data() + i * ny_);
}

}  // namespace decumulate
