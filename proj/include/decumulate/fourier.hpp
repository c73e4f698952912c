#pragma once

// One-step transition operators on uniform log grids: v(x) -> E[v(x + X)]
// for a Levy increment X with known characteristic function, applied by
// multiplying the discrete Fourier transform of v with phi(omega).
// The grid is extended on both sides by replicating the edge values, so
// wrap-around only mixes the constant extensions.

#include <complex>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>

namespace decumulate {

using LogCharFn1 = std::function<std::complex<double>(double)>;
using LogCharFn2 = std::function<std::complex<double>(double, double)>;

/// Smallest FFT length >= n whose prime factors are 2, 3, 5 or 7.
std::size_t good_fft_size(std::size_t n);

/// Probability that |X| > d, from the density recovered on a wide fine grid.
double tail_mass(const LogCharFn1& log_char, double d);

/// Smallest displacement d (to 0.01) with tail_mass(d) below tol.
double tail_displacement(const LogCharFn1& log_char, double tol);

class Propagator1D {
public:
    /// n grid nodes spaced h apart, padded with `pad` replicated nodes on each side.
    Propagator1D(std::size_t n, double h, std::size_t pad, const LogCharFn1& log_char);
    ~Propagator1D();
    Propagator1D(const Propagator1D&) = delete;
    Propagator1D& operator=(const Propagator1D&) = delete;

    std::size_t size() const { return n_; }
    std::size_t padded_size() const { return N_; }

    /// In place: values[k] <- E[values(x_k + X)].
    void apply(std::span<double> values);

private:
    struct Impl;
    std::size_t n_;
    std::size_t N_;
    std::size_t pad_;
    std::unique_ptr<Impl> impl_;
};

class Propagator2D {
public:
    /// nx x ny nodes, row-major with y contiguous.
    Propagator2D(std::size_t nx, double hx, std::size_t pad_x, std::size_t ny, double hy, std::size_t pad_y,
                 const LogCharFn2& log_char);
    ~Propagator2D();
    Propagator2D(const Propagator2D&) = delete;
    Propagator2D& operator=(const Propagator2D&) = delete;

    std::size_t padded_nx() const { return Nx_; }
    std::size_t padded_ny() const { return Ny_; }

    /// In place: values[i * ny + j] <- E[values(x_i + X, y_j + Y)].
    void apply(std::span<double> values);

private:
    struct Impl;
    std::size_t nx_, ny_, Nx_, Ny_, pad_x_, pad_y_;
    std::unique_ptr<Impl> impl_;
};

}  // namespace decumulate
