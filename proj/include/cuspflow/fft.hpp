#pragma once

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <vector>

#include "cuspflow/grid.hpp"

namespace cuspflow {

namespace detail {
// FFTW plan creation is not thread-safe; execution is.
inline std::mutex& fftw_plan_mutex() {
    static std::mutex m;
    return m;
}
}  // namespace detail

/// Per-thread spectral workspace on the oblique lattice C/(Z + tau Z).
/// Owns FFTW plans and scratch buffers; one instance per concurrent solver.
class SpectralWorkspace {
  public:
    explicit SpectralWorkspace(const TorusSpec& spec)
        : nx_(spec.nx), ny_(spec.ny), nk_(static_cast<std::size_t>(spec.ny) * (spec.nx / 2 + 1)) {
        real_ = fftw_alloc_real(static_cast<std::size_t>(nx_) * ny_);
        spec_ = fftw_alloc_complex(nk_);
        {
            std::lock_guard<std::mutex> lock(detail::fftw_plan_mutex());
            fwd_ = fftw_plan_dft_r2c_2d(ny_, nx_, real_, spec_, FFTW_ESTIMATE);
            bwd_ = fftw_plan_dft_c2r_2d(ny_, nx_, spec_, real_, FFTW_ESTIMATE);
        }
        // Fourier multipliers of the flat Laplacian: mode e^{2*pi*i(m a + n b)}
        // on z = a + tau b has |k|^2 = 4 pi^2 (m^2 + ((n - m t1)/t2)^2).
        lap_.resize(nk_);
        double t1 = spec.tau.real(), t2 = spec.tau.imag();
        for (int j = 0; j < ny_; ++j) {
            int n = (j <= ny_ / 2) ? j : j - ny_;
            for (int i = 0; i <= nx_ / 2; ++i) {
                int m = i;
                double ky = (n - m * t1) / t2;
                lap_[static_cast<std::size_t>(j) * (nx_ / 2 + 1) + i] =
                    -4.0 * M_PI * M_PI * (double(m) * m + ky * ky);
            }
        }
    }

    ~SpectralWorkspace() {
        std::lock_guard<std::mutex> lock(detail::fftw_plan_mutex());
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(bwd_);
        fftw_free(real_);
        fftw_free(spec_);
    }

    SpectralWorkspace(const SpectralWorkspace&) = delete;
    SpectralWorkspace& operator=(const SpectralWorkspace&) = delete;

    /// Spectral (Fourier-multiplier) Laplacian with exact periodic wrap.
    GridField laplacian(const GridField& f) {
        return apply([this](std::size_t k) { return lap_[k]; }, f);
    }

    /// Solves (c - (1/2) Lap) u = f exactly in Fourier space; requires c > 0.
    GridField helmholtz_inverse(double c, const GridField& f) {
        return apply([this, c](std::size_t k) { return 1.0 / (c - 0.5 * lap_[k]); }, f);
    }

  private:
    template <typename Mult>
    GridField apply(Mult mult, const GridField& f) {
        const std::size_t n = static_cast<std::size_t>(nx_) * ny_;
        for (std::size_t k = 0; k < n; ++k) real_[k] = f.v[k];
        fftw_execute(fwd_);
        const double inv = 1.0 / double(n);
        for (std::size_t k = 0; k < nk_; ++k) {
            double m = mult(k) * inv;
            spec_[k][0] *= m;
            spec_[k][1] *= m;
        }
        fftw_execute(bwd_);
        GridField out(nx_, ny_);
        for (std::size_t k = 0; k < n; ++k) out.v[k] = real_[k];
        return out;
    }

    int nx_, ny_;
    std::size_t nk_;
    double* real_;
    fftw_complex* spec_;
    fftw_plan fwd_, bwd_;
    std::vector<double> lap_;
};

/// Density of omega0 + i ddbar(f) relative to dx^dy is rho0 + ddbar_density(f);
/// in n = 1 the i ddbar density is (1/2) Lap f.
inline GridField ddbar_density(const GridField& f, SpectralWorkspace& ws) {
    GridField g = ws.laplacian(f);
    g *= 0.5;
    return g;
}

/// Compact 5/9-point finite-difference Laplacian in lattice coordinates,
/// with the oblique metric correction. Second-order; local stencil, so a
/// point singularity does not pollute distant nodes (unlike the spectral one).
inline GridField fd_laplacian(const GridField& f, const TorusSpec& spec) {
    double t1 = spec.tau.real(), t2 = spec.tau.imag();
    double caa = (t1 * t1 + t2 * t2) / (t2 * t2);
    double cab = -2.0 * t1 / (t2 * t2);
    double cbb = 1.0 / (t2 * t2);
    double ha = 1.0 / spec.nx, hb = 1.0 / spec.ny;
    GridField out(spec);
    for (int j = 0; j < spec.ny; ++j)
        for (int i = 0; i < spec.nx; ++i) {
            double daa = (f.at(i + 1, j) - 2.0 * f.at(i, j) + f.at(i - 1, j)) / (ha * ha);
            double dbb = (f.at(i, j + 1) - 2.0 * f.at(i, j) + f.at(i, j - 1)) / (hb * hb);
            double dab = (f.at(i + 1, j + 1) - f.at(i + 1, j - 1) - f.at(i - 1, j + 1) + f.at(i - 1, j - 1)) /
                         (4.0 * ha * hb);
            out.at(i, j) = caa * daa + cab * dab + cbb * dbb;
        }
    return out;
}

}  // namespace cuspflow
