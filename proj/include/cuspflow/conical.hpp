#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "cuspflow/background.hpp"
#include "cuspflow/fft.hpp"
#include "cuspflow/grid.hpp"
#include "cuspflow/report.hpp"

namespace cuspflow {

struct ConeParams {
    double beta = 0.5;     // cone parameter, in (0, 1/2]
    double epsilon = 1e-6; // regularization of the log term

    void validate() const {
        if (!(beta > 0.0 && beta <= 0.5)) throw invalid_spec_error("ConeParams: beta must be in (0, 1/2]");
        if (epsilon < 0.0) throw invalid_spec_error("ConeParams: epsilon must be >= 0");
    }
};

/// Conical approximation potential psi_beta = -2 log((1 - |s|_h^{2 beta}) / beta).
/// Finite at all nodes; tends to 2 log(beta) into the puncture.
inline GridField psi_beta(const ConeParams& params, const BackgroundData& bg, const TorusSpec& spec) {
    params.validate();
    GridField out(spec);
    for (std::size_t k = 0; k < out.size(); ++k) {
        double L = bg.log_s_h_sq.v[k];
        if (L >= 0.0) throw invalid_background_error("psi_beta: |s|^2_h must be < 1 everywhere");
        out.v[k] = -2.0 * std::log((1.0 - std::exp(params.beta * L)) / params.beta);
    }
    return out;
}

/// Grid-scale floor for |s|^2_h: a small multiple of the smallest node value.
inline double grid_sigma_sq(const BackgroundData& bg, double mult = 4.0) {
    double mn = 1e300;
    for (double L : bg.log_s_h_sq.v) mn = std::min(mn, L);
    return mult * std::exp(mn);
}

/// Conical potential evaluated on L_sigma = log(sigma^2 + |s|^2_h): pointwise
/// >= psi_beta, still monotone in beta, and with a grid-resolvable density
/// spike. The spectral density of raw psi_beta node values goes negative near
/// the pole for small beta at finite resolution, so flows start from this
/// mollified potential instead.
inline GridField psi_beta_grid(const ConeParams& params, const BackgroundData& bg, const TorusSpec& spec) {
    params.validate();
    double sig = grid_sigma_sq(bg);
    GridField out(spec);
    for (std::size_t k = 0; k < out.size(); ++k) {
        double L = std::log(sig + std::exp(bg.log_s_h_sq.v[k]));
        if (L >= 0.0) throw invalid_background_error("psi_beta_grid: mollified |s|^2_h must be < 1 everywhere");
        out.v[k] = -2.0 * std::log((1.0 - std::exp(params.beta * L)) / params.beta);
    }
    return out;
}

/// Cusp potential psi_0 = -log( (log|s|^2_h)^2 ).
inline GridField psi_zero(const BackgroundData& bg, const TorusSpec& spec) {
    GridField out(spec);
    for (std::size_t k = 0; k < out.size(); ++k) {
        double L = bg.log_s_h_sq.v[k];
        if (L >= 0.0) throw invalid_background_error("psi_zero: |s|^2_h must be < 1 everywhere");
        out.v[k] = -std::log(L * L);
    }
    return out;
}

/// Cusp potential on the grid-mollified section norm (see psi_beta_grid).
inline GridField psi_zero_grid(const BackgroundData& bg, const TorusSpec& spec) {
    double sig = grid_sigma_sq(bg);
    GridField out(spec);
    for (std::size_t k = 0; k < out.size(); ++k) {
        double L = std::log(sig + std::exp(bg.log_s_h_sq.v[k]));
        if (L >= 0.0) throw invalid_background_error("psi_zero_grid: mollified |s|^2_h must be < 1 everywhere");
        out.v[k] = -std::log(L * L);
    }
    return out;
}

/// Pointwise monotonicity check: psi_{beta_{k+1}} <= psi_{beta_k} + tol along a
/// descending beta ladder; returns the max violation.
inline CheckReport check_monotone_psi(const std::vector<double>& betas, const BackgroundData& bg,
                                      const TorusSpec& spec, double tol = 1e-12) {
    CheckReport rep;
    rep.check = "psi_beta_monotone_decreasing";
    rep.params["betas"] = betas;
    rep.tolerance = tol;
    double worst = 0.0;
    GridField prev;
    for (std::size_t m = 0; m < betas.size(); ++m) {
        if (m > 0 && !(betas[m] < betas[m - 1]) && betas[m] != betas[m - 1])
            throw invalid_spec_error("check_monotone_psi: betas must be non-increasing");
        GridField cur = psi_beta({betas[m], 0.0}, bg, spec);
        if (m > 0)
            for (std::size_t k = 0; k < cur.size(); ++k)
                worst = std::max(worst, cur.v[k] - prev.v[k]);
        prev = std::move(cur);
    }
    rep.value = worst;
    rep.pass = worst <= tol;
    return rep;
}

/// Analytic density of omega_beta = omega0 + i ddbar psi_beta at an arbitrary point,
/// via the closed form of Lap psi_beta in terms of L = log|s|^2_h:
///   (1/2) Lap psi = -theta_dens * psi_L + (1/2) psi_LL |grad L|^2,
/// with psi_L = 2 beta w/(1-w), psi_LL = 2 beta^2 w/(1-w)^2, w = e^{beta L}.
inline double conical_density_at(complexd z, double beta, const BackgroundData& bg, const TorusSpec& spec) {
    double L = bg.log_s_sq_at(z, spec);
    double theta = 2.0 * M_PI / spec.tau.imag();
    double w = std::exp(beta * L);
    double psi_L = 2.0 * beta * w / (1.0 - w);
    double psi_LL = 2.0 * beta * beta * w / ((1.0 - w) * (1.0 - w));
    double grad_sq = 4.0 * std::norm(bg.dz_log_s_sq(z, spec));
    return theta - theta * psi_L + 0.5 * psi_LL * grad_sq;
}

/// Verifies rho_beta >= (1/2) rho0 at off-guard nodes via the closed form of
/// the conical density (the spectral Laplacian of psi_beta rings near the pole
/// for small beta, which would report a spurious violation); returns the
/// minimum density ratio rho_beta/rho0 in the report value.
inline CheckReport check_domination(const ConeParams& params, const BackgroundData& bg, const TorusSpec& spec) {
    CheckReport rep;
    rep.check = "omega_beta_dominates_half_omega0";
    rep.params["beta"] = params.beta;
    rep.tolerance = 0.5;
    double min_ratio = 1e300;
    std::size_t argmin = 0;
    for (int j = 0; j < spec.ny; ++j)
        for (int i = 0; i < spec.nx; ++i) {
            std::size_t k = std::size_t(j) * spec.nx + std::size_t(i);
            if (bg.guard.guarded(k)) continue;
            double r = conical_density_at(spec.node_z(i, j), params.beta, bg, spec) / bg.rho0.at(i, j);
            if (r < min_ratio) {
                min_ratio = r;
                argmin = k;
            }
        }
    rep.value = min_ratio;
    rep.pass = min_ratio >= 0.5;
    if (!rep.pass) rep.params["offending_node"] = argmin;
    return rep;
}

/// Estimates the cone-angle ratio of the metric with conformal density rho(z):
/// circumference(r) / (2 pi * distance-to-puncture(r)) for circles of radius r
/// around the puncture (midpoint quadrature of sqrt(rho) along circles and rays),
/// linearly extrapolated to r -> 0 over three radii. Approaches beta for omega_beta.
inline double cone_angle_estimate(const std::function<double(complexd)>& density, const TorusSpec& spec) {
    double h = std::max(1.0 / spec.nx, 1.0 / spec.ny) * spec.tau.imag();
    std::vector<double> radii = {4.0 * h, 8.0 * h, 16.0 * h};
    if (radii.back() > 0.4 * std::min(1.0, spec.tau.imag()))
        throw diagnostic_unavailable("cone_angle_estimate: grid too coarse for sample circles");
    const complexd zp = spec.puncture_z();
    const int n_circ = 512, n_ray = 4096, n_dirs = 8;
    std::vector<double> ratios;
    for (double r : radii) {
        // circumference by midpoint rule
        double circ = 0.0;
        for (int k = 0; k < n_circ; ++k) {
            double phi = 2.0 * M_PI * (k + 0.5) / n_circ;
            circ += std::sqrt(density(zp + r * std::polar(1.0, phi)));
        }
        circ *= 2.0 * M_PI * r / n_circ;
        // radial distance, averaged over directions; substitution s = r u^6
        // keeps the midpoint rule accurate through the integrable singularity
        double dist = 0.0;
        for (int d = 0; d < n_dirs; ++d) {
            double phi = 2.0 * M_PI * (d + 0.5) / n_dirs;
            complexd dir = std::polar(1.0, phi);
            double acc = 0.0;
            for (int k = 0; k < n_ray; ++k) {
                double u = (k + 0.5) / n_ray;
                double s = r * std::pow(u, 6.0);
                double ds = 6.0 * r * std::pow(u, 5.0) / n_ray;
                acc += std::sqrt(density(zp + s * dir)) * ds;
            }
            dist += acc;
        }
        dist /= n_dirs;
        ratios.push_back(circ / (2.0 * M_PI * dist));
    }
    // least-squares line fit in r, evaluated at r = 0
    double sr = 0, srr = 0, sy = 0, sry = 0;
    int n = static_cast<int>(radii.size());
    for (int k = 0; k < n; ++k) {
        sr += radii[k];
        srr += radii[k] * radii[k];
        sy += ratios[k];
        sry += radii[k] * ratios[k];
    }
    double slope = (n * sry - sr * sy) / (n * srr - sr * sr);
    return (sy - slope * sr) / n;
}

/// Gauss curvature of the conformal metric rho (dx^2 + dy^2):
/// K = -(1/2) Lap log(rho) / rho. Uses the local finite-difference Laplacian so
/// the pole cell does not pollute off-guard values; meaningful off-guard only.
inline GridField gauss_curvature(const GridField& rho, const TorusSpec& spec) {
    GridField logrho(spec);
    for (std::size_t k = 0; k < rho.size(); ++k) {
        if (!(rho.v[k] > 0.0)) throw invalid_metric_error("gauss_curvature: rho must be positive");
        logrho.v[k] = std::log(rho.v[k]);
    }
    GridField lap = fd_laplacian(logrho, spec);
    GridField out(spec);
    for (std::size_t k = 0; k < rho.size(); ++k) out.v[k] = -0.5 * lap.v[k] / rho.v[k];
    return out;
}

/// Per-annulus band of rho * |z|^2 * log^2(|z|^2) over dyadic annuli around the
/// puncture (|z| = lattice-Euclidean distance). A band bounded above and
/// below away from 0 certifies the model cusp asymptotics.
struct CuspProfileBand {
    double r_inner, r_outer;
    double lo, hi;
};

inline std::vector<CuspProfileBand> cusp_profile(const GridField& rho, const BackgroundData&,
                                                 const TorusSpec& spec) {
    double h = std::max(1.0 / spec.nx, 1.0 / spec.ny) * spec.tau.imag();
    double r_max = 0.3 * std::min(1.0, spec.tau.imag());
    std::vector<CuspProfileBand> bands;
    for (double r = 4.0 * h; 2.0 * r <= r_max; r *= 2.0) {
        CuspProfileBand band{r, 2.0 * r, 1e300, -1e300};
        for (int j = 0; j < spec.ny; ++j)
            for (int i = 0; i < spec.nx; ++i) {
                double d = spec.dist_to_puncture(spec.node_a(i), spec.node_b(j));
                if (d < band.r_inner || d >= band.r_outer) continue;
                double lg = std::log(d * d);
                double val = rho.at(i, j) * d * d * lg * lg;
                band.lo = std::min(band.lo, val);
                band.hi = std::max(band.hi, val);
            }
        if (band.lo <= band.hi) bands.push_back(band);
    }
    if (bands.empty()) throw diagnostic_unavailable("cusp_profile: no resolvable annuli");
    return bands;
}

}  // namespace cuspflow
