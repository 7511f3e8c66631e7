#pragma once

#include <cmath>

#include "cuspflow/fft.hpp"
#include "cuspflow/grid.hpp"
#include "cuspflow/theta.hpp"

namespace cuspflow {

/// Exact background data of the testbed: the divisor section s via theta1,
/// the hermitian norm log|s|^2_h, the flat background density rho0 = 2pi/Im(tau)
/// (omega0 is chosen equal to the curvature form theta of h, so h0 = 0).
struct BackgroundData {
    GridField log_s_h_sq;  // log |s|^2_h at nodes; <= log(delta0), one log pole at the puncture
    GridField rho0;        // density of omega0 w.r.t. dx^dy, constant 2pi/Im(tau)
    GridField theta_dens;  // density of the curvature form theta; equals rho0 on this testbed
    double h0 = 0.0;
    double c_norm = 0.0;   // additive normalization so sup over grid of log|s|^2_h = log(delta0)
    GuardMask guard;

    // un-normalized log |s(z)|^2 e^{-2 pi (Im z)^2 / Im tau}; doubly periodic, pole at puncture
    static double raw_log_s_sq(complexd z, const TorusSpec& spec) {
        complexd th = theta1(z - spec.puncture_z(), spec.tau);
        double y = z.imag() - spec.puncture_z().imag();
        return 2.0 * std::log(std::abs(th)) - 2.0 * M_PI * y * y / spec.tau.imag();
    }

    double log_s_sq_at(complexd z, const TorusSpec& spec) const {
        return raw_log_s_sq(z, spec) + c_norm;
    }

    /// d/dz of log|s|^2_h at z (off the puncture).
    complexd dz_log_s_sq(complexd z, const TorusSpec& spec) const {
        complexd w = z - spec.puncture_z();
        complexd ratio = theta1_prime(w, spec.tau) / theta1(w, spec.tau);
        double y = w.imag();
        return M_PI * ratio + complexd(0.0, 2.0 * M_PI * y / spec.tau.imag());
    }
};

inline BackgroundData build_background(const TorusSpec& spec) {
    spec.validate();
    BackgroundData bg;
    bg.log_s_h_sq = GridField(spec);
    double raw_sup = -1e300;
    for (int j = 0; j < spec.ny; ++j)
        for (int i = 0; i < spec.nx; ++i) {
            double r = BackgroundData::raw_log_s_sq(spec.node_z(i, j), spec);
            if (!std::isfinite(r))
                throw invalid_spec_error("build_background: puncture coincides with a grid node");
            bg.log_s_h_sq.at(i, j) = r;
            raw_sup = std::max(raw_sup, r);
        }
    bg.c_norm = std::log(spec.delta0) - raw_sup;
    bg.log_s_h_sq += bg.c_norm;
    double rho0 = 2.0 * M_PI / spec.tau.imag();
    bg.rho0 = GridField(spec, rho0);
    bg.theta_dens = GridField(spec, rho0);
    bg.h0 = 0.0;  // flat omega0 with theta = omega0 makes -Ric + theta - omega0 = 0
    bg.guard = GuardMask(spec);
    return bg;
}

/// Grid residual of the Poincare-Lelong identity
///   (1/2) Lap log|s|^2_h = -theta_dens + 2 pi delta_D
/// paired with a smooth periodic test function eta:
///   integral( log|s|^2_h * (1/2) Lap eta ) + integral( theta_dens * eta ) - 2 pi eta(puncture).
/// Vanishes up to (log-pole-limited) discretization error.
inline double poincare_lelong_residual(const GridField& eta, const BackgroundData& bg, const TorusSpec& spec,
                                       SpectralWorkspace& ws) {
    GridField half_lap_eta = ddbar_density(eta, ws);
    double term1 = 0.0, term2 = 0.0;
    for (std::size_t k = 0; k < eta.v.size(); ++k) {
        term1 += bg.log_s_h_sq.v[k] * half_lap_eta.v[k];
        term2 += bg.theta_dens.v[k] * eta.v[k];
    }
    double eta_p = interpolate_bicubic(eta, spec, spec.puncture_a, spec.puncture_b);
    return (term1 + term2) * spec.cell_area() - 2.0 * M_PI * eta_p;
}

/// Smooth compactly supported periodic bump centered at lattice coords (ca, cb),
/// radius R in lattice-Euclidean units: exp(1 - 1/(1 - (d/R)^2)) inside, 0 outside.
inline GridField smooth_bump(const TorusSpec& spec, double ca, double cb, double radius, double amplitude = 1.0) {
    GridField eta(spec);
    TorusSpec probe = spec;  // reuse torus distance with a shifted "puncture"
    probe.puncture_a = ca;
    probe.puncture_b = cb;
    for (int j = 0; j < spec.ny; ++j)
        for (int i = 0; i < spec.nx; ++i) {
            double d = probe.dist_to_puncture(spec.node_a(i), spec.node_b(j)) / radius;
            eta.at(i, j) = (d < 1.0) ? amplitude * std::exp(1.0 - 1.0 / (1.0 - d * d)) : 0.0;
        }
    return eta;
}

}  // namespace cuspflow
