#pragma once

#include <cmath>
#include <string>
#include <utility>

#include "cuspflow/background.hpp"
#include "cuspflow/conical.hpp"
#include "cuspflow/fft.hpp"
#include "cuspflow/grid.hpp"

namespace cuspflow {

struct NewtonConfig {
    double tol = 1e-10;            // residual sup-norm target
    int max_iter = 50;
    double damping_min = std::pow(2.0, -20);
    double positivity_margin = 1e-8;  // required min of rho/rho0 during iteration
};

struct NewtonReport {
    int iterations = 0;
    double final_residual = 0.0;
    double min_density_ratio = 0.0;
    int cg_iterations = 0;
    bool converged = false;
    std::string message;
};

/// Potential-level problem data for one (beta, epsilon) flow:
///   d(phi)/dt = log((rho_bg + (1/2) Lap phi) / rho0) - phi + forcing,
/// forcing = h0 + (1-beta) log(eps^2 + |s|^2_h). The alternate family of
/// background omega0 - beta*theta differs only in rho_bg = (1-beta) rho0.
struct FlowProblem {
    GridField rho_bg;
    double rho_ref = 0.0;  // constant density of omega0
    GridField forcing;
    const GuardMask* guard = nullptr;

    static GridField regularized_log_term(const ConeParams& params, const BackgroundData& bg) {
        GridField g = bg.log_s_h_sq;
        if (params.epsilon > 0.0) {
            double le = 2.0 * std::log(params.epsilon);
            for (double& x : g.v) {
                double hi = std::max(x, le), lo = std::min(x, le);
                x = hi + std::log1p(std::exp(lo - hi));
            }
        }
        return g;
    }

    static FlowProblem primary(const ConeParams& params, const BackgroundData& bg, const TorusSpec& spec) {
        params.validate();
        FlowProblem p;
        p.rho_bg = bg.rho0;
        p.rho_ref = 2.0 * M_PI / spec.tau.imag();
        p.forcing = regularized_log_term(params, bg);
        p.forcing *= (1.0 - params.beta);
        p.forcing += bg.h0;
        p.guard = &bg.guard;
        return p;
    }

    static FlowProblem alternate(const ConeParams& params, const BackgroundData& bg, const TorusSpec& spec) {
        FlowProblem p = primary(params, bg, spec);
        p.rho_bg *= (1.0 - params.beta);
        return p;
    }
};

/// Right side of the flow equation (equals d(phi)/dt at a solution).
inline GridField flow_rhs(const GridField& phi, const FlowProblem& prob, SpectralWorkspace& ws) {
    GridField rho = prob.rho_bg + ddbar_density(phi, ws);
    GridField out(phi.nx, phi.ny);
    for (std::size_t k = 0; k < phi.size(); ++k) {
        if (!(rho.v[k] > 0.0)) throw invalid_metric_error("flow_rhs: nonpositive density");
        out.v[k] = std::log(rho.v[k] / prob.rho_ref) - phi.v[k] + prob.forcing.v[k];
    }
    return out;
}

/// Backward-Euler residual F(phi_plus) = sigma (phi_plus - phi_prev) - flow_rhs(phi_plus);
/// sigma = 1/dt, or 0 for the stationary (elliptic) equation.
inline GridField newton_residual(const GridField& phi_plus, const GridField& phi_prev, double sigma,
                                 const FlowProblem& prob, SpectralWorkspace& ws) {
    GridField out = flow_rhs(phi_plus, prob, ws);
    for (std::size_t k = 0; k < out.size(); ++k)
        out.v[k] = sigma * (phi_plus.v[k] - phi_prev.v[k]) - out.v[k];
    return out;
}

namespace detail {

inline double dot(const GridField& a, const GridField& b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.v.size(); ++k) s += a.v[k] * b.v[k];
    return s;
}

// Preconditioned CG on the symmetrized Newton system
//   A d = b,  A d = c * rho .* d - (1/2) Lap d,
// preconditioned by the constant-coefficient Fourier inverse of (c*rho_mean - (1/2) Lap).
inline int pcg_solve(double c, const GridField& rho, const GridField& b, GridField& x, SpectralWorkspace& ws,
                     double rel_tol = 1e-13, int max_iter = 2000) {
    double rho_mean = 0.0;
    for (double r : rho.v) rho_mean += r;
    rho_mean /= double(rho.v.size());

    auto apply_A = [&](const GridField& d) {
        GridField out = ws.laplacian(d);
        for (std::size_t k = 0; k < out.size(); ++k) out.v[k] = c * rho.v[k] * d.v[k] - 0.5 * out.v[k];
        return out;
    };

    x = GridField(b.nx, b.ny, 0.0);
    GridField r = b;
    double bnorm = std::sqrt(dot(b, b));
    if (bnorm == 0.0) return 0;
    GridField z = ws.helmholtz_inverse(c * rho_mean, r);
    GridField p = z;
    double rz = dot(r, z);
    for (int it = 0; it < max_iter; ++it) {
        GridField Ap = apply_A(p);
        double alpha = rz / dot(p, Ap);
        for (std::size_t k = 0; k < x.size(); ++k) {
            x.v[k] += alpha * p.v[k];
            r.v[k] -= alpha * Ap.v[k];
        }
        if (std::sqrt(dot(r, r)) <= rel_tol * bnorm) return it + 1;
        z = ws.helmholtz_inverse(c * rho_mean, r);
        double rz_new = dot(r, z);
        double beta = rz_new / rz;
        rz = rz_new;
        for (std::size_t k = 0; k < p.size(); ++k) p.v[k] = z.v[k] + beta * p.v[k];
    }
    return max_iter;
}

inline double min_density_ratio(const GridField& phi, const FlowProblem& prob, SpectralWorkspace& ws) {
    GridField rho = prob.rho_bg + ddbar_density(phi, ws);
    double m = 1e300;
    for (std::size_t k = 0; k < rho.size(); ++k) m = std::min(m, rho.v[k] / prob.rho_ref);
    return m;
}

}  // namespace detail

/// Damped Newton with spectral preconditioning for F(phi) = 0,
/// F(phi) = sigma (phi - phi_prev) - flow_rhs(phi). Line search halves the step
/// until the residual decreases and the density stays above positivity_margin.
inline std::pair<GridField, NewtonReport> newton_solve(GridField phi, const GridField& phi_prev, double sigma,
                                                       const FlowProblem& prob, SpectralWorkspace& ws,
                                                       const NewtonConfig& cfg) {
    NewtonReport rep;
    rep.min_density_ratio = detail::min_density_ratio(phi, prob, ws);
    if (rep.min_density_ratio <= 0.0)
        throw invalid_metric_error("newton_solve: initial potential has nonpositive density");

    GridField F = newton_residual(phi, phi_prev, sigma, prob, ws);
    double res = F.sup_abs();
    const double c = sigma + 1.0;
    for (int it = 0; it < cfg.max_iter; ++it) {
        if (res <= cfg.tol) {
            rep.converged = true;
            break;
        }
        GridField rho = prob.rho_bg + ddbar_density(phi, ws);
        GridField b(phi.nx, phi.ny);
        for (std::size_t k = 0; k < b.size(); ++k) b.v[k] = -rho.v[k] * F.v[k];
        GridField delta;
        rep.cg_iterations += detail::pcg_solve(c, rho, b, delta, ws);

        double lambda = 1.0;
        bool accepted = false;
        while (lambda >= cfg.damping_min) {
            GridField trial = phi;
            for (std::size_t k = 0; k < trial.size(); ++k) trial.v[k] += lambda * delta.v[k];
            double ratio = detail::min_density_ratio(trial, prob, ws);
            if (ratio >= cfg.positivity_margin) {
                GridField Ft = newton_residual(trial, phi_prev, sigma, prob, ws);
                double rt = Ft.sup_abs();
                if (rt < res) {
                    phi = std::move(trial);
                    F = std::move(Ft);
                    res = rt;
                    rep.min_density_ratio = std::min(rep.min_density_ratio, ratio);
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        ++rep.iterations;
        if (!accepted) {
            rep.message = "line search stalled";
            break;
        }
    }
    rep.final_residual = res;
    if (!rep.converged && rep.message.empty()) rep.message = "max_iter exceeded";
    return {std::move(phi), rep};
}

/// One backward-Euler step of the conical parabolic Monge-Ampere equation.
inline std::pair<GridField, NewtonReport> implicit_euler_step(const GridField& phi, double dt,
                                                              const FlowProblem& prob, SpectralWorkspace& ws,
                                                              const NewtonConfig& cfg) {
    if (!(dt > 0.0)) throw invalid_spec_error("implicit_euler_step: dt must be > 0");
    return newton_solve(phi, phi, 1.0 / dt, prob, ws, cfg);
}

/// Solves the elliptic conical Kahler-Einstein equation
///   rho0 + (1/2) Lap phi = rho0 e^{phi - h0} (eps^2 + |s|^2_h)^{-(1-beta)}.
/// Cold-start failures fall back to epsilon-continuation (halving from 1e-1
/// down to the target epsilon, warm-starting each stage from the previous one).
inline std::pair<GridField, NewtonReport> elliptic_ke_solve(const ConeParams& params, const BackgroundData& bg,
                                                            const TorusSpec& spec, const NewtonConfig& cfg,
                                                            const GridField& init, SpectralWorkspace& ws) {
    FlowProblem prob = FlowProblem::primary(params, bg, spec);
    auto direct = newton_solve(init, init, 0.0, prob, ws, cfg);
    if (direct.second.converged) return direct;

    GridField phi = init;
    NewtonReport last = direct.second;
    for (double eps = 1e-1; eps >= std::max(params.epsilon, 1e-12); eps *= 0.5) {
        ConeParams stage = params;
        stage.epsilon = std::max(eps, params.epsilon);
        FlowProblem sp = FlowProblem::primary(stage, bg, spec);
        auto [p, rep] = newton_solve(phi, phi, 0.0, sp, ws, cfg);
        last = rep;
        if (!rep.converged) return {std::move(p), rep};
        phi = std::move(p);
        if (stage.epsilon == params.epsilon) break;
    }
    auto fin = newton_solve(phi, phi, 0.0, prob, ws, cfg);
    fin.second.message = fin.second.converged ? "converged via epsilon continuation" : fin.second.message;
    return fin;
}

/// Sup off-guard of the stationary defect |log(rho/rho0) - phi + h0 + (1-beta) log(eps^2+|s|^2)|.
inline double stationary_residual(const GridField& phi, const ConeParams& params, const BackgroundData& bg,
                                  const TorusSpec& spec, SpectralWorkspace& ws) {
    FlowProblem prob = FlowProblem::primary(params, bg, spec);
    GridField rhs = flow_rhs(phi, prob, ws);
    return sup_abs_off_guard(rhs, bg.guard);
}

}  // namespace cuspflow
