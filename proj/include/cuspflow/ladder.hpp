#pragma once

#include <algorithm>
#include <cmath>
#include <future>
#include <thread>
#include <vector>

#include "cuspflow/conical.hpp"
#include "cuspflow/flow.hpp"
#include "cuspflow/quadrature.hpp"
#include "cuspflow/report.hpp"

namespace cuspflow {

struct LadderSpec {
    std::vector<double> betas;     // strictly decreasing, in (0, 1/2]
    std::vector<double> epsilons;  // per-beta
    TimeSchedule schedule;         // shared so fields are comparable pointwise
    bool alt_ladder = false;       // background omega0 - beta*theta variant
    int threads = 0;               // 0 = hardware concurrency

    static std::vector<double> default_betas(int k_max = 7) {
        std::vector<double> b;
        for (int k = 1; k <= k_max; ++k) b.push_back(std::pow(2.0, -k));
        return b;
    }

    void validate() const {
        if (betas.empty()) throw invalid_spec_error("LadderSpec: empty beta ladder");
        for (std::size_t k = 0; k < betas.size(); ++k) {
            if (!(betas[k] > 0.0 && betas[k] <= 0.5))
                throw invalid_spec_error("LadderSpec: betas must lie in (0, 1/2]");
            if (k > 0 && !(betas[k] < betas[k - 1]))
                throw invalid_spec_error("LadderSpec: betas must be strictly decreasing");
        }
        if (!epsilons.empty() && epsilons.size() != betas.size())
            throw invalid_spec_error("LadderSpec: epsilons must match betas");
    }

    ConeParams member(std::size_t k) const {
        return ConeParams{betas[k], epsilons.empty() ? 1e-6 : epsilons[k]};
    }
};

struct LadderResult {
    std::vector<double> betas;
    std::vector<double> checkpoint_times;
    std::vector<FlowResult> members;       // ordered by descending beta
    std::vector<GridField> limit_fields;   // pointwise infimum over the ladder, per checkpoint
    std::vector<std::vector<double>> gaps; // gaps[pair k][checkpoint]: ||phi_{k+1} - phi_k||_inf
    bool complete = false;
    double max_monotonicity_violation = 0.0;
};

/// Runs all ladder flows in parallel and assembles the monotone beta->0 limit
/// as the pointwise infimum over members at each shared checkpoint.
inline LadderResult run_ladder(const LadderSpec& lspec, const BackgroundData& bg, const TorusSpec& spec,
                               const NewtonConfig& cfg) {
    lspec.validate();
    LadderResult result;
    result.betas = lspec.betas;

    std::size_t n = lspec.betas.size();
    result.members.resize(n);
    unsigned max_par = lspec.threads > 0 ? unsigned(lspec.threads)
                                         : std::max(1u, std::thread::hardware_concurrency());
    // deterministic, beta-ordered result assembly; parallelism in batches
    for (std::size_t start = 0; start < n; start += max_par) {
        std::size_t stop = std::min(n, start + max_par);
        std::vector<std::future<FlowResult>> futs;
        for (std::size_t k = start; k < stop; ++k)
            futs.push_back(std::async(std::launch::async, [&, k] {
                ConeParams params = lspec.member(k);
                FlowProblem prob = lspec.alt_ladder ? FlowProblem::alternate(params, bg, spec)
                                                    : FlowProblem::primary(params, bg, spec);
                return run_flow(prob, psi_beta_grid(params, bg, spec), lspec.schedule, spec, cfg);
            }));
        for (std::size_t k = start; k < stop; ++k) result.members[k] = futs[k - start].get();
    }

    result.complete = true;
    for (const FlowResult& m : result.members) result.complete = result.complete && m.completed;
    if (!result.complete) return result;

    result.checkpoint_times = result.members.front().checkpoint_times;
    std::size_t n_cp = result.checkpoint_times.size();
    result.limit_fields.assign(n_cp, GridField());
    for (std::size_t c = 0; c < n_cp; ++c) {
        GridField lim = result.members.front().checkpoint_fields[c];
        for (std::size_t k = 1; k < n; ++k) {
            const GridField& f = result.members[k].checkpoint_fields[c];
            for (std::size_t idx = 0; idx < lim.size(); ++idx) lim.v[idx] = std::min(lim.v[idx], f.v[idx]);
        }
        result.limit_fields[c] = std::move(lim);
    }
    result.gaps.assign(n > 1 ? n - 1 : 0, std::vector<double>(n_cp, 0.0));
    for (std::size_t k = 0; k + 1 < n; ++k)
        for (std::size_t c = 0; c < n_cp; ++c) {
            const GridField& a = result.members[k].checkpoint_fields[c];
            const GridField& b = result.members[k + 1].checkpoint_fields[c];
            double gap = 0.0, viol = 0.0;
            for (std::size_t idx = 0; idx < a.size(); ++idx) {
                double d = b.v[idx] - a.v[idx];  // should be <= 0 (monotone in beta)
                gap = std::max(gap, std::abs(d));
                if (!bg.guard.guarded(idx)) viol = std::max(viol, d);
            }
            result.gaps[k][c] = gap;
            result.max_monotonicity_violation = std::max(result.max_monotonicity_violation, viol);
        }
    return result;
}

inline std::size_t checkpoint_index(const LadderResult& ladder, double t) {
    for (std::size_t c = 0; c < ladder.checkpoint_times.size(); ++c)
        if (std::abs(ladder.checkpoint_times[c] - t) < 1e-9) return c;
    throw missing_artifact_error("no checkpoint at requested time");
}

/// The explicit auxiliary function of the small-time barrier (n = 1):
///   h(t) = (1 - e^t - t) u_norm + (t log t - t) e^t - integral_0^t e^s s log s ds,
/// with the integrand extended by 0 at s = 0.
inline double barrier_h_of_t(double t, double u_norm) {
    if (t == 0.0) return 0.0;
    auto integrand = [](double s) { return s > 0.0 ? std::exp(s) * s * std::log(s) : 0.0; };
    double integral = adaptive_quad(integrand, 0.0, t, 1e-10);
    return (1.0 - std::exp(t) - t) * u_norm + (t * std::log(t) - t) * std::exp(t) - integral;
}

/// Barrier field H_beta(t) = (1 - t e^{-t}) psi_beta + t e^{-t} phi_beta + h(t) e^{-t};
/// phi_beta is the elliptic KE potential, u_beta = phi_beta - psi_beta.
inline GridField barrier_field(double t, const GridField& psi_b, const GridField& phi_b) {
    double u_norm = sup_diff(phi_b, psi_b);
    double a = t * std::exp(-t);
    double shift = barrier_h_of_t(t, u_norm) * std::exp(-t);
    GridField out = psi_b;
    for (std::size_t k = 0; k < out.size(); ++k)
        out.v[k] = (1.0 - a) * psi_b.v[k] + a * phi_b.v[k] + shift;
    return out;
}

/// Asserts H_beta(t) <= phi_beta(t) + tol pointwise off-guard at the given
/// checkpoint times; returns the worst (most positive) margin H - phi.
inline CheckReport check_barrier_below(const ConeParams& params, const LadderResult& ladder,
                                       std::size_t member, const std::vector<double>& times,
                                       const GridField& phi_b_elliptic, const BackgroundData& bg,
                                       const TorusSpec& spec, double tol) {
    CheckReport rep;
    rep.check = "barrier_H_below_flow";
    rep.params["beta"] = params.beta;
    rep.params["times"] = times;
    rep.tolerance = tol;
    GridField psi_b = psi_beta(params, bg, spec);
    double worst = -1e300;
    for (double t : times) {
        const GridField& phi_t = ladder.members[member].checkpoint_fields[checkpoint_index(ladder, t)];
        GridField H = barrier_field(t, psi_b, phi_b_elliptic);
        for (std::size_t k = 0; k < H.size(); ++k)
            if (!bg.guard.guarded(k)) worst = std::max(worst, H.v[k] - phi_t.v[k]);
    }
    rep.value = worst;
    rep.pass = worst <= tol;
    return rep;
}

struct L1Point {
    double t;
    double total;       // integral |phi(t) - psi0| over M
    double guard_part;  // contribution of guard cells, reported separately
};

/// L1 distance ||phi_t - psi0||_{L1(M)} of one time slice.
inline L1Point l1_point(const GridField& phi_t, double t, const GridField& psi0, const BackgroundData& bg,
                        const TorusSpec& spec) {
    L1Point pt{t, 0.0, 0.0};
    for (std::size_t k = 0; k < phi_t.size(); ++k) {
        double d = std::abs(phi_t.v[k] - psi0.v[k]) * spec.cell_area();
        pt.total += d;
        if (bg.guard.guarded(k)) pt.guard_part += d;
    }
    return pt;
}

/// Small-time L1 distance ||phi(t) - psi0||_{L1(M)} of the ladder limit.
inline std::vector<L1Point> l1_small_time(const LadderResult& ladder, const std::vector<double>& times,
                                          const BackgroundData& bg, const TorusSpec& spec) {
    GridField psi0 = psi_zero(bg, spec);
    std::vector<L1Point> series;
    for (double t : times)
        series.push_back(l1_point(ladder.limit_fields[checkpoint_index(ladder, t)], t, psi0, bg, spec));
    return series;
}

/// Smallest constants of the volume-form equivalence t/C_low <= rho(t)/rho_beta
/// <= e^{C_up/t} and of the two-sided bound e^{-C/t} <= rho(t)/rho_beta <= e^{C/t},
/// fitted over off-guard nodes at all positive checkpoints of one flow member.
/// The reference density is the closed form of the conical metric (the mollified
/// initial density would overstate the reference near the pole for small beta).
struct ConeRatioConstants {
    double c_low, c_up, c_metric;
};

inline ConeRatioConstants cone_ratio_constants(const FlowResult& member, double beta, const BackgroundData& bg,
                                               const TorusSpec& spec, SpectralWorkspace& ws) {
    GridField rho_cone(spec);
    for (int j = 0; j < spec.ny; ++j)
        for (int i = 0; i < spec.nx; ++i)
            rho_cone.at(i, j) = conical_density_at(spec.node_z(i, j), beta, bg, spec);
    ConeRatioConstants c{0.0, 0.0, 0.0};
    bool seen = false;
    for (std::size_t m = 0; m < member.checkpoint_fields.size(); ++m) {
        double t = member.checkpoint_times[m];
        if (t <= 0.0) continue;
        seen = true;
        GridField rho = bg.rho0 + ddbar_density(member.checkpoint_fields[m], ws);
        double mn = 1e300, mx = -1e300;
        for (std::size_t k = 0; k < rho.size(); ++k) {
            if (bg.guard.guarded(k)) continue;
            double r = rho.v[k] / rho_cone.v[k];
            mn = std::min(mn, r);
            mx = std::max(mx, r);
        }
        c.c_low = std::max(c.c_low, t / mn);
        c.c_up = std::max(c.c_up, t * std::log(std::max(mx, 1.0)));
        c.c_metric = std::max(c.c_metric, t * std::log(std::max(mx, 1.0)));
        c.c_metric = std::max(c.c_metric, -t * std::log(std::min(mn, 1.0)));
    }
    if (!seen) throw diagnostic_unavailable("cone_ratio_constants: no t > 0 checkpoints");
    return c;
}

/// Weak-form residual of the cusp flow at a fixed time slice: the gap between
///   integral( phidot * (1/2) Lap eta )   and the current pairing
///   integral( ((1/2) Lap log rho - rho) eta ) + 2 pi eta(puncture),
/// with phidot evaluated from the cusp equation's right side (eps = 0).
inline double current_residual(const GridField& phi_t, const GridField& eta, const BackgroundData& bg,
                               const TorusSpec& spec, SpectralWorkspace& ws) {
    GridField rho = bg.rho0 + ddbar_density(phi_t, ws);
    GridField logrho(spec);
    double rho_ref = 2.0 * M_PI / spec.tau.imag();
    GridField phidot(spec);
    for (std::size_t k = 0; k < rho.size(); ++k) {
        if (!(rho.v[k] > 0.0)) throw invalid_metric_error("current_residual: nonpositive density");
        logrho.v[k] = std::log(rho.v[k]);
        phidot.v[k] = std::log(rho.v[k] / rho_ref) - phi_t.v[k] + bg.h0 + bg.log_s_h_sq.v[k];
    }
    GridField half_lap_eta = ddbar_density(eta, ws);
    double lhs = 0.0, rhs = 0.0;
    GridField half_lap_logrho = ddbar_density(logrho, ws);
    for (std::size_t k = 0; k < eta.v.size(); ++k) {
        lhs += phidot.v[k] * half_lap_eta.v[k];
        rhs += (half_lap_logrho.v[k] - rho.v[k]) * eta.v[k];
    }
    lhs *= spec.cell_area();
    rhs = rhs * spec.cell_area() + 2.0 * M_PI * interpolate_bicubic(eta, spec, spec.puncture_a, spec.puncture_b);
    return std::abs(lhs - rhs);
}

struct UniquenessReport {
    bool complete = false;
    double worst_margin = -1e300;      // max over nodes/times of (alt limit - primary limit); <= tol expected
    double alt_monotone_violation = 0; // violation of phi~_beta + beta log|s|^2 increasing as beta -> 0
    CheckReport check;
};

/// Runs the alternate ladder (backgrounds omega0 - beta*theta, Remark-1.4 family),
/// forms phi~(t) = sup_beta [ phi~_beta(t) + beta log|s|^2_h ], and checks the
/// maximality direction phi~(t) <= phi(t) pointwise off-guard at shared checkpoints.
inline UniquenessReport uniqueness_compare(const LadderSpec& lspec, const LadderResult& primary,
                                           const std::vector<double>& times, const BackgroundData& bg,
                                           const TorusSpec& spec, const NewtonConfig& cfg, double tol) {
    LadderSpec alt = lspec;
    alt.alt_ladder = true;
    LadderResult alt_ladder = run_ladder(alt, bg, spec, cfg);
    UniquenessReport rep;
    rep.check.check = "alternate_ladder_below_primary";
    rep.check.params["times"] = times;
    rep.check.tolerance = tol;
    if (!alt_ladder.complete) {
        rep.check.note = "alternate ladder incomplete";
        return rep;
    }
    rep.complete = true;

    for (double t : times) {
        std::size_t c = checkpoint_index(primary, t);
        // alternate limit: pointwise supremum of phi~_beta + beta log|s|^2 over the ladder
        GridField alt_limit(spec, -1e300);
        for (std::size_t k = 0; k < alt.betas.size(); ++k) {
            const GridField& f = alt_ladder.members[k].checkpoint_fields[c];
            GridField prev = alt_limit;
            for (std::size_t idx = 0; idx < f.size(); ++idx) {
                double corrected = f.v[idx] + alt.betas[k] * bg.log_s_h_sq.v[idx];
                if (k > 0 && !bg.guard.guarded(idx))
                    rep.alt_monotone_violation = std::max(rep.alt_monotone_violation, prev.v[idx] - corrected);
                alt_limit.v[idx] = std::max(alt_limit.v[idx], corrected);
            }
        }
        const GridField& prim = primary.limit_fields[c];
        for (std::size_t idx = 0; idx < prim.size(); ++idx)
            if (!bg.guard.guarded(idx))
                rep.worst_margin = std::max(rep.worst_margin, alt_limit.v[idx] - prim.v[idx]);
    }
    rep.check.value = rep.worst_margin;
    rep.check.pass = rep.worst_margin <= tol;
    return rep;
}

struct KeConvergenceReport {
    double stationary_residual;   // sup off-guard of the flow defect
    double einstein_rel_error;    // sup |Lap log rho - 2 rho| / (2 rho) on |s|^2 >= region_floor
    double cusp_band_lo, cusp_band_hi;  // envelope of the cusp-profile bands
    double area;
};

/// Diagnostics of a converged long-time state against the cusp Kahler-Einstein target.
inline KeConvergenceReport ke_convergence_report(const GridField& phi, const ConeParams& params,
                                                 const BackgroundData& bg, const TorusSpec& spec,
                                                 SpectralWorkspace& ws, double region_floor_factor = 0.1) {
    KeConvergenceReport rep{};
    rep.stationary_residual = stationary_residual(phi, params, bg, spec, ws);
    GridField rho = bg.rho0 + ddbar_density(phi, ws);
    rep.area = integrate(rho, spec);

    GridField logrho(spec);
    for (std::size_t k = 0; k < rho.size(); ++k) {
        if (!(rho.v[k] > 0.0)) throw invalid_metric_error("ke_convergence_report: nonpositive density");
        logrho.v[k] = std::log(rho.v[k]);
    }
    GridField lap = fd_laplacian(logrho, spec);  // local stencil: pole cell cannot pollute the region
    double floor = region_floor_factor * spec.delta0;
    double worst = 0.0;
    for (std::size_t k = 0; k < rho.size(); ++k) {
        if (bg.guard.guarded(k)) continue;
        if (std::exp(bg.log_s_h_sq.v[k]) < floor) continue;
        worst = std::max(worst, std::abs(lap.v[k] - 2.0 * rho.v[k]) / (2.0 * rho.v[k]));
    }
    rep.einstein_rel_error = worst;

    auto bands = cusp_profile(rho, bg, spec);
    rep.cusp_band_lo = 1e300;
    rep.cusp_band_hi = -1e300;
    for (const auto& b : bands) {
        rep.cusp_band_lo = std::min(rep.cusp_band_lo, b.lo);
        rep.cusp_band_hi = std::max(rep.cusp_band_hi, b.hi);
    }
    return rep;
}

}  // namespace cuspflow
