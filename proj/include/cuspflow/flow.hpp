#pragma once

#include <chrono>
#include <cmath>
#include <string>
#include <vector>

#include "cuspflow/newton.hpp"

namespace cuspflow {

struct TimeSchedule {
    double dt0 = 1e-3;
    double growth = 1.1;
    double dt_max = 0.1;
    double t_end = 20.0;
    std::vector<double> checkpoints;  // within [0, t_end], ascending

    void validate() const {
        if (!(dt0 > 0.0) || !(growth >= 1.0) || !(t_end >= 0.0) || !(dt_max >= dt0))
            throw invalid_spec_error("TimeSchedule: need dt0 > 0, growth >= 1, dt_max >= dt0, t_end >= 0");
        for (double c : checkpoints)
            if (c < 0.0 || c > t_end + 1e-12) throw invalid_spec_error("TimeSchedule: checkpoint outside [0, t_end]");
    }

    /// log-dense near t = 0, then integer times out to t_end
    static std::vector<double> default_checkpoints(double t_end) {
        std::vector<double> cps = {0.0, 1e-3, 1e-2, 0.05, 0.1, 0.25, 0.5};
        for (double t = 1.0; t <= t_end + 1e-12; t += 1.0) cps.push_back(t);
        while (!cps.empty() && cps.back() > t_end + 1e-12) cps.pop_back();
        if (cps.empty() || std::abs(cps.back() - t_end) > 1e-12) cps.push_back(t_end);
        return cps;
    }
};

struct FlowState {
    double t = 0.0;
    GridField phi;
    GridField rho;  // cached rho_bg + (1/2) Lap phi
    ConeParams params;
};

/// One per-checkpoint record of the trace.
struct TraceRow {
    double t;
    double sup_phidot, inf_phidot;  // equation right side, never a finite difference
    double sup_u, inf_u;            // u = phi - psi_init
    double min_ratio, max_ratio;    // rho(t)/rho_init both extremes
    double area;                    // integral of rho
    double stat_residual;           // sup off-guard of the stationary defect
    double wall_ms;
};

struct FlowTrace {
    std::vector<TraceRow> rows;
};

struct FlowResult {
    FlowState state;
    FlowTrace trace;
    std::vector<GridField> checkpoint_fields;  // phi at each schedule checkpoint
    std::vector<double> checkpoint_times;
    bool completed = false;
    std::string message;
    long total_newton_iterations = 0;
};

/// Time-steps one (beta, epsilon) flow from phi(0) = psi_init by backward Euler
/// with geometric dt growth; on step rejection halves dt (floor 1e-6). Checkpoints
/// are hit exactly by shortening steps.
inline FlowResult run_flow(const FlowProblem& prob, const GridField& psi_init, const TimeSchedule& schedule,
                           const TorusSpec& spec, const NewtonConfig& cfg) {
    schedule.validate();
    SpectralWorkspace ws(spec);
    FlowResult result;
    auto t_start = std::chrono::steady_clock::now();

    GridField phi = psi_init;
    GridField rho_init = prob.rho_bg + ddbar_density(psi_init, ws);
    double t = 0.0;

    auto record = [&](double time) {
        GridField rho = prob.rho_bg + ddbar_density(phi, ws);
        GridField rhs = flow_rhs(phi, prob, ws);
        TraceRow row{};
        row.t = time;
        row.sup_phidot = rhs.max();
        row.inf_phidot = rhs.min();
        double su = -1e300, iu = 1e300, mnr = 1e300, mxr = -1e300;
        for (std::size_t k = 0; k < phi.size(); ++k) {
            double u = phi.v[k] - psi_init.v[k];
            su = std::max(su, u);
            iu = std::min(iu, u);
            double r = rho.v[k] / rho_init.v[k];
            mnr = std::min(mnr, r);
            mxr = std::max(mxr, r);
        }
        row.sup_u = su;
        row.inf_u = iu;
        row.min_ratio = mnr;
        row.max_ratio = mxr;
        row.area = integrate(rho, spec);
        row.stat_residual = prob.guard ? sup_abs_off_guard(rhs, *prob.guard) : rhs.sup_abs();
        row.wall_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t_start).count();
        result.trace.rows.push_back(row);
        result.checkpoint_fields.push_back(phi);
        result.checkpoint_times.push_back(time);
    };

    std::vector<double> cps = schedule.checkpoints.empty()
                                  ? TimeSchedule::default_checkpoints(schedule.t_end)
                                  : schedule.checkpoints;
    std::size_t next_cp = 0;
    while (next_cp < cps.size() && cps[next_cp] <= 1e-15) {
        record(0.0);
        ++next_cp;
    }

    double dt = schedule.dt0;
    const double dt_floor = 1e-6;
    while (t < schedule.t_end - 1e-13) {
        double step = std::min(dt, schedule.t_end - t);
        if (next_cp < cps.size()) step = std::min(step, cps[next_cp] - t);
        auto [phi_next, rep] = implicit_euler_step(phi, step, prob, ws, cfg);
        result.total_newton_iterations += rep.iterations;
        if (!rep.converged) {
            dt *= 0.5;
            if (dt < dt_floor) {
                result.message = "aborted: persistent nonconvergence at t=" + std::to_string(t) +
                                 " (" + rep.message + ")";
                result.state = FlowState{t, phi, prob.rho_bg + ddbar_density(phi, ws), ConeParams{}};
                return result;  // partial trace retained
            }
            continue;
        }
        phi = std::move(phi_next);
        t += step;
        while (next_cp < cps.size() && cps[next_cp] <= t + 1e-12) {
            record(cps[next_cp]);
            ++next_cp;
        }
        dt = std::min(dt * schedule.growth, schedule.dt_max);
    }
    result.state = FlowState{t, phi, prob.rho_bg + ddbar_density(phi, ws), ConeParams{}};
    result.completed = true;
    return result;
}

/// Sup over checkpoints of ||u||_inf, u = phi - psi_init.
inline double linf_bound_u(const FlowTrace& trace) {
    if (trace.rows.empty()) throw diagnostic_unavailable("linf_bound_u: empty trace");
    double m = 0.0;
    for (const TraceRow& r : trace.rows) m = std::max(m, std::max(std::abs(r.sup_u), std::abs(r.inf_u)));
    return m;
}

struct RatioBounds {
    double c_low;  // smallest C with min_x rho/rho_init >= t/C at all t > 0 checkpoints
    double c_up;   // smallest C with max_x rho/rho_init <= e^{C/t}
};

/// Fits the constants of the volume-form equivalence t/C <= rho(t)/rho_beta <= e^{C/t}.
inline RatioBounds volume_ratio_bounds(const FlowTrace& trace) {
    RatioBounds b{0.0, 0.0};
    bool seen = false;
    for (const TraceRow& r : trace.rows) {
        if (r.t <= 0.0) continue;
        seen = true;
        b.c_low = std::max(b.c_low, r.t / r.min_ratio);
        b.c_up = std::max(b.c_up, r.t * std::log(std::max(r.max_ratio, 1.0)));
    }
    if (!seen) throw diagnostic_unavailable("volume_ratio_bounds: no t > 0 checkpoints");
    return b;
}

/// Fits the single constant of the two-sided metric equivalence
/// e^{-C/t} <= rho(t)/rho_beta <= e^{C/t}; in n = 1 the trace ratios reduce to
/// the same density ratio recorded in the trace.
inline double metric_equivalence_bound(const FlowTrace& trace) {
    double c = 0.0;
    bool seen = false;
    for (const TraceRow& r : trace.rows) {
        if (r.t <= 0.0) continue;
        seen = true;
        c = std::max(c, r.t * std::log(std::max(r.max_ratio, 1.0)));
        c = std::max(c, -r.t * std::log(std::min(r.min_ratio, 1.0)));
    }
    if (!seen) throw diagnostic_unavailable("metric_equivalence_bound: no t > 0 checkpoints");
    return c;
}

/// Least-squares line fit of log sup|phidot| vs t over checkpoints in [t_min, t_max];
/// returns (rate, amplitude) with the fitted decay exp(rate * t) * amplitude.
inline std::pair<double, double> decay_rate_fit(const FlowTrace& trace, double t_min, double t_max) {
    std::vector<double> ts, ys;
    for (const TraceRow& r : trace.rows) {
        if (r.t < t_min - 1e-12 || r.t > t_max + 1e-12) continue;
        double s = std::max(std::abs(r.sup_phidot), std::abs(r.inf_phidot));
        if (!(s > 0.0)) throw diagnostic_unavailable("decay_rate_fit: sup|phidot| must be positive");
        ts.push_back(r.t);
        ys.push_back(std::log(s));
    }
    if (ts.size() < 5) throw diagnostic_unavailable("decay_rate_fit: need >= 5 checkpoints in window");
    double n = double(ts.size()), st = 0, stt = 0, sy = 0, sty = 0;
    for (std::size_t k = 0; k < ts.size(); ++k) {
        st += ts[k];
        stt += ts[k] * ts[k];
        sy += ys[k];
        sty += ts[k] * ys[k];
    }
    double rate = (n * sty - st * sy) / (n * stt - st * st);
    double intercept = (sy - rate * st) / n;
    return {rate, std::exp(intercept)};
}

}  // namespace cuspflow
