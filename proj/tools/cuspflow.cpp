// cuspflow: numerical laboratory for the cusp Kahler-Ricci flow on a
// once-punctured flat torus, driven by JSON run configs.
//
//   cuspflow setup-check|flow|ladder|ke|verify|report --config <path>
//            [--beta-index k] [--out DIR]
//
// Exit codes: 0 = all checks pass, 2 = property failure,
//             3 = solver nonconvergence, 4 = invalid config / missing input.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cuspflow/config.hpp"
#include "cuspflow/io.hpp"
#include "cuspflow/verify.hpp"

namespace fs = std::filesystem;
using namespace cuspflow;

namespace {

struct Manifest {
    nlohmann::json j;
    std::vector<std::string> files;
    fs::path dir;

    Manifest(const fs::path& d, const RunConfig& cfg, const std::string& stage) : dir(d) {
        fs::create_directories(dir);
        j["stage"] = stage;
        j["software_version"] = "cuspflow 1.0.0";
        j["config"] = cfg.to_json();
    }
    void note_file(const fs::path& p) { files.push_back(p.filename().string()); }
    void finalize(const std::string& name, bool pass) {
        j["files"] = files;
        j["pass"] = pass;
        atomic_write_text(dir / name, j.dump(2) + "\n");  // atomic: manifest is the last file written
    }
};

int apply_thread_env(RunConfig& cfg) {
    if (const char* env = std::getenv("CUSPFLOW_THREADS")) {
        cfg.threads = std::atoi(env);
        if (cfg.threads < 0) throw invalid_spec_error("CUSPFLOW_THREADS must be >= 0");
    }
    return cfg.threads;
}

void dump_checkpoints(Manifest& man, const FlowResult& flow, const TorusSpec& spec, int member_1based) {
    for (std::size_t c = 0; c < flow.checkpoint_times.size(); ++c) {
        fs::path base = man.dir / ("phi_b" + std::to_string(member_1based) + "_t" + std::to_string(c));
        dump_field(base, flow.checkpoint_fields[c], spec, "phi", flow.checkpoint_times[c]);
        man.note_file(base.string() + ".f64");
        man.note_file(base.string() + ".json");
    }
}

void write_trace(Manifest& man, const FlowTrace& trace, int member_1based) {
    fs::path p = man.dir / ("trace_beta" + std::to_string(member_1based) + ".csv");
    write_trace_csv(p, trace);
    man.note_file(p);
}

int cmd_setup_check(const RunConfig& cfg, const fs::path& out) {
    Manifest man(out, cfg, "setup-check");
    BackgroundData bg = build_background(cfg.torus);
    SpectralWorkspace ws(cfg.torus);
    nlohmann::json checks = nlohmann::json::array();
    bool pass = true;
    auto push = [&](CheckReport rep) {
        pass = pass && rep.pass;
        checks.push_back(rep.to_json());
    };

    {
        CheckReport rep;
        rep.check = "integral_theta_equals_2pi";
        rep.value = std::abs(integrate(bg.theta_dens, cfg.torus) - 2.0 * M_PI);
        rep.tolerance = 1e-9;
        rep.pass = rep.value <= rep.tolerance;
        push(rep);
    }
    {
        CheckReport rep;
        rep.check = "normalization_sup_log_s";
        rep.value = std::abs(bg.log_s_h_sq.max() - std::log(cfg.torus.delta0));
        rep.tolerance = 1e-12;
        rep.pass = rep.value <= rep.tolerance;
        push(rep);
    }
    {
        CheckReport rep;
        rep.check = "poincare_lelong_constant_eta";
        rep.value = std::abs(poincare_lelong_residual(GridField(cfg.torus, 1.0), bg, cfg.torus, ws));
        rep.tolerance = 1e-9;
        rep.pass = rep.value <= rep.tolerance;
        push(rep);
    }
    {
        GridField eta = smooth_bump(cfg.torus, cfg.torus.puncture_a, cfg.torus.puncture_b, 0.25, 1.0);
        CheckReport rep;
        rep.check = "poincare_lelong_pole_bump";
        rep.value = std::abs(poincare_lelong_residual(eta, bg, cfg.torus, ws));
        rep.tolerance = 2e-2 * 2.0 * M_PI;
        rep.pass = rep.value <= rep.tolerance;
        push(rep);
    }
    push(check_monotone_psi(cfg.ladder.betas, bg, cfg.torus, 1e-12));
    for (std::size_t k = 0; k < cfg.ladder.betas.size(); ++k)
        push(check_domination(cfg.ladder.member(k), bg, cfg.torus));

    man.j["checks"] = checks;
    man.finalize("setup_report.json", pass);
    std::cout << (pass ? "setup-check: PASS" : "setup-check: FAIL") << " (" << out / "setup_report.json" << ")\n";
    return pass ? int(ExitCode::ok) : int(ExitCode::property_failure);
}

int cmd_flow(const RunConfig& cfg, int beta_index, const fs::path& out) {
    if (beta_index < 0 || std::size_t(beta_index) >= cfg.ladder.betas.size())
        throw invalid_spec_error("--beta-index out of range");
    Manifest man(out, cfg, "flow");
    BackgroundData bg = build_background(cfg.torus);
    ConeParams params = cfg.ladder.member(beta_index);
    FlowProblem prob = cfg.ladder.alt_ladder ? FlowProblem::alternate(params, bg, cfg.torus)
                                             : FlowProblem::primary(params, bg, cfg.torus);
    FlowResult flow = run_flow(prob, psi_beta_grid(params, bg, cfg.torus), cfg.ladder.schedule, cfg.torus, cfg.newton);

    write_trace(man, flow.trace, beta_index + 1);  // partial trace flushed even on abort
    dump_checkpoints(man, flow, cfg.torus, beta_index + 1);
    man.j["beta"] = params.beta;
    man.j["epsilon"] = params.epsilon;
    man.j["completed"] = flow.completed;
    man.j["message"] = flow.message;
    man.j["newton_iterations"] = flow.total_newton_iterations;
    man.finalize("flow_manifest_beta" + std::to_string(beta_index + 1) + ".json", flow.completed);
    if (!flow.completed) {
        std::cerr << "flow: " << flow.message << "\n";
        return int(ExitCode::solver_failure);
    }
    std::cout << "flow: completed, t_end=" << flow.state.t
              << ", final stationary residual=" << fmt_g17(flow.trace.rows.back().stat_residual) << "\n";
    return int(ExitCode::ok);
}

int cmd_ladder(const RunConfig& cfg, const fs::path& out) {
    Manifest man(out, cfg, "ladder");
    BackgroundData bg = build_background(cfg.torus);
    LadderSpec lspec = cfg.ladder;
    lspec.threads = cfg.threads;
    LadderResult lad = run_ladder(lspec, bg, cfg.torus, cfg.newton);

    for (std::size_t k = 0; k < lad.members.size(); ++k) {
        write_trace(man, lad.members[k].trace, int(k) + 1);
        dump_checkpoints(man, lad.members[k], cfg.torus, int(k) + 1);
    }
    man.j["betas"] = lad.betas;
    man.j["complete"] = lad.complete;
    if (lad.complete) {
        for (std::size_t c = 0; c < lad.limit_fields.size(); ++c) {
            fs::path base = man.dir / ("limit_t" + std::to_string(c));
            dump_field(base, lad.limit_fields[c], cfg.torus, "phi_limit", lad.checkpoint_times[c]);
            man.note_file(base.string() + ".f64");
            man.note_file(base.string() + ".json");
        }
        man.j["checkpoints"] = lad.checkpoint_times;
        man.j["gaps"] = lad.gaps;
        man.j["max_monotonicity_violation"] = lad.max_monotonicity_violation;
    }
    man.finalize("ladder_manifest.json", lad.complete);
    if (!lad.complete) {
        std::cerr << "ladder: a member flow aborted; partial results written\n";
        return int(ExitCode::solver_failure);
    }
    std::cout << "ladder: complete, " << lad.betas.size() << " members, max monotonicity violation "
              << fmt_g17(lad.max_monotonicity_violation) << "\n";
    return int(ExitCode::ok);
}

int cmd_ke(const RunConfig& cfg, int beta_index, const fs::path& out) {
    if (beta_index < 0 || std::size_t(beta_index) >= cfg.ladder.betas.size())
        throw invalid_spec_error("--beta-index out of range");
    Manifest man(out, cfg, "ke");
    BackgroundData bg = build_background(cfg.torus);
    SpectralWorkspace ws(cfg.torus);
    ConeParams params = cfg.ladder.member(beta_index);
    auto [phi, rep] = elliptic_ke_solve(params, bg, cfg.torus, cfg.newton, psi_beta_grid(params, bg, cfg.torus), ws);

    fs::path base = man.dir / ("phi_ke_beta" + std::to_string(beta_index + 1));
    dump_field(base, phi, cfg.torus, "phi_ke", 0.0);
    man.note_file(base.string() + ".f64");
    man.note_file(base.string() + ".json");
    man.j["beta"] = params.beta;
    man.j["epsilon"] = params.epsilon;
    man.j["newton"] = {{"iterations", rep.iterations},
                       {"final_residual", rep.final_residual},
                       {"min_density_ratio", rep.min_density_ratio},
                       {"cg_iterations", rep.cg_iterations},
                       {"converged", rep.converged},
                       {"message", rep.message}};
    man.j["u_norm"] = sup_diff(phi, psi_beta(params, bg, cfg.torus));
    man.finalize("ke_manifest_beta" + std::to_string(beta_index + 1) + ".json", rep.converged);
    if (!rep.converged) {
        std::cerr << "ke: solver did not converge: " << rep.message << "\n";
        return int(ExitCode::solver_failure);
    }
    std::cout << "ke: converged in " << rep.iterations << " Newton iterations, residual "
              << fmt_g17(rep.final_residual) << "\n";
    return int(ExitCode::ok);
}

int cmd_verify(const RunConfig& cfg, const fs::path& out, const std::string& self_path) {
    Manifest man(out, cfg, "verify");
    VerifyContext ctx(cfg);
    auto results = run_all_criteria(ctx, self_path, out / "c9_work");
    nlohmann::json matrix = nlohmann::json::array();
    bool pass = true;
    for (const auto& r : results) {
        pass = pass && r.pass;
        matrix.push_back(r.to_json());
        std::cout << (r.pass ? "[PASS] " : "[FAIL] ") << "criterion " << r.id << ": " << r.name << "\n";
    }
    man.j["matrix"] = matrix;
    man.finalize("verify_matrix.json", pass);
    std::cout << (pass ? "verify: ALL PASS" : "verify: FAILURES PRESENT") << "\n";
    return pass ? int(ExitCode::ok) : int(ExitCode::property_failure);
}

int cmd_report(const RunConfig& cfg, const fs::path& out) {
    fs::path first = out / "trace_beta1.csv";
    if (!fs::exists(first))
        throw missing_artifact_error("cmd_report: expected " + first.string() + " (run `cuspflow ladder` first)");
    Manifest man(out, cfg, "report");

    struct Column {
        const char* name;
        double TraceRow::* field;
    };
    const Column cols[] = {{"sup_phidot", &TraceRow::sup_phidot}, {"inf_phidot", &TraceRow::inf_phidot},
                           {"sup_u", &TraceRow::sup_u},           {"inf_u", &TraceRow::inf_u},
                           {"min_ratio", &TraceRow::min_ratio},   {"max_ratio", &TraceRow::max_ratio},
                           {"area", &TraceRow::area},             {"stat_residual", &TraceRow::stat_residual}};

    std::vector<FlowTrace> traces;
    for (int k = 1;; ++k) {
        fs::path p = out / ("trace_beta" + std::to_string(k) + ".csv");
        if (!fs::exists(p)) break;
        traces.push_back(read_trace_csv(p));
    }
    for (const Column& col : cols) {
        std::vector<PlotSeries> series;
        for (std::size_t k = 0; k < traces.size(); ++k) {
            PlotSeries s;
            s.name = "beta index " + std::to_string(k + 1);
            for (const TraceRow& r : traces[k].rows) {
                s.x.push_back(r.t);
                s.y.push_back(r.*(col.field));
            }
            series.push_back(std::move(s));
        }
        fs::path p = out / (std::string("plot_") + col.name + ".svg");
        write_svg_lineplot(p, col.name, "t", col.name, series);
        man.note_file(p);
    }

    std::ostringstream csv;
    csv << "beta_index,t_final,sup_u_max,area_err_max,stat_residual_final\n";
    for (std::size_t k = 0; k < traces.size(); ++k) {
        double su = 0.0, ae = 0.0;
        for (const TraceRow& r : traces[k].rows) {
            su = std::max(su, std::max(std::abs(r.sup_u), std::abs(r.inf_u)));
            ae = std::max(ae, std::abs(r.area - 2.0 * M_PI));
        }
        const TraceRow& last = traces[k].rows.back();
        csv << (k + 1) << ',' << fmt_g17(last.t) << ',' << fmt_g17(su) << ',' << fmt_g17(ae) << ','
            << fmt_g17(last.stat_residual) << "\n";
    }
    atomic_write_text(out / "summary.csv", csv.str());
    man.note_file(out / "summary.csv");
    man.finalize("report_manifest.json", true);
    std::cout << "report: " << traces.size() << " traces plotted to " << out << "\n";
    return int(ExitCode::ok);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cuspflow: cusp Kahler-Ricci flow laboratory on a punctured flat torus"};
    app.require_subcommand(1);

    std::string config_path, out_override;
    int beta_index = 0;
    app.add_option("--config", config_path, "JSON run config (omit for defaults)");
    app.add_option("--out", out_override, "output directory (overrides config output_dir)");
    app.add_option("--beta-index", beta_index, "0-based ladder member index (flow, ke)");

    auto* sc_setup = app.add_subcommand("setup-check", "background construction and geometry invariants");
    auto* sc_flow = app.add_subcommand("flow", "run one ladder member flow");
    auto* sc_ladder = app.add_subcommand("ladder", "run the full beta ladder and extract the limit");
    auto* sc_ke = app.add_subcommand("ke", "solve the elliptic conical Kahler-Einstein equation");
    auto* sc_verify = app.add_subcommand("verify", "run the full acceptance property suite");
    auto* sc_report = app.add_subcommand("report", "render SVG plots and summary.csv from a run directory");
    for (auto* sc : {sc_setup, sc_flow, sc_ladder, sc_ke, sc_verify, sc_report}) sc->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : int(ExitCode::invalid_config);
    }

    try {
        RunConfig cfg = config_path.empty() ? RunConfig::from_json(nlohmann::json::object())
                                            : RunConfig::load(config_path);
        apply_thread_env(cfg);
        fs::path out = out_override.empty() ? fs::path(cfg.output_dir) : fs::path(out_override);

        if (sc_setup->parsed()) return cmd_setup_check(cfg, out);
        if (sc_flow->parsed()) return cmd_flow(cfg, beta_index, out);
        if (sc_ladder->parsed()) return cmd_ladder(cfg, out);
        if (sc_ke->parsed()) return cmd_ke(cfg, beta_index, out);
        if (sc_verify->parsed()) return cmd_verify(cfg, out, argv[0]);
        if (sc_report->parsed()) return cmd_report(cfg, out);
        return int(ExitCode::invalid_config);
    } catch (const invalid_spec_error& e) {
        std::cerr << "invalid config: " << e.what() << "\n";
        return int(ExitCode::invalid_config);
    } catch (const missing_artifact_error& e) {
        std::cerr << "missing artifact: " << e.what() << "\n";
        return int(ExitCode::invalid_config);
    } catch (const step_rejected_error& e) {
        std::cerr << "solver failure: " << e.what() << "\n";
        return int(ExitCode::solver_failure);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return int(ExitCode::property_failure);
    }
}
