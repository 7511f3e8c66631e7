#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "cuspflow/grid.hpp"
#include "cuspflow/ladder.hpp"
#include "cuspflow/newton.hpp"

namespace cuspflow {

/// Process exit contract shared by the CLI and the acceptance harness.
enum class ExitCode : int {
    ok = 0,
    property_failure = 2,
    solver_failure = 3,
    invalid_config = 4,
};

/// One experiment = one JSON config file; every field has a default so `{}`
/// is the canonical desk-scale run.
struct RunConfig {
    TorusSpec torus;
    LadderSpec ladder;
    NewtonConfig newton;
    std::string output_dir = "out";
    int threads = 0;  // 0 = auto; env CUSPFLOW_THREADS overrides

    void validate() const {
        torus.validate();
        ladder.validate();
        ladder.schedule.validate();
        if (!(newton.tol > 0.0)) throw invalid_spec_error("newton.tol must be > 0");
        if (!(newton.damping_min > 0.0 && newton.damping_min <= 1.0))
            throw invalid_spec_error("newton.damping_min must be in (0, 1]");
        if (newton.max_iter < 1) throw invalid_spec_error("newton.max_iter must be >= 1");
        if (threads < 0) throw invalid_spec_error("threads must be >= 0");
    }

    static RunConfig from_json(const nlohmann::json& j) {
        RunConfig c;
        c.ladder.betas = LadderSpec::default_betas();
        if (j.contains("torus")) {
            const auto& t = j.at("torus");
            c.torus.tau = complexd(t.value("tau_re", 0.0), t.value("tau_im", 1.0));
            c.torus.nx = t.value("nx", 128);
            c.torus.ny = t.value("ny", 128);
            c.torus.offset = t.value("offset", 0.5);
            c.torus.delta0 = t.value("delta0", std::exp(-4.0));
            if (t.contains("puncture")) {
                const auto& p = t.at("puncture");
                c.torus.puncture_a = p.at(0).get<double>();
                c.torus.puncture_b = p.at(1).get<double>();
            }
            c.torus.guard_cells = t.value("guard_cells", 2);
        }
        if (j.contains("ladder")) {
            const auto& l = j.at("ladder");
            if (l.contains("betas")) c.ladder.betas = l.at("betas").get<std::vector<double>>();
            if (l.contains("epsilons")) c.ladder.epsilons = l.at("epsilons").get<std::vector<double>>();
            c.ladder.alt_ladder = l.value("alt_ladder", false);
        }
        if (j.contains("schedule")) {
            const auto& s = j.at("schedule");
            c.ladder.schedule.dt0 = s.value("dt0", 1e-3);
            c.ladder.schedule.growth = s.value("growth", 1.1);
            c.ladder.schedule.dt_max = s.value("dt_max", 0.1);
            c.ladder.schedule.t_end = s.value("t_end", 20.0);
            if (s.contains("checkpoints")) c.ladder.schedule.checkpoints = s.at("checkpoints").get<std::vector<double>>();
        }
        if (j.contains("newton")) {
            const auto& n = j.at("newton");
            c.newton.tol = n.value("tol", 1e-10);
            c.newton.max_iter = n.value("max_iter", 50);
            c.newton.damping_min = n.value("damping_min", std::pow(2.0, -20));
            c.newton.positivity_margin = n.value("positivity_margin", 1e-8);
        }
        c.output_dir = j.value("output_dir", std::string("out"));
        c.threads = j.value("threads", 0);
        c.validate();
        return c;
    }

    static RunConfig load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw invalid_spec_error("cannot open config file: " + path);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(in);
        } catch (const nlohmann::json::exception& e) {
            throw invalid_spec_error(std::string("config parse error: ") + e.what());
        }
        try {
            return from_json(j);
        } catch (const nlohmann::json::exception& e) {
            throw invalid_spec_error(std::string("config schema error: ") + e.what());
        }
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["torus"] = {{"tau_re", torus.tau.real()}, {"tau_im", torus.tau.imag()}, {"nx", torus.nx},
                      {"ny", torus.ny},             {"offset", torus.offset},     {"delta0", torus.delta0},
                      {"puncture", {torus.puncture_a, torus.puncture_b}},
                      {"guard_cells", torus.guard_cells}};
        j["ladder"] = {{"betas", ladder.betas}, {"epsilons", ladder.epsilons}, {"alt_ladder", ladder.alt_ladder}};
        j["schedule"] = {{"dt0", ladder.schedule.dt0},
                         {"growth", ladder.schedule.growth},
                         {"dt_max", ladder.schedule.dt_max},
                         {"t_end", ladder.schedule.t_end},
                         {"checkpoints", ladder.schedule.checkpoints}};
        j["newton"] = {{"tol", newton.tol},
                       {"max_iter", newton.max_iter},
                       {"damping_min", newton.damping_min},
                       {"positivity_margin", newton.positivity_margin}};
        j["output_dir"] = output_dir;
        j["threads"] = threads;
        return j;
    }
};

}  // namespace cuspflow
