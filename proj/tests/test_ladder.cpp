#include <catch2/catch_amalgamated.hpp>

#include "cuspflow/ladder.hpp"

using namespace cuspflow;

namespace {

struct Fixture {
    TorusSpec spec;
    BackgroundData bg;
    Fixture(int n = 64) {
        spec.nx = spec.ny = n;
        bg = build_background(spec);
    }
};

}  // namespace

TEST_CASE("ladder spec validation") {
    LadderSpec ls;
    CHECK_THROWS_AS(ls.validate(), invalid_spec_error);  // empty
    ls.betas = {0.25, 0.5};
    CHECK_THROWS_AS(ls.validate(), invalid_spec_error);  // increasing
    ls.betas = {0.5, 0.25};
    ls.epsilons = {1e-6};
    CHECK_THROWS_AS(ls.validate(), invalid_spec_error);  // mismatched epsilons
    ls.epsilons.clear();
    CHECK_NOTHROW(ls.validate());
    CHECK(ls.member(1).beta == 0.25);
    CHECK(ls.member(1).epsilon == 1e-6);

    auto d = LadderSpec::default_betas();
    REQUIRE(d.size() == 7);
    CHECK(d.front() == 0.5);
    CHECK(d.back() == std::pow(2.0, -7));
}

TEST_CASE("single-member ladder: limit equals the member, no gaps") {
    Fixture fx;
    LadderSpec ls;
    ls.betas = {0.5};
    ls.schedule.t_end = 0.05;
    ls.schedule.checkpoints = {0.0, 0.05};
    ls.threads = 1;
    LadderResult lr = run_ladder(ls, fx.bg, fx.spec, NewtonConfig{});
    REQUIRE(lr.complete);
    CHECK(lr.gaps.empty());
    CHECK(lr.max_monotonicity_violation == 0.0);
    REQUIRE(lr.limit_fields.size() == 2);
    CHECK(sup_diff(lr.limit_fields[1], lr.members[0].checkpoint_fields[1]) == 0.0);
    CHECK(checkpoint_index(lr, 0.05) == 1);
    CHECK_THROWS_AS(checkpoint_index(lr, 0.3), missing_artifact_error);
}

TEST_CASE("two-member ladder: monotone limit, positive gap, exact at t = 0") {
    Fixture fx;
    LadderSpec ls;
    ls.betas = {0.5, 0.25};
    ls.schedule.t_end = 0.05;
    ls.schedule.checkpoints = {0.0, 0.05};
    ls.threads = 1;
    LadderResult lr = run_ladder(ls, fx.bg, fx.spec, NewtonConfig{});
    REQUIRE(lr.complete);
    CHECK(lr.max_monotonicity_violation <= 5e-10);
    REQUIRE(lr.gaps.size() == 1);
    CHECK(lr.gaps[0][0] > 0.1);  // psi_{1/4} and psi_{1/2} differ at order 1 near the pole

    // at t = 0 the limit is the pointwise min of the two initial potentials,
    // i.e. the grid-mollified psi_{1/4} by monotonicity
    GridField psi_small = psi_beta_grid({0.25, 0.0}, fx.bg, fx.spec);
    CHECK(sup_diff(lr.limit_fields[0], psi_small) < 1e-14);
}

TEST_CASE("barrier_h_of_t against a brute-force quadrature oracle") {
    CHECK(barrier_h_of_t(0.0, 3.0) == 0.0);
    // oracle at (t, u_norm) = (1, 0): h(1) = (1 - e - 1)*0 + (0 - 1) e - I,
    // I = integral_0^1 e^s s log s ds by 10^6-panel trapezoid
    auto integrand = [](double s) { return s > 0.0 ? std::exp(s) * s * std::log(s) : 0.0; };
    const int N = 1000000;
    double I = 0.0;
    for (int k = 1; k < N; ++k) I += integrand(double(k) / N);
    I = (I + 0.5 * integrand(1.0)) / N;
    double oracle = -std::exp(1.0) - I;
    CHECK(barrier_h_of_t(1.0, 0.0) == Catch::Approx(oracle).margin(1e-8));

    // derivative identity h'(t) = -(e^t + 1) u + (log t - t) e^t, checked by central FD
    double u = 2.0, t = 0.5, h = 1e-5;
    double fd = (barrier_h_of_t(t + h, u) - barrier_h_of_t(t - h, u)) / (2.0 * h);
    double exact = -(std::exp(t) + 1.0) * u + (std::log(t) - t) * std::exp(t);
    CHECK(fd == Catch::Approx(exact).margin(1e-6));
}

TEST_CASE("barrier field: equals psi at t = 0, lies below the flow on a short run") {
    Fixture fx;
    ConeParams params{0.5, 1e-6};
    GridField psi = psi_beta_grid(params, fx.bg, fx.spec);
    SpectralWorkspace ws(fx.spec);
    auto [phi_ke, rep] = elliptic_ke_solve(params, fx.bg, fx.spec, NewtonConfig{}, psi, ws);
    REQUIRE(rep.converged);

    CHECK(sup_diff(barrier_field(0.0, psi, phi_ke), psi) == 0.0);

    LadderSpec ls;
    ls.betas = {0.5};
    ls.schedule.t_end = 0.1;
    ls.schedule.checkpoints = {0.0, 1e-3, 1e-2, 0.05, 0.1};
    ls.threads = 1;
    LadderResult lr = run_ladder(ls, fx.bg, fx.spec, NewtonConfig{});
    REQUIRE(lr.complete);

    CheckReport below =
        check_barrier_below(params, lr, 0, {1e-3, 1e-2, 0.05, 0.1}, phi_ke, fx.bg, fx.spec, 5e-10);
    CHECK(below.pass);

    // negative control: pushing the flow down by 1 must be detected
    LadderResult broken = lr;
    for (GridField& f : broken.members[0].checkpoint_fields) f += -1.0;
    CheckReport bad = check_barrier_below(params, broken, 0, {0.1}, phi_ke, fx.bg, fx.spec, 5e-10);
    CHECK_FALSE(bad.pass);
}

TEST_CASE("l1_small_time on a synthetic ladder: exact area law") {
    Fixture fx;
    GridField psi0 = psi_zero(fx.bg, fx.spec);
    LadderResult lr;
    lr.checkpoint_times = {0.0, 0.5, 1.0};
    for (double t : lr.checkpoint_times) lr.limit_fields.push_back(psi0 + GridField(fx.spec, t));
    auto series = l1_small_time(lr, {0.5, 1.0}, fx.bg, fx.spec);
    REQUIRE(series.size() == 2);
    double area = fx.spec.tau.imag();  // |phi - psi0| = t, integrated over unit-cell area Im tau
    CHECK(series[0].total == Catch::Approx(0.5 * area).margin(1e-12));
    CHECK(series[1].total == Catch::Approx(1.0 * area).margin(1e-12));
    CHECK(series[0].guard_part < series[0].total);
}

TEST_CASE("current_residual vanishes for constant test functions") {
    // For eta = const: both integrals pair against mean-zero Laplacians, leaving
    // eta (2 pi - integral rho); with the cohomological area 2 pi this cancels.
    Fixture fx;
    SpectralWorkspace ws(fx.spec);
    GridField phi = psi_beta({0.25, 0.0}, fx.bg, fx.spec);
    GridField eta(fx.spec, 1.7);
    CHECK(current_residual(phi, eta, fx.bg, fx.spec, ws) < 1e-8);
}

TEST_CASE("uniqueness_compare: alternate ladder stays below the primary limit") {
    Fixture fx;
    LadderSpec ls;
    ls.betas = {0.5, 0.25};
    ls.schedule.t_end = 0.05;
    ls.schedule.checkpoints = {0.0, 0.05};
    ls.threads = 1;
    LadderResult primary = run_ladder(ls, fx.bg, fx.spec, NewtonConfig{});
    REQUIRE(primary.complete);
    UniquenessReport rep = uniqueness_compare(ls, primary, {0.05}, fx.bg, fx.spec, NewtonConfig{}, 5e-10);
    REQUIRE(rep.complete);
    CHECK(rep.check.pass);
    CHECK(rep.worst_margin <= 5e-10);
}

TEST_CASE("ke_convergence_report on the elliptic solution") {
    Fixture fx(128);
    ConeParams params{std::pow(2.0, -7), 1e-6};
    SpectralWorkspace ws(fx.spec);
    GridField init = psi_beta_grid(params, fx.bg, fx.spec);
    auto [phi, nrep] = elliptic_ke_solve(params, fx.bg, fx.spec, NewtonConfig{}, init, ws);
    REQUIRE(nrep.converged);
    KeConvergenceReport rep = ke_convergence_report(phi, params, fx.bg, fx.spec, ws);
    CHECK(rep.stationary_residual < 1e-8);
    CHECK(rep.area == Catch::Approx(2.0 * M_PI).margin(1e-8));
    CHECK(rep.einstein_rel_error < 0.02);
    CHECK(rep.cusp_band_lo > 0.0);
    CHECK(rep.cusp_band_hi / rep.cusp_band_lo < 4.0);
}
