#include <catch2/catch_amalgamated.hpp>

#include "cuspflow/conical.hpp"

using namespace cuspflow;

namespace {

TorusSpec square_spec(int n) {
    TorusSpec s;
    s.nx = s.ny = n;
    return s;
}

// psi_beta at a single value of L = log|s|^2_h
double psi_scalar(double L, double beta) { return -2.0 * std::log((1.0 - std::exp(beta * L)) / beta); }

}  // namespace

TEST_CASE("psi_beta frozen scalar values") {
    CHECK(psi_scalar(-2.0, 0.5) == Catch::Approx(-0.46894407034572684).margin(1e-12));
    CHECK(psi_scalar(-2.0, 0.25) == Catch::Approx(-0.90708446310540409).margin(1e-12));
    CHECK(psi_scalar(-2.0, 0.25) < psi_scalar(-2.0, 0.5));
    // puncture limit: (1 - w^beta)/beta -> 1/beta as w -> 0
    CHECK(psi_scalar(-800.0, 0.5) == Catch::Approx(2.0 * std::log(0.5)).margin(1e-12));
}

TEST_CASE("psi_zero frozen scalar values") {
    auto psi0 = [](double L) { return -std::log(L * L); };
    CHECK(psi0(-2.0) == Catch::Approx(-std::log(4.0)).margin(1e-9));
    CHECK(psi0(-2.0 * std::exp(1.0)) == Catch::Approx(-(std::log(4.0) + 2.0)).margin(1e-9));
}

TEST_CASE("psi_beta fields: finite, monotone in beta, converging to psi_zero") {
    TorusSpec s = square_spec(64);
    BackgroundData bg = build_background(s);
    std::vector<double> betas;
    for (int k = 1; k <= 10; ++k) betas.push_back(std::pow(2.0, -k));

    CheckReport mono = check_monotone_psi(betas, bg, s, 1e-12);
    CHECK(mono.pass);
    CHECK(mono.value <= 1e-12);

    // degenerate ladder: identical betas, zero difference
    CHECK(check_monotone_psi({0.25, 0.25}, bg, s).value == 0.0);

    GridField psi0 = psi_zero(bg, s);
    double prev_err = 1e300;
    const int i = 5, j = 40;  // fixed off-puncture node
    for (double beta : betas) {
        GridField psi = psi_beta({beta, 0.0}, bg, s);
        CHECK(psi.all_finite());
        double err = std::abs(psi.at(i, j) - psi0.at(i, j));
        CHECK(err < prev_err);
        prev_err = err;
    }
    CHECK(prev_err < 2e-2);
}

TEST_CASE("domination holds at default delta0 and is detected failing at 0.99") {
    TorusSpec s = square_spec(128);
    BackgroundData bg = build_background(s);
    for (double beta : {0.5, 1.0 / 64.0}) {
        CheckReport rep = check_domination({beta, 0.0}, bg, s);
        CHECK(rep.pass);
        CHECK(rep.value >= 0.5);
    }
    TorusSpec bad = s;
    bad.delta0 = 0.99;  // deliberately bad normalization
    BackgroundData bg_bad = build_background(bad);
    CheckReport rep = check_domination({0.5, 0.0}, bg_bad, bad);
    CHECK_FALSE(rep.pass);
    CHECK(rep.value < 0.5);
}

TEST_CASE("analytic conical density matches the spectral one off the pole") {
    TorusSpec s = square_spec(128);
    BackgroundData bg = build_background(s);
    SpectralWorkspace ws(s);
    const double beta = 0.25;
    GridField rho_spec = bg.rho0 + ddbar_density(psi_beta({beta, 0.0}, bg, s), ws);
    double worst = 0.0;
    for (int j = 0; j < s.ny; ++j)
        for (int i = 0; i < s.nx; ++i) {
            if (s.dist_to_puncture(s.node_a(i), s.node_b(j)) < 0.2) continue;
            double an = conical_density_at(s.node_z(i, j), beta, bg, s);
            worst = std::max(worst, std::abs(an - rho_spec.at(i, j)) / an);
        }
    CHECK(worst < 5e-3);  // spectral ringing from the cone point limits agreement
}

TEST_CASE("cone angle estimator: conical metrics and smooth control") {
    TorusSpec s = square_spec(512);
    BackgroundData bg = build_background(s);
    for (double beta : {0.5, 0.25}) {
        double est = cone_angle_estimate([&](complexd z) { return conical_density_at(z, beta, bg, s); }, s);
        CHECK(std::abs(est - beta) <= 0.05 * beta);
    }
    double theta = 2.0 * M_PI / s.tau.imag();
    double smooth = cone_angle_estimate([&](complexd) { return theta; }, s);
    CHECK(smooth >= 0.98);
    CHECK(smooth <= 1.02);
}

TEST_CASE("cone angle estimator needs resolution") {
    TorusSpec s = square_spec(16);
    CHECK_THROWS_AS(cone_angle_estimate([](complexd) { return 1.0; }, s), diagnostic_unavailable);
}

TEST_CASE("gauss_curvature: flat control, positivity guard, ladder-uniform cap") {
    TorusSpec s = square_spec(128);
    BackgroundData bg = build_background(s);
    CHECK(gauss_curvature(GridField(s, 3.0), s).sup_abs() < 1e-12);
    CHECK_THROWS_AS(gauss_curvature(GridField(s, -1.0), s), invalid_metric_error);

    std::vector<double> caps;
    for (double beta : {0.5, 0.25, 0.125}) {
        GridField rho(s);
        for (int j = 0; j < s.ny; ++j)
            for (int i = 0; i < s.nx; ++i) rho.at(i, j) = conical_density_at(s.node_z(i, j), beta, bg, s);
        caps.push_back(max_off_guard(gauss_curvature(rho, s), bg.guard));
    }
    double lo = *std::min_element(caps.begin(), caps.end());
    double hi = *std::max_element(caps.begin(), caps.end());
    CHECK(lo > 0.0);
    CHECK(hi / lo < 3.0);
}

TEST_CASE("cusp profile: model metric band = 1, smooth metric flagged") {
    TorusSpec s = square_spec(256);
    BackgroundData bg = build_background(s);
    // model cusp density in lattice-Euclidean distance d: 1/(d^2 log^2(d^2))
    GridField model(s);
    for (int j = 0; j < s.ny; ++j)
        for (int i = 0; i < s.nx; ++i) {
            double d = s.dist_to_puncture(s.node_a(i), s.node_b(j));
            double lg = std::log(d * d);
            model.at(i, j) = 1.0 / (d * d * lg * lg);
        }
    auto bands = cusp_profile(model, bg, s);
    REQUIRE(!bands.empty());
    for (const auto& b : bands) {
        CHECK(b.lo == Catch::Approx(1.0).margin(1e-9));
        CHECK(b.hi == Catch::Approx(1.0).margin(1e-9));
    }
    // smooth density: rho * d^2 log^2 d^2 -> 0 into the puncture
    auto flat_bands = cusp_profile(bg.rho0, bg, s);
    CHECK(flat_bands.front().hi < 0.3 * flat_bands.back().lo);
}
