#include <catch2/catch_amalgamated.hpp>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "cuspflow/io.hpp"

using namespace cuspflow;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
    fs::path d = fs::temp_directory_path() / "cuspflow_io_test";
    fs::create_directories(d);
    return d;
}

FlowTrace sample_trace() {
    FlowTrace tr;
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int k = 0; k < 5; ++k) {
        TraceRow r{};
        r.t = 0.1 * k;
        r.sup_phidot = u(rng);
        r.inf_phidot = u(rng);
        r.sup_u = u(rng);
        r.inf_u = u(rng);
        r.min_ratio = 1.0 + 0.1 * u(rng);
        r.max_ratio = 2.0 + 0.1 * u(rng);
        r.area = 2.0 * M_PI + 1e-12 * u(rng);
        r.stat_residual = std::abs(u(rng));
        r.wall_ms = 1000.0 * std::abs(u(rng));
        tr.rows.push_back(r);
    }
    return tr;
}

}  // namespace

TEST_CASE("fmt_g17 round-trips doubles exactly") {
    for (double x : {0.1, 1.0 / 3.0, 2.0 * M_PI, 1e-300, -7.25, 0.0})
        CHECK(std::stod(fmt_g17(x)) == x);
}

TEST_CASE("field dump round-trip is bit exact") {
    TorusSpec spec;
    spec.nx = 16;
    spec.ny = 24;
    GridField f(spec);
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    for (double& x : f.v) x = u(rng);

    fs::path base = temp_dir() / "field_roundtrip";
    dump_field(base, f, spec, "phi_test", 0.25);
    GridField g = read_field_dump(base);
    REQUIRE(g.nx == f.nx);
    REQUIRE(g.ny == f.ny);
    CHECK(std::memcmp(f.v.data(), g.v.data(), f.v.size() * sizeof(double)) == 0);

    std::ifstream sj(base.string() + ".json");
    auto side = nlohmann::json::parse(sj);
    CHECK(side.at("field_name") == "phi_test");
    CHECK(side.at("time") == 0.25);
    CHECK(side.at("tau_im") == 1.0);

    CHECK_THROWS_AS(read_field_dump(temp_dir() / "does_not_exist"), missing_artifact_error);
}

TEST_CASE("trace CSV round-trip is value exact") {
    FlowTrace tr = sample_trace();
    fs::path p = temp_dir() / "trace_roundtrip.csv";
    write_trace_csv(p, tr);
    FlowTrace back = read_trace_csv(p);
    REQUIRE(back.rows.size() == tr.rows.size());
    for (std::size_t k = 0; k < tr.rows.size(); ++k) {
        CHECK(back.rows[k].t == tr.rows[k].t);
        CHECK(back.rows[k].sup_phidot == tr.rows[k].sup_phidot);
        CHECK(back.rows[k].min_ratio == tr.rows[k].min_ratio);
        CHECK(back.rows[k].stat_residual == tr.rows[k].stat_residual);
        CHECK(back.rows[k].wall_ms == tr.rows[k].wall_ms);
    }
    CHECK_THROWS_AS(read_trace_csv(temp_dir() / "missing.csv"), missing_artifact_error);
}

TEST_CASE("numeric trace hash ignores wall_ms but nothing else") {
    FlowTrace tr = sample_trace();
    fs::path p1 = temp_dir() / "hash_a.csv";
    fs::path p2 = temp_dir() / "hash_b.csv";
    write_trace_csv(p1, tr);
    for (TraceRow& r : tr.rows) r.wall_ms += 123.0;  // timing jitter
    write_trace_csv(p2, tr);
    CHECK(hash_file(p1) != hash_file(p2));
    CHECK(hash_trace_csv_numeric(p1) == hash_trace_csv_numeric(p2));

    tr.rows[2].sup_u += 1e-15;  // any numeric change must be visible
    fs::path p3 = temp_dir() / "hash_c.csv";
    write_trace_csv(p3, tr);
    CHECK(hash_trace_csv_numeric(p1) != hash_trace_csv_numeric(p3));
}

TEST_CASE("fnv1a64 known vectors") {
    CHECK(fnv1a64("", 0) == 14695981039346656037ull);
    CHECK(fnv1a64("a", 1) == 12638187200555641996ull);
}

TEST_CASE("atomic_write_text leaves no temp file and replaces content") {
    fs::path p = temp_dir() / "atomic.txt";
    atomic_write_text(p, "first\n");
    atomic_write_text(p, "second\n");
    std::ifstream in(p);
    std::string s((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(s == "second\n");
    CHECK_FALSE(fs::exists(p.string() + ".tmp"));
}

TEST_CASE("SVG plot writes a well-formed file; empty data is rejected") {
    PlotSeries s;
    s.name = "sup";
    for (int k = 0; k <= 10; ++k) {
        s.x.push_back(0.1 * k);
        s.y.push_back(std::exp(-0.1 * k));
    }
    fs::path p = temp_dir() / "plot.svg";
    write_svg_lineplot(p, "decay", "t", "sup|phidot|", {s});
    std::ifstream in(p);
    std::string body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(body.rfind("<svg", 0) == 0);
    CHECK(body.find("polyline") != std::string::npos);
    CHECK(body.find("</svg>") != std::string::npos);

    CHECK_THROWS_AS(write_svg_lineplot(temp_dir() / "empty.svg", "t", "x", "y", {}), diagnostic_unavailable);
}
