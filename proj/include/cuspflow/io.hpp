#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cuspflow/flow.hpp"
#include "cuspflow/grid.hpp"

namespace cuspflow {

/// Formats a double with full round-trip precision (%.17g).
inline std::string fmt_g17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

/// Atomic text write: content goes to <path>.tmp, then a rename commits it.
inline void atomic_write_text(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw missing_artifact_error("atomic_write_text: cannot open " + tmp.string());
        out << content;
    }
    std::filesystem::rename(tmp, path);
}

/// Raw little-endian f64 dump, row-major (y outer, x inner), plus a JSON sidecar
/// {nx, ny, tau_re, tau_im, offset, field_name, time} at <base>.json.
inline void dump_field(const std::filesystem::path& base, const GridField& f, const TorusSpec& spec,
                       const std::string& field_name, double time) {
    std::filesystem::path raw = base;
    raw += ".f64";
    {
        std::ofstream out(raw, std::ios::binary | std::ios::trunc);
        if (!out) throw missing_artifact_error("dump_field: cannot open " + raw.string());
        out.write(reinterpret_cast<const char*>(f.v.data()), static_cast<std::streamsize>(f.v.size() * sizeof(double)));
    }
    nlohmann::json side{{"nx", f.nx},
                        {"ny", f.ny},
                        {"tau_re", spec.tau.real()},
                        {"tau_im", spec.tau.imag()},
                        {"offset", spec.offset},
                        {"field_name", field_name},
                        {"time", time}};
    std::filesystem::path sj = base;
    sj += ".json";
    atomic_write_text(sj, side.dump(2) + "\n");
}

/// Reads a raw f64 dump written by dump_field; the sidecar supplies the shape.
inline GridField read_field_dump(const std::filesystem::path& base) {
    std::filesystem::path sj = base;
    sj += ".json";
    std::ifstream sin(sj);
    if (!sin) throw missing_artifact_error("read_field_dump: missing sidecar " + sj.string());
    nlohmann::json side = nlohmann::json::parse(sin);
    GridField f(side.at("nx").get<int>(), side.at("ny").get<int>());
    std::filesystem::path raw = base;
    raw += ".f64";
    std::ifstream rin(raw, std::ios::binary);
    if (!rin) throw missing_artifact_error("read_field_dump: missing raw file " + raw.string());
    rin.read(reinterpret_cast<char*>(f.v.data()), static_cast<std::streamsize>(f.v.size() * sizeof(double)));
    if (rin.gcount() != static_cast<std::streamsize>(f.v.size() * sizeof(double)))
        throw missing_artifact_error("read_field_dump: truncated raw file " + raw.string());
    return f;
}

inline const char* trace_csv_header() {
    return "t,sup_phidot,inf_phidot,sup_u,inf_u,min_ratio,max_ratio,area,stat_residual,wall_ms";
}

inline void write_trace_csv(const std::filesystem::path& path, const FlowTrace& trace) {
    std::ostringstream out;
    out << trace_csv_header() << "\n";
    for (const TraceRow& r : trace.rows) {
        out << fmt_g17(r.t) << ',' << fmt_g17(r.sup_phidot) << ',' << fmt_g17(r.inf_phidot) << ','
            << fmt_g17(r.sup_u) << ',' << fmt_g17(r.inf_u) << ',' << fmt_g17(r.min_ratio) << ','
            << fmt_g17(r.max_ratio) << ',' << fmt_g17(r.area) << ',' << fmt_g17(r.stat_residual) << ','
            << fmt_g17(r.wall_ms) << "\n";
    }
    atomic_write_text(path, out.str());
}

/// Parses a trace CSV written by write_trace_csv.
inline FlowTrace read_trace_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw missing_artifact_error("read_trace_csv: missing " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw missing_artifact_error("read_trace_csv: empty " + path.string());
    FlowTrace trace;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        TraceRow r{};
        double* slots[10] = {&r.t,        &r.sup_phidot, &r.inf_phidot, &r.sup_u, &r.inf_u,
                             &r.min_ratio, &r.max_ratio,  &r.area,       &r.stat_residual, &r.wall_ms};
        std::istringstream ls(line);
        std::string cell;
        for (int c = 0; c < 10; ++c) {
            if (!std::getline(ls, cell, ','))
                throw missing_artifact_error("read_trace_csv: short row in " + path.string());
            *slots[c] = std::stod(cell);
        }
        trace.rows.push_back(r);
    }
    return trace;
}

inline std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t h = 14695981039346656037ull) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    for (std::size_t k = 0; k < n; ++k) {
        h ^= p[k];
        h *= 1099511628211ull;
    }
    return h;
}

inline std::uint64_t hash_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw missing_artifact_error("hash_file: missing " + path.string());
    std::uint64_t h = 14695981039346656037ull;
    char buf[1 << 16];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) h = fnv1a64(buf, static_cast<std::size_t>(in.gcount()), h);
    return h;
}

/// Hash of a trace CSV's numeric content, excluding the wall_ms timing column
/// (the only run-to-run nondeterministic value).
inline std::uint64_t hash_trace_csv_numeric(const std::filesystem::path& path) {
    FlowTrace trace = read_trace_csv(path);
    std::string sig;
    for (const TraceRow& r : trace.rows) {
        sig += fmt_g17(r.t) + "," + fmt_g17(r.sup_phidot) + "," + fmt_g17(r.inf_phidot) + "," + fmt_g17(r.sup_u) +
               "," + fmt_g17(r.inf_u) + "," + fmt_g17(r.min_ratio) + "," + fmt_g17(r.max_ratio) + "," +
               fmt_g17(r.area) + "," + fmt_g17(r.stat_residual) + "\n";
    }
    return fnv1a64(sig.data(), sig.size());
}

struct PlotSeries {
    std::string name;
    std::vector<double> x, y;
};

/// Standalone SVG line plot (no external renderer): one polyline per series,
/// framed axes with min/max tick labels and a simple legend.
inline void write_svg_lineplot(const std::filesystem::path& path, const std::string& title,
                               const std::string& xlabel, const std::string& ylabel,
                               const std::vector<PlotSeries>& series) {
    const double W = 840, H = 520, ml = 80, mr = 30, mt = 50, mb = 60;
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& s : series)
        for (std::size_t k = 0; k < s.x.size(); ++k) {
            xmin = std::min(xmin, s.x[k]);
            xmax = std::max(xmax, s.x[k]);
            ymin = std::min(ymin, s.y[k]);
            ymax = std::max(ymax, s.y[k]);
        }
    if (!(xmin <= xmax)) throw diagnostic_unavailable("write_svg_lineplot: no data");
    if (xmax == xmin) xmax = xmin + 1.0;
    if (ymax == ymin) ymax = ymin + 1.0;
    auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (W - ml - mr); };
    auto py = [&](double y) { return H - mb - (y - ymin) / (ymax - ymin) * (H - mt - mb); };
    static const char* colors[] = {"#1b6ca8", "#c0392b", "#27ae60", "#8e44ad", "#d35400",
                                   "#16a085", "#7f8c8d", "#2c3e50", "#e67e22", "#2980b9"};
    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << W / 2 << "\" y=\"28\" text-anchor=\"middle\" font-size=\"16\">" << title << "</text>\n";
    out << "<line x1=\"" << ml << "\" y1=\"" << H - mb << "\" x2=\"" << W - mr << "\" y2=\"" << H - mb
        << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << H - mb
        << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << W / 2 << "\" y=\"" << H - 18 << "\" text-anchor=\"middle\" font-size=\"12\">" << xlabel
        << "</text>\n";
    out << "<text x=\"20\" y=\"" << H / 2 << "\" font-size=\"12\" transform=\"rotate(-90 20 " << H / 2 << ")\">"
        << ylabel << "</text>\n";
    out << "<text x=\"" << ml << "\" y=\"" << H - mb + 16 << "\" font-size=\"10\">" << fmt_g17(xmin) << "</text>\n";
    out << "<text x=\"" << W - mr << "\" y=\"" << H - mb + 16 << "\" text-anchor=\"end\" font-size=\"10\">"
        << fmt_g17(xmax) << "</text>\n";
    out << "<text x=\"" << ml - 6 << "\" y=\"" << H - mb << "\" text-anchor=\"end\" font-size=\"10\">"
        << fmt_g17(ymin) << "</text>\n";
    out << "<text x=\"" << ml - 6 << "\" y=\"" << mt + 4 << "\" text-anchor=\"end\" font-size=\"10\">"
        << fmt_g17(ymax) << "</text>\n";
    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* col = colors[s % 10];
        out << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t k = 0; k < series[s].x.size(); ++k)
            out << px(series[s].x[k]) << ',' << py(series[s].y[k]) << ' ';
        out << "\"/>\n";
        out << "<text x=\"" << W - mr - 4 << "\" y=\"" << mt + 16 + 14 * double(s)
            << "\" text-anchor=\"end\" font-size=\"11\" fill=\"" << col << "\">" << series[s].name << "</text>\n";
    }
    out << "</svg>\n";
    atomic_write_text(path, out.str());
}

}  // namespace cuspflow
