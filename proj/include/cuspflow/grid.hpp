#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace cuspflow {

using complexd = std::complex<double>;

struct invalid_spec_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct invalid_background_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct invalid_metric_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct step_rejected_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct missing_artifact_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct diagnostic_unavailable : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Immutable description of the punctured-torus testbed M = C/(Z + tau Z),
/// D = one puncture at lattice-fractional coordinates (puncture_a, puncture_b).
struct TorusSpec {
    complexd tau{0.0, 1.0};
    int nx = 128;
    int ny = 128;
    double offset = 0.5;        // half-cell offset so no node hits the puncture
    double delta0 = std::exp(-4.0);  // target sup of |s|^2_h after normalization
    double puncture_a = 0.0;
    double puncture_b = 0.0;
    int guard_cells = 2;

    void validate() const {
        if (!(tau.imag() > 0.0)) throw invalid_spec_error("TorusSpec: Im tau must be > 0");
        if (nx < 16 || ny < 16) throw invalid_spec_error("TorusSpec: nx, ny must be >= 16");
        if (nx % 2 != 0 || ny % 2 != 0) throw invalid_spec_error("TorusSpec: nx, ny must be even");
        if (!(delta0 > 0.0 && delta0 < 1.0)) throw invalid_spec_error("TorusSpec: delta0 must be in (0,1)");
        if (!(offset > 0.0 && offset < 1.0)) throw invalid_spec_error("TorusSpec: offset must be in (0,1) cell units");
    }

    std::size_t n_nodes() const { return static_cast<std::size_t>(nx) * ny; }

    // lattice-fractional node coordinates (cell centers shifted by offset)
    double node_a(int i) const { return (i + offset) / nx; }
    double node_b(int j) const { return (j + offset) / ny; }

    complexd lattice_to_z(double a, double b) const { return complexd(a, 0.0) + tau * b; }
    complexd node_z(int i, int j) const { return lattice_to_z(node_a(i), node_b(j)); }
    complexd puncture_z() const { return lattice_to_z(puncture_a, puncture_b); }

    double cell_area() const { return tau.imag() / (static_cast<double>(nx) * ny); }
    double domain_area() const { return tau.imag(); }

    // squared Euclidean distance from lattice point (a,b) to the puncture,
    // minimized over lattice translates
    double dist_to_puncture(double a, double b) const {
        double best = 1e300;
        for (int da = -1; da <= 1; ++da)
            for (int db = -1; db <= 1; ++db) {
                double wa = a - puncture_a + da;
                double wb = b - puncture_b + db;
                complexd w = lattice_to_z(wa, wb) - lattice_to_z(0.0, 0.0);
                best = std::min(best, std::norm(w));
            }
        return std::sqrt(best);
    }
};

/// Doubly periodic real scalar field at cell centers, row-major (b outer, a inner).
/// Periodicity is structural: all index arithmetic wraps.
struct GridField {
    int nx = 0;
    int ny = 0;
    std::vector<double> v;

    GridField() = default;
    GridField(int nx_, int ny_, double fill = 0.0) : nx(nx_), ny(ny_), v(static_cast<std::size_t>(nx_) * ny_, fill) {}
    explicit GridField(const TorusSpec& spec, double fill = 0.0) : GridField(spec.nx, spec.ny, fill) {}

    static int wrap(int i, int n) {
        int r = i % n;
        return r < 0 ? r + n : r;
    }

    double& at(int i, int j) { return v[static_cast<std::size_t>(wrap(j, ny)) * nx + wrap(i, nx)]; }
    double at(int i, int j) const { return v[static_cast<std::size_t>(wrap(j, ny)) * nx + wrap(i, nx)]; }

    std::size_t size() const { return v.size(); }

    double max() const {
        double m = v[0];
        for (double x : v) m = std::max(m, x);
        return m;
    }
    double min() const {
        double m = v[0];
        for (double x : v) m = std::min(m, x);
        return m;
    }
    double sup_abs() const {
        double m = 0.0;
        for (double x : v) m = std::max(m, std::abs(x));
        return m;
    }
    bool all_finite() const {
        for (double x : v)
            if (!std::isfinite(x)) return false;
        return true;
    }

    GridField& operator+=(const GridField& o) {
        for (std::size_t k = 0; k < v.size(); ++k) v[k] += o.v[k];
        return *this;
    }
    GridField& operator-=(const GridField& o) {
        for (std::size_t k = 0; k < v.size(); ++k) v[k] -= o.v[k];
        return *this;
    }
    GridField& operator*=(double c) {
        for (double& x : v) x *= c;
        return *this;
    }
    GridField& operator+=(double c) {
        for (double& x : v) x += c;
        return *this;
    }

    friend GridField operator+(GridField a, const GridField& b) { return a += b; }
    friend GridField operator-(GridField a, const GridField& b) { return a -= b; }
    friend GridField operator*(double c, GridField a) { return a *= c; }
};

/// Midpoint-rule quadrature over the fundamental domain; exact for band-limited fields.
inline double integrate(const GridField& f, const TorusSpec& spec) {
    double s = 0.0;
    for (double x : f.v) s += x;
    return s * spec.cell_area();
}

inline double sup_diff(const GridField& a, const GridField& b) {
    double m = 0.0;
    for (std::size_t k = 0; k < a.v.size(); ++k) m = std::max(m, std::abs(a.v[k] - b.v[k]));
    return m;
}

/// Mask of nodes within guard_cells of the puncture (distance measured in cells).
struct GuardMask {
    int nx = 0, ny = 0;
    std::vector<char> inside;  // 1 = within guard radius

    GuardMask() = default;
    GuardMask(const TorusSpec& spec) : nx(spec.nx), ny(spec.ny), inside(spec.n_nodes(), 0) {
        // guard radius in lattice-Euclidean units: guard_cells of the coarser cell length
        double ha = std::abs(spec.lattice_to_z(1.0 / spec.nx, 0.0) - spec.lattice_to_z(0.0, 0.0));
        double hb = std::abs(spec.lattice_to_z(0.0, 1.0 / spec.ny) - spec.lattice_to_z(0.0, 0.0));
        double r = spec.guard_cells * std::max(ha, hb);
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i)
                if (spec.dist_to_puncture(spec.node_a(i), spec.node_b(j)) <= r)
                    inside[static_cast<std::size_t>(j) * nx + i] = 1;
    }

    bool guarded(std::size_t k) const { return inside[k] != 0; }
};

inline double sup_abs_off_guard(const GridField& f, const GuardMask& mask) {
    double m = 0.0;
    for (std::size_t k = 0; k < f.v.size(); ++k)
        if (!mask.guarded(k)) m = std::max(m, std::abs(f.v[k]));
    return m;
}

inline double max_off_guard(const GridField& f, const GuardMask& mask) {
    double m = -1e300;
    for (std::size_t k = 0; k < f.v.size(); ++k)
        if (!mask.guarded(k)) m = std::max(m, f.v[k]);
    return m;
}

namespace detail {
// Catmull-Rom kernel weights for fractional position u in [0,1)
inline void cubic_weights(double u, double w[4]) {
    double u2 = u * u, u3 = u2 * u;
    w[0] = 0.5 * (-u3 + 2 * u2 - u);
    w[1] = 0.5 * (3 * u3 - 5 * u2 + 2);
    w[2] = 0.5 * (-3 * u3 + 4 * u2 + u);
    w[3] = 0.5 * (u3 - u2);
}
}  // namespace detail

/// Periodic bicubic interpolation of f at lattice-fractional coordinates (a,b).
inline double interpolate_bicubic(const GridField& f, const TorusSpec& spec, double a, double b) {
    // node i sits at (i + offset)/nx
    double x = a * spec.nx - spec.offset;
    double y = b * spec.ny - spec.offset;
    int i0 = static_cast<int>(std::floor(x));
    int j0 = static_cast<int>(std::floor(y));
    double wx[4], wy[4];
    detail::cubic_weights(x - i0, wx);
    detail::cubic_weights(y - j0, wy);
    double s = 0.0;
    for (int dj = -1; dj <= 2; ++dj) {
        double row = 0.0;
        for (int di = -1; di <= 2; ++di) row += wx[di + 1] * f.at(i0 + di, j0 + dj);
        s += wy[dj + 1] * row;
    }
    return s;
}

}  // namespace cuspflow
