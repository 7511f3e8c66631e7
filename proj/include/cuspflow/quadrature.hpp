#pragma once

#include <cmath>
#include <functional>

namespace cuspflow {

namespace detail {

// 7-point Gauss / 15-point Kronrod pair on [-1,1]
inline const double gk_nodes[15] = {
    -0.991455371120813, -0.949107912342759, -0.864864423359769, -0.741531185599394,
    -0.586087235467691, -0.405845151377397, -0.207784955007898, 0.0,
    0.207784955007898,  0.405845151377397,  0.586087235467691,  0.741531185599394,
    0.864864423359769,  0.949107912342759,  0.991455371120813};
inline const double gk_wk[15] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728,
    0.204432940075298, 0.190350578064785, 0.169004726639267, 0.140653259715525,
    0.104790010322250, 0.063092092629979, 0.022935322010529};
inline const double gk_wg[7] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119, 0.417959183673469,
    0.381830050505119, 0.279705391489277, 0.129484966168870};

template <typename F>
void gk15(const F& f, double a, double b, double& kronrod, double& err) {
    double c = 0.5 * (a + b), h = 0.5 * (b - a);
    double sk = 0.0, sg = 0.0;
    for (int i = 0; i < 15; ++i) {
        double fx = f(c + h * gk_nodes[i]);
        sk += gk_wk[i] * fx;
        if (i % 2 == 1) sg += gk_wg[i / 2] * fx;
    }
    kronrod = sk * h;
    err = std::abs((sk - sg) * h);
}

template <typename F>
double adaptive_quad_impl(const F& f, double a, double b, double tol, int depth) {
    double q, err;
    gk15(f, a, b, q, err);
    if (err <= tol || depth > 40) return q;
    double m = 0.5 * (a + b);
    return adaptive_quad_impl(f, a, m, 0.5 * tol, depth + 1) + adaptive_quad_impl(f, m, b, 0.5 * tol, depth + 1);
}

}  // namespace detail

/// Adaptive Gauss-Kronrod quadrature of f over [a,b] to relative tolerance rel_tol.
template <typename F>
double adaptive_quad(const F& f, double a, double b, double rel_tol = 1e-10) {
    if (a == b) return 0.0;
    double q0, e0;
    detail::gk15(f, a, b, q0, e0);
    double tol = rel_tol * std::max(std::abs(q0), 1e-300);
    return detail::adaptive_quad_impl(f, a, b, tol, 0);
}

}  // namespace cuspflow
