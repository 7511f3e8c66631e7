#pragma once

#include <cmath>
#include <complex>

#include "cuspflow/grid.hpp"

namespace cuspflow {

/// Odd Jacobi theta value theta1(pi*z | tau) via its q-series,
///   theta1(u|tau) = 2 sum_{k>=0} (-1)^k q^{(k+1/2)^2} sin((2k+1)u),  q = e^{i pi tau}.
/// Truncated when the term magnitude falls below 1e-16 of the partial sum.
/// Vanishes exactly on the lattice Z + tau Z and nowhere else.
inline complexd theta1(complexd z, complexd tau) {
    if (!(tau.imag() > 0.0)) throw invalid_spec_error("theta1: series requires Im tau > 0");
    const complexd u = M_PI * z;
    const complexd ipitau = complexd(0.0, M_PI) * tau;
    complexd sum = 0.0;
    double sign = 1.0;
    for (int k = 0; k < 200; ++k) {
        double hk = k + 0.5;
        complexd term = sign * std::exp(ipitau * (hk * hk)) * std::sin(double(2 * k + 1) * u);
        sum += term;
        if (k >= 1 && std::abs(term) < 1e-16 * std::abs(sum)) break;
        sign = -sign;
    }
    return 2.0 * sum;
}

/// d/du theta1(u|tau) evaluated at u = pi*z.
inline complexd theta1_prime(complexd z, complexd tau) {
    if (!(tau.imag() > 0.0)) throw invalid_spec_error("theta1_prime: series requires Im tau > 0");
    const complexd u = M_PI * z;
    const complexd ipitau = complexd(0.0, M_PI) * tau;
    complexd sum = 0.0;
    double sign = 1.0;
    for (int k = 0; k < 200; ++k) {
        double hk = k + 0.5;
        double m = 2 * k + 1;
        complexd term = sign * std::exp(ipitau * (hk * hk)) * m * std::cos(m * u);
        sum += term;
        if (k >= 1 && std::abs(term) < 1e-16 * std::abs(sum)) break;
        sign = -sign;
    }
    return 2.0 * sum;
}

}  // namespace cuspflow
