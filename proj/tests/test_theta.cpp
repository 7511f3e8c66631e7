#include <catch2/catch_amalgamated.hpp>

#include "cuspflow/theta.hpp"

using namespace cuspflow;

namespace {

// brute-force oracle: the same q-series with a fixed, excessive 100-term cut
// (past ~100 terms q^{(k+1/2)^2} is exactly 0.0 while sin((2k+1)u) overflows,
// and 0 * inf would poison the sum)
complexd theta1_oracle(complexd z, complexd tau) {
    complexd u = M_PI * z;
    complexd sum = 0.0;
    for (int k = 0; k < 100; ++k) {
        double hk = k + 0.5;
        complexd q_pow = std::exp(complexd(0.0, M_PI) * tau * (hk * hk));
        sum += ((k % 2 == 0) ? 1.0 : -1.0) * q_pow * std::sin(double(2 * k + 1) * u);
    }
    return 2.0 * sum;
}

}  // namespace

TEST_CASE("theta1 vanishes at lattice points") {
    const complexd tau(0.0, 1.0);
    CHECK(std::abs(theta1(complexd(0.0, 0.0), tau)) == 0.0);
    CHECK(std::abs(theta1(complexd(1.0, 0.0), tau)) < 1e-12);
    CHECK(std::abs(theta1(tau, tau)) < 1e-12);
}

TEST_CASE("theta1 matches the 200-term oracle") {
    const complexd tau(0.0, 1.0);
    for (complexd z : {complexd(0.5, 0.0), complexd(0.3, 0.2), complexd(0.1, 0.7), complexd(-0.4, 0.3)}) {
        complexd ref = theta1_oracle(z, tau);
        CHECK(std::abs(theta1(z, tau) - ref) <= 1e-14 * std::abs(ref));
    }
}

TEST_CASE("theta1 quasi-periodicity in modulus") {
    const complexd tau(0.3, 1.2);
    for (complexd z : {complexd(0.17, 0.05), complexd(0.6, 0.31), complexd(0.42, 0.8)}) {
        // |theta1(z+1)| = |theta1(z)|
        CHECK(std::abs(std::abs(theta1(z + 1.0, tau)) - std::abs(theta1(z, tau))) <= 1e-12);
        // |theta1(z+tau)| = |q^{-1} e^{-2 pi i z}| |theta1(z)|, q = e^{i pi tau}
        double factor = std::abs(std::exp(complexd(0.0, -M_PI) * tau) * std::exp(complexd(0.0, -2.0 * M_PI) * z));
        CHECK(std::abs(std::abs(theta1(z + tau, tau)) - factor * std::abs(theta1(z, tau))) <=
              1e-12 * factor * std::abs(theta1(z, tau)));
    }
}

TEST_CASE("theta1 rejects invalid modulus") {
    CHECK_THROWS_AS(theta1(complexd(0.5, 0.0), complexd(1.0, -1.0)), invalid_spec_error);
    CHECK_THROWS_AS(theta1_prime(complexd(0.5, 0.0), complexd(1.0, 0.0)), invalid_spec_error);
}

TEST_CASE("theta1_prime matches central finite differences") {
    const complexd tau(0.0, 1.0);
    const double h = 1e-6;
    for (complexd z : {complexd(0.25, 0.1), complexd(0.7, 0.4)}) {
        // theta1_prime is d/du at u = pi z, so d/dz theta1 = pi * theta1_prime
        complexd fd = (theta1(z + h, tau) - theta1(z - h, tau)) / (2.0 * h);
        complexd an = M_PI * theta1_prime(z, tau);
        CHECK(std::abs(fd - an) <= 1e-7 * std::abs(an));
    }
}
