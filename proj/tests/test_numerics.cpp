#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "warpscatter/numerics.hpp"

using namespace ws;
using namespace ws::num;

TEST_CASE("rk45 reproduces the oscillator over a long range") {
    auto rhs = [](Real, const std::vector<Cplx>& y, std::vector<Cplx>& dy) {
        dy[0] = y[1];
        dy[1] = -y[0];
    };
    auto y = integrate_to(rhs, 0.0, {Cplx(1), Cplx(0)}, 50.0, {.rtol = 1e-12, .atol = 1e-14});
    CHECK(std::abs(y[0] - std::cos(50.0)) < 1e-9);
    CHECK(std::abs(y[1] + std::sin(50.0)) < 1e-9);
}

TEST_CASE("rk45 integrates backward") {
    auto rhs = [](Real t, const std::vector<Cplx>& y, std::vector<Cplx>& dy) {
        (void)t;
        dy[0] = y[0];
    };
    auto y = integrate_to(rhs, 0.0, {Cplx(1)}, -3.0);
    CHECK(std::abs(y[0] - std::exp(-3.0)) < 1e-10);
}

TEST_CASE("adaptive simpson") {
    Real v = adaptive_simpson([](Real x) { return std::sin(x); }, 0.0, kPi, 1e-13);
    CHECK(std::abs(v - 2.0) < 1e-12);
    Cplx w = adaptive_simpson_c([](Real x) { return std::exp(Cplx(0, x)); }, 0.0, kPi / 2);
    CHECK(std::abs(w - Cplx(1, 1)) < 1e-11);
}

TEST_CASE("pchip matches cosh and its derivatives") {
    auto x = linspace(-3.0, 3.0, 301);
    std::vector<Real> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::cosh(x[i]);
    Pchip p(x, y);
    CHECK(std::abs(p.value(0.0) - 1.0) < 1e-8);
    CHECK(std::abs(p.deriv(0.0)) < 1e-5);
    CHECK(std::abs(p.deriv2(0.0) - 1.0) < 1e-2);
    CHECK(std::abs(p.value(1.234) - std::cosh(1.234)) < 1e-6);
    CHECK(std::abs(p.deriv(1.234) - std::sinh(1.234)) < 1e-4);
}

TEST_CASE("pchip preserves monotonicity") {
    std::vector<Real> x = {0, 1, 2, 3, 4}, y = {0, 0.1, 0.11, 5, 10};
    Pchip p(x, y);
    Real prev = p.value(0);
    for (Real t = 0.01; t <= 4.0; t += 0.01) {
        Real v = p.value(t);
        CHECK(v >= prev - 1e-12);
        prev = v;
    }
}

TEST_CASE("line fit recovers slope") {
    std::vector<Real> x, y;
    for (int i = 0; i < 50; ++i) {
        x.push_back(0.1 * i);
        y.push_back(3.0 - 2.0 * 0.1 * i);
    }
    auto f = fit_line(x, y);
    CHECK(std::abs(f.slope + 2.0) < 1e-12);
    CHECK(std::abs(f.intercept - 3.0) < 1e-12);
    CHECK(f.residual < 1e-12);
}

TEST_CASE("smoothstep is C2-flat at the ends") {
    CHECK(smoothstep(0.5) == 0.0);
    CHECK(smoothstep(2.5) == 1.0);
    CHECK(std::abs(smoothstep(1.5) - 0.5) < 1e-12);
    CHECK(std::abs(smoothstep_deriv(1.0 + 1e-7)) < 1e-10);
    CHECK(std::abs(smoothstep_deriv(2.0 - 1e-7)) < 1e-10);
}

TEST_CASE("sqrt_upper branch") {
    CHECK(sqrt_upper(Cplx(4, 0)).real() == doctest::Approx(2.0));
    CHECK(sqrt_upper(Cplx(-4, 0)).imag() == doctest::Approx(2.0));
    CHECK(sqrt_upper(Cplx(0, -9)).imag() >= 0);
}

TEST_CASE("bessel oracles agree with the standard library") {
    CHECK(std::abs(oracle::bessel_j(0, 5.0) - std::cyl_bessel_j(0.0, 5.0)) < 1e-11);
    CHECK(std::abs(oracle::bessel_j(3, 24.0) - std::cyl_bessel_j(3.0, 24.0)) < 1e-11);
    CHECK(std::abs(oracle::bessel_y(1, 8.0) - std::cyl_neumann(1.0, 8.0)) < 1e-10);
    CHECK(std::abs(oracle::bessel_y(4, 30.0) - std::cyl_neumann(4.0, 30.0)) < 1e-10);
    CHECK(std::abs(oracle::bessel_k(1.0, 2.5) - std::cyl_bessel_k(1.0, 2.5)) < 1e-12);
}
