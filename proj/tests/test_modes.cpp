#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "warpscatter/modes.hpp"

using namespace ws;
using namespace ws::modes;

TEST_CASE("circle eigen list") {
    auto cs = CrossSection::circle(2 * kPi);
    auto ms = eigen_list(cs, 4.5);
    std::vector<Real> evs;
    for (auto& c : ms.channels) evs.push_back(c.eigenvalue);
    REQUIRE(evs.size() == 5);
    CHECK(evs[0] == doctest::Approx(0));
    CHECK(evs[1] == doctest::Approx(1));
    CHECK(evs[2] == doctest::Approx(1));
    CHECK(evs[3] == doctest::Approx(4));
    CHECK(evs[4] == doctest::Approx(4));
}

TEST_CASE("sphere eigen list") {
    auto cs = CrossSection::sphere(2);
    auto ms = eigen_list(cs, 6.0);
    // {0, 2 x3, 6 x5}
    REQUIRE(ms.channels.size() == 9);
    CHECK(ms.channels[0].eigenvalue == doctest::Approx(0));
    int mult2 = 0, mult6 = 0;
    for (auto& c : ms.channels) {
        if (std::abs(c.eigenvalue - 2) < 1e-12) ++mult2;
        if (std::abs(c.eigenvalue - 6) < 1e-12) ++mult6;
    }
    CHECK(mult2 == 3);
    CHECK(mult6 == 5);
}

TEST_CASE("custom eigen list filters") {
    auto cs = CrossSection::custom({{0, 1}, {3.1, 1}, {7.2, 2}}, 1.0);
    auto ms = eigen_list(cs, 5.0);
    REQUIRE(ms.channels.size() == 2);
    CHECK(ms.channels[1].eigenvalue == doctest::Approx(3.1));
}

TEST_CASE("custom list must be sorted") {
    CHECK_THROWS_AS(CrossSection::custom({{0, 1}, {5.0, 1}, {3.0, 1}}, 1.0), SpecError);
}

TEST_CASE("eigen_list scales as L^-2") {
    auto a = eigen_list(CrossSection::circle(2 * kPi), 9.5);
    auto b = eigen_list(CrossSection::circle(4 * kPi), 9.5 / 4);
    REQUIRE(a.channels.size() == b.channels.size());
    for (std::size_t i = 0; i < a.channels.size(); ++i)
        CHECK(b.channels[i].eigenvalue == doctest::Approx(a.channels[i].eigenvalue / 4));
}

TEST_CASE("expand constant picks the zero mode") {
    auto cs = CrossSection::circle(2 * kPi);
    auto ms = eigen_list(cs, 9.0);
    std::vector<Cplx> f(64, Cplx(3.0));
    auto c = expand(cs, f, ms);
    CHECK(std::abs(c[0] - 3.0 * std::sqrt(2 * kPi)) < 1e-12);
    for (std::size_t i = 1; i < c.size(); ++i) CHECK(std::abs(c[i]) < 1e-12);
}

TEST_CASE("expand cos theta hits only ell=1") {
    auto cs = CrossSection::circle(2 * kPi);
    auto ms = eigen_list(cs, 9.0);
    std::size_t N = 64;
    std::vector<Cplx> f(N);
    for (std::size_t i = 0; i < N; ++i) f[i] = std::cos(2 * kPi * i / N);
    auto c = expand(cs, f, ms);
    for (std::size_t i = 0; i < c.size(); ++i) {
        if (ms.channels[i].ell == 1 && ms.channels[i].slot == 0)
            CHECK(std::abs(c[i]) > 0.1);
        else
            CHECK(std::abs(c[i]) < 1e-12);
    }
}

TEST_CASE("random trig polynomial round-trips and satisfies Parseval") {
    auto cs = CrossSection::circle(2 * kPi);
    auto ms = eigen_list(cs, 64.5);  // ell up to 8
    std::mt19937_64 rng(1234);
    std::uniform_real_distribution<Real> dist(-1, 1);
    std::size_t N = 48;
    std::vector<Cplx> coeffs(ms.channels.size());
    for (auto& c : coeffs) c = Cplx(dist(rng), dist(rng));
    auto f = synthesize(cs, coeffs, ms, N);
    auto back = expand(cs, f, ms);
    Real werr = 0;
    for (std::size_t i = 0; i < coeffs.size(); ++i)
        werr = std::max(werr, std::abs(back[i] - coeffs[i]));
    CHECK(werr < 1e-12);

    // Parseval: sum |coeff|^2 = int |f|^2
    Real lhs = 0;
    for (auto& c : back) lhs += std::norm(c);
    Real rhs = 0;
    for (auto& v : f) rhs += std::norm(v) * (2 * kPi / N);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("undersampling raises alias error") {
    auto cs = CrossSection::circle(2 * kPi);
    auto ms = eigen_list(cs, 64.5);
    std::vector<Cplx> f(9, Cplx(1.0));  // need 17
    CHECK_THROWS_AS(expand(cs, f, ms), AliasError);
}
