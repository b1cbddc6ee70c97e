#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "warpscatter/manifold.hpp"

using namespace ws;
using namespace ws::manifold;

namespace {
ManifoldSpec one_ended(RadialProfile p, int n, EndSpec es) {
    ManifoldSpec s;
    s.n = n;
    s.topology = Topology::HalfLine;
    s.profile = p;
    s.ends = {es};
    s.cross_section = modes::CrossSection::circle(2 * kPi);
    return s;
}
}  // namespace

TEST_CASE("profile evaluators") {
    auto e = RadialProfile::exponential(1.0).eval(0.0);
    CHECK(e.rho == doctest::Approx(1.0));
    CHECK(e.drho == doctest::Approx(1.0));

    auto p = RadialProfile::polynomial(1.0).eval(2.0);
    CHECK(p.rho == doctest::Approx(2.0));
    CHECK(p.drho == doctest::Approx(1.0));
    CHECK(p.ddrho == doctest::Approx(0.0));

    // tabulated cosh grid
    std::vector<Real> r, v;
    for (int i = 0; i <= 600; ++i) {
        Real x = -3.0 + 6.0 * i / 600.0;
        r.push_back(x);
        v.push_back(std::cosh(x));
    }
    auto t = RadialProfile::tabulated(r, v).eval(0.0);
    CHECK(std::abs(t.rho - 1.0) < 1e-8);
    CHECK(std::abs(t.drho) < 1e-5);
    CHECK(std::abs(t.ddrho - 1.0) < 1e-2);
}

TEST_CASE("profile domain errors") {
    auto p = RadialProfile::polynomial(0.5);
    CHECK_THROWS_AS(p.eval(-2.0), DomainError);
    std::vector<Real> r = {0, 1, 2}, v = {1, 2, 3};
    auto t = RadialProfile::tabulated(r, v);
    CHECK_THROWS_AS(t.eval(5.0), DomainError);
}

TEST_CASE("classify_ends on exponential funnel") {
    EndSpec es;
    es.classification = EndClass::Regular;
    es.c0 = 1.0;
    es.E0 = 0.25;
    auto spec = one_ended(RadialProfile::exponential(1.0), 2, es);
    auto fits = classify_ends(spec);
    REQUIRE(fits.size() == 1);
    CHECK(fits[0].classification == EndClass::Regular);
    CHECK(fits[0].c0 == doctest::Approx(1.0));
    CHECK(fits[0].E0 == doctest::Approx(0.25));
}

TEST_CASE("classify_ends on exponential cusp") {
    EndSpec es;
    es.classification = EndClass::Cusp;
    es.c0 = -1.0;
    es.E0 = 0.25;
    auto spec = one_ended(RadialProfile::exponential(-1.0), 2, es);
    auto fits = classify_ends(spec);
    CHECK(fits[0].classification == EndClass::Cusp);
    CHECK(fits[0].E0 == doctest::Approx(0.25));
}

TEST_CASE("classify_ends fits a power-law tail") {
    EndSpec es;
    es.classification = EndClass::Regular;
    es.c0 = 0.0;
    es.beta0 = 0.5;
    es.E0 = 0.0;
    auto spec = one_ended(RadialProfile::polynomial(0.5, 1.0), 2, es);
    auto fits = classify_ends(spec, 0.05, 200.0);
    CHECK(fits[0].classification == EndClass::Regular);
    CHECK(std::abs(fits[0].beta0 - 0.5) < 0.05);
}

TEST_CASE("classify_ends flags inconsistent spec") {
    EndSpec es;
    es.classification = EndClass::Regular;
    es.c0 = 2.0;  // wrong: profile has c0 = 1
    es.E0 = 1.0;
    auto spec = one_ended(RadialProfile::exponential(1.0), 2, es);
    CHECK_THROWS_AS(classify_ends(spec), SpecError);
}

TEST_CASE("classify_ends is idempotent") {
    EndSpec es;
    es.classification = EndClass::Regular;
    es.c0 = 1.0;
    es.E0 = 0.25;
    auto spec = one_ended(RadialProfile::cosh_profile(1.0), 2, es);
    spec.topology = Topology::FullLine;
    spec.ends = {es, es};
    auto f1 = classify_ends(spec);
    // feed the fitted constants back in
    for (std::size_t j = 0; j < f1.size(); ++j) {
        spec.ends[j].c0 = f1[j].c0;
        spec.ends[j].E0 = f1[j].E0;
        spec.ends[j].alpha0 = f1[j].alpha0;
        spec.ends[j].beta0 = f1[j].beta0;
    }
    auto f2 = classify_ends(spec);
    for (std::size_t j = 0; j < f1.size(); ++j) {
        CHECK(f2[j].c0 == doctest::Approx(f1[j].c0));
        CHECK(f2[j].E0 == doctest::Approx(f1[j].E0));
    }
}

TEST_CASE("essential spectrum bottom") {
    EndSpec a;
    a.E0 = 0.25;
    EndSpec b;
    b.E0 = 0.0;
    ManifoldSpec s;
    s.ends = {a, b};
    CHECK(essential_spectrum_bottom(s) == doctest::Approx(0.0));
    std::swap(s.ends[0], s.ends[1]);
    CHECK(essential_spectrum_bottom(s) == doctest::Approx(0.0));  // order invariant

    EndSpec c;
    c.E0 = 0.25;
    s.ends = {c, c};
    CHECK(essential_spectrum_bottom(s) == doctest::Approx(0.25));
}

TEST_CASE("symbol_decay_fit on exact power") {
    std::vector<Real> r, f;
    for (int i = 0; i < 60; ++i) {
        Real x = 2.0 * std::pow(10.0, 1.5 * i / 59.0);
        r.push_back(x);
        f.push_back(std::pow(x, -2.0));
    }
    auto fit = symbol_decay_fit(r, f, -2.0);
    CHECK(std::abs(fit.kappa_hat + 2.0) < 0.01);
    CHECK_FALSE(fit.faster_than_power);
}

TEST_CASE("symbol_decay_fit flags super-polynomial decay") {
    std::vector<Real> r, f;
    for (int i = 0; i < 60; ++i) {
        Real x = 2.0 + i;
        r.push_back(x);
        f.push_back(std::exp(-x));
    }
    auto fit = symbol_decay_fit(r, f, 0.0);
    CHECK(fit.faster_than_power);
}

TEST_CASE("symbol_decay_fit on symbolic log-derivative deviation") {
    // rho = e^r (1 + 1/r): rho'/rho - 1 = -1/(r(r+1)) ~ -r^{-2}
    std::vector<Real> r, f;
    for (int i = 0; i < 80; ++i) {
        Real x = 20.0 * std::pow(10.0, 2.0 * i / 79.0);
        r.push_back(x);
        f.push_back(std::abs(-1.0 / (x * (x + 1))));
    }
    auto fit = symbol_decay_fit(r, f, -2.0);
    CHECK(std::abs(fit.kappa_hat + 2.0) < 0.05);
}

TEST_CASE("assumption (A-2) boundedness over built-in tails") {
    struct Row {
        RadialProfile p;
        Real c0, alpha0;
    };
    std::vector<Row> rows;
    rows.push_back({RadialProfile::exponential(1.0), 1.0, 2.0});
    rows.push_back({RadialProfile::cosh_profile(1.0), 1.0, 2.0});
    rows.push_back({RadialProfile::polynomial(0.7, 1.0), 0.0, 1.0});
    rows.push_back({RadialProfile::subexponential(1.0, 0.4), 0.0, 0.4});
    for (auto& row : rows) {
        Real worst = 0;
        for (Real r = 5; r < 200; r *= 1.1) {
            auto e = row.p.eval(r);
            worst = std::max(worst,
                             std::abs(e.drho / e.rho - row.c0) * std::pow(r, row.alpha0));
        }
        CHECK(worst < 50.0);
    }
}
