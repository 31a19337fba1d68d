#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "expeq/funcspace.hpp"

using namespace expeq;

TEST_CASE("grid function basics") {
    GridFunction f = GridFunction::constant(10, 2.5);
    CHECK(f.n == 10);
    CHECK(f.t(0) == doctest::Approx(0.1));
    CHECK(f.t(9) == doctest::Approx(1.0));
    CHECK(f.sup_norm() == doctest::Approx(2.5));

    GridFunction g = GridFunction::from_callable(10, [](double t) { return t; });
    CHECK(g.values[0] == doctest::Approx(0.1));
    CHECK(g.values[9] == doctest::Approx(1.0));

    GridFunction h = f + g;
    CHECK(h.values[4] == doctest::Approx(3.0));
    GridFunction d = f - g;
    CHECK(d.values[9] == doctest::Approx(1.5));
    GridFunction s = 2.0 * g;
    CHECK(s.values[9] == doctest::Approx(2.0));

    CHECK(sup_distance(f, g) == doctest::Approx(2.4));
    GridFunction other = GridFunction::constant(11, 0.0);
    CHECK_THROWS_AS(f + other, ShapeError);
    CHECK_THROWS_AS(sup_distance(f, other), ShapeError);
}

TEST_CASE("rate constants at frozen reference points") {
    // gamma_n = (n/log n)^{-beta/(2beta+1)}; independently computed values.
    RateSet r = rates(1000, 1.0, 1.0, 1.0);
    CHECK(r.gamma_n == doctest::Approx(0.19045).epsilon(5e-4));
    CHECK(r.delta_n == doctest::Approx(r.gamma_n));
    CHECK(r.m == 5);
    CHECK(r.n_k == 200);

    RateSet r2 = rates(1024, 1.0, 1.0, 1.0);
    CHECK(r2.gamma_star == doctest::Approx(0.082274).epsilon(5e-4));

    RateSet r3 = rates(1024, 1.0, 1.0, kDefaultKappa0Star);
    CHECK(r3.gamma_star == doctest::Approx(4.0 * r2.gamma_star));

    // Larger beta gives a faster gamma_n rate.
    RateSet fast = rates(100000, 2.0, 1.0, 1.0);
    RateSet slow = rates(100000, 0.75, 1.0, 1.0);
    CHECK(fast.gamma_n < slow.gamma_n);

    // Splitting covers the grid: m * n_k >= n.
    for (std::size_t n : {64, 1000, 4096, 100000}) {
        RateSet rr = rates(n, 0.75, 1.0, 4.0);
        CHECK(rr.m * rr.n_k >= n);
        CHECK(rr.m >= 1);
    }
}

TEST_CASE("rate preconditions") {
    CHECK_THROWS_AS(rates(4, 1.0, 1.0, 1.0), DomainError);
    CHECK_THROWS_AS(rates(1000, 0.5, 1.0, 1.0), DomainError);
    CHECK_THROWS_AS(rates(1000, 1.0, 0.0, 1.0), DomainError);
    CHECK_THROWS_AS(rates(1000, 1.0, 1.0, -1.0), DomainError);
}

TEST_CASE("holder quotient of sqrt(t) at beta = 1/2") {
    // sup |sqrt(s)-sqrt(t)| / sqrt(|s-t|) on the grid is attained at the
    // extreme pair (1/n, 1) and equals sqrt(1-1/n)/(sqrt(1/n)+1) ~ 0.9693.
    GridFunction f = GridFunction::from_callable(1024, [](double t) { return std::sqrt(t); });
    double q = holder_quotient(f, 0.5);
    CHECK(q == doctest::Approx(0.96927).epsilon(1e-3));
}

TEST_CASE("holder quotient of t^2 at beta = 3/2") {
    // First differences of t^2 are 2t + 1/n; their 1/2-Holder quotient on the
    // grid approaches 2.
    GridFunction f = GridFunction::from_callable(1024, [](double t) { return t * t; });
    double q = holder_quotient(f, 1.5);
    CHECK(q == doctest::Approx(2.0).epsilon(5e-3));
}

TEST_CASE("holder quotient of a constant is zero") {
    GridFunction f = GridFunction::constant(64, 3.0);
    CHECK(holder_quotient(f, 0.75) == doctest::Approx(0.0));
    CHECK(holder_quotient(f, 1.5) == doctest::Approx(0.0));
    CHECK_THROWS_AS(holder_quotient(GridFunction::constant(3, 0.0), 1.0), DomainError);
}

TEST_CASE("sample_holder respects the class constraints") {
    Interval th0{-1.0, 1.0};
    for (double beta : {0.5, 0.75, 1.0, 1.5}) {
        GridFunction f = sample_holder(beta, 1.0, th0, 512, 42);
        CHECK(f.n == 512);
        CHECK_FALSE(f.constant_fallback);
        // Range inside theta0 with the 5% margin.
        for (double v : f.values) {
            CHECK(v >= th0.lo);
            CHECK(v <= th0.hi);
        }
        CHECK(holder_quotient(f, beta) <= 1.0 + 1e-9);
        // Not degenerate.
        double lo = f.values[0], hi = f.values[0];
        for (double v : f.values) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        CHECK(hi - lo > 0.0);
    }
}

TEST_CASE("sample_holder determinism and seed sensitivity") {
    Interval th0{-2.0, 2.0};
    GridFunction a = sample_holder(0.75, 1.0, th0, 256, 7);
    GridFunction b = sample_holder(0.75, 1.0, th0, 256, 7);
    GridFunction c = sample_holder(0.75, 1.0, th0, 256, 8);
    CHECK(sup_distance(a, b) == 0.0);
    CHECK(sup_distance(a, c) > 0.0);
}

TEST_CASE("sample_holder edge cases") {
    Interval th0{-1.0, 1.0};
    GridFunction flat = sample_holder(1.0, 0.0, th0, 64, 3);
    CHECK(flat.sup_norm() == doctest::Approx(0.0));
    CHECK_THROWS_AS(sample_holder(0.4, 1.0, th0, 64, 3), DomainError);
    CHECK_THROWS_AS(sample_holder(2.5, 1.0, th0, 64, 3), DomainError);
    CHECK_THROWS_AS(sample_holder(1.0, -1.0, th0, 64, 3), DomainError);
    CHECK_THROWS_AS(sample_holder(1.0, 1.0, Interval{1.0, 1.0}, 64, 3), ConfigError);
}

TEST_CASE("neighborhood membership") {
    GridFunction f0 = GridFunction::constant(32, 0.0);
    GridFunction f1 = GridFunction::constant(32, 0.05);
    CHECK(neighborhood_contains(f0, f1, 0.1));
    CHECK_FALSE(neighborhood_contains(f0, f1, 0.01));
}
