#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "expeq/experiments.hpp"

using namespace expeq;

TEST_CASE("glm simulation: shape, determinism, support") {
    ExpFamilyModel poi(Family::Poisson);
    GridFunction f = GridFunction::constant(200, 0.3);
    ExperimentSample a = simulate_glm(poi, f, 11);
    ExperimentSample b = simulate_glm(poi, f, 11);
    ExperimentSample c = simulate_glm(poi, f, 12);
    CHECK(a.n == 200);
    CHECK(a.kind == ExperimentKind::Glm);
    CHECK(a.data == b.data);
    CHECK(a.data != c.data);
    for (double x : a.data) {
        CHECK(x >= 0.0);
        CHECK(x == std::floor(x));
    }

    ExpFamilyModel ber(Family::Bernoulli);
    ExperimentSample d = simulate_glm(ber, GridFunction::constant(200, 0.0), 11);
    for (double x : d.data) CHECK((x == 0.0 || x == 1.0));
}

TEST_CASE("glm sample mean tracks b(f)") {
    ExpFamilyModel poi(Family::Poisson);
    GridFunction f = GridFunction::constant(200000, 0.5);
    ExperimentSample s = simulate_glm(poi, f, 21);
    double mean = 0.0;
    for (double x : s.data) mean += x;
    mean /= s.n;
    double b = poi.mean_param(0.5);
    double se = std::sqrt(poi.fisher_info(0.5) / s.n);
    CHECK(std::fabs(mean - b) <= 4.0 * se);
}

TEST_CASE("gaussian experiments: shape and noise scale") {
    ExpFamilyModel poi(Family::Poisson);
    GridFunction f0 = GridFunction::constant(100000, 0.0);
    GridFunction f = GridFunction::constant(100000, 0.2);
    ExperimentSample h = simulate_gauss_hetero(poi, f0, f, 5);
    CHECK(h.kind == ExperimentKind::GaussHetero);
    CHECK(h.f0.has_value());
    double mean = 0.0, var = 0.0;
    for (double y : h.data) mean += y;
    mean /= h.n;
    for (double y : h.data) var += (y - mean) * (y - mean);
    var /= h.n;
    // Noise variance is 1/I(f0) = 1/exp(0) = 1.
    CHECK(mean == doctest::Approx(0.2).epsilon(0.05));
    CHECK(var == doctest::Approx(1.0).epsilon(0.05));

    ExperimentSample v = simulate_gauss_vst(poi, f, 5);
    CHECK(v.kind == ExperimentKind::GaussVst);
    double vmean = 0.0;
    for (double y : v.data) vmean += y;
    vmean /= v.n;
    CHECK(vmean == doctest::Approx(poi.gamma_canonical(0.2)).epsilon(0.01));

    CHECK_THROWS_AS(simulate_gauss_hetero(poi, GridFunction::constant(10, 0.0), f, 5),
                    ShapeError);
}

TEST_CASE("glm log likelihood ratio vanishes at f = f0") {
    ExpFamilyModel ber(Family::Bernoulli);
    GridFunction f = GridFunction::constant(50, 0.4);
    ExperimentSample s = simulate_glm(ber, f, 3);
    CHECK(loglr_glm(ber, f, f, s.data).value == doctest::Approx(0.0));
}

TEST_CASE("single-coordinate glm LR matches the direct pmf ratio") {
    ExpFamilyModel poi(Family::Poisson);
    GridFunction f0 = GridFunction::constant(1, 0.0);
    GridFunction f = GridFunction::constant(1, 0.5);
    std::vector<double> data = {3.0};
    // log pmf(k; lam) = k log lam - lam - log k!
    auto logpmf = [](double k, double lam) {
        return k * std::log(lam) - lam - std::lgamma(k + 1.0);
    };
    double expected = logpmf(3.0, std::exp(0.5)) - logpmf(3.0, 1.0);
    CHECK(loglr_glm(poi, f, f0, data).value == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("gauss-mean glm LR coincides with the heteroscedastic gaussian LR") {
    ExpFamilyModel gm(Family::GaussMean);
    GridFunction f0 = GridFunction::from_callable(64, [](double t) { return 0.2 * t; });
    GridFunction f = GridFunction::from_callable(64, [](double t) { return 0.3 - 0.1 * t; });
    ExperimentSample s = simulate_glm(gm, f0, 9);
    double a = loglr_glm(gm, f, f0, s.data).value;
    double b = loglr_gauss_hetero(gm, f, f0, s.data).value;
    CHECK(a == doctest::Approx(b).epsilon(1e-12));
}

TEST_CASE("likelihood ratios integrate to one under f0") {
    ExpFamilyModel poi(Family::Poisson);
    GridFunction f0 = GridFunction::constant(16, 0.0);
    GridFunction f = GridFunction::constant(16, 0.3);
    const long reps = 100000;
    double sum = 0.0, sum2 = 0.0;
    for (long r = 0; r < reps; ++r) {
        ExperimentSample s = simulate_glm(poi, f0, 1000 + r);
        double lr = std::exp(loglr_glm(poi, f, f0, s.data).value);
        sum += lr;
        sum2 += lr * lr;
    }
    double mean = sum / reps;
    double se = std::sqrt(std::max(0.0, sum2 / reps - mean * mean) / reps);
    CHECK(std::fabs(mean - 1.0) <= 4.0 * se);
}

TEST_CASE("gauss-vst LR matches the explicit unit-variance formula") {
    ExpFamilyModel ber(Family::Bernoulli);
    GridFunction f0 = GridFunction::constant(8, -0.5);
    GridFunction f = GridFunction::constant(8, 0.5);
    ExperimentSample s = simulate_gauss_vst(ber, f0, 77);
    double expect = 0.0;
    double m = ber.gamma_canonical(0.5), m0 = ber.gamma_canonical(-0.5);
    for (double y : s.data) expect += (m - m0) * (y - 0.5 * (m + m0));
    CHECK(loglr_gauss_vst(ber, f, f0, s.data).value == doctest::Approx(expect));
}

TEST_CASE("taylor remainders of the cumulant") {
    // Gaussian-mean cumulant is exactly quadratic: R = 0, R0 = sum step^2/2.
    ExpFamilyModel gm(Family::GaussMean);
    GridFunction f0 = GridFunction::constant(10, 0.1);
    GridFunction g = GridFunction::constant(10, 1.0);
    TaylorRemainders tr = taylor_remainders(gm, f0, g, 0.2);
    CHECK(tr.r == doctest::Approx(0.0));
    CHECK(tr.r0 == doctest::Approx(10 * 0.5 * 0.2 * 0.2));

    // Poisson, one coordinate, step 0.01:
    // R0 = e^{0.01} - 1 - 0.01, R = R0 - 0.5 * 0.0001.
    ExpFamilyModel poi(Family::Poisson);
    GridFunction p0 = GridFunction::constant(1, 0.0);
    GridFunction pg = GridFunction::constant(1, 1.0);
    TaylorRemainders tp = taylor_remainders(poi, p0, pg, 0.01);
    double r0 = std::exp(0.01) - 1.0 - 0.01;
    CHECK(tp.r0 == doctest::Approx(r0).epsilon(1e-10));
    CHECK(tp.r == doctest::Approx(r0 - 5e-5).epsilon(1e-8));

    CHECK_THROWS_AS(taylor_remainders(poi, p0, GridFunction::constant(2, 0.0), 0.1),
                    ShapeError);
}

TEST_CASE("size mismatches throw") {
    ExpFamilyModel poi(Family::Poisson);
    GridFunction f = GridFunction::constant(4, 0.0);
    GridFunction g = GridFunction::constant(5, 0.0);
    std::vector<double> d4(4, 0.0);
    CHECK_THROWS_AS(loglr_glm(poi, f, g, d4), ShapeError);
    CHECK_THROWS_AS(loglr_gauss_hetero(poi, f, g, d4), ShapeError);
    CHECK_THROWS_AS(loglr_gauss_vst(poi, f, g, d4), ShapeError);
    std::vector<double> d3(3, 0.0);
    CHECK_THROWS_AS(loglr_glm(poi, f, f, d3), ShapeError);
}
