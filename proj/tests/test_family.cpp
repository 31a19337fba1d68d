#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "expeq/family.hpp"

using namespace expeq;

namespace {

double central_diff(const std::function<double(double)>& f, double x, double h = 1e-5) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

}  // namespace

TEST_CASE("cumulant closed forms") {
    CHECK(ExpFamilyModel(Family::Poisson).cumulant(0.0) == doctest::Approx(1.0));
    CHECK(ExpFamilyModel(Family::GaussMean).cumulant(3.0) == doctest::Approx(4.5));
    CHECK(ExpFamilyModel(Family::Bernoulli).cumulant(0.0) ==
          doctest::Approx(std::log(2.0)));
}

TEST_CASE("mean map closed forms") {
    CHECK(ExpFamilyModel(Family::Poisson).mean_param(0.0) == doctest::Approx(1.0));
    CHECK(ExpFamilyModel(Family::Bernoulli).mean_param(0.0) == doctest::Approx(0.5));
    CHECK(ExpFamilyModel(Family::GaussVar).mean_param(-1.0) == doctest::Approx(0.5));
    CHECK(ExpFamilyModel(Family::Exponential).mean_param(-2.0) == doctest::Approx(0.5));
}

TEST_CASE("fisher information closed forms") {
    CHECK(ExpFamilyModel(Family::Poisson).fisher_info(0.0) == doctest::Approx(1.0));
    CHECK(ExpFamilyModel(Family::Bernoulli).fisher_info(0.0) == doctest::Approx(0.25));
    for (double th : {-2.0, 0.0, 0.7})
        CHECK(ExpFamilyModel(Family::GaussMean).fisher_info(th) == doctest::Approx(1.0));
}

TEST_CASE("inverse mean closed forms") {
    CHECK(ExpFamilyModel(Family::Poisson).inverse_mean(1.0) == doctest::Approx(0.0));
    CHECK(ExpFamilyModel(Family::Bernoulli).inverse_mean(0.5) == doctest::Approx(0.0));
    CHECK(ExpFamilyModel(Family::GaussVar).inverse_mean(0.5) == doctest::Approx(-1.0));
}

TEST_CASE("variance stabilizing transform closed forms") {
    CHECK(ExpFamilyModel(Family::Poisson).vst(4.0) == doctest::Approx(4.0));
    CHECK(ExpFamilyModel(Family::GaussVar).vst(1.0) == doctest::Approx(0.0));
    CHECK(ExpFamilyModel(Family::Bernoulli).vst(0.5) == doctest::Approx(M_PI / 2.0));
    CHECK(ExpFamilyModel(Family::Exponential).vst(1.0) == doctest::Approx(0.0));
}

TEST_CASE("canonical stabilizer closed forms") {
    CHECK(ExpFamilyModel(Family::Poisson).gamma_canonical(0.0) == doctest::Approx(2.0));
    CHECK(ExpFamilyModel(Family::Bernoulli).gamma_canonical(0.0) ==
          doctest::Approx(M_PI / 2.0));
    CHECK(ExpFamilyModel(Family::GaussMean).gamma_canonical(1.3) == doctest::Approx(1.3));
}

TEST_CASE("domain errors") {
    ExpFamilyModel gv(Family::GaussVar);
    CHECK_THROWS_AS(gv.cumulant(0.5), DomainError);
    CHECK_THROWS_AS(gv.mean_param(0.0), DomainError);
    CHECK_THROWS_AS(gv.inverse_mean(-1.0), DomainError);
    CHECK_THROWS_AS(ExpFamilyModel(Family::Bernoulli).inverse_mean(1.5), DomainError);
    CHECK_THROWS_AS(ExpFamilyModel(Family::Poisson).quantile(0.0, 0.0), DomainError);
}

TEST_CASE("a(b(theta)) round trip on a 100-point Theta0 grid") {
    for (Family fml : kAllFamilies) {
        ExpFamilyModel fam(fml);
        Interval th0 = fam.theta0();
        for (int j = 0; j < 100; ++j) {
            double th = th0.lo + th0.width() * j / 99.0;
            double back = fam.inverse_mean(fam.mean_param(th));
            CHECK(std::fabs(back - th) <= 1e-10 * (1.0 + std::fabs(th)));
        }
    }
}

TEST_CASE("derivative identities by central differences") {
    for (Family fml : kAllFamilies) {
        ExpFamilyModel fam(fml);
        Interval th0 = fam.theta0();
        for (int j = 0; j < 20; ++j) {
            double th = th0.lo + th0.width() * (j + 0.5) / 20.0;
            double info = fam.fisher_info(th);
            // b' = I
            double bp = central_diff([&](double x) { return fam.mean_param(x); }, th);
            CHECK(std::fabs(bp - info) <= 1e-6 * info);
            // Gamma' = sqrt(I)
            double gp = central_diff([&](double x) { return fam.gamma_canonical(x); }, th);
            CHECK(std::fabs(gp - std::sqrt(info)) <= 1e-6 * std::sqrt(info));
            // F'(b(theta)) = I^{-1/2}
            double lam = fam.mean_param(th);
            double fp = central_diff([&](double x) { return fam.vst(x); }, lam);
            CHECK(std::fabs(fp - 1.0 / std::sqrt(info)) <= 1e-6 / std::sqrt(info));
            // a'(lambda) = 1/I(a(lambda))
            double ap = central_diff([&](double x) { return fam.inverse_mean(x); }, lam);
            CHECK(std::fabs(ap * info - 1.0) <= 1e-6);
        }
    }
}

TEST_CASE("Legendre transform consistency: T' = a") {
    for (Family fml : kAllFamilies) {
        ExpFamilyModel fam(fml);
        Interval lam0 = fam.lambda0();
        for (int j = 1; j < 20; ++j) {
            double lam = lam0.lo + (lam0.hi - lam0.lo) * j / 20.0;
            double tp = central_diff([&](double x) { return fam.legendre(x); }, lam);
            CHECK(std::fabs(tp - fam.inverse_mean(lam)) <= 1e-5 * (1.0 + std::fabs(tp)));
        }
    }
}

TEST_CASE("sampler moments match the first three cumulants") {
    const long reps = 200000;
    for (Family fml : kAllFamilies) {
        ExpFamilyModel fam(fml);
        double th = fam.theta0().mid();
        Rng rng(99);
        double s1 = 0, s2 = 0, s3 = 0;
        std::vector<double> us(reps);
        for (long r = 0; r < reps; ++r) us[r] = fam.u_stat(fam.sample(th, rng));
        for (double u : us) s1 += u;
        double mean = s1 / reps;
        for (double u : us) {
            double d = u - mean;
            s2 += d * d;
            s3 += d * d * d;
        }
        double var = s2 / reps;
        double third = s3 / reps;
        double b = fam.mean_param(th), info = fam.fisher_info(th);
        double v3 = fam.third_cumulant(th);
        double se_mean = std::sqrt(info / reps);
        CHECK(std::fabs(mean - b) <= 4.0 * se_mean);
        // Rough SEs for the higher moments.
        double se_var = var * std::sqrt(8.0 / reps) + 4.0 * se_mean * se_mean;
        CHECK(std::fabs(var - info) <= 4.0 * se_var + 1e-3 * info);
        double se_third = 30.0 * std::pow(var, 1.5) / std::sqrt(static_cast<double>(reps));
        CHECK(std::fabs(third - v3) <= 4.0 * se_third + 1e-3);
    }
}

TEST_CASE("quantile examples and monotonicity") {
    CHECK(ExpFamilyModel(Family::GaussMean).quantile(0.0, 0.5) == doctest::Approx(0.0));
    CHECK(ExpFamilyModel(Family::Bernoulli).quantile(0.0, 0.3) == doctest::Approx(0.0));
    CHECK(ExpFamilyModel(Family::Exponential).quantile(-1.0, 1.0 - std::exp(-1.0)) ==
          doctest::Approx(1.0));
    ExpFamilyModel poi(Family::Poisson);
    double prev = -1.0;
    for (double u = 0.05; u < 1.0; u += 0.05) {
        double q = poi.quantile(0.5, u);
        CHECK(q >= prev);
        prev = q;
    }
}

TEST_CASE("check_regularity on monotone and flat information") {
    ExpFamilyModel poi(Family::Poisson);
    auto rep = poi.check_regularity({-1.0, 1.0}, 0.1);
    CHECK(rep.i_min == doctest::Approx(std::exp(-1.0)).epsilon(1e-6));
    CHECK(rep.i_max == doctest::Approx(std::exp(1.1)).epsilon(1e-6));

    ExpFamilyModel gm(Family::GaussMean);
    auto rep2 = gm.check_regularity({-3.0, 3.0}, 0.5);
    CHECK(rep2.i_min == doctest::Approx(1.0));
    CHECK(rep2.i_max == doctest::Approx(1.0));

    ExpFamilyModel ber(Family::Bernoulli);
    auto rep3 = ber.check_regularity({-2.0, 2.0}, 0.1);
    CHECK(rep3.i_max == doctest::Approx(0.25));
    CHECK(rep3.i_min == doctest::Approx(ber.fisher_info(2.0)).epsilon(1e-4));

    ExpFamilyModel gv(Family::GaussVar);
    CHECK_THROWS_AS(gv.check_regularity({-4.0, -0.25}, 0.5), DomainError);
}

TEST_CASE("moment bound probe") {
    Rng rng(7);
    ExpFamilyModel gm(Family::GaussMean);
    auto rep = gm.moment_bound_check({-1.0, 1.0}, 0.5, 0.5, 20000, rng);
    // The Gaussian MGF attains the bound exactly.
    CHECK(rep.bound == doctest::Approx(std::exp(0.125)));
    CHECK(rep.estimate == doctest::Approx(std::exp(0.125)).epsilon(0.02));
    CHECK(rep.pass);

    ExpFamilyModel ber(Family::Bernoulli);
    auto rep2 = ber.moment_bound_check({-1.0, 1.0}, 0.1, 0.0, 1000, rng);
    CHECK(rep2.estimate == doctest::Approx(1.0));
    CHECK(rep2.pass);

    ExpFamilyModel poi(Family::Poisson);
    auto rep3 = poi.moment_bound_check({-1.0, 1.0}, 0.1, 0.1, 20000, rng);
    CHECK(rep3.pass);
    CHECK_THROWS_AS(poi.moment_bound_check({-1.0, 1.0}, 0.1, 0.2, 1000, rng), DomainError);
}

TEST_CASE("fisher information positive wherever probed") {
    for (Family fml : kAllFamilies) {
        ExpFamilyModel fam(fml);
        Interval th0 = fam.theta0();
        for (int j = 0; j <= 50; ++j) {
            double th = th0.lo - fam.eps0() + (th0.width() + 2 * fam.eps0()) * j / 50.0;
            CHECK(fam.fisher_info(th) > 0.0);
        }
    }
}

// The mean map and information must be consistent derivatives of the
// cumulant for every family, including the negative-canonical-parameter
// exponential model where a literal reading of the source formulas fails.
TEST_CASE("internal consistency V' = b, V'' = I for all families") {
    for (Family fml : kAllFamilies) {
        ExpFamilyModel fam(fml);
        Interval th0 = fam.theta0();
        for (int j = 0; j < 10; ++j) {
            double th = th0.lo + th0.width() * (j + 0.5) / 10.0;
            double vp = central_diff([&](double x) { return fam.cumulant(x); }, th);
            CHECK(vp == doctest::Approx(fam.mean_param(th)).epsilon(1e-6));
            double vpp = (fam.cumulant(th + 1e-4) - 2 * fam.cumulant(th) +
                          fam.cumulant(th - 1e-4)) / 1e-8;
            CHECK(vpp == doctest::Approx(fam.fisher_info(th)).epsilon(1e-4));
        }
    }
}

TEST_CASE("bisection fallback for the inverse mean map") {
    ExpFamilyModel poi(Family::Poisson);
    double a = poi.inverse_mean_bisect(1.0, -3.0, 3.0);
    CHECK(a == doctest::Approx(0.0).epsilon(1e-9));
}
