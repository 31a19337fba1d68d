#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "expeq/errors.hpp"
#include "expeq/rng.hpp"
#include "expeq/special.hpp"

namespace expeq {

enum class Family { GaussMean, GaussVar, Poisson, Bernoulli, Exponential };

inline const char* family_name(Family fam) {
    switch (fam) {
        case Family::GaussMean: return "gauss-mean";
        case Family::GaussVar: return "gauss-var";
        case Family::Poisson: return "poisson";
        case Family::Bernoulli: return "bernoulli";
        case Family::Exponential: return "exponential";
    }
    return "?";
}

inline Family family_from_name(const std::string& s) {
    if (s == "gauss-mean") return Family::GaussMean;
    if (s == "gauss-var") return Family::GaussVar;
    if (s == "poisson") return Family::Poisson;
    if (s == "bernoulli") return Family::Bernoulli;
    if (s == "exponential") return Family::Exponential;
    throw ConfigError("unknown family: " + s);
}

struct Interval {
    double lo;
    double hi;
    bool contains(double x) const { return x >= lo && x <= hi; }
    double mid() const { return 0.5 * (lo + hi); }
    double width() const { return hi - lo; }
};

struct RegularityReport {
    double i_min;  // inf of I over theta0
    double i_max;  // sup of I over the eps0-fattened theta0
};

struct MomentBoundReport {
    double estimate;  // sup over the theta grid of the MC mean of exp{t*Ubar}
    double bound;     // exp(t^2 I_max / 2)
    double se;        // MC standard error at the sup-attaining theta
    bool pass;        // estimate <= bound + 3*se
};

// One canonical univariate exponential family dP_theta = exp{theta U(x) - V(theta)} dmu.
// All maps are closed-form per family; the generic bisection in inverse_mean
// is the fallback used when no closed form is wired in.
class ExpFamilyModel {
  public:
    explicit ExpFamilyModel(Family fam) : fam_(fam) {
        switch (fam_) {
            case Family::GaussMean:
                theta_dom_ = {-kInf, kInf};
                lambda_dom_ = {-kInf, kInf};
                theta0_ = {-1.0, 1.0};
                break;
            case Family::GaussVar:
                theta_dom_ = {-kInf, 0.0};
                lambda_dom_ = {0.0, kInf};
                theta0_ = {-4.0, -0.25};
                break;
            case Family::Poisson:
                theta_dom_ = {-kInf, kInf};
                lambda_dom_ = {0.0, kInf};
                theta0_ = {-1.0, 1.0};
                break;
            case Family::Bernoulli:
                theta_dom_ = {-kInf, kInf};
                lambda_dom_ = {0.0, 1.0};
                theta0_ = {-2.0, 2.0};
                break;
            case Family::Exponential:
                theta_dom_ = {-kInf, 0.0};
                lambda_dom_ = {0.0, kInf};
                theta0_ = {-4.0, -0.5};
                break;
        }
    }

    Family family() const { return fam_; }
    const char* name() const { return family_name(fam_); }

    // Open canonical domain Theta (endpoints exclusive).
    const Interval& theta_domain() const { return theta_dom_; }
    // Open mean-parameter domain Lambda = b(Theta).
    const Interval& lambda_domain() const { return lambda_dom_; }
    // Default regular subinterval Theta_0.
    const Interval& theta0() const { return theta0_; }
    double eps0() const { return 0.1; }
    Interval lambda0() const { return {mean_param(theta0_.lo), mean_param(theta0_.hi)}; }

    bool theta_in_domain(double theta) const {
        return theta > theta_dom_.lo && theta < theta_dom_.hi && std::isfinite(theta);
    }
    bool lambda_in_domain(double lambda) const {
        return lambda > lambda_dom_.lo && lambda < lambda_dom_.hi && std::isfinite(lambda);
    }

    // Cumulant function V(theta).
    double cumulant(double theta) const {
        require_theta(theta);
        switch (fam_) {
            case Family::GaussMean: return 0.5 * theta * theta;
            case Family::GaussVar: return -0.5 * std::log(-theta / (2.0 * M_PI));
            case Family::Poisson: return std::exp(theta);
            case Family::Bernoulli: return theta > 0 ? theta + std::log1p(std::exp(-theta))
                                                     : std::log1p(std::exp(theta));
            case Family::Exponential: return -std::log(-theta);
        }
        return 0.0;
    }

    // Mean map b(theta) = V'(theta).
    double mean_param(double theta) const {
        require_theta(theta);
        switch (fam_) {
            case Family::GaussMean: return theta;
            case Family::GaussVar: return -0.5 / theta;
            case Family::Poisson: return std::exp(theta);
            case Family::Bernoulli: return 1.0 / (1.0 + std::exp(-theta));
            case Family::Exponential: return -1.0 / theta;
        }
        return 0.0;
    }

    // Fisher information I(theta) = V''(theta).
    double fisher_info(double theta) const {
        require_theta(theta);
        switch (fam_) {
            case Family::GaussMean: return 1.0;
            case Family::GaussVar: return 0.5 / (theta * theta);
            case Family::Poisson: return std::exp(theta);
            case Family::Bernoulli: {
                double p = mean_param(theta);
                return p * (1.0 - p);
            }
            case Family::Exponential: return 1.0 / (theta * theta);
        }
        return 0.0;
    }

    // Third cumulant V'''(theta).
    double third_cumulant(double theta) const {
        require_theta(theta);
        switch (fam_) {
            case Family::GaussMean: return 0.0;
            case Family::GaussVar: return -1.0 / (theta * theta * theta);
            case Family::Poisson: return std::exp(theta);
            case Family::Bernoulli: {
                double p = mean_param(theta);
                return p * (1.0 - p) * (1.0 - 2.0 * p);
            }
            case Family::Exponential: return -2.0 / (theta * theta * theta);
        }
        return 0.0;
    }

    // Inverse mean map a(lambda), b(a(lambda)) = lambda.
    double inverse_mean(double lambda) const {
        require_lambda(lambda);
        switch (fam_) {
            case Family::GaussMean: return lambda;
            case Family::GaussVar: return -0.5 / lambda;
            case Family::Poisson: return std::log(lambda);
            case Family::Bernoulli: return std::log(lambda / (1.0 - lambda));
            case Family::Exponential: return -1.0 / lambda;
        }
        return 0.0;
    }

    // Legendre transform T(lambda) = lambda*a(lambda) - V(a(lambda)),
    // the stationary value of lambda*theta - V(theta); T'(lambda) = a(lambda).
    double legendre(double lambda) const {
        double theta = inverse_mean(lambda);
        return lambda * theta - cumulant(theta);
    }

    // Variance-stabilizing transform F with F'(lambda) = sqrt(a'(lambda)).
    // Integration constants fixed so the usual closed forms hold exactly.
    double vst(double lambda) const {
        require_lambda(lambda);
        switch (fam_) {
            case Family::GaussMean: return lambda;
            case Family::GaussVar: return std::log(lambda) / std::sqrt(2.0);
            case Family::Poisson: return 2.0 * std::sqrt(lambda);
            case Family::Bernoulli: return 2.0 * std::asin(std::sqrt(lambda));
            case Family::Exponential: return std::log(lambda);
        }
        return 0.0;
    }

    // Inverse of the VST on its range.
    double vst_inverse(double y) const {
        switch (fam_) {
            case Family::GaussMean: return y;
            case Family::GaussVar: return std::exp(y * std::sqrt(2.0));
            case Family::Poisson:
                if (y < 0.0) throw DomainError("vst_inverse: y out of range");
                return 0.25 * y * y;
            case Family::Bernoulli: {
                if (y < 0.0 || y > M_PI) throw DomainError("vst_inverse: y out of range");
                double s = std::sin(0.5 * y);
                return s * s;
            }
            case Family::Exponential: return std::exp(y);
        }
        return 0.0;
    }

    // Canonical stabilizer Gamma = F o b, Gamma'(theta) = sqrt(I(theta)).
    double gamma_canonical(double theta) const { return vst(mean_param(theta)); }

    // Sufficient statistic U(x).
    double u_stat(double x) const {
        return fam_ == Family::GaussVar ? 0.5 * x * x : x;
    }

    // One draw X(theta) ~ P_theta.
    double sample(double theta, Rng& rng) const {
        require_theta(theta);
        switch (fam_) {
            case Family::GaussMean: return theta + normal_draw(rng);
            case Family::GaussVar: return std::sqrt(-1.0 / theta) * normal_draw(rng);
            case Family::Poisson:
                return static_cast<double>(poisson_draw(rng, std::exp(theta)));
            case Family::Bernoulli: return rng.uniform() < mean_param(theta) ? 1.0 : 0.0;
            case Family::Exponential: return exponential_draw(rng, -theta);
        }
        return 0.0;
    }

    // Generalized inverse CDF of P_theta.
    double quantile(double theta, double u) const {
        require_theta(theta);
        if (!(u > 0.0 && u < 1.0)) throw DomainError("quantile: u must be in (0,1)");
        switch (fam_) {
            case Family::GaussMean: return theta + normal_quantile(u);
            case Family::GaussVar: return std::sqrt(-1.0 / theta) * normal_quantile(u);
            case Family::Poisson:
                return static_cast<double>(poisson_quantile_of(std::exp(theta), u));
            case Family::Bernoulli: return u <= 1.0 - mean_param(theta) ? 0.0 : 1.0;
            case Family::Exponential: return -std::log1p(-u) / (-theta);
        }
        return 0.0;
    }

    // I_min over theta0 and I_max over the eps0-fattened theta0, by a dense
    // grid scan with step 1e-3 * |theta0| (endpoints included).
    RegularityReport check_regularity(const Interval& theta0, double eps0) const {
        if (!(eps0 > 0.0)) throw DomainError("check_regularity: eps0 must be positive");
        if (!(theta0.lo < theta0.hi)) throw DomainError("check_regularity: degenerate theta0");
        Interval fat{theta0.lo - eps0, theta0.hi + eps0};
        if (!(fat.lo > theta_dom_.lo && fat.hi < theta_dom_.hi))
            throw DomainError("check_regularity: fattened interval leaves Theta");
        const double step = 1e-3 * theta0.width();
        auto scan = [&](const Interval& iv, bool want_min) {
            double best = want_min ? kInf : -kInf;
            long nsteps = static_cast<long>(std::ceil(iv.width() / step));
            for (long k = 0; k <= nsteps; ++k) {
                double th = iv.lo + (iv.width() * k) / nsteps;
                double v = fisher_info(th);
                best = want_min ? std::min(best, v) : std::max(best, v);
            }
            return best;
        };
        return {scan(theta0, true), scan(fat, false)};
    }

    // Monte-Carlo probe of the sub-Gaussian bound
    // sup_theta E exp{t (U(X)-b(theta))} <= exp(t^2 I_max / 2), |t| <= eps0.
    MomentBoundReport moment_bound_check(const Interval& theta0, double eps0, double t,
                                         long reps, Rng& rng) const {
        if (std::fabs(t) > eps0) throw DomainError("moment_bound_check: |t| > eps0");
        if (reps < 100) throw ConfigError("moment_bound_check: reps must be >= 100");
        RegularityReport reg = check_regularity(theta0, eps0);
        double bound = std::exp(0.5 * t * t * reg.i_max);
        const int grid = 5;
        double sup = -kInf, sup_se = 0.0;
        for (int j = 0; j < grid; ++j) {
            double th = theta0.lo + theta0.width() * j / (grid - 1);
            double b = mean_param(th);
            double sum = 0.0, sum2 = 0.0;
            for (long r = 0; r < reps; ++r) {
                double e = std::exp(t * (u_stat(sample(th, rng)) - b));
                sum += e;
                sum2 += e * e;
            }
            double mean = sum / reps;
            double var = std::max(0.0, sum2 / reps - mean * mean);
            double se = std::sqrt(var / reps);
            if (mean > sup) {
                sup = mean;
                sup_se = se;
            }
        }
        return {sup, bound, sup_se, sup <= bound + 3.0 * sup_se};
    }

    // Formula strings for the exported catalogue.
    std::array<std::string, 5> formula_strings() const {
        switch (fam_) {
            case Family::GaussMean:
                return {"theta^2/2", "theta", "1", "lambda", "theta"};
            case Family::GaussVar:
                return {"-log(-theta/(2 pi))/2", "-1/(2 theta)", "1/(2 theta^2)",
                        "log(lambda)/sqrt(2)", "log(-1/(2 theta))/sqrt(2)"};
            case Family::Poisson:
                return {"exp(theta)", "exp(theta)", "exp(theta)", "2 sqrt(lambda)",
                        "2 exp(theta/2)"};
            case Family::Bernoulli:
                return {"log(1+exp(theta))", "1/(1+exp(-theta))",
                        "exp(theta)/(1+exp(theta))^2", "2 arcsin(sqrt(lambda))",
                        "2 arcsin(sqrt(1/(1+exp(-theta))))"};
            case Family::Exponential:
                return {"-log(-theta)", "-1/theta", "1/theta^2", "log(lambda)",
                        "-log(-theta)"};
        }
        return {};
    }

    // Bisection inverse of b for families without a wired closed form.
    double inverse_mean_bisect(double lambda, double lo, double hi) const {
        require_lambda(lambda);
        if (!(mean_param(lo) <= lambda && lambda <= mean_param(hi)))
            throw DomainError("inverse_mean_bisect: lambda outside b([lo,hi])");
        for (int it = 0; it < 200 && hi - lo > 1e-12 * (1.0 + std::fabs(lo)); ++it) {
            double mid = 0.5 * (lo + hi);
            (mean_param(mid) < lambda ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    }

    static constexpr double kInf = std::numeric_limits<double>::infinity();

  private:
    void require_theta(double theta) const {
        if (!theta_in_domain(theta))
            throw DomainError(std::string(name()) + ": theta outside Theta");
    }
    void require_lambda(double lambda) const {
        if (!lambda_in_domain(lambda))
            throw DomainError(std::string(name()) + ": lambda outside Lambda");
    }

    Family fam_;
    Interval theta_dom_;
    Interval lambda_dom_;
    Interval theta0_;
};

inline const std::array<Family, 5> kAllFamilies = {
    Family::GaussMean, Family::GaussVar, Family::Poisson, Family::Bernoulli,
    Family::Exponential};

}  // namespace expeq
