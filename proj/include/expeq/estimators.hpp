#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "expeq/errors.hpp"
#include "expeq/experiments.hpp"
#include "expeq/family.hpp"
#include "expeq/funcspace.hpp"

namespace expeq {

// Bounded compactly supported kernel with unit integral (ES-style contract).
struct KernelSpec {
    double tau;     // support half-width
    double k_max;   // uniform bound
    double holder_beta;
    std::function<double(double)> evaluator;

    double operator()(double u) const { return evaluator(u); }

    // Validates the bound, the support and the unit integral (1e-8).
    void validate() const {
        const int q = 20001;
        double integral = 0.0;
        for (int i = 0; i < q; ++i) {
            double u = -tau + 2.0 * tau * i / (q - 1);
            double v = evaluator(u);
            if (v < 0.0 || v > k_max + 1e-12)
                throw InvariantError("kernel: value outside [0, k_max]");
            integral += v * (i == 0 || i + 1 == q ? 0.5 : 1.0);
        }
        integral *= 2.0 * tau / (q - 1);
        if (evaluator(1.01 * tau) != 0.0 || evaluator(-1.01 * tau) != 0.0)
            throw InvariantError("kernel: support exceeds (-tau, tau)");
        if (std::fabs(integral - 1.0) > 1e-8)
            throw InvariantError("kernel: integral over support is not 1");
    }

    static KernelSpec epanechnikov() {
        KernelSpec k;
        k.tau = 1.0;
        k.k_max = 0.75;
        k.holder_beta = 1.0;
        k.evaluator = [](double u) {
            return std::fabs(u) >= 1.0 ? 0.0 : 0.75 * (1.0 - u * u);
        };
        k.validate();
        return k;
    }
};

struct EstimatorOutput {
    GridFunction g_star;      // mean-scale Nadaraya-Watson estimate
    GridFunction g_starstar;  // truncated to Lambda0
    GridFunction f_star;      // canonical scale, a(g**)
    GridFunction rho;         // design density rho_n
    double bandwidth;         // delta_n
};

// rho_n(t) = (n delta_n)^{-1} sum K((t_i - t)/delta_n).
inline double design_density(const KernelSpec& kernel, std::size_t n, double delta_n,
                             double t) {
    if (!(t >= 0.0 && t <= 1.0)) throw DomainError("design_density: t must be in [0,1]");
    if (!(delta_n > 0.0 && delta_n < 1.0))
        throw DomainError("design_density: delta_n must be in (0,1)");
    double s = 0.0;
    long lo = static_cast<long>(std::ceil((t - kernel.tau * delta_n) * n));
    long hi = static_cast<long>(std::floor((t + kernel.tau * delta_n) * n));
    lo = std::max<long>(lo, 1);
    hi = std::min<long>(hi, static_cast<long>(n));
    for (long i = lo; i <= hi; ++i)
        s += kernel((static_cast<double>(i) / n - t) / delta_n);
    return s / (n * delta_n);
}

// g*_n(t) = (n delta_n rho_n(t))^{-1} sum K((t_i - t)/delta_n) U(X_i),
// evaluated at the grid points.
inline EstimatorOutput nadaraya_watson(const ExpFamilyModel& fam,
                                       const ExperimentSample& sample,
                                       const KernelSpec& kernel, double delta_n) {
    if (sample.kind != ExperimentKind::Glm)
        throw DomainError("nadaraya_watson: GLM sample required");
    if (!(delta_n > 0.0 && delta_n < 0.5))
        throw DomainError("nadaraya_watson: delta_n must be in (0, 1/2)");
    std::size_t n = sample.n;
    EstimatorOutput out;
    out.bandwidth = delta_n;
    out.g_star = GridFunction::constant(n, 0.0);
    out.rho = GridFunction::constant(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        double t = static_cast<double>(j + 1) / n;
        double rho = design_density(kernel, n, delta_n, t);
        if (rho < 1e-12) throw NumericalError("nadaraya_watson: vanishing design density");
        long lo = std::max<long>(1, static_cast<long>(std::ceil((t - kernel.tau * delta_n) * n)));
        long hi = std::min<long>(static_cast<long>(n),
                                 static_cast<long>(std::floor((t + kernel.tau * delta_n) * n)));
        double s = 0.0;
        for (long i = lo; i <= hi; ++i)
            s += kernel((static_cast<double>(i) / n - t) / delta_n) *
                 fam.u_stat(sample.data[i - 1]);
        out.rho.values[j] = rho;
        out.g_star.values[j] = s / (n * delta_n * rho);
    }
    return out;
}

// g** = clamp(g*, Lambda0); f* = a(g**) pointwise.
inline EstimatorOutput finalize_estimate(const ExpFamilyModel& fam, EstimatorOutput out,
                                         Interval lambda_range) {
    std::size_t n = out.g_star.n;
    out.g_starstar = out.g_star;
    out.f_star = GridFunction::constant(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        double g = std::clamp(out.g_star.values[j], lambda_range.lo, lambda_range.hi);
        out.g_starstar.values[j] = g;
        out.f_star.values[j] = fam.inverse_mean(g);
    }
    return out;
}

// Full pipeline at the rate-driven bandwidth.
inline EstimatorOutput estimate_from_sample(const ExpFamilyModel& fam,
                                            const ExperimentSample& sample,
                                            const KernelSpec& kernel, double delta_n) {
    EstimatorOutput out = nadaraya_watson(fam, sample, kernel, delta_n);
    return finalize_estimate(fam, std::move(out), fam.lambda0());
}

struct Es1Row {
    std::size_t n;
    long rep;
    double sup_error;  // sup |f* - f|
    double gamma_n;
    double ratio;      // sup_error / gamma_n
};

struct Es1Report {
    std::vector<Es1Row> rows;
    std::vector<double> c1_per_n;  // 95th percentile of the ratio, per n
    double fitted_c1;              // max over n
    double failure_rate;           // P(ratio > fitted_c1) over all rows
    bool stable;                   // max/min of per-n c1 <= 2
    bool pass;
};

// Sup-norm error experiment for the preliminary estimator: draws f in Sigma,
// simulates the GLM, runs the estimator and studies sup-error / gamma_n.
inline Es1Report es1_experiment(const ExpFamilyModel& fam, double beta, double L,
                                const std::vector<std::size_t>& n_list, long reps,
                                std::uint64_t seed) {
    if (reps < 20) throw ConfigError("es1_experiment: reps must be >= 20");
    if (!(beta > 0.5)) throw DomainError("es1_experiment: beta must be > 1/2");
    KernelSpec kernel = KernelSpec::epanechnikov();
    Es1Report report;
    // Keep f strictly inside Theta0 so the inverse map stays Lipschitz.
    Interval th0 = fam.theta0();
    double shrink = 0.1 * th0.width();
    Interval inner{th0.lo + shrink, th0.hi - shrink};
    for (std::size_t n : n_list) {
        RateSet rs = rates(n, beta, kDefaultKappa0, kDefaultKappa0Star);
        std::vector<double> ratios(reps);
#pragma omp parallel for schedule(dynamic)
        for (long r = 0; r < reps; ++r) {
            Rng sub = Rng::substream(seed + n, static_cast<std::uint64_t>(r));
            std::uint64_t fseed = sub.next_u64();
            GridFunction f = sample_holder(beta, L, inner, n, fseed);
            ExperimentSample sample = simulate_glm(fam, f, sub.next_u64());
            EstimatorOutput out = estimate_from_sample(fam, sample, kernel, rs.delta_n);
            ratios[r] = sup_distance(out.f_star, f) / rs.gamma_n;
        }
        for (long r = 0; r < reps; ++r)
            report.rows.push_back({n, r, ratios[r] * rs.gamma_n, rs.gamma_n, ratios[r]});
        std::vector<double> sorted = ratios;
        std::sort(sorted.begin(), sorted.end());
        std::size_t q95 = static_cast<std::size_t>(std::ceil(0.95 * reps)) - 1;
        report.c1_per_n.push_back(sorted[std::min(q95, sorted.size() - 1)]);
    }
    report.fitted_c1 = *std::max_element(report.c1_per_n.begin(), report.c1_per_n.end());
    double c1_min = *std::min_element(report.c1_per_n.begin(), report.c1_per_n.end());
    long fails = 0;
    for (const auto& row : report.rows)
        if (row.ratio > report.fitted_c1) ++fails;
    report.failure_rate = static_cast<double>(fails) / report.rows.size();
    report.stable = report.fitted_c1 <= 2.0 * c1_min;
    report.pass = report.stable && report.failure_rate <= 0.05;
    return report;
}

}  // namespace expeq
