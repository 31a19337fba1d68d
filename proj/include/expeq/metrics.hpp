#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "expeq/errors.hpp"
#include "expeq/funcspace.hpp"
#include "expeq/rng.hpp"

namespace expeq {

enum class HellingerMethod { ExactGaussian, ExactWhiteNoise, MonteCarlo };

struct HellingerEstimate {
    double h2;   // squared Hellinger distance, in [0,1]
    double se;   // MC standard error, 0 for exact methods
    long reps;   // replication count, 0 for exact methods
    HellingerMethod method;
    double bound = 0.0;  // linear upper bound where applicable
};

// Exact H^2 for products of univariate Gaussians sharing per-coordinate
// variances: 1 - exp(-1/8 sum (mu1-mu2)^2 / var).
inline HellingerEstimate hellinger_gaussian_products(const std::vector<double>& means1,
                                                     const std::vector<double>& means2,
                                                     const std::vector<double>& vars) {
    if (means1.size() != means2.size() || means1.size() != vars.size())
        throw ShapeError("hellinger_gaussian_products: size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < vars.size(); ++i) {
        if (!(vars[i] > 0.0))
            throw DomainError("hellinger_gaussian_products: variance must be positive");
        double d = means1[i] - means2[i];
        s += d * d / vars[i];
    }
    return {1.0 - std::exp(-s / 8.0), 0.0, 0, HellingerMethod::ExactGaussian, s / 8.0};
}

// Subadditive product bound: H^2(prod) <= sum of coordinate H^2, capped at 1.
inline double hellinger_bound_product(const std::vector<double>& coord_h2) {
    double s = 0.0;
    for (double h : coord_h2) {
        if (!(h >= 0.0 && h <= 1.0))
            throw DomainError("hellinger_bound_product: entries must be in [0,1]");
        s += h;
    }
    return std::min(1.0, s);
}

// Exact H^2 between white-noise drifts m1, m2 at noise level 1/sqrt(n):
// 1 - exp(-n/8 int (m1-m2)^2), trapezoid quadrature on the grid. The linear
// bound n/8 int (m1-m2)^2 is reported alongside.
inline HellingerEstimate hellinger_white_noise(const GridFunction& m1,
                                               const GridFunction& m2, std::size_t n) {
    if (m1.n != m2.n) throw ShapeError("hellinger_white_noise: grid mismatch");
    double integral = 0.0;
    for (std::size_t i = 0; i < m1.n; ++i) {
        double d = m1.values[i] - m2.values[i];
        double w = (i + 1 == m1.n) ? 0.5 : 1.0;  // trapezoid with f(0) ~ f(t_1)
        integral += w * d * d;
    }
    {
        double d0 = m1.values[0] - m2.values[0];
        integral += 0.5 * d0 * d0;
    }
    integral /= m1.n;
    double x = n * integral / 8.0;
    return {1.0 - std::exp(-x), 0.0, 0, HellingerMethod::ExactWhiteNoise, x};
}

// MC estimate of H^2 between two likelihood-ratio processes evaluated on the
// same realization under the common base measure:
//   h2 = 1/2 E (sqrt(L1) - sqrt(L2))^2
// with block-jackknife standard error over 50 blocks.
inline HellingerEstimate hellinger_mc(
    const std::function<std::pair<double, double>(Rng&)>& pair_sampler, long reps,
    std::uint64_t seed) {
    if (reps < 100) throw ConfigError("hellinger_mc: reps must be >= 100");
    const int blocks = 50;
    // Per-replication slots keep the reduction order fixed regardless of the
    // thread schedule.
    std::vector<double> vals(reps);
#pragma omp parallel for schedule(static)
    for (long r = 0; r < reps; ++r) {
        Rng rng = Rng::substream(seed, static_cast<std::uint64_t>(r));
        auto [l1, l2] = pair_sampler(rng);
        double d = std::exp(0.5 * l1) - std::exp(0.5 * l2);
        vals[r] = 0.5 * d * d;
    }
    std::vector<double> block_sum(blocks, 0.0);
    std::vector<long> block_cnt(blocks, 0);
    for (long r = 0; r < reps; ++r) {
        int b = static_cast<int>(r % blocks);
        block_sum[b] += vals[r];
        block_cnt[b] += 1;
    }
    double total = 0.0;
    long cnt = 0;
    for (int b = 0; b < blocks; ++b) {
        total += block_sum[b];
        cnt += block_cnt[b];
    }
    double h2 = total / cnt;
    // Jackknife over blocks.
    double jmean = 0.0;
    std::vector<double> loo(blocks);
    for (int b = 0; b < blocks; ++b) {
        loo[b] = (total - block_sum[b]) / (cnt - block_cnt[b]);
        jmean += loo[b];
    }
    jmean /= blocks;
    double jvar = 0.0;
    for (int b = 0; b < blocks; ++b) jvar += (loo[b] - jmean) * (loo[b] - jmean);
    double se = std::sqrt(jvar * (blocks - 1) / blocks);
    return {h2, se, reps, HellingerMethod::MonteCarlo};
}

// Deficiency upper bound from a sup-Hellinger value: Delta <= sqrt(2) h.
inline double deficiency_upper(double h_sup) {
    if (!(h_sup >= 0.0 && h_sup <= 1.0))
        throw DomainError("deficiency_upper: h must be in [0,1]");
    return std::sqrt(2.0) * h_sup;
}

}  // namespace expeq
