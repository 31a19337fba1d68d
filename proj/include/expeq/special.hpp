#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "expeq/errors.hpp"
#include "expeq/rng.hpp"

namespace expeq {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Inverse standard normal CDF (Acklam's rational approximation with one
// Halley refinement step against erfc).
inline double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("normal_quantile: p must be in (0,1)");
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;
    double x;
    if (p < plow) {
        double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - plow) {
        double q = p - 0.5, r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    // Halley step.
    double e = normal_cdf(x) - p;
    double u = e * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
    x = x - u / (1.0 + 0.5 * x * u);
    return x;
}

inline double normal_draw(Rng& rng) { return normal_quantile(rng.uniform()); }

inline double exponential_draw(Rng& rng, double rate) {
    return -std::log(rng.uniform()) / rate;
}

// Poisson sampler: sequential inversion for small means, PTRS rejection
// (Hormann 1993) above.
inline long poisson_draw(Rng& rng, double mean) {
    if (mean <= 0.0) throw DomainError("poisson_draw: mean must be positive");
    if (mean <= 10.0) {
        double p = std::exp(-mean), cdf = p, u = rng.uniform();
        long k = 0;
        while (u > cdf && k < 2000) {
            ++k;
            p *= mean / static_cast<double>(k);
            cdf += p;
        }
        return k;
    }
    const double smu = std::sqrt(mean);
    const double b = 0.931 + 2.53 * smu;
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double v_r = 0.9277 - 3.6224 / (b - 2.0);
    const double log_mu = std::log(mean);
    for (;;) {
        double u = rng.uniform() - 0.5;
        double v = rng.uniform();
        double us = 0.5 - std::fabs(u);
        double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
        if (us >= 0.07 && v <= v_r) return static_cast<long>(k);
        if (k < 0.0 || (us < 0.013 && v > us)) continue;
        if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
            k * log_mu - mean - std::lgamma(k + 1.0)) {
            return static_cast<long>(k);
        }
    }
}

// Quantile of a discrete law supported on {lo,...,hi}: starts a CDF scan at
// mode - (36 sd + 8) (the mass below is under 1e-280, the pmf there is still
// representable) with one log-pmf evaluation, then advances by pmf
// recurrences. Truncated at mode + 42 sd + 8; the tail beyond is below
// double precision.
template <class LogPmf, class Ratio>
inline long discrete_window_quantile(double u, long lo, long hi, long mode, double sd,
                                     LogPmf&& log_pmf, Ratio&& ratio) {
    if (!(u > 0.0 && u < 1.0)) throw DomainError("discrete quantile: u must be in (0,1)");
    long start = std::max(lo, mode - static_cast<long>(std::ceil(36.0 * sd)) - 8);
    long stop = hi;
    if (sd < static_cast<double>(std::numeric_limits<long>::max()) / 64.0)
        stop = std::min(hi, mode + static_cast<long>(std::ceil(42.0 * sd)) + 8);
    // Left tails of skewed counts can dip below the smallest double well
    // inside the 36-sd window (e.g. Poisson at k=0 has log-pmf -mean); move
    // the start up until the pmf is representable.
    double lp = log_pmf(start);
    long step = std::max<long>(1, static_cast<long>(sd));
    while (lp < -700.0 && start + step <= mode) {
        start += step;
        lp = log_pmf(start);
    }
    double pmf = std::exp(lp);
    double cdf = pmf;
    long k = start;
    while (cdf < u && k < stop) {
        pmf *= ratio(k);
        ++k;
        cdf += pmf;
    }
    return k;
}

inline long poisson_quantile_of(double mean, double u) {
    if (!(mean > 0.0)) throw DomainError("poisson_quantile_of: mean must be positive");
    long mode = static_cast<long>(std::floor(mean));
    return discrete_window_quantile(
        u, 0L, std::numeric_limits<long>::max(), mode, std::sqrt(mean),
        [mean](long k) {
            return static_cast<double>(k) * std::log(mean) - mean - std::lgamma(k + 1.0);
        },
        [mean](long k) { return mean / static_cast<double>(k + 1); });
}

inline long binomial_quantile_of(long n, double p, double u) {
    if (n == 0) return 0;
    if (p <= 0.0) return 0;
    if (p >= 1.0) return n;
    long mode = static_cast<long>(std::floor((n + 1) * p));
    mode = std::clamp(mode, 0L, n);
    double sd = std::sqrt(n * p * (1.0 - p));
    double lp = std::log(p), lq = std::log1p(-p);
    double odds = p / (1.0 - p);
    return discrete_window_quantile(
        u, 0L, n, mode, sd,
        [=](long k) {
            return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) -
                   std::lgamma(n - k + 1.0) + k * lp + (n - k) * lq;
        },
        [=](long k) {
            return odds * static_cast<double>(n - k) / static_cast<double>(k + 1);
        });
}

// Hypergeometric(N, K, n): number of marked items in a draw of n from a
// population of N containing K marked.
inline long hypergeometric_quantile_of(long N, long K, long n, double u) {
    long lo = std::max(0L, n + K - N);
    long hi = std::min(n, K);
    if (lo == hi) return lo;
    double mean = static_cast<double>(n) * K / N;
    double var = mean * (1.0 - static_cast<double>(K) / N) *
                 (static_cast<double>(N - n) / std::max<long>(N - 1, 1));
    long mode = std::clamp(static_cast<long>(std::floor(mean)), lo, hi);
    auto log_choose = [](long a, long b) {
        return std::lgamma(a + 1.0) - std::lgamma(b + 1.0) - std::lgamma(a - b + 1.0);
    };
    double denom = log_choose(N, n);
    return discrete_window_quantile(
        u, lo, hi, mode, std::sqrt(std::max(var, 1e-12)),
        [=](long k) {
            return log_choose(K, k) + log_choose(N - K, n - k) - denom;
        },
        [=](long k) {
            return (static_cast<double>(K - k) * static_cast<double>(n - k)) /
                   (static_cast<double>(k + 1) *
                    static_cast<double>(N - K - n + k + 1));
        });
}

}  // namespace expeq
