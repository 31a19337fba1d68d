#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "expeq/errors.hpp"
#include "expeq/family.hpp"
#include "expeq/rng.hpp"

namespace expeq {

// Real function on the uniform grid t_i = i/n, i = 1..n, with Holder metadata.
struct GridFunction {
    std::size_t n = 0;
    std::vector<double> values;  // values[i-1] = f(t_i)
    double beta = 1.0;
    double holder_const = 1.0;
    bool constant_fallback = false;  // set when the generator degenerated

    double t(std::size_t i) const { return static_cast<double>(i + 1) / n; }
    double operator[](std::size_t i) const { return values[i]; }
    double& operator[](std::size_t i) { return values[i]; }

    double sup_norm() const {
        double m = 0.0;
        for (double v : values) m = std::max(m, std::fabs(v));
        return m;
    }

    static GridFunction constant(std::size_t n, double c, double beta = 1.0,
                                 double L = 0.0) {
        GridFunction f;
        f.n = n;
        f.values.assign(n, c);
        f.beta = beta;
        f.holder_const = L;
        return f;
    }

    template <class Fn>
    static GridFunction from_callable(std::size_t n, Fn&& fn, double beta = 1.0,
                                      double L = 1.0) {
        GridFunction f;
        f.n = n;
        f.values.resize(n);
        f.beta = beta;
        f.holder_const = L;
        for (std::size_t i = 0; i < n; ++i) f.values[i] = fn(f.t(i));
        return f;
    }
};

inline GridFunction operator+(const GridFunction& a, const GridFunction& b) {
    if (a.n != b.n) throw ShapeError("grid size mismatch");
    GridFunction r = a;
    for (std::size_t i = 0; i < a.n; ++i) r.values[i] += b.values[i];
    return r;
}

inline GridFunction operator-(const GridFunction& a, const GridFunction& b) {
    if (a.n != b.n) throw ShapeError("grid size mismatch");
    GridFunction r = a;
    for (std::size_t i = 0; i < a.n; ++i) r.values[i] -= b.values[i];
    return r;
}

inline GridFunction operator*(double c, const GridFunction& a) {
    GridFunction r = a;
    for (double& v : r.values) v *= c;
    return r;
}

inline double sup_distance(const GridFunction& a, const GridFunction& b) {
    if (a.n != b.n) throw ShapeError("grid size mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < a.n; ++i)
        m = std::max(m, std::fabs(a.values[i] - b.values[i]));
    return m;
}

// Derived rate constants for sample size n and smoothness beta.
struct RateSet {
    std::size_t n;
    double beta;
    double kappa0;
    double kappa0_star;
    double gamma_n;     // kappa0 (n/log n)^{-beta/(2beta+1)}
    double delta_n;     // gamma_n^{1/beta}
    double gamma_star;  // kappa0* (n/log n)^{-1/2}
    std::size_t m;      // floor(1/delta_n), number of subintervals
    std::size_t n_k;    // max points per subinterval, ceil(n/m)
};

inline RateSet rates(std::size_t n, double beta, double kappa0, double kappa0_star) {
    if (n < 8) throw DomainError("rates: n must be >= 8");
    if (!(beta > 0.5)) throw DomainError("rates: beta must be > 1/2");
    if (!(kappa0 > 0.0 && kappa0_star > 0.0))
        throw DomainError("rates: kappa constants must be positive");
    RateSet r;
    r.n = n;
    r.beta = beta;
    r.kappa0 = kappa0;
    r.kappa0_star = kappa0_star;
    double nl = static_cast<double>(n) / std::log(static_cast<double>(n));
    r.gamma_n = kappa0 * std::pow(nl, -beta / (2.0 * beta + 1.0));
    r.delta_n = std::pow(r.gamma_n, 1.0 / beta);
    r.gamma_star = kappa0_star * std::pow(nl, -0.5);
    r.m = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(1.0 / r.delta_n)));
    r.n_k = (n + r.m - 1) / r.m;
    return r;
}

inline constexpr double kDefaultKappa0 = 1.0;
inline constexpr double kDefaultKappa0Star = 4.0;

// Empirical Holder seminorm on the grid: finite differences of order
// floor(beta), max quotient over grid pairs (subsampled above 2048 points).
inline double holder_quotient(const GridFunction& f, double beta) {
    if (f.n < 4) throw DomainError("holder_quotient: need n >= 4");
    int m = beta > 1.0 ? 1 : 0;
    double alpha = beta - m;
    std::vector<double> d;
    if (m == 0) {
        d = f.values;
    } else {
        d.resize(f.n - 1);
        for (std::size_t i = 0; i + 1 < f.n; ++i)
            d[i] = (f.values[i + 1] - f.values[i]) * f.n;
    }
    std::size_t nd = d.size();
    std::size_t stride = 1;
    // Keep the pair scan at about 10^6 pairs.
    while ((nd / stride) * (nd / stride) > 2000000) ++stride;
    double q = 0.0;
    for (std::size_t i = 0; i < nd; i += stride) {
        for (std::size_t j = i + 1; j < nd; j += stride) {
            double dist = static_cast<double>(j - i) / f.n;
            q = std::max(q, std::fabs(d[j] - d[i]) / std::pow(dist, alpha));
        }
    }
    return q;
}

// Random member of Sigma = L(theta0) ^ H(beta, L): truncated cosine series
// recentred at mid(theta0), rescaled so the empirical quotient is <= L and
// the range fits theta0 with a 5% margin. Deterministic in the seed.
inline GridFunction sample_holder(double beta, double holder_const, Interval theta0,
                                  std::size_t n, std::uint64_t seed) {
    if (!(beta >= 0.5 && beta <= 2.0))
        throw DomainError("sample_holder: beta must be in [1/2, 2]");
    if (holder_const < 0.0) throw DomainError("sample_holder: L must be >= 0");
    if (!(theta0.lo < theta0.hi)) throw ConfigError("sample_holder: degenerate theta0");
    const double mid = theta0.mid();
    GridFunction f = GridFunction::constant(n, mid, beta, holder_const);
    if (holder_const == 0.0) return f;

    const int J = 64;
    Rng rng(seed);
    std::vector<double> xi(J);
    for (int j = 0; j < J; ++j) xi[j] = 2.0 * rng.uniform() - 1.0;

    GridFunction shape = GridFunction::from_callable(
        n,
        [&](double t) {
            double s = 0.0;
            for (int j = 1; j <= J; ++j)
                s += xi[j - 1] * std::pow(static_cast<double>(j), -(beta + 0.5)) *
                     std::cos(j * M_PI * t);
            return s;
        },
        beta, holder_const);

    double q = holder_quotient(shape, beta);
    double amp = shape.sup_norm();
    double margin = 0.05 * theta0.width();
    double half_range = 0.5 * theta0.width() - margin;
    if (half_range <= 0.0) {
        f.constant_fallback = true;
        return f;
    }
    double c = ExpFamilyModel::kInf;
    if (q > 0.0) c = std::min(c, holder_const / q);
    if (amp > 0.0) c = std::min(c, half_range / amp);
    if (!std::isfinite(c)) {
        f.constant_fallback = true;
        return f;
    }
    for (std::size_t i = 0; i < n; ++i) f.values[i] = mid + c * shape.values[i];
    return f;
}

inline bool neighborhood_contains(const GridFunction& f0, const GridFunction& f,
                                  double gamma_n) {
    return sup_distance(f0, f) <= gamma_n;
}

}  // namespace expeq
