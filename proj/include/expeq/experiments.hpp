#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "expeq/errors.hpp"
#include "expeq/family.hpp"
#include "expeq/funcspace.hpp"
#include "expeq/rng.hpp"

namespace expeq {

enum class ExperimentKind { Glm, GaussHetero, GaussVst };

inline const char* kind_name(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::Glm: return "glm";
        case ExperimentKind::GaussHetero: return "gauss-hetero";
        case ExperimentKind::GaussVst: return "gauss-vst";
    }
    return "?";
}

// One realized observation vector with its provenance.
struct ExperimentSample {
    ExperimentKind kind;
    Family family;
    GridFunction f;
    std::optional<GridFunction> f0;  // noise center, GaussHetero only
    std::size_t n;
    std::uint64_t seed;
    std::vector<double> data;
};

struct LogLikelihoodRatio {
    ExperimentKind kind;
    double value;
};

// X_i ~ P_{f(t_i)}, independent.
inline ExperimentSample simulate_glm(const ExpFamilyModel& fam, const GridFunction& f,
                                     std::uint64_t seed) {
    ExperimentSample s{ExperimentKind::Glm, fam.family(), f, std::nullopt, f.n, seed, {}};
    s.data.resize(f.n);
    Rng rng(seed);
    for (std::size_t i = 0; i < f.n; ++i) s.data[i] = fam.sample(f.values[i], rng);
    return s;
}

// Y_i = f(t_i) + I(f0(t_i))^{-1/2} eps_i.
inline ExperimentSample simulate_gauss_hetero(const ExpFamilyModel& fam,
                                              const GridFunction& f0,
                                              const GridFunction& f, std::uint64_t seed) {
    if (f.n != f0.n) throw ShapeError("simulate_gauss_hetero: grid mismatch");
    ExperimentSample s{ExperimentKind::GaussHetero, fam.family(), f, f0, f.n, seed, {}};
    s.data.resize(f.n);
    Rng rng(seed);
    for (std::size_t i = 0; i < f.n; ++i) {
        double sig = 1.0 / std::sqrt(fam.fisher_info(f0.values[i]));
        s.data[i] = f.values[i] + sig * normal_draw(rng);
    }
    return s;
}

// Yhat_i = Gamma(f(t_i)) + eps_i, unit variance.
inline ExperimentSample simulate_gauss_vst(const ExpFamilyModel& fam,
                                           const GridFunction& f, std::uint64_t seed) {
    ExperimentSample s{ExperimentKind::GaussVst, fam.family(), f, std::nullopt, f.n, seed, {}};
    s.data.resize(f.n);
    Rng rng(seed);
    for (std::size_t i = 0; i < f.n; ++i)
        s.data[i] = fam.gamma_canonical(f.values[i]) + normal_draw(rng);
    return s;
}

// log dP^n_f/dP^n_{f0} evaluated at GLM data:
// sum (f - f0)(t_i) U(X_i) - sum (V(f(t_i)) - V(f0(t_i))).
inline LogLikelihoodRatio loglr_glm(const ExpFamilyModel& fam, const GridFunction& f,
                                    const GridFunction& f0,
                                    const std::vector<double>& data) {
    if (f.n != f0.n || data.size() != f.n) throw ShapeError("loglr_glm: size mismatch");
    double v = 0.0;
    for (std::size_t i = 0; i < f.n; ++i) {
        v += (f.values[i] - f0.values[i]) * fam.u_stat(data[i]);
        v -= fam.cumulant(f.values[i]) - fam.cumulant(f0.values[i]);
    }
    return {ExperimentKind::Glm, v};
}

// Exact Gaussian LR for products with common noise I(f0(t_i))^{-1/2}.
inline LogLikelihoodRatio loglr_gauss_hetero(const ExpFamilyModel& fam,
                                             const GridFunction& f, const GridFunction& f0,
                                             const std::vector<double>& data) {
    if (f.n != f0.n || data.size() != f.n)
        throw ShapeError("loglr_gauss_hetero: size mismatch");
    double v = 0.0;
    for (std::size_t i = 0; i < f.n; ++i) {
        double info = fam.fisher_info(f0.values[i]);
        double d = f.values[i] - f0.values[i];
        v += info * d * (data[i] - 0.5 * (f.values[i] + f0.values[i]));
    }
    return {ExperimentKind::GaussHetero, v};
}

// Unit-variance Gaussian LR with means Gamma(f(t_i)) vs Gamma(f0(t_i)).
inline LogLikelihoodRatio loglr_gauss_vst(const ExpFamilyModel& fam, const GridFunction& f,
                                          const GridFunction& f0,
                                          const std::vector<double>& data) {
    if (f.n != f0.n || data.size() != f.n)
        throw ShapeError("loglr_gauss_vst: size mismatch");
    double v = 0.0;
    for (std::size_t i = 0; i < f.n; ++i) {
        double m = fam.gamma_canonical(f.values[i]);
        double m0 = fam.gamma_canonical(f0.values[i]);
        v += (m - m0) * (data[i] - 0.5 * (m + m0));
    }
    return {ExperimentKind::GaussVst, v};
}

// Taylor remainders of the cumulant sums at f = f0 + gamma_star * g:
//   R  = sum V(f) - V(f0) - gs*g*V'(f0) - (gs*g)^2 V''(f0)/2
//   R0 = sum V(f) - V(f0) - gs*g*V'(f0)
struct TaylorRemainders {
    double r;
    double r0;
};

inline TaylorRemainders taylor_remainders(const ExpFamilyModel& fam,
                                          const GridFunction& f0, const GridFunction& g,
                                          double gamma_star) {
    if (f0.n != g.n) throw ShapeError("taylor_remainders: grid mismatch");
    double r = 0.0, r0 = 0.0;
    for (std::size_t i = 0; i < f0.n; ++i) {
        double step = gamma_star * g.values[i];
        double th0 = f0.values[i];
        double dv = fam.cumulant(th0 + step) - fam.cumulant(th0);
        double lin = step * fam.mean_param(th0);
        double quad = 0.5 * step * step * fam.fisher_info(th0);
        r0 += dv - lin;
        r += dv - lin - quad;
    }
    return {r, r0};
}

}  // namespace expeq
