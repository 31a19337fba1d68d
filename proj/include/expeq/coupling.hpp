#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "expeq/errors.hpp"
#include "expeq/family.hpp"
#include "expeq/funcspace.hpp"
#include "expeq/rng.hpp"
#include "expeq/special.hpp"

namespace expeq {

enum class CouplingScheme { PerCoordinate, DyadicBlocks };

// Coupled arrays on a common probability space: centered sufficient
// statistics Ubar_i = U(Xtilde_i) - b(theta_i) and Gaussian partners
// N_i ~ N(0, I(theta_i)), built from the same normal draws.
struct CouplingRun {
    Family family;
    std::vector<double> theta;
    std::vector<double> x_tilde;
    std::vector<double> ubar;
    std::vector<double> normals;
    CouplingScheme scheme;
    std::uint64_t seed;
};

namespace detail {

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// Splits a Poisson block count T over the two halves of [lo,hi) by a
// quantile transform of the conditional Gaussian half-sum, recursing to
// singletons. lam and nrm are per-coordinate intensity and Gaussian values.
inline void poisson_split(const std::vector<double>& lam, const std::vector<double>& nrm,
                          std::size_t lo, std::size_t hi, long count,
                          std::vector<double>& out) {
    if (hi - lo == 1) {
        out[lo] = static_cast<double>(count);
        return;
    }
    std::size_t mid = lo + (hi - lo) / 2;
    double lam_l = 0.0, lam_r = 0.0, g_l = 0.0, g = 0.0;
    for (std::size_t i = lo; i < mid; ++i) {
        lam_l += lam[i];
        g_l += nrm[i];
    }
    for (std::size_t i = mid; i < hi; ++i) lam_r += lam[i];
    g = g_l;
    for (std::size_t i = mid; i < hi; ++i) g += nrm[i];
    double v = lam_l + lam_r;
    long left = 0;
    if (count > 0) {
        // G_l - (V_l/V) G is independent of G with variance V_l V_r / V.
        double cond_sd = std::sqrt(lam_l * lam_r / v);
        double z = (g_l - (lam_l / v) * g) / cond_sd;
        double u = std::clamp(normal_cdf(z), 1e-16, 1.0 - 1e-16);
        left = binomial_quantile_of(count, lam_l / v, u);
    }
    poisson_split(lam, nrm, lo, mid, left, out);
    poisson_split(lam, nrm, mid, hi, count - left, out);
}

// Same scheme for Bernoulli, where block sums of independent Bernoulli(p_i)
// with heterogeneous p_i are Poisson-binomial. The pmf of every dyadic
// block is precomputed once per theta (heap-indexed convolution tree, node 1
// the root, children 2k and 2k+1), so repeated couplings pay only for the
// conditional quantile scans.
inline std::vector<std::vector<double>> pb_tree(const std::vector<double>& p) {
    std::size_t n = p.size();
    std::vector<std::vector<double>> tree(2 * n);
    for (std::size_t i = 0; i < n; ++i) tree[n + i] = {1.0 - p[i], p[i]};
    for (std::size_t node = n - 1; node >= 1; --node) {
        const auto& l = tree[2 * node];
        const auto& r = tree[2 * node + 1];
        std::vector<double> c(l.size() + r.size() - 1, 0.0);
        for (std::size_t a = 0; a < l.size(); ++a)
            for (std::size_t b = 0; b < r.size(); ++b) c[a + b] += l[a] * r[b];
        tree[node] = std::move(c);
    }
    return tree;
}

// Splits a Poisson-binomial block count over the two halves of [lo,hi) by
// the exact conditional law P(L=k | T=t) ~ pmf_left(k) pmf_right(t-k),
// sampled through the quantile of the conditional Gaussian half-sum.
inline void bernoulli_split(const std::vector<std::vector<double>>& tree,
                            const std::vector<double>& info, const std::vector<double>& nrm,
                            std::size_t node, std::size_t lo, std::size_t hi, long count,
                            std::vector<double>& out) {
    if (hi - lo == 1) {
        out[lo] = static_cast<double>(count);
        return;
    }
    std::size_t mid = lo + (hi - lo) / 2;
    const auto& pl = tree[2 * node];
    const auto& pr = tree[2 * node + 1];
    long klo = std::max<long>(0, count - static_cast<long>(hi - mid));
    long khi = std::min<long>(static_cast<long>(mid - lo), count);
    long left = klo;
    if (klo < khi) {
        double v_l = 0.0, g_l = 0.0, v = 0.0, g = 0.0;
        for (std::size_t i = lo; i < hi; ++i) {
            v += info[i];
            g += nrm[i];
            if (i < mid) {
                v_l += info[i];
                g_l += nrm[i];
            }
        }
        double cond_sd = std::sqrt(v_l * (v - v_l) / v);
        double z = (g_l - (v_l / v) * g) / cond_sd;
        double u = std::clamp(normal_cdf(z), 1e-16, 1.0 - 1e-16);
        double w_tot = 0.0;
        for (long k = klo; k <= khi; ++k) w_tot += pl[k] * pr[count - k];
        double target = u * w_tot, cum = 0.0;
        for (left = klo; left < khi; ++left) {
            cum += pl[left] * pr[count - left];
            if (cum >= target) break;
        }
    }
    bernoulli_split(tree, info, nrm, 2 * node, lo, mid, left, out);
    bernoulli_split(tree, info, nrm, 2 * node + 1, mid, hi, count - left, out);
}

}  // namespace detail

// Per-coordinate quantile coupling: N_i = sqrt(I(theta_i)) eps_i and
// Xtilde_i = Q_{theta_i}(Phi(eps_i)), so Xtilde_i is a monotone function of
// N_i with exact marginals. For the Gaussian-mean family the transform is
// the identity and Ubar_i = N_i exactly.
inline CouplingRun quantile_couple(const ExpFamilyModel& fam,
                                   const std::vector<double>& theta, std::uint64_t seed) {
    std::size_t n = theta.size();
    CouplingRun run{fam.family(), theta, std::vector<double>(n), std::vector<double>(n),
                    std::vector<double>(n), CouplingScheme::PerCoordinate, seed};
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        if (!fam.theta0().contains(theta[i]))
            throw DomainError("quantile_couple: theta outside Theta0");
        double eps = normal_draw(rng);
        run.normals[i] = std::sqrt(fam.fisher_info(theta[i])) * eps;
        if (fam.family() == Family::GaussMean) {
            // Identity coupling; Ubar is eps itself, not (theta+eps)-theta,
            // so that S_n(f) vanishes exactly rather than to rounding.
            run.x_tilde[i] = theta[i] + eps;
            run.ubar[i] = eps;
        } else {
            double u = std::clamp(normal_cdf(eps), 1e-16, 1.0 - 1e-16);
            double x = fam.quantile(theta[i], u);
            run.x_tilde[i] = x;
            run.ubar[i] = fam.u_stat(x) - fam.mean_param(theta[i]);
        }
    }
    return run;
}

// Dyadic block coupling: Gaussian partners are drawn first; block sums of
// the counts are matched to the Gaussian block sums by quantile transforms
// of the standardized totals, refining dyadically down to singletons.
// Exact marginals for Poisson and Bernoulli at any theta; Gaussian-mean
// reduces to the identity; the remaining continuous families fall back to
// per-coordinate quantile coupling. The per-theta precomputation (the
// Bernoulli Poisson-binomial pmf tree is O(n^2)) is paid once in the
// constructor, so repeated couplings at the same theta only pay run().
class DyadicCoupler {
  public:
    DyadicCoupler(const ExpFamilyModel& fam, std::vector<double> theta)
        : fam_(fam), theta_(std::move(theta)) {
        std::size_t n = theta_.size();
        if (!detail::is_power_of_two(n))
            throw ConfigError("dyadic_couple: n must be a power of two");
        for (double th : theta_)
            if (!fam_.theta0().contains(th))
                throw DomainError("dyadic_couple: theta outside Theta0");
        if (fam_.family() == Family::GaussMean || fam_.family() == Family::GaussVar ||
            fam_.family() == Family::Exponential)
            return;
        info_.resize(n);
        for (std::size_t i = 0; i < n; ++i) info_[i] = fam_.fisher_info(theta_[i]);
        if (fam_.family() == Family::Poisson) {
            lam_.resize(n);
            lam_tot_ = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                lam_[i] = std::exp(theta_[i]);
                lam_tot_ += lam_[i];
            }
        } else {
            std::vector<double> p(n);
            for (std::size_t i = 0; i < n; ++i) p[i] = fam_.mean_param(theta_[i]);
            tree_ = detail::pb_tree(p);
            root_cdf_ = tree_[1];
            for (std::size_t k = 1; k < root_cdf_.size(); ++k)
                root_cdf_[k] += root_cdf_[k - 1];
        }
    }

    CouplingRun run(std::uint64_t seed) const {
        std::size_t n = theta_.size();
        if (fam_.family() == Family::GaussMean || fam_.family() == Family::GaussVar ||
            fam_.family() == Family::Exponential) {
            CouplingRun out = quantile_couple(fam_, theta_, seed);
            out.scheme = CouplingScheme::DyadicBlocks;
            return out;
        }
        CouplingRun out{fam_.family(), theta_, std::vector<double>(n),
                        std::vector<double>(n), std::vector<double>(n),
                        CouplingScheme::DyadicBlocks, seed};
        Rng rng(seed);
        double v_tot = 0.0, g_tot = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            out.normals[i] = std::sqrt(info_[i]) * normal_draw(rng);
            v_tot += info_[i];
            g_tot += out.normals[i];
        }
        double u_root =
            std::clamp(normal_cdf(g_tot / std::sqrt(v_tot)), 1e-16, 1.0 - 1e-16);
        if (fam_.family() == Family::Poisson) {
            long total = poisson_quantile_of(lam_tot_, u_root);
            detail::poisson_split(lam_, out.normals, 0, n, total, out.x_tilde);
        } else {
            long total = static_cast<long>(
                std::lower_bound(root_cdf_.begin(), root_cdf_.end(), u_root) -
                root_cdf_.begin());
            total = std::min<long>(total, static_cast<long>(n));
            detail::bernoulli_split(tree_, info_, out.normals, 1, 0, n, total,
                                    out.x_tilde);
        }
        for (std::size_t i = 0; i < n; ++i)
            out.ubar[i] = fam_.u_stat(out.x_tilde[i]) - fam_.mean_param(theta_[i]);
        return out;
    }

  private:
    ExpFamilyModel fam_;
    std::vector<double> theta_;
    std::vector<double> info_;
    std::vector<double> lam_;
    double lam_tot_ = 0.0;
    std::vector<std::vector<double>> tree_;
    std::vector<double> root_cdf_;
};

inline CouplingRun dyadic_couple(const ExpFamilyModel& fam, const std::vector<double>& theta,
                                 std::uint64_t seed) {
    return DyadicCoupler(fam, theta).run(seed);
}

// S_n(f) = sum f(t_i) (Ubar_i - N_i).
inline double s_n(const CouplingRun& run, const GridFunction& f) {
    if (f.n != run.ubar.size()) throw ShapeError("s_n: grid mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < f.n; ++i)
        s += f.values[i] * (run.ubar[i] - run.normals[i]);
    return s;
}

struct TailFit {
    std::vector<double> x_grid;
    std::vector<double> survival;  // P(max_f |S_n(f)| > x log^2 n)
    double c1_fit;
    double c2_fit;
    double r2;
    bool degenerate;  // survival identically zero (exact coupling)
    std::size_t n;
    long reps;
    std::size_t dict_size;
    CouplingScheme scheme;
};

// Fixed dictionary of Holder-(1/2, L) test functions with sup norm <= L/2.
inline std::vector<GridFunction> kmt_dictionary(std::size_t n, std::size_t dict_size,
                                                double L, std::uint64_t seed) {
    std::vector<GridFunction> dict;
    dict.reserve(dict_size);
    for (std::size_t j = 0; j < dict_size; ++j)
        dict.push_back(sample_holder(0.5, L, Interval{-L / 2.0, L / 2.0}, n,
                                     seed ^ (0x51ULL + j)));
    return dict;
}

// Empirical check of the coupling tail bound: runs the dyadic coupling,
// records max over the dictionary of |S_n(f)| and fits log survival against
// x on the grid {0.5, 1, ..., 5}.
inline TailFit kmt_tail_test(const ExpFamilyModel& fam, double theta0_value, std::size_t n,
                             std::size_t dict_size, long reps, std::uint64_t seed) {
    if (reps < 200) throw ConfigError("kmt_tail_test: reps must be >= 200");
    std::vector<GridFunction> dict = kmt_dictionary(n, dict_size, 1.0, seed);
    DyadicCoupler coupler(fam, std::vector<double>(n, theta0_value));
    std::vector<double> maxima(reps);
#pragma omp parallel for schedule(dynamic)
    for (long r = 0; r < reps; ++r) {
        Rng sub = Rng::substream(seed, static_cast<std::uint64_t>(r));
        CouplingRun run = coupler.run(sub.next_u64());
        double m = 0.0;
        for (const auto& f : dict) m = std::max(m, std::fabs(s_n(run, f)));
        maxima[r] = m;
    }
    double norm = std::log(static_cast<double>(n));
    norm *= norm;
    TailFit fit;
    fit.n = n;
    fit.reps = reps;
    fit.dict_size = dict_size;
    fit.scheme = CouplingScheme::DyadicBlocks;
    for (double x = 0.5; x <= 5.0 + 1e-9; x += 0.5) fit.x_grid.push_back(x);
    for (double x : fit.x_grid) {
        long cnt = 0;
        for (double m : maxima)
            if (m > x * norm) ++cnt;
        fit.survival.push_back(static_cast<double>(cnt) / reps);
    }
    // Log-linear fit over nonzero survival points.
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < fit.x_grid.size(); ++i) {
        if (fit.survival[i] > 0.0) {
            xs.push_back(fit.x_grid[i]);
            ys.push_back(std::log(fit.survival[i]));
        }
    }
    if (xs.size() < 2) {
        fit.degenerate = true;
        fit.c1_fit = 0.0;
        fit.c2_fit = std::numeric_limits<double>::infinity();
        fit.r2 = 1.0;
        return fit;
    }
    fit.degenerate = false;
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    std::size_t k = xs.size();
    for (std::size_t i = 0; i < k; ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
        syy += ys[i] * ys[i];
    }
    double slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
    double intercept = (sy - slope * sx) / k;
    fit.c2_fit = -slope;
    fit.c1_fit = std::exp(intercept);
    double ss_tot = syy - sy * sy / k;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        double e = ys[i] - (intercept + slope * xs[i]);
        ss_res += e * e;
    }
    fit.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    return fit;
}

// Fitted log-log growth exponent of the median max-dictionary |S_n(f)| over
// n_list. With `coupled` false the Gaussian partners are redrawn
// independently, which restores the sqrt(n) scale of independent sums.
inline double coupling_growth_exponent(const ExpFamilyModel& fam, double theta0_value,
                                       const std::vector<std::size_t>& n_list, long reps,
                                       std::uint64_t seed, bool coupled) {
    std::vector<double> log_n, log_med;
    for (std::size_t n : n_list) {
        std::vector<GridFunction> dict = kmt_dictionary(n, 16, 1.0, seed);
        DyadicCoupler coupler(fam, std::vector<double>(n, theta0_value));
        std::vector<double> theta(n, theta0_value);
        std::vector<double> maxima(reps);
#pragma omp parallel for schedule(dynamic)
        for (long r = 0; r < reps; ++r) {
            Rng sub = Rng::substream(seed + n, static_cast<std::uint64_t>(r));
            CouplingRun run = coupler.run(sub.next_u64());
            if (!coupled) {
                // Control: break the coupling by redrawing the partners.
                Rng rng2(sub.next_u64());
                for (std::size_t i = 0; i < n; ++i)
                    run.normals[i] =
                        std::sqrt(fam.fisher_info(theta[i])) * normal_draw(rng2);
            }
            double m = 0.0;
            for (const auto& f : dict) m = std::max(m, std::fabs(s_n(run, f)));
            maxima[r] = m;
        }
        std::nth_element(maxima.begin(), maxima.begin() + reps / 2, maxima.end());
        double med = maxima[reps / 2];
        if (med > 0.0) {
            log_n.push_back(std::log(static_cast<double>(n)));
            log_med.push_back(std::log(med));
        }
    }
    if (log_n.size() < 2) return 0.0;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t k = log_n.size();
    for (std::size_t i = 0; i < k; ++i) {
        sx += log_n[i];
        sy += log_med[i];
        sxx += log_n[i] * log_n[i];
        sxy += log_n[i] * log_med[i];
    }
    return (k * sxy - sx * sy) / (k * sxx - sx * sx);
}

// MC probe of the Cramer condition E exp{C0 |Ubar|} <= C1 over Theta0.
inline double cramer_probe(const ExpFamilyModel& fam, double theta, double c0, long reps,
                           std::uint64_t seed) {
    Rng rng(seed);
    double b = fam.mean_param(theta);
    double sum = 0.0;
    for (long r = 0; r < reps; ++r)
        sum += std::exp(c0 * std::fabs(fam.u_stat(fam.sample(theta, rng)) - b));
    return sum / reps;
}

}  // namespace expeq
