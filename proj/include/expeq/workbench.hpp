#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "expeq/coupling.hpp"
#include "expeq/errors.hpp"
#include "expeq/estimators.hpp"
#include "expeq/experiments.hpp"
#include "expeq/family.hpp"
#include "expeq/funcspace.hpp"
#include "expeq/metrics.hpp"

namespace expeq {

inline constexpr int kSchemaVersion = 1;

// Fixed-format floating point rendering so equal seeds give equal bytes.
inline std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", x);
    return buf;
}

struct RunConfig {
    std::string command;
    std::string family = "poisson";
    double beta = 0.75;
    double L = 1.0;
    double kappa0 = kDefaultKappa0;
    double kappa0_star = kDefaultKappa0Star;
    std::vector<std::size_t> n_list = {4096};
    long reps = 1000;
    std::uint64_t seed = 1;
    std::string out_dir = ".";
    std::string format = "csv";

    void validate() const {
        static const char* commands[] = {"families", "simulate", "distance-sweep",
                                         "vst-clt",  "coupling", "estimate",
                                         "transfer"};
        bool ok = false;
        for (const char* c : commands) ok = ok || command == c;
        if (!ok) throw ConfigError("unknown command: " + command);
        if (command != "families") family_from_name(family);  // throws on bad name
        if (!(beta > 0.5)) throw ConfigError("beta must be > 1/2");
        if (L < 0.0) throw ConfigError("L must be >= 0");
        if (!(kappa0 > 0.0 && kappa0_star > 0.0))
            throw ConfigError("kappa0 and kappa0-star must be positive");
        if (n_list.empty()) throw ConfigError("n-list must be nonempty");
        if (!std::is_sorted(n_list.begin(), n_list.end()))
            throw ConfigError("n-list must be sorted ascending");
        if (reps < 1) throw ConfigError("reps must be positive");
        if (format != "csv" && format != "json") throw ConfigError("format must be csv or json");
    }

    // FNV-1a over the canonical key=value rendering.
    std::uint64_t hash() const {
        std::ostringstream os;
        os << command << '|' << family << '|' << fmt(beta) << '|' << fmt(L) << '|'
           << fmt(kappa0) << '|' << fmt(kappa0_star) << '|';
        for (std::size_t n : n_list) os << n << ',';
        os << '|' << reps << '|' << seed;
        std::uint64_t h = 14695981039346656037ULL;
        for (char c : os.str()) {
            h ^= static_cast<unsigned char>(c);
            h *= 1099511628211ULL;
        }
        return h;
    }
};

// Flat key=value config file, one pair per line, '#' comments.
inline RunConfig parse_config_file(std::istream& in) {
    RunConfig cfg;
    std::string line;
    while (std::getline(in, line)) {
        auto hash_pos = line.find('#');
        if (hash_pos != std::string::npos) line.erase(hash_pos);
        auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            s.erase(0, s.find_first_not_of(" \t"));
            auto e = s.find_last_not_of(" \t");
            s.erase(e == std::string::npos ? 0 : e + 1);
            return s;
        };
        std::string key = trim(line.substr(0, eq)), val = trim(line.substr(eq + 1));
        if (key == "command") cfg.command = val;
        else if (key == "family") cfg.family = val;
        else if (key == "beta") cfg.beta = std::stod(val);
        else if (key == "L") cfg.L = std::stod(val);
        else if (key == "kappa0") cfg.kappa0 = std::stod(val);
        else if (key == "kappa0-star") cfg.kappa0_star = std::stod(val);
        else if (key == "reps") cfg.reps = std::stol(val);
        else if (key == "seed") cfg.seed = std::stoull(val);
        else if (key == "out") cfg.out_dir = val;
        else if (key == "format") cfg.format = val;
        else if (key == "n-list") {
            cfg.n_list.clear();
            std::istringstream ns(val);
            std::string tok;
            while (std::getline(ns, tok, ',')) cfg.n_list.push_back(std::stoul(tok));
        } else {
            throw ConfigError("unknown config key: " + key);
        }
    }
    cfg.validate();
    return cfg;
}

struct SweepRow {
    std::size_t n;
    double h2;
    double se;
    double theory_bound;  // LL1 rate expression, leading constant fitted
    double block_bound;   // subadditive sum of per-block MC h2
    double gamma_n;
    std::size_t m;
    std::size_t n_k;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    double theory_exponent;  // -(2beta-1)/(2beta+1)
    double slope_fit;        // log-log fitted slope of h2 vs n
    double slope_se;
};

// Couples the GLM likelihood ratio with the heteroscedastic Gaussian one on
// a common space and estimates the squared Hellinger distance between the
// two LR processes, per n, at a worst-case-style f = f0 + gamma_n * bump.
// Power-of-two grids use the dyadic block coupling (the per-coordinate
// transform leaves an O(gamma_n sqrt n) gap in the linear term, which would
// swamp the distance); other grids fall back to the per-coordinate scheme.
inline SweepResult run_distance_sweep(const RunConfig& cfg) {
    cfg.validate();
    ExpFamilyModel fam(family_from_name(cfg.family));
    SweepResult result;
    result.theory_exponent = -(2.0 * cfg.beta - 1.0) / (2.0 * cfg.beta + 1.0);

    Interval th0 = fam.theta0();
    Interval inner{th0.lo + 0.25 * th0.width(), th0.hi - 0.25 * th0.width()};

    // Hold one (f0, bump) pair fixed across the whole sweep: sample on the
    // finest grid and subsample, so the decay in n is not confounded by a
    // redrawn function at every size.
    std::size_t n_big = cfg.n_list.back();
    GridFunction f0_big = sample_holder(cfg.beta, cfg.L, inner, n_big, cfg.seed ^ 0xf0ULL);
    GridFunction bump_big = sample_holder(cfg.beta, cfg.L, Interval{-1.0, 1.0}, n_big,
                                          cfg.seed ^ 0xb1ULL);
    auto restrict_to = [&](const GridFunction& big, std::size_t n) {
        std::size_t stride = big.n / n;
        GridFunction g = GridFunction::constant(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) g.values[i] = big.values[(i + 1) * stride - 1];
        return g;
    };

    for (std::size_t n : cfg.n_list) {
        RateSet rs = rates(n, cfg.beta, cfg.kappa0, cfg.kappa0_star);
        // ParLE-style splitting invariants are enforced here for every n.
        if (!(rs.m >= 1 && rs.n_k >= 1)) throw NumericalError("sweep: empty splitting");
        bool nested = n_big % n == 0;
        GridFunction f0 = nested ? restrict_to(f0_big, n)
                                 : sample_holder(cfg.beta, cfg.L, inner, n,
                                                 cfg.seed ^ 0xf0ULL);
        GridFunction bump = nested ? restrict_to(bump_big, n)
                                   : sample_holder(cfg.beta, cfg.L, Interval{-1.0, 1.0},
                                                   n, cfg.seed ^ 0xb1ULL);
        double amp = bump.sup_norm();
        if (amp == 0.0) throw NumericalError("sweep: degenerate bump");
        GridFunction f = f0;
        for (std::size_t i = 0; i < n; ++i)
            f.values[i] += rs.gamma_n * bump.values[i] / amp;

        // Shared deterministic parts of the two log likelihood ratios:
        // l1 = sum d Ubar - quad - rem,  l2 = sum d N - quad, so their gap is
        // exactly sum d (Ubar - N) - sum rem. The quadratic-cumulant family
        // has rem identically zero; evaluating it in floats would leave a
        // rounding residue that breaks the exact null comparison.
        std::vector<double> info0(n), drift(n), quad(n), rem(n);
        for (std::size_t i = 0; i < n; ++i) {
            info0[i] = fam.fisher_info(f0.values[i]);
            drift[i] = f.values[i] - f0.values[i];
            quad[i] = 0.5 * drift[i] * drift[i] * info0[i];
            rem[i] = fam.family() == Family::GaussMean
                         ? 0.0
                         : fam.cumulant(f.values[i]) - fam.cumulant(f0.values[i]) -
                               drift[i] * fam.mean_param(f0.values[i]) - quad[i];
        }
        std::size_t m_blocks = rs.m;
        auto block_of = [&](std::size_t i) {
            // t_i = (i+1)/n falls in A_k = ((k-1)/m, k/m].
            std::size_t k = static_cast<std::size_t>(
                std::ceil(static_cast<double>((i + 1)) * m_blocks / n));
            return std::min(k, m_blocks) - 1;
        };

        const bool pow2 = (n & (n - 1)) == 0;
        std::optional<DyadicCoupler> coupler;
        if (pow2) coupler.emplace(fam, f0.values);
        long reps = cfg.reps;
        std::vector<double> tot_vals(reps);
        std::vector<std::vector<double>> blk_vals(reps);
#pragma omp parallel for schedule(dynamic)
        for (long r = 0; r < reps; ++r) {
            Rng rng = Rng::substream(cfg.seed + n, static_cast<std::uint64_t>(r));
            CouplingRun run = pow2 ? coupler->run(rng.next_u64())
                                   : quantile_couple(fam, f0.values, rng.next_u64());
            std::vector<double> l1(m_blocks, 0.0), l2(m_blocks, 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                std::size_t k = block_of(i);
                l1[k] += drift[i] * run.ubar[i] - quad[i] - rem[i];
                l2[k] += drift[i] * run.normals[i] - quad[i];
            }
            std::vector<double> bv(m_blocks);
            double t1 = 0.0, t2 = 0.0;
            for (std::size_t k = 0; k < m_blocks; ++k) {
                t1 += l1[k];
                t2 += l2[k];
                double d = std::exp(0.5 * l1[k]) - std::exp(0.5 * l2[k]);
                bv[k] = 0.5 * d * d;
            }
            double d = std::exp(0.5 * t1) - std::exp(0.5 * t2);
            tot_vals[r] = 0.5 * d * d;
            blk_vals[r] = std::move(bv);
        }
        // Mean and jackknife SE over 50 blocks of replications.
        const int jb = 50;
        std::vector<double> bsum(jb, 0.0);
        std::vector<long> bcnt(jb, 0);
        double total = 0.0;
        for (long r = 0; r < reps; ++r) {
            bsum[r % jb] += tot_vals[r];
            bcnt[r % jb] += 1;
            total += tot_vals[r];
        }
        double h2 = total / reps;
        double jmean = 0.0;
        std::vector<double> loo(jb);
        for (int b = 0; b < jb; ++b) {
            loo[b] = (total - bsum[b]) / (reps - bcnt[b]);
            jmean += loo[b];
        }
        jmean /= jb;
        double jvar = 0.0;
        for (int b = 0; b < jb; ++b) jvar += (loo[b] - jmean) * (loo[b] - jmean);
        double se = std::sqrt(jvar * (jb - 1) / jb);

        std::vector<double> blk_mean(m_blocks, 0.0);
        for (long r = 0; r < reps; ++r)
            for (std::size_t k = 0; k < m_blocks; ++k) blk_mean[k] += blk_vals[r][k];
        double block_bound = 0.0;
        for (std::size_t k = 0; k < m_blocks; ++k)
            block_bound += std::clamp(blk_mean[k] / reps, 0.0, 1.0);
        block_bound = std::min(1.0, block_bound);

        result.rows.push_back({n, h2, se, 0.0, block_bound, rs.gamma_n, rs.m, rs.n_k});
    }

    // Theory column: LL1 rate shape with the leading constant fitted to the
    // first positive observation.
    auto theory_shape = [&](std::size_t n) {
        double ln = std::log(static_cast<double>(n));
        return std::pow(static_cast<double>(n), result.theory_exponent) *
               std::pow(ln, (14.0 * cfg.beta + 5.0) / (2.0 * cfg.beta + 1.0));
    };
    double c_fit = 1.0;
    for (const auto& row : result.rows) {
        if (row.h2 > 0.0) {
            c_fit = row.h2 / theory_shape(row.n);
            break;
        }
    }
    for (auto& row : result.rows) row.theory_bound = c_fit * theory_shape(row.n);

    // Log-log slope over positive h2 rows.
    std::vector<double> xs, ys;
    for (const auto& row : result.rows)
        if (row.h2 > 0.0) {
            xs.push_back(std::log(static_cast<double>(row.n)));
            ys.push_back(std::log(row.h2));
        }
    if (xs.size() >= 2) {
        std::size_t k = xs.size();
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (std::size_t i = 0; i < k; ++i) {
            sx += xs[i];
            sy += ys[i];
            sxx += xs[i] * xs[i];
            sxy += xs[i] * ys[i];
        }
        result.slope_fit = (k * sxy - sx * sy) / (k * sxx - sx * sx);
        double ss = 0.0, mx = sx / k;
        for (std::size_t i = 0; i < k; ++i) {
            double e = ys[i] - (sy / k + result.slope_fit * (xs[i] - mx));
            ss += e * e;
        }
        double sxx_c = sxx - sx * sx / k;
        result.slope_se = k > 2 ? std::sqrt(ss / (k - 2) / sxx_c) : 0.0;
    } else {
        result.slope_fit = 0.0;
        result.slope_se = 0.0;
    }
    return result;
}

struct VstCltRow {
    double theta;
    double variance;
    double ks_distance;
};

// Samples sqrt(n)(F(S_n) - F(b(theta))) and reports its variance and the KS
// distance to the standard normal, on a 3-point Theta0 grid.
inline std::vector<VstCltRow> run_vst_clt(const ExpFamilyModel& fam, std::size_t n,
                                          long reps, std::uint64_t seed) {
    if (reps < 100) throw ConfigError("run_vst_clt: reps must be >= 100");
    std::vector<VstCltRow> rows;
    Interval th0 = fam.theta0();
    Interval lam = fam.lambda_domain();
    for (double theta : {th0.lo, th0.mid(), th0.hi}) {
        double center = fam.vst(fam.mean_param(theta));
        std::vector<double> t_stat(reps);
#pragma omp parallel for schedule(static)
        for (long r = 0; r < reps; ++r) {
            Rng rng = Rng::substream(seed ^ std::bit_cast<std::uint64_t>(theta),
                                     static_cast<std::uint64_t>(r));
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += fam.u_stat(fam.sample(theta, rng));
            s /= n;
            // Clamp the empirical mean into the open Lambda for F.
            double w = std::max(lam.hi - lam.lo, 1.0);
            double eps = std::isfinite(w) ? 1e-12 * w : 1e-12;
            s = std::clamp(s, lam.lo + eps, lam.hi - eps);
            t_stat[r] = std::sqrt(static_cast<double>(n)) * (fam.vst(s) - center);
        }
        double mean = 0.0, var = 0.0;
        for (double t : t_stat) mean += t;
        mean /= reps;
        for (double t : t_stat) var += (t - mean) * (t - mean);
        var /= (reps - 1);
        std::sort(t_stat.begin(), t_stat.end());
        double ks = 0.0;
        for (long r = 0; r < reps; ++r) {
            double phi = normal_cdf(t_stat[r]);
            ks = std::max(ks, std::fabs(phi - static_cast<double>(r) / reps));
            ks = std::max(ks, std::fabs(phi - static_cast<double>(r + 1) / reps));
        }
        rows.push_back({theta, var, ks});
    }
    return rows;
}

struct TransferReport {
    double mise_glm;
    double mise_vst;
    double ratio;     // mise_glm / mise_vst
    double ci_lo;
    double ci_hi;
    double ci_width;
};

// Compares the direct GLM estimator against the same smoother applied on
// the Gamma scale of the variance-stable Gaussian data, at matched n.
inline TransferReport run_transfer(const ExpFamilyModel& fam, double beta, double L,
                                   std::size_t n, long reps, std::uint64_t seed) {
    if (reps < 20) throw ConfigError("run_transfer: reps must be >= 20");
    KernelSpec kernel = KernelSpec::epanechnikov();
    RateSet rs = rates(n, beta, kDefaultKappa0, kDefaultKappa0Star);
    Interval th0 = fam.theta0();
    Interval inner{th0.lo + 0.1 * th0.width(), th0.hi - 0.1 * th0.width()};
    Interval lam0 = fam.lambda0();

    std::vector<double> ise_a(reps), ise_b(reps);
#pragma omp parallel for schedule(dynamic)
    for (long r = 0; r < reps; ++r) {
        Rng sub = Rng::substream(seed, static_cast<std::uint64_t>(r));
        std::uint64_t fseed = sub.next_u64();
        GridFunction f = sample_holder(beta, L, inner, n, fseed);

        ExperimentSample glm = simulate_glm(fam, f, sub.next_u64());
        EstimatorOutput out = estimate_from_sample(fam, glm, kernel, rs.delta_n);
        double a = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double d = out.f_star.values[i] - f.values[i];
            a += d * d;
        }
        ise_a[r] = a / n;

        ExperimentSample vst = simulate_gauss_vst(fam, f, sub.next_u64());
        double b = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            double t = static_cast<double>(j + 1) / n;
            double rho = design_density(kernel, n, rs.delta_n, t);
            double s = 0.0;
            long lo = std::max<long>(1, static_cast<long>(std::ceil((t - kernel.tau * rs.delta_n) * n)));
            long hi = std::min<long>(static_cast<long>(n),
                                     static_cast<long>(std::floor((t + kernel.tau * rs.delta_n) * n)));
            for (long i = lo; i <= hi; ++i)
                s += kernel((static_cast<double>(i) / n - t) / rs.delta_n) * vst.data[i - 1];
            double gamma_hat = s / (n * rs.delta_n * rho);
            // Back to the canonical scale through the Gamma range on Theta0.
            double y_lo = fam.vst(lam0.lo), y_hi = fam.vst(lam0.hi);
            gamma_hat = std::clamp(gamma_hat, std::min(y_lo, y_hi), std::max(y_lo, y_hi));
            double lam_hat = std::clamp(fam.vst_inverse(gamma_hat), lam0.lo, lam0.hi);
            double f_hat = fam.inverse_mean(lam_hat);
            double d = f_hat - f.values[j];
            b += d * d;
        }
        ise_b[r] = b / n;
    }
    double ma = 0.0, mb = 0.0;
    for (long r = 0; r < reps; ++r) {
        ma += ise_a[r];
        mb += ise_b[r];
    }
    ma /= reps;
    mb /= reps;
    // Jackknife CI for the ratio of means.
    std::vector<double> loo(reps);
    double jm = 0.0;
    for (long r = 0; r < reps; ++r) {
        double la = (ma * reps - ise_a[r]) / (reps - 1);
        double lb = (mb * reps - ise_b[r]) / (reps - 1);
        loo[r] = la / lb;
        jm += loo[r];
    }
    jm /= reps;
    double jv = 0.0;
    for (long r = 0; r < reps; ++r) jv += (loo[r] - jm) * (loo[r] - jm);
    double se = std::sqrt(jv * (reps - 1) / reps);
    double ratio = ma / mb;
    return {ma, mb, ratio, ratio - 1.96 * se, ratio + 1.96 * se, 2 * 1.96 * se};
}

// CSV catalogue of the built-in families: formulas plus probe values at the
// Theta0 midpoint.
inline std::string families_catalogue() {
    std::ostringstream os;
    os << "family,theta_lo,theta_hi,theta0_lo,theta0_hi,V,b,I,F,Gamma,"
          "theta_probe,V_probe,b_probe,I_probe,Gamma_probe\n";
    for (Family f : kAllFamilies) {
        ExpFamilyModel fam(f);
        auto fs = fam.formula_strings();
        double th = fam.theta0().mid();
        os << fam.name() << ',' << fmt(fam.theta_domain().lo) << ','
           << fmt(fam.theta_domain().hi) << ',' << fmt(fam.theta0().lo) << ','
           << fmt(fam.theta0().hi) << ',' << fs[0] << ',' << fs[1] << ',' << fs[2] << ','
           << fs[3] << ',' << fs[4] << ',' << fmt(th) << ',' << fmt(fam.cumulant(th))
           << ',' << fmt(fam.mean_param(th)) << ',' << fmt(fam.fisher_info(th)) << ','
           << fmt(fam.gamma_canonical(th)) << '\n';
    }
    return os.str();
}

inline std::string sweep_csv(const RunConfig& cfg, const SweepResult& result) {
    std::ostringstream os;
    os << "# schema_version=" << kSchemaVersion << " config_hash=" << cfg.hash()
       << " seed=" << cfg.seed << "\n";
    os << "n,h2,se,theory_bound,block_bound,gamma_n,m,n_k\n";
    for (const auto& row : result.rows)
        os << row.n << ',' << fmt(row.h2) << ',' << fmt(row.se) << ','
           << fmt(row.theory_bound) << ',' << fmt(row.block_bound) << ','
           << fmt(row.gamma_n) << ',' << row.m << ',' << row.n_k << '\n';
    os << "# slope_fit=" << fmt(result.slope_fit) << " slope_se=" << fmt(result.slope_se)
       << " theory_exponent=" << fmt(result.theory_exponent) << "\n";
    return os.str();
}

inline std::string sample_csv(const RunConfig& cfg, const ExperimentSample& s) {
    std::ostringstream os;
    os << "# schema_version=" << kSchemaVersion << " config_hash=" << cfg.hash()
       << " seed=" << s.seed << " kind=" << kind_name(s.kind)
       << " family=" << family_name(s.family) << "\n";
    os << "i,t_i,x\n";
    for (std::size_t i = 0; i < s.n; ++i)
        os << (i + 1) << ',' << fmt(static_cast<double>(i + 1) / s.n) << ','
           << fmt(s.data[i]) << '\n';
    return os.str();
}

inline std::string grid_function_csv(const GridFunction& f) {
    std::ostringstream os;
    os << "# {\"n\":" << f.n << ",\"beta\":" << fmt(f.beta)
       << ",\"L\":" << fmt(f.holder_const) << "}\n";
    os << "i,t_i,value\n";
    for (std::size_t i = 0; i < f.n; ++i)
        os << (i + 1) << ',' << fmt(f.t(i)) << ',' << fmt(f.values[i]) << '\n';
    return os.str();
}

inline std::string tailfit_csv(const RunConfig& cfg, const TailFit& fit) {
    std::ostringstream os;
    os << "# schema_version=" << kSchemaVersion << " config_hash=" << cfg.hash()
       << " seed=" << cfg.seed << "\n";
    os << "x,survival,fitted\n";
    for (std::size_t i = 0; i < fit.x_grid.size(); ++i) {
        double fitted = fit.degenerate
                            ? 0.0
                            : fit.c1_fit * std::exp(-fit.c2_fit * fit.x_grid[i]);
        os << fmt(fit.x_grid[i]) << ',' << fmt(fit.survival[i]) << ',' << fmt(fitted)
           << '\n';
    }
    os << "# c1_fit=" << fmt(fit.c1_fit) << " c2_fit=" << fmt(fit.c2_fit)
       << " r2=" << fmt(fit.r2) << " degenerate=" << (fit.degenerate ? 1 : 0) << "\n";
    return os.str();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open output file: " + path);
    out << content;
}

}  // namespace expeq
