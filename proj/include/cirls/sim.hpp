#ifndef CIRLS_SIM_HPP
#define CIRLS_SIM_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "cirls/common.hpp"
#include "cirls/constraints.hpp"
#include "cirls/dof.hpp"
#include "cirls/family.hpp"
#include "cirls/fit.hpp"
#include "cirls/inference.hpp"
#include "cirls/rng.hpp"

namespace cirls {

enum class Dgm { nonneg_regression, nondecreasing_strata };

struct DgmConfig {
    Dgm dgm = Dgm::nonneg_regression;
    double gamma = 0.0; // feasibility: -1 infeasible .. 0 boundary .. 1 feasible
    int n = 500;
    int n_sim = 1000;
    std::uint64_t seed = 1;
    double noise_sd2 = 50.0; // DGM-1 noise variance
    double rho = 0.5;        // DGM-1 predictor correlation
    int inference_draws = 2000;
    int inference_burn_in = 500;
    int edf_sims = 200;
};

struct Dataset {
    Matrix X;
    Vector y;
    Vector true_beta;
    FamilySpec fam;
    ConstraintSet cs;
};

// DGM 1: two correlated standard-normal predictors, gaussian response with
// mean 5 + gamma x1 + x2 and variance noise_sd2; fitted with an intercept
// and the nonnegativity constraint beta_1 >= 0.
inline Dataset generate_dgm1(const DgmConfig &cfg, int replicate)
{
    CounterRng rng(CounterRng::derive(cfg.seed, {1, static_cast<std::uint64_t>(replicate)}));
    Dataset ds;
    ds.fam = FamilySpec::gaussian();
    ds.X.resize(cfg.n, 3);
    ds.y.resize(cfg.n);
    ds.true_beta.resize(3);
    ds.true_beta << 5.0, cfg.gamma, 1.0;
    const double noise_sd = std::sqrt(cfg.noise_sd2);
    const double mix = std::sqrt(1.0 - cfg.rho * cfg.rho);
    for (int i = 0; i < cfg.n; ++i) {
        double z1 = norm_ppf(rng.next_unit());
        double z2 = norm_ppf(rng.next_unit());
        double x1 = z1;
        double x2 = cfg.rho * z1 + mix * z2;
        double eps = noise_sd * norm_ppf(rng.next_unit());
        ds.X(i, 0) = 1.0;
        ds.X(i, 1) = x1;
        ds.X(i, 2) = x2;
        ds.y(i) = 5.0 + cfg.gamma * x1 + x2 + eps;
    }
    ds.cs = build_nonneg(3, {2});
    return ds;
}

// True strata means of DGM 2: a logistic ramp centred at the middle level.
// The printed -50 x argument collapses to a constant, so a centred form with
// steepness 5 is used; levels 1-2 sit near 0, level 3 at gamma/2, levels 4-5
// near gamma.
inline double dgm2_eta(double gamma, int level)
{
    return gamma / (1.0 + std::exp(-5.0 * (level - 3.0)));
}

// DGM 2: categorical predictor uniform on 5 levels, dummy-expanded without
// intercept, Poisson counts with rate exp(eta); fitted under nondecreasing
// difference constraints.
inline Dataset generate_dgm2(const DgmConfig &cfg, int replicate)
{
    CounterRng rng(CounterRng::derive(cfg.seed, {2, static_cast<std::uint64_t>(replicate)}));
    Dataset ds;
    ds.fam = FamilySpec::poisson();
    ds.X = Matrix::Zero(cfg.n, 5);
    ds.y.resize(cfg.n);
    ds.true_beta.resize(5);
    for (int j = 0; j < 5; ++j)
        ds.true_beta(j) = dgm2_eta(cfg.gamma, j + 1);
    for (int i = 0; i < cfg.n; ++i) {
        int level = static_cast<int>(rng.next_u64() % 5); // 0..4
        ds.X(i, level) = 1.0;
        double rate = std::exp(ds.true_beta(level));
        // Poisson by inversion (rates here are O(1)).
        double u = rng.next_unit();
        double prob = std::exp(-rate);
        double cum = prob;
        int k = 0;
        while (u > cum && k < 10000) {
            ++k;
            prob *= rate / k;
            cum += prob;
        }
        ds.y(i) = k;
    }
    ds.cs = build_monotone_increasing(5, 1, 5);
    return ds;
}

inline Dataset generate(const DgmConfig &cfg, int replicate)
{
    return cfg.dgm == Dgm::nonneg_regression ? generate_dgm1(cfg, replicate)
                                             : generate_dgm2(cfg, replicate);
}

struct VariantMetrics {
    Vector sq_bias;
    Vector se;
    Vector rmse;
    Vector rel_var_error;
    Vector coverage;
    Vector be_coverage;
    double mean_odf = 0.0;
};

struct SimMetrics {
    VariantMetrics constrained;
    VariantMetrics unconstrained;
    Vector rmse_delta;    // constrained - unconstrained
    Vector sq_bias_delta;
    Vector se_delta;
    double edf_median = 0.0;
    double edf_iqr = 0.0;
    int n_used = 0;
    int n_failed = 0;
};

// Bias / SE / RMSE / variance-ratio / coverage formulas of the study.
// Identity: rmse^2 = sq_bias + ((n_sim - 1)/n_sim) se^2.
inline VariantMetrics compute_metrics(const Matrix &estimates, const Matrix &variances,
                                      const Matrix &ci_low, const Matrix &ci_high,
                                      const Vector &truth)
{
    const int nsim = static_cast<int>(estimates.rows());
    const int p = static_cast<int>(estimates.cols());
    if (truth.size() != p || variances.cols() != p || ci_low.cols() != p || ci_high.cols() != p)
        fail(ErrorCode::DimensionMismatch, "metric inputs have inconsistent shapes");

    VariantMetrics m;
    m.sq_bias.resize(p);
    m.se.resize(p);
    m.rmse.resize(p);
    m.rel_var_error.resize(p);
    m.coverage.resize(p);
    m.be_coverage.resize(p);

    for (int j = 0; j < p; ++j) {
        double mean = estimates.col(j).mean();
        double bias = mean - truth(j);
        double ss = (estimates.col(j).array() - mean).square().sum();
        double se = nsim > 1 ? std::sqrt(ss / (nsim - 1.0)) : 0.0;
        double rmse = std::sqrt((estimates.col(j).array() - truth(j)).square().sum() / nsim);
        m.sq_bias(j) = bias * bias;
        m.se(j) = se;
        m.rmse(j) = rmse;
        double se2 = se * se;
        m.rel_var_error(j) = se2 > 0.0 ? variances.col(j).mean() / se2 : 0.0;
        int cov = 0, becov = 0;
        for (int i = 0; i < nsim; ++i) {
            if (ci_low(i, j) <= truth(j) && truth(j) <= ci_high(i, j))
                ++cov;
            if (ci_low(i, j) <= mean && mean <= ci_high(i, j))
                ++becov;
        }
        m.coverage(j) = static_cast<double>(cov) / nsim;
        m.be_coverage(j) = static_cast<double>(becov) / nsim;
    }
    return m;
}

// Full study at one gamma: constrained and unconstrained fits per replicate,
// TMVN-based inference for the constrained variant, Wald for the
// unconstrained one, odf/edf bookkeeping, then the aggregate metrics.
inline SimMetrics run_study(const DgmConfig &cfg)
{
    const int p = cfg.dgm == Dgm::nonneg_regression ? 3 : 5;
    Matrix est_c(cfg.n_sim, p), est_u(cfg.n_sim, p);
    Matrix var_c(cfg.n_sim, p), var_u(cfg.n_sim, p);
    Matrix lo_c(cfg.n_sim, p), hi_c(cfg.n_sim, p);
    Matrix lo_u(cfg.n_sim, p), hi_u(cfg.n_sim, p);
    std::vector<double> odfs, edfs;
    Vector truth;
    // Reported df follows the classical count, which includes the gaussian
    // dispersion parameter (so the unconstrained df is p + 1 for DGM 1).
    const double disp_df = cfg.dgm == Dgm::nonneg_regression ? 1.0 : 0.0;

    int used = 0, failed = 0;
    for (int rep = 0; rep < cfg.n_sim; ++rep) {
        Dataset ds = generate(cfg, rep);
        truth = ds.true_beta;
        try {
            ModelSpec spec;
            spec.X = ds.X;
            spec.y = ds.y;
            spec.fam = ds.fam;
            spec.cs = ds.cs;
            FitResult con = fit(spec);
            FitResult unc = unconstrained_fit(spec);

            TmvnSpec tmvn = build_tmvn(unc, ds.X, ds.fam, ds.cs);
            std::uint64_t inf_seed =
                CounterRng::derive(cfg.seed, {static_cast<std::uint64_t>(rep), 0x696e66ULL});
            CoefDraws draws = sample(tmvn, cfg.inference_draws, inf_seed, cfg.inference_burn_in);
            CoefSummary summary = summarize(draws, 0.95);

            // Unconstrained Wald intervals from phi* (X'W*X)^{-1}.
            Matrix info = ds.X.transpose() * unc.final_w.asDiagonal() * ds.X;
            Matrix V = unc.dispersion * info.llt().solve(Matrix::Identity(p, p));
            const double z975 = 1.959963984540054;

            est_c.row(used) = con.beta.transpose();
            est_u.row(used) = unc.beta.transpose();
            var_c.row(used) = summary.covariance.diagonal().transpose();
            lo_c.row(used) = summary.ci_low.transpose();
            hi_c.row(used) = summary.ci_high.transpose();
            for (int j = 0; j < p; ++j) {
                double sd = std::sqrt(V(j, j));
                var_u(used, j) = V(j, j);
                lo_u(used, j) = unc.beta(j) - z975 * sd;
                hi_u(used, j) = unc.beta(j) + z975 * sd;
            }
            odfs.push_back(observed_df(con) + disp_df);
            if (cfg.edf_sims >= 100) {
                std::uint64_t edf_seed =
                    CounterRng::derive(cfg.seed, {static_cast<std::uint64_t>(rep), 0x646fULL});
                edfs.push_back(expected_df(unc, ds.X, ds.cs, cfg.edf_sims, edf_seed).edf +
                               disp_df);
            }
            ++used;
        } catch (const Error &) {
            ++failed;
        }
    }
    if (failed > 0 && failed > cfg.n_sim / 100)
        fail(ErrorCode::InvalidData,
             std::to_string(failed) + " of " + std::to_string(cfg.n_sim) +
                 " replicates failed to fit (> 1%)");

    auto shrink = [&](Matrix &m) { m.conservativeResize(used, p); };
    shrink(est_c);
    shrink(est_u);
    shrink(var_c);
    shrink(var_u);
    shrink(lo_c);
    shrink(hi_c);
    shrink(lo_u);
    shrink(hi_u);

    SimMetrics out;
    out.n_used = used;
    out.n_failed = failed;
    out.constrained = compute_metrics(est_c, var_c, lo_c, hi_c, truth);
    out.unconstrained = compute_metrics(est_u, var_u, lo_u, hi_u, truth);
    out.rmse_delta = out.constrained.rmse - out.unconstrained.rmse;
    out.sq_bias_delta = out.constrained.sq_bias - out.unconstrained.sq_bias;
    out.se_delta = out.constrained.se - out.unconstrained.se;
    double odf_sum = 0.0;
    for (double v : odfs)
        odf_sum += v;
    out.constrained.mean_odf = odfs.empty() ? 0.0 : odf_sum / static_cast<double>(odfs.size());
    out.unconstrained.mean_odf = p + disp_df;

    if (!edfs.empty()) {
        std::sort(edfs.begin(), edfs.end());
        auto q = [&](double prob) {
            double h = (static_cast<double>(edfs.size()) - 1.0) * prob;
            std::size_t lo = static_cast<std::size_t>(std::floor(h));
            std::size_t hi = std::min(lo + 1, edfs.size() - 1);
            return edfs[lo] + (h - std::floor(h)) * (edfs[hi] - edfs[lo]);
        };
        out.edf_median = q(0.5);
        out.edf_iqr = q(0.75) - q(0.25);
    }
    return out;
}

} // namespace cirls

#endif
