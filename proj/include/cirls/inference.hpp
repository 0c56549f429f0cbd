#ifndef CIRLS_INFERENCE_HPP
#define CIRLS_INFERENCE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "cirls/common.hpp"
#include "cirls/constraints.hpp"
#include "cirls/fit.hpp"
#include "cirls/rng.hpp"

namespace cirls {

// Truncated multivariate normal for the augmented coefficient vector
// D beta: mean D beta*, covariance phi* D (X'W*X)^{-1} D', box bounds from
// the constraints padded with +/-inf on the null-space rows.
struct TmvnSpec {
    Vector theta;
    Matrix Sigma;
    Vector l_aug;
    Vector u_aug;
    Matrix D;
    int m = 0;
};

struct SamplerDiagnostics {
    int burn_in = 500;
    int thinning = 1;
    std::string acceptance_note;
};

struct CoefDraws {
    Matrix draws; // n_draws x p, beta-space
    std::uint64_t seed = 0;
    int n_draws = 0;
    SamplerDiagnostics diagnostics;
};

struct CoefSummary {
    Vector mean;
    Vector sd;
    Vector ci_low;
    Vector ci_high;
    Matrix covariance;
    double level = 0.95;
};

inline TmvnSpec build_tmvn(const FitResult &fit_unc, const Matrix &X,
                           const FamilySpec & /*fam*/, const ConstraintSet &cs)
{
    const int p = static_cast<int>(X.cols());
    if (cs.rows() > p)
        fail(ErrorCode::TooManyConstraints,
             "inference requires m <= p (see augment)");

    Matrix info = X.transpose() * fit_unc.final_w.asDiagonal() * X;
    Eigen::LLT<Matrix> llt(info);
    if (llt.info() != Eigen::Success)
        fail(ErrorCode::SingularInformation, "X'W*X is not positive definite");
    Matrix V = llt.solve(Matrix::Identity(p, p));

    AugmentedConstraints aug =
        cs.empty() ? augment(ConstraintSet::none(p)) : augment(cs);

    TmvnSpec spec;
    spec.m = cs.rows();
    spec.D = aug.D;
    spec.theta = aug.D * fit_unc.beta;
    spec.Sigma = fit_unc.dispersion * aug.D * V * aug.D.transpose();
    spec.Sigma = 0.5 * (spec.Sigma + spec.Sigma.transpose()); // symmetrise
    spec.l_aug = aug.l_aug;
    spec.u_aug = aug.u_aug;
    return spec;
}

// Coordinate-wise Gibbs sampler over the augmented box-truncated normal,
// each conditional drawn by the tail-robust truncated-normal quantile.
// Coordinates with l = u are pinned. Deterministic given the seed.
inline CoefDraws sample(const TmvnSpec &spec, int n_draws, std::uint64_t seed,
                        int burn_in = 500, int thinning = 1)
{
    if (n_draws < 1)
        fail(ErrorCode::TooFewDraws, "n_draws must be at least 1");
    const int p = static_cast<int>(spec.theta.size());

    Eigen::LLT<Matrix> llt(spec.Sigma);
    if (llt.info() != Eigen::Success)
        fail(ErrorCode::SingularInformation, "TMVN covariance is not positive definite");
    Matrix precision = llt.solve(Matrix::Identity(p, p));

    // Conditional sd per coordinate and a feasible starting point.
    Vector cond_sd(p);
    Vector x(p);
    std::vector<bool> pinned(static_cast<std::size_t>(p), false);
    for (int i = 0; i < p; ++i) {
        cond_sd(i) = 1.0 / std::sqrt(precision(i, i));
        double lo = spec.l_aug(i), hi = spec.u_aug(i);
        if (lo == hi) {
            pinned[static_cast<std::size_t>(i)] = true;
            x(i) = lo;
        } else {
            x(i) = std::min(std::max(spec.theta(i), lo == -kInf ? -kInf : lo),
                            hi == kInf ? kInf : hi);
            if (!std::isfinite(x(i)))
                x(i) = spec.theta(i);
        }
    }

    // Quick mass sanity: if every free coordinate starts many conditional
    // sds outside its box the truncated region is numerically unreachable.
    double log_mass_bound = 0.0;
    for (int i = 0; i < p; ++i) {
        if (pinned[static_cast<std::size_t>(i)])
            continue;
        double marg_sd = std::sqrt(spec.Sigma(i, i));
        double a = spec.l_aug(i) == -kInf ? -kInf : (spec.l_aug(i) - spec.theta(i)) / marg_sd;
        double b = spec.u_aug(i) == kInf ? kInf : (spec.u_aug(i) - spec.theta(i)) / marg_sd;
        if (a > -kInf && a > 0.0)
            log_mass_bound += log_norm_sf(a);
        else if (b < kInf && b < 0.0)
            log_mass_bound += log_norm_sf(-b);
    }
    if (log_mass_bound < -700.0)
        fail(ErrorCode::DegenerateTruncation,
             "feasible region carries numerically zero mass (log-mass bound " +
                 std::to_string(log_mass_bound) + ")");

    CounterRng rng(CounterRng::derive(seed, {0x474942ULL}));

    Matrix inv_D = spec.D.partialPivLu().solve(Matrix::Identity(p, p));

    CoefDraws out;
    out.seed = seed;
    out.n_draws = n_draws;
    out.diagnostics.burn_in = burn_in;
    out.diagnostics.thinning = thinning;
    out.diagnostics.acceptance_note =
        "coordinate-wise Gibbs on the augmented box (exact conditional draws)";
    out.draws.resize(n_draws, p);

    auto sweep = [&]() {
        for (int i = 0; i < p; ++i) {
            if (pinned[static_cast<std::size_t>(i)])
                continue;
            double shift = 0.0;
            for (int j = 0; j < p; ++j)
                if (j != i)
                    shift += precision(i, j) * (x(j) - spec.theta(j));
            double mean = spec.theta(i) - shift / precision(i, i);
            double sd = cond_sd(i);
            double a = spec.l_aug(i) == -kInf ? -kInf : (spec.l_aug(i) - mean) / sd;
            double b = spec.u_aug(i) == kInf ? kInf : (spec.u_aug(i) - mean) / sd;
            x(i) = mean + sd * truncnorm_ppf(rng.next_unit(), a, b);
        }
    };

    for (int it = 0; it < burn_in; ++it)
        sweep();
    for (int d = 0; d < n_draws; ++d) {
        for (int t = 0; t < thinning; ++t)
            sweep();
        out.draws.row(d) = (inv_D * x).transpose();
    }
    return out;
}

// Empirical per-coefficient summaries; CI bounds are type-7 interpolated
// quantiles, covariance uses the 1/(n-1) denominator.
inline CoefSummary summarize(const CoefDraws &draws, double level = 0.95)
{
    const int n = draws.n_draws;
    const int p = static_cast<int>(draws.draws.cols());
    if (n < 100)
        fail(ErrorCode::TooFewDraws, "summaries need at least 100 draws");
    if (!(level > 0.0 && level < 1.0))
        fail(ErrorCode::InvalidConfig, "level must be in (0, 1)");

    CoefSummary s;
    s.level = level;
    s.mean = draws.draws.colwise().mean();
    Matrix centered = draws.draws.rowwise() - s.mean.transpose();
    s.covariance = centered.transpose() * centered / (n - 1.0);
    s.sd = s.covariance.diagonal().cwiseSqrt();

    auto quantile7 = [](std::vector<double> &v, double q) {
        double h = (static_cast<double>(v.size()) - 1.0) * q;
        auto lo = static_cast<std::size_t>(std::floor(h));
        auto hi = std::min(lo + 1, v.size() - 1);
        std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(lo), v.end());
        double vlo = v[lo];
        std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(hi), v.end());
        double vhi = v[hi];
        return vlo + (h - std::floor(h)) * (vhi - vlo);
    };

    double alpha = (1.0 - level) / 2.0;
    s.ci_low.resize(p);
    s.ci_high.resize(p);
    for (int j = 0; j < p; ++j) {
        std::vector<double> col(draws.draws.col(j).data(), draws.draws.col(j).data() + n);
        s.ci_low(j) = quantile7(col, alpha);
        s.ci_high(j) = quantile7(col, 1.0 - alpha);
    }
    return s;
}

// Mean of a univariate normal truncated to [l, u] (either bound may be
// infinite, but not both sides empty).
inline double truncnorm_mean(double theta, double sigma, double l, double u)
{
    if (!(l < u))
        fail(ErrorCode::EmptyInterval, "truncation interval must have l < u");
    if (!(sigma > 0.0))
        fail(ErrorCode::InvalidConfig, "sigma must be positive");
    double a = (l == -kInf) ? -kInf : (l - theta) / sigma;
    double b = (u == kInf) ? kInf : (u - theta) / sigma;
    double pdf_a = (a == -kInf) ? 0.0 : norm_pdf(a);
    double pdf_b = (b == kInf) ? 0.0 : norm_pdf(b);
    double cdf_a = (a == -kInf) ? 0.0 : norm_cdf(a);
    double cdf_b = (b == kInf) ? 1.0 : norm_cdf(b);
    double mass = cdf_b - cdf_a;
    if (!(mass > 0.0))
        fail(ErrorCode::DegenerateTruncation, "truncation interval carries no mass");
    return theta + sigma * (pdf_a - pdf_b) / mass;
}

} // namespace cirls

#endif
