#ifndef CIRLS_DOF_HPP
#define CIRLS_DOF_HPP

#include <cmath>
#include <cstdint>
#include <map>

#include "cirls/common.hpp"
#include "cirls/constraints.hpp"
#include "cirls/fit.hpp"
#include "cirls/qp.hpp"
#include "cirls/rng.hpp"

namespace cirls {

struct DofReport {
    double odf = 0.0;
    double edf = 0.0;
    std::map<int, double> active_count_distribution; // P(m_a = k)
    int n_sim = 0;
    std::uint64_t seed = 0;
};

// odf = p - m_a, equality rows counted once.
inline double observed_df(const FitResult &fitted)
{
    return static_cast<double>(fitted.beta.size()) - active_row_count(fitted.active);
}

// edf = p - sum_k k P(m_a = k), with the active-count distribution estimated
// by drawing from N(beta_star, cov) and counting the active set of the
// information-metric projection of each draw onto the feasible polytope.
inline DofReport expected_df(const Vector &beta_star, const Matrix &cov,
                             const Matrix &information, const ConstraintSet &cs,
                             int n_sim, std::uint64_t seed)
{
    const int p = static_cast<int>(beta_star.size());
    if (n_sim < 100)
        fail(ErrorCode::InvalidConfig, "edf estimation needs n_sim >= 100");

    DofReport rep;
    rep.n_sim = n_sim;
    rep.seed = seed;

    if (cs.empty()) {
        rep.odf = p;
        rep.edf = p;
        rep.active_count_distribution[0] = 1.0;
        return rep;
    }

    Eigen::LLT<Matrix> llt(cov);
    if (llt.info() != Eigen::Success)
        fail(ErrorCode::SingularInformation, "coefficient covariance is not positive definite");
    Matrix chol = llt.matrixL();

    CounterRng rng(CounterRng::derive(seed, {0x656466ULL}));
    std::map<int, int> counts;
    ActiveSet warm;
    for (int b = 0; b < n_sim; ++b) {
        Vector zdraw(p);
        for (int j = 0; j < p; ++j)
            zdraw(j) = norm_ppf(rng.next_unit());
        Vector draw = beta_star + chol * zdraw;

        // Projection QP: min (beta - draw)' A (beta - draw) s.t. constraints.
        QpProblem qp;
        qp.H = information;
        qp.q = information * draw;
        qp.cs = cs;
        QpSolution sol = qp_solve_warm(qp, warm);
        warm = sol.active;
        counts[active_row_count(sol.active)]++;
    }

    double expected_active = 0.0;
    for (const auto &[k, c] : counts) {
        double prob = static_cast<double>(c) / n_sim;
        rep.active_count_distribution[k] = prob;
        expected_active += k * prob;
    }
    rep.edf = p - expected_active;
    return rep;
}

// Convenience overload from an unconstrained companion fit.
inline DofReport expected_df(const FitResult &fit_unc, const Matrix &X,
                             const ConstraintSet &cs, int n_sim, std::uint64_t seed)
{
    const int p = static_cast<int>(X.cols());
    Matrix info = X.transpose() * fit_unc.final_w.asDiagonal() * X;
    Eigen::LLT<Matrix> llt(info);
    if (llt.info() != Eigen::Success)
        fail(ErrorCode::SingularInformation, "X'W*X is not positive definite");
    Matrix cov = fit_unc.dispersion * llt.solve(Matrix::Identity(p, p));
    return expected_df(fit_unc.beta, cov, info, cs, n_sim, seed);
}

struct InformationCriteria {
    double aic = 0.0;
    double bic = 0.0;
};

// AIC/BIC from the family log-likelihood at the fit. For gaussian models the
// dispersion parameter adds one to df.
inline InformationCriteria information_criteria(const FitResult &fitted, const FamilySpec &fam,
                                                const Vector &y, double df)
{
    if (!(df > 0.0))
        fail(ErrorCode::NonPositiveDf, "df must be positive");
    double df_ic = df + (fam.family == Family::gaussian ? 1.0 : 0.0);
    double ll = log_likelihood(fam, y, fitted.mu, fitted.dispersion);
    InformationCriteria ic;
    ic.aic = -2.0 * ll + 2.0 * df_ic;
    ic.bic = -2.0 * ll + std::log(static_cast<double>(y.size())) * df_ic;
    return ic;
}

} // namespace cirls

#endif
