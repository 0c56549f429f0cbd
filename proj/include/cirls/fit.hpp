#ifndef CIRLS_FIT_HPP
#define CIRLS_FIT_HPP

#include <cmath>
#include <vector>

#include "cirls/common.hpp"
#include "cirls/constraints.hpp"
#include "cirls/family.hpp"
#include "cirls/qp.hpp"

namespace cirls {

struct FitControl {
    double tol = 1e-8;
    int max_iter = 25;
};

struct ModelSpec {
    Matrix X;
    Vector y;
    FamilySpec fam;
    ConstraintSet cs; // may be empty (m = 0)
    Vector offset;    // optional, added to eta
    Vector prior_weights;
    FitControl control;

    int n() const { return static_cast<int>(X.rows()); }
    int p() const { return static_cast<int>(X.cols()); }
};

struct FitResult {
    Vector beta;
    Vector eta;
    Vector mu;
    double deviance = 0.0;
    std::vector<double> deviance_trace;
    ActiveSet active;
    double odf = 0.0;
    double dispersion = 1.0;
    bool converged = false;
    int iterations = 0;
    Vector final_w;
};

namespace fit_detail {

inline void check_spec(const ModelSpec &spec)
{
    if (spec.n() < 1 || spec.p() < 1)
        fail(ErrorCode::DimensionMismatch, "design matrix must be at least 1x1");
    if (spec.y.size() != spec.n())
        fail(ErrorCode::DimensionMismatch, "response length does not match design rows");
    if (!spec.X.allFinite())
        fail(ErrorCode::InvalidData, "design matrix has non-finite entries");
    if (spec.offset.size() > 0 && spec.offset.size() != spec.n())
        fail(ErrorCode::DimensionMismatch, "offset length does not match design rows");
    if (!spec.cs.empty())
        validate(spec.cs, spec.p());
}

} // namespace fit_detail

// CIRLS: iterate family pseudo-data and constrained weighted least squares
// (a QP per iteration) until the relative deviance change drops below tol.
// With m = 0 this is classical IRLS.
inline FitResult fit(const ModelSpec &spec)
{
    fit_detail::check_spec(spec);
    const int n = spec.n();
    const int p = spec.p();
    const ConstraintSet &cs = spec.cs.empty() ? ConstraintSet::none(p) : spec.cs;

    Vector offset = spec.offset.size() > 0 ? spec.offset : Vector::Zero(n);

    FitResult res;
    IrlsState st = init_state(spec.fam, spec.y, spec.prior_weights);
    double dev_prev = kInf;
    ActiveSet warm;
    Vector beta;

    for (int iter = 1; iter <= spec.control.max_iter; ++iter) {
        QpProblem qp;
        Vector z_off = st.z - offset;
        qp.H = spec.X.transpose() * st.w.asDiagonal() * spec.X;
        qp.q = spec.X.transpose() * (st.w.asDiagonal() * z_off);
        qp.cs = cs;

        QpSolution sol = qp_solve_warm(qp, warm);
        warm = sol.active;
        beta = sol.beta;

        Vector eta = spec.X * beta + offset;
        st = update_state(spec.fam, spec.y, eta, spec.prior_weights);
        double dev = deviance(spec.fam, spec.y, st.mu);
        if (!std::isfinite(dev))
            fail(ErrorCode::NonFiniteDeviance, "deviance became non-finite");
        res.deviance_trace.push_back(dev);
        res.iterations = iter;

        if (std::abs(dev - dev_prev) / (0.1 + std::abs(dev)) < spec.control.tol) {
            res.converged = true;
            break;
        }
        dev_prev = dev;
    }

    res.beta = beta;
    res.eta = spec.X * beta + offset;
    res.mu = st.mu;
    res.final_w = st.w;
    res.deviance = res.deviance_trace.back();
    res.active = active_set(cs, beta);
    res.odf = p - active_row_count(res.active);
    double df_resid = std::max(static_cast<double>(n) - res.odf, 1.0);
    res.dispersion = dispersion(spec.fam, spec.y, res.mu, st.w, df_resid);

    // The constrained deviance sequence is not guaranteed monotone; a
    // decrease violation beyond tolerance demotes the fit to non-converged.
    for (std::size_t k = 1; k < res.deviance_trace.size(); ++k) {
        double d0 = res.deviance_trace[k - 1];
        double d1 = res.deviance_trace[k];
        if (d1 > d0 + 1e-10 * (1.0 + std::abs(d1)))
            res.converged = false;
    }
    return res;
}

// Unconstrained companion fit supplying beta*, W*, phi* for inference and
// edf. Requires a full-rank design; constraints cannot rescue deficiency
// here.
inline FitResult unconstrained_fit(ModelSpec spec)
{
    Eigen::ColPivHouseholderQR<Matrix> qr(spec.X);
    qr.setThreshold(1e-10);
    if (qr.rank() < spec.p())
        fail(ErrorCode::RankDeficientDesign,
             "design matrix is rank deficient; the unconstrained model cannot be fitted");
    spec.cs = ConstraintSet::none(spec.p());
    return fit(spec);
}

enum class PredictScale { link, response };

inline Vector predict(const FitResult &fitted, const FamilySpec &fam, const Matrix &X_new,
                      PredictScale scale, const Vector &offset = Vector())
{
    if (X_new.cols() != fitted.beta.size())
        fail(ErrorCode::DimensionMismatch, "prediction design has wrong number of columns");
    Vector eta = X_new * fitted.beta;
    if (offset.size() > 0) {
        if (offset.size() != eta.size())
            fail(ErrorCode::DimensionMismatch, "offset length does not match prediction rows");
        eta += offset;
    }
    if (scale == PredictScale::link)
        return eta;
    Vector mu(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i)
        mu(i) = family_detail::link_inverse(fam, eta(i));
    return mu;
}

} // namespace cirls

#endif
