#ifndef CIRLS_FAMILY_HPP
#define CIRLS_FAMILY_HPP

#include <cmath>
#include <string>

#include "cirls/common.hpp"

namespace cirls {

enum class Family { gaussian, poisson, binomial };
enum class Link { identity, log, logit };

// Exponential family + link. Only the canonical pairings are accepted:
// gaussian+identity, poisson+log, binomial+logit.
struct FamilySpec {
    Family family = Family::gaussian;
    Link link = Link::identity;

    static FamilySpec gaussian() { return {Family::gaussian, Link::identity}; }
    static FamilySpec poisson() { return {Family::poisson, Link::log}; }
    static FamilySpec binomial() { return {Family::binomial, Link::logit}; }

    static FamilySpec parse(const std::string &name)
    {
        if (name == "gaussian")
            return gaussian();
        if (name == "poisson")
            return poisson();
        if (name == "binomial")
            return binomial();
        fail(ErrorCode::InvalidConfig, "unknown family '" + name + "'");
    }

    const char *name() const
    {
        switch (family) {
        case Family::gaussian: return "gaussian";
        case Family::poisson: return "poisson";
        case Family::binomial: return "binomial";
        }
        return "?";
    }
};

// Working quantities of one IRLS step. Invariant: z = eta + g_deriv .* (y - mu).
struct IrlsState {
    Vector eta;
    Vector mu;
    Vector z;
    Vector w;
    Vector g_deriv; // diagonal of G = d eta / d mu
};

namespace family_detail {

inline constexpr double kEtaClamp = 30.0; // overflow guard for log/logit inversion
inline constexpr double kWeightFloor = 1e-10;

inline double link_eval(const FamilySpec &fam, double mu)
{
    switch (fam.family) {
    case Family::gaussian: return mu;
    case Family::poisson: return std::log(mu);
    case Family::binomial: return std::log(mu / (1.0 - mu));
    }
    return 0.0;
}

inline double link_inverse(const FamilySpec &fam, double eta)
{
    switch (fam.family) {
    case Family::gaussian:
        return eta;
    case Family::poisson:
        return std::exp(std::min(std::max(eta, -kEtaClamp), kEtaClamp));
    case Family::binomial: {
        double e = std::min(std::max(eta, -kEtaClamp), kEtaClamp);
        return 1.0 / (1.0 + std::exp(-e));
    }
    }
    return 0.0;
}

} // namespace family_detail

inline void check_support(const FamilySpec &fam, const Vector &y)
{
    for (int i = 0; i < y.size(); ++i) {
        if (!std::isfinite(y(i)))
            fail(ErrorCode::InvalidData, "response has non-finite entry at row " + std::to_string(i + 1));
        switch (fam.family) {
        case Family::gaussian:
            break;
        case Family::poisson:
            if (y(i) < 0.0)
                fail(ErrorCode::SupportViolation,
                     "poisson response must be nonnegative (row " + std::to_string(i + 1) + ")");
            break;
        case Family::binomial:
            if (y(i) < 0.0 || y(i) > 1.0)
                fail(ErrorCode::SupportViolation,
                     "binomial response must lie in [0,1] (row " + std::to_string(i + 1) + ")");
            break;
        }
    }
}

// Pseudo-data at a given linear predictor. prior_weights multiply w (e.g.
// binomial trial counts); pass an empty vector for unit weights.
inline IrlsState update_state(const FamilySpec &fam, const Vector &y, const Vector &eta,
                              const Vector &prior_weights = Vector())
{
    if (!eta.allFinite())
        fail(ErrorCode::NumericOverflow, "linear predictor has non-finite entries");
    const auto n = y.size();
    if (eta.size() != n)
        fail(ErrorCode::DimensionMismatch, "eta and y lengths differ");

    IrlsState st;
    st.eta = eta;
    st.mu.resize(n);
    st.z.resize(n);
    st.w.resize(n);
    st.g_deriv.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double mu = family_detail::link_inverse(fam, eta(i));
        double var; // variance function V(mu); for canonical links w = V(mu)
        switch (fam.family) {
        case Family::gaussian: var = 1.0; break;
        case Family::poisson: var = mu; break;
        case Family::binomial: var = mu * (1.0 - mu); break;
        }
        var = std::max(var, family_detail::kWeightFloor);
        double pw = prior_weights.size() > 0 ? prior_weights(i) : 1.0;
        st.mu(i) = mu;
        st.g_deriv(i) = 1.0 / var;
        st.w(i) = var * pw;
        st.z(i) = eta(i) + st.g_deriv(i) * (y(i) - mu);
    }
    return st;
}

// Standard IRLS initialisation: mu from a family-specific nudge of y,
// then the same pseudo-data construction as update_state.
inline IrlsState init_state(const FamilySpec &fam, const Vector &y,
                            const Vector &prior_weights = Vector())
{
    check_support(fam, y);
    const auto n = y.size();
    Vector eta(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double mu;
        switch (fam.family) {
        case Family::gaussian: mu = y(i); break;
        case Family::poisson: mu = y(i) + 0.1; break;
        case Family::binomial: mu = (y(i) + 0.5) / 2.0; break;
        }
        eta(i) = family_detail::link_eval(fam, mu);
    }
    return update_state(fam, y, eta, prior_weights);
}

inline double deviance(const FamilySpec &fam, const Vector &y, const Vector &mu)
{
    double dev = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        switch (fam.family) {
        case Family::gaussian: {
            double r = y(i) - mu(i);
            dev += r * r;
            break;
        }
        case Family::poisson:
            if (y(i) > 0.0)
                dev += 2.0 * (y(i) * std::log(y(i) / mu(i)) - (y(i) - mu(i)));
            else
                dev += 2.0 * mu(i);
            break;
        case Family::binomial: {
            double t = 0.0;
            if (y(i) > 0.0)
                t += y(i) * std::log(y(i) / mu(i));
            if (y(i) < 1.0)
                t += (1.0 - y(i)) * std::log((1.0 - y(i)) / (1.0 - mu(i)));
            dev += 2.0 * t;
            break;
        }
        }
    }
    return dev;
}

// Dispersion estimate: fixed 1 for poisson/binomial, Pearson for gaussian,
// floored at 1e-12 in the perfect-fit degenerate case.
inline double dispersion(const FamilySpec &fam, const Vector &y, const Vector &mu,
                         const Vector &w, double df_resid)
{
    if (fam.family != Family::gaussian)
        return 1.0;
    if (!(df_resid > 0.0))
        fail(ErrorCode::NonPositiveDf, "residual degrees of freedom must be positive");
    double pearson = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        double r = y(i) - mu(i);
        pearson += w(i) * r * r;
    }
    return std::max(pearson / df_resid, 1e-12);
}

// Family log-likelihood at the fit; gaussian profiles sigma^2 at the Pearson
// estimate supplied by the caller.
inline double log_likelihood(const FamilySpec &fam, const Vector &y, const Vector &mu,
                             double dispersion_hat)
{
    const auto n = y.size();
    double ll = 0.0;
    switch (fam.family) {
    case Family::gaussian: {
        double rss = (y - mu).squaredNorm();
        double s2 = std::max(dispersion_hat, 1e-12);
        ll = -0.5 * static_cast<double>(n) * std::log(2.0 * M_PI * s2) - rss / (2.0 * s2);
        break;
    }
    case Family::poisson:
        for (Eigen::Index i = 0; i < n; ++i)
            ll += y(i) * std::log(mu(i)) - mu(i) - std::lgamma(y(i) + 1.0);
        break;
    case Family::binomial:
        for (Eigen::Index i = 0; i < n; ++i) {
            if (y(i) > 0.0)
                ll += y(i) * std::log(mu(i));
            if (y(i) < 1.0)
                ll += (1.0 - y(i)) * std::log(1.0 - mu(i));
        }
        break;
    }
    return ll;
}

} // namespace cirls

#endif
