#ifndef CIRLS_RNG_HPP
#define CIRLS_RNG_HPP

#include <cmath>
#include <cstdint>
#include <initializer_list>

#include "cirls/common.hpp"

namespace cirls {

namespace detail {

// splitmix64 finaliser; full-period scrambler of a 64-bit counter.
inline std::uint64_t mix64(std::uint64_t z)
{
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace detail

// Counter-based generator: output i of stream `key` is mix64(key ^ mix64(i)).
// Distinct keys give independent streams, so per-replicate and per-chain
// seeds can be derived without shared state.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t key) : key_(detail::mix64(key)) {}

    static std::uint64_t derive(std::uint64_t seed,
                                std::initializer_list<std::uint64_t> parts)
    {
        std::uint64_t k = detail::mix64(seed);
        for (std::uint64_t p : parts)
            k = detail::mix64(k ^ detail::mix64(p + 0x5851f42d4c957f2dULL));
        return k;
    }

    std::uint64_t next_u64() { return detail::mix64(key_ ^ detail::mix64(counter_++)); }

    // Uniform on the open interval (0, 1).
    double next_unit()
    {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

// ---- standard normal pdf / cdf / quantile ---------------------------------

inline double norm_pdf(double x)
{
    static const double inv_sqrt_2pi = 0.3989422804014326779;
    return inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

inline double norm_cdf(double x)
{
    return 0.5 * std::erfc(-x * M_SQRT1_2);
}

// Survival function 1 - Phi(x), well conditioned in the upper tail.
inline double norm_sf(double x)
{
    return 0.5 * std::erfc(x * M_SQRT1_2);
}

// log(1 - Phi(x)); asymptotic expansion past the point where erfc underflows.
inline double log_norm_sf(double x)
{
    if (x < 30.0) {
        double s = norm_sf(x);
        if (s > 0.0)
            return std::log(s);
    }
    const double x2 = x * x;
    double series = 1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2);
    return -0.5 * x2 - std::log(x) - 0.918938533204672742 + std::log(series);
}

// Quantile of the standard normal (Acklam's rational approximation with one
// Halley refinement; relative error well below 1e-14 away from the endpoints).
inline double norm_ppf(double p)
{
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
    const double p_low = 0.02425;

    double x;
    if (p < p_low) {
        double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        double q = p - 0.5;
        double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }

    // Halley refinement against the erfc-based cdf.
    double e = norm_cdf(x) - p;
    double u = e / norm_pdf(x);
    x = x - u / (1.0 + 0.5 * x * u);
    return x;
}

namespace detail {

// Invert log(1 - Phi(x)) = t for deep-tail targets (t very negative),
// by Newton iteration on the log survival function.
inline double inv_log_norm_sf(double t)
{
    // Initial guess from -log sf(x) ~ x^2/2 + log(x sqrt(2 pi)).
    double x = std::sqrt(std::max(2.0 * (-t - 1.0), 2.0));
    for (int it = 0; it < 64; ++it) {
        double f = log_norm_sf(x) - t;
        double deriv = -std::exp(-0.5 * x * x - 0.918938533204672742 - log_norm_sf(x));
        double step = f / deriv;
        x -= step;
        if (std::abs(step) < 1e-13 * (1.0 + std::abs(x)))
            break;
    }
    return x;
}

} // namespace detail

// Quantile function of the standard normal truncated to [a, b]:
// returns x with (Phi(x) - Phi(a)) / (Phi(b) - Phi(a)) = u, u in (0, 1).
// Tail-robust: switches to the survival-function parametrisation beyond 8
// standard deviations.
inline double truncnorm_ppf(double u, double a, double b)
{
    if (!(a < b))
        fail(ErrorCode::EmptyInterval, "truncation interval has l >= u");
    if (a == -kInf && b == kInf)
        return norm_ppf(u);
    if (a > 0.0 && a >= 8.0) {
        // Both endpoints deep in the upper tail: work in log survival space.
        double la = log_norm_sf(a);
        double lb = (b == kInf) ? -kInf : log_norm_sf(b);
        // log(sf(a) (1-u) + sf(b) u) via logsumexp anchored at la.
        double target;
        if (lb == -kInf)
            target = la + std::log1p(-u);
        else
            target = la + std::log((1.0 - u) + u * std::exp(lb - la));
        return detail::inv_log_norm_sf(target);
    }
    if (b < 0.0 && -b >= 8.0)
        return -truncnorm_ppf(1.0 - u, -b, -a);

    double fa = (a == -kInf) ? 0.0 : norm_cdf(a);
    double fb = (b == kInf) ? 1.0 : norm_cdf(b);
    double mass = fb - fa;
    if (!(mass > 0.0))
        fail(ErrorCode::DegenerateTruncation, "truncation interval carries no mass");
    double p = fa + u * mass;
    p = std::min(std::max(p, 1e-300), 1.0 - 1e-16);
    double x = norm_ppf(p);
    if (a > -kInf && x < a)
        x = a;
    if (b < kInf && x > b)
        x = b;
    return x;
}

} // namespace cirls

#endif
