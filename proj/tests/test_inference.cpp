#include <catch2/catch_amalgamated.hpp>

#include "cirls/inference.hpp"
#include "oracles.hpp"

using namespace cirls;

TEST_CASE("truncated normal mean has the closed form")
{
    // half-normal: E[X | X >= 0] = sqrt(2/pi)
    CHECK(truncnorm_mean(0.0, 1.0, 0.0, kInf) ==
          Catch::Approx(std::sqrt(2.0 / M_PI)).epsilon(1e-12));
    // symmetric truncation keeps the mean
    CHECK(truncnorm_mean(2.0, 1.5, 0.0, 4.0) == Catch::Approx(2.0).margin(1e-12));
    // shift/scale equivariance
    CHECK(truncnorm_mean(3.0, 2.0, 3.0, kInf) ==
          Catch::Approx(3.0 + 2.0 * std::sqrt(2.0 / M_PI)).epsilon(1e-12));
    CHECK_THROWS_AS(truncnorm_mean(0.0, 1.0, 1.0, 1.0), Error);
    CHECK_THROWS_AS(truncnorm_mean(0.0, -1.0, 0.0, 1.0), Error);
}

TEST_CASE("summaries on a known sample")
{
    // draws are the integers 1..10000 in one coordinate
    CoefDraws d;
    d.n_draws = 10000;
    d.draws.resize(10000, 1);
    for (int i = 0; i < 10000; ++i)
        d.draws(i, 0) = i + 1;

    CoefSummary s = summarize(d, 0.95);
    CHECK(s.mean(0) == Catch::Approx(5000.5));
    // sample variance of 1..n with the 1/(n-1) denominator is n(n+1)/12
    CHECK(s.sd(0) == Catch::Approx(std::sqrt(10000.0 * 10001.0 / 12.0)).epsilon(1e-12));
    // interpolated quantiles: h = (n-1)q
    CHECK(s.ci_low(0) == Catch::Approx(250.975).margin(1e-9));
    CHECK(s.ci_high(0) == Catch::Approx(9750.025).margin(1e-9));

    CHECK_THROWS_AS(summarize(d, 1.5), Error);
    CoefDraws tiny;
    tiny.n_draws = 50;
    tiny.draws = Matrix::Zero(50, 1);
    CHECK_THROWS_MATCHES(summarize(tiny), Error,
                         Catch::Matchers::MessageMatches(
                             Catch::Matchers::ContainsSubstring("TooFewDraws")));
}

namespace {

TmvnSpec simple_spec(const Vector &theta, const Matrix &Sigma, const Vector &l, const Vector &u)
{
    TmvnSpec s;
    s.theta = theta;
    s.Sigma = Sigma;
    s.l_aug = l;
    s.u_aug = u;
    s.D = Matrix::Identity(theta.size(), theta.size());
    s.m = static_cast<int>(l.size());
    return s;
}

} // namespace

TEST_CASE("sampler is deterministic given the seed")
{
    Vector theta(2);
    theta << 0.5, -0.2;
    Matrix Sigma(2, 2);
    Sigma << 1.0, 0.3, 0.3, 0.8;
    Vector l(2), u(2);
    l << 0.0, -kInf;
    u << kInf, kInf;
    TmvnSpec spec = simple_spec(theta, Sigma, l, u);

    CoefDraws a = sample(spec, 500, 77);
    CoefDraws b = sample(spec, 500, 77);
    CoefDraws c = sample(spec, 500, 78);
    CHECK((a.draws - b.draws).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.draws - c.draws).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("all draws respect the box")
{
    Vector theta(3);
    theta << -0.5, 1.0, 0.0;
    Matrix A(3, 3);
    A << 1, 0.2, 0, 0.2, 1, 0.1, 0, 0.1, 1;
    Matrix Sigma = A * A.transpose();
    Vector l(3), u(3);
    l << 0.0, -kInf, -1.0;
    u << kInf, 2.0, 1.0;
    TmvnSpec spec = simple_spec(theta, Sigma, l, u);

    CoefDraws d = sample(spec, 1000, 5);
    for (int i = 0; i < d.draws.rows(); ++i) {
        CHECK(d.draws(i, 0) >= 0.0);
        CHECK(d.draws(i, 1) <= 2.0);
        CHECK(d.draws(i, 2) >= -1.0);
        CHECK(d.draws(i, 2) <= 1.0);
    }
    // truncation from below at the mean shifts the sample mean up
    CHECK(d.draws.col(0).mean() > theta(0));
}

TEST_CASE("pinned coordinates stay at their equality value")
{
    Vector theta(2);
    theta << 1.0, 2.0;
    Matrix Sigma = Matrix::Identity(2, 2);
    Vector l(2), u(2);
    l << 0.5, -kInf;
    u << 0.5, kInf; // first coordinate pinned
    TmvnSpec spec = simple_spec(theta, Sigma, l, u);
    CoefDraws d = sample(spec, 300, 9);
    CHECK((d.draws.col(0).array() - 0.5).abs().maxCoeff() == 0.0);
}

TEST_CASE("untruncated sampling reproduces the normal moments")
{
    Vector theta(2);
    theta << 1.0, -2.0;
    Matrix Sigma(2, 2);
    Sigma << 2.0, 0.6, 0.6, 1.0;
    Vector l = Vector::Constant(2, -kInf);
    Vector u = Vector::Constant(2, kInf);
    TmvnSpec spec = simple_spec(theta, Sigma, l, u);

    CoefDraws d = sample(spec, 20000, 31);
    CoefSummary s = summarize(d);
    for (int j = 0; j < 2; ++j) {
        double se = std::sqrt(Sigma(j, j) / 20000.0);
        CHECK(std::abs(s.mean(j) - theta(j)) < 4.0 * se);
    }
    CHECK((s.covariance - Sigma).norm() / Sigma.norm() < 0.1);
}

TEST_CASE("truncated moments match a rejection oracle")
{
    Vector theta(2);
    theta << 0.3, -0.1;
    Matrix Sigma(2, 2);
    Sigma << 1.0, -0.4, -0.4, 0.7;
    Vector l(2), u(2);
    l << 0.0, -1.0;
    u << kInf, 1.0;
    TmvnSpec spec = simple_spec(theta, Sigma, l, u);

    CoefDraws d = sample(spec, 20000, 42);
    Matrix ref = oracles::rejection_tmvn(theta, Sigma, l, u, 20000, 42);
    for (int j = 0; j < 2; ++j) {
        double se = std::sqrt(Sigma(j, j) / 20000.0);
        CHECK(std::abs(d.draws.col(j).mean() - ref.col(j).mean()) < 6.0 * se);
    }
}

TEST_CASE("build_tmvn assembles the augmented specification")
{
    // gaussian fit with one constraint row in a 3-coefficient model
    CounterRng rng(21);
    Matrix X(100, 3);
    Vector y(100);
    for (int i = 0; i < 100; ++i) {
        X(i, 0) = 1.0;
        X(i, 1) = norm_ppf(rng.next_unit());
        X(i, 2) = norm_ppf(rng.next_unit());
        y(i) = 1.0 + 0.5 * X(i, 1) - X(i, 2) + norm_ppf(rng.next_unit());
    }
    ModelSpec ms;
    ms.X = X;
    ms.y = y;
    ms.fam = FamilySpec::gaussian();
    FitResult unc = unconstrained_fit(ms);
    ConstraintSet cs = build_nonneg(3, {2});

    TmvnSpec spec = build_tmvn(unc, X, ms.fam, cs);
    REQUIRE(spec.theta.size() == 3);
    CHECK(spec.m == 1);
    // first row of D is the constraint row, bounds carried over
    CHECK((spec.D.row(0) - cs.C.row(0)).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(spec.l_aug(0) == 0.0);
    CHECK(spec.u_aug(0) == kInf);
    CHECK(spec.l_aug(1) == -kInf);
    CHECK(spec.u_aug(2) == kInf);
    // theta = D beta*, Sigma = phi* D (X'WX)^{-1} D'
    CHECK((spec.theta - spec.D * unc.beta).cwiseAbs().maxCoeff() < 1e-12);
    Matrix V = (X.transpose() * X).ldlt().solve(Matrix::Identity(3, 3));
    Matrix expected = unc.dispersion * spec.D * V * spec.D.transpose();
    CHECK((spec.Sigma - expected).cwiseAbs().maxCoeff() < 1e-10);

    // sampling through D and back: every beta draw satisfies the constraint
    CoefDraws d = sample(spec, 500, 3);
    for (int i = 0; i < d.draws.rows(); ++i)
        CHECK(cs.C.row(0).dot(d.draws.row(i)) >= -1e-10);

    // too many constraint rows are rejected
    ConstraintSet big;
    big.C = Matrix::Identity(4, 3).topRows(4);
    CHECK_THROWS_AS(build_tmvn(unc, X, ms.fam, big), Error);
}

TEST_CASE("vanishing feasible mass is reported")
{
    Vector theta(1);
    theta << 0.0;
    Matrix Sigma = Matrix::Identity(1, 1);
    Vector l(1), u(1);
    l << 60.0; // 60 sigma away
    u << kInf;
    TmvnSpec spec = simple_spec(theta, Sigma, l, u);
    CHECK_THROWS_MATCHES(sample(spec, 100, 1), Error,
                         Catch::Matchers::MessageMatches(
                             Catch::Matchers::ContainsSubstring("DegenerateTruncation")));
}
