#include <catch2/catch_amalgamated.hpp>

#include "cirls/fit.hpp"
#include "oracles.hpp"

using namespace cirls;

namespace {

Matrix random_design(CounterRng &rng, int n, int p, bool intercept = true)
{
    Matrix X(n, p);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < p; ++j)
            X(i, j) = (intercept && j == 0) ? 1.0 : norm_ppf(rng.next_unit());
    return X;
}

Vector poisson_response(CounterRng &rng, const Vector &eta)
{
    Vector y(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        double rate = std::exp(eta(i));
        double u = rng.next_unit();
        double prob = std::exp(-rate);
        double cum = prob;
        int k = 0;
        while (u > cum && k < 10000) {
            ++k;
            prob *= rate / k;
            cum += prob;
        }
        y(i) = k;
    }
    return y;
}

Vector binomial_response(CounterRng &rng, const Vector &eta)
{
    Vector y(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        double mu = 1.0 / (1.0 + std::exp(-eta(i)));
        y(i) = rng.next_unit() < mu ? 1.0 : 0.0;
    }
    return y;
}

} // namespace

TEST_CASE("gaussian unconstrained fit solves the normal equations")
{
    CounterRng rng(11);
    Matrix X = random_design(rng, 40, 4);
    Vector y(40);
    for (int i = 0; i < 40; ++i)
        y(i) = 1.0 + 0.5 * X(i, 1) - X(i, 2) + 0.3 * norm_ppf(rng.next_unit());

    ModelSpec spec;
    spec.X = X;
    spec.y = y;
    spec.fam = FamilySpec::gaussian();
    FitResult res = fit(spec);

    Vector direct = (X.transpose() * X).ldlt().solve(X.transpose() * y);
    CHECK((res.beta - direct).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(res.converged);
    CHECK(res.odf == Catch::Approx(4.0));
    CHECK(res.active.empty());
    // gaussian dispersion is the Pearson estimate on n - odf
    double rss = (y - X * direct).squaredNorm();
    CHECK(res.dispersion == Catch::Approx(rss / (40.0 - 4.0)).epsilon(1e-10));
}

TEST_CASE("unconstrained fits agree with an independent IRLS implementation")
{
    CounterRng rng(12);
    for (int t = 0; t < 20; ++t) {
        int n = 60 + static_cast<int>(rng.next_u64() % 60);
        int p = 2 + static_cast<int>(rng.next_u64() % 3);
        Matrix X = random_design(rng, n, p);
        Vector beta_true(p);
        for (int j = 0; j < p; ++j)
            beta_true(j) = 0.5 * norm_ppf(rng.next_unit());
        Vector eta = X * beta_true;

        FamilySpec fam = (t % 2 == 0) ? FamilySpec::poisson() : FamilySpec::binomial();
        Vector y = (t % 2 == 0) ? poisson_response(rng, eta) : binomial_response(rng, eta);
        if (fam.family == Family::binomial && (y.sum() < 1.0 || y.sum() > n - 1.0))
            continue; // degenerate sample, separation risk

        ModelSpec spec;
        spec.X = X;
        spec.y = y;
        spec.fam = fam;
        spec.control.tol = 1e-14; // run both solvers to full convergence
        spec.control.max_iter = 50;
        FitResult res = fit(spec);
        Vector oracle = oracles::plain_irls(X, y, fam);
        INFO("dataset " << t << " family " << fam.name());
        CHECK((res.beta - oracle).cwiseAbs().maxCoeff() < 1e-8);
        CHECK(res.converged);
    }
}

TEST_CASE("nonnegative gaussian fits match Lawson-Hanson NNLS")
{
    CounterRng rng(13);
    for (int t = 0; t < 30; ++t) {
        int n = 30 + static_cast<int>(rng.next_u64() % 30);
        int p = 2 + static_cast<int>(rng.next_u64() % 4);
        Matrix X = random_design(rng, n, p, false);
        Vector y(n);
        for (int i = 0; i < n; ++i)
            y(i) = norm_ppf(rng.next_unit());

        std::vector<int> all_idx;
        for (int j = 1; j <= p; ++j)
            all_idx.push_back(j);

        ModelSpec spec;
        spec.X = X;
        spec.y = y;
        spec.fam = FamilySpec::gaussian();
        spec.cs = build_nonneg(p, all_idx);
        FitResult res = fit(spec);
        Vector oracle = oracles::nnls(X, y);
        INFO("instance " << t);
        CHECK((res.beta - oracle).cwiseAbs().maxCoeff() < 1e-8);
        CHECK(res.beta.minCoeff() >= -1e-12);
    }
}

TEST_CASE("constrained fits stay feasible and deviance stabilises")
{
    CounterRng rng(14);
    Matrix X = random_design(rng, 80, 3);
    Vector beta_true(3);
    beta_true << 0.5, -0.4, 0.3; // beta_1 truth violates the constraint
    Vector y = poisson_response(rng, X * beta_true);

    ModelSpec spec;
    spec.X = X;
    spec.y = y;
    spec.fam = FamilySpec::poisson();
    spec.cs = build_nonneg(3, {2});
    FitResult res = fit(spec);

    CHECK(is_feasible(spec.cs, res.beta));
    CHECK(res.beta(1) >= -1e-12);
    CHECK(res.converged);
    CHECK(res.active.count({0, BoundSide::lower}) == 1);
    CHECK(res.odf == Catch::Approx(2.0));

    // repeated fits are bit-identical
    FitResult res2 = fit(spec);
    CHECK((res.beta - res2.beta).cwiseAbs().maxCoeff() == 0.0);
    CHECK(res.deviance == res2.deviance);
}

TEST_CASE("inactive constraints reproduce the unconstrained solution")
{
    CounterRng rng(15);
    Matrix X = random_design(rng, 50, 3);
    Vector y(50);
    for (int i = 0; i < 50; ++i)
        y(i) = 2.0 + X(i, 1) + 0.5 * X(i, 2) + 0.2 * norm_ppf(rng.next_unit());

    ModelSpec spec;
    spec.X = X;
    spec.y = y;
    spec.fam = FamilySpec::gaussian();
    FitResult unc = unconstrained_fit(spec);

    spec.cs = build_nonneg(3, {2}); // truth ~ 1, far inside
    FitResult con = fit(spec);
    CHECK((con.beta - unc.beta).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(con.active.empty());
    CHECK(con.odf == Catch::Approx(3.0));
}

TEST_CASE("offset enters the linear predictor only")
{
    CounterRng rng(16);
    int n = 200;
    Vector offset(n);
    Matrix X = Matrix::Ones(n, 1);
    Vector y(n);
    for (int i = 0; i < n; ++i)
        offset(i) = std::log(1.0 + (i % 5));
    y = poisson_response(rng, (X * Vector::Constant(1, 0.7) + offset).eval());

    ModelSpec spec;
    spec.X = X;
    spec.y = y;
    spec.fam = FamilySpec::poisson();
    spec.offset = offset;
    FitResult res = fit(spec);
    CHECK(res.converged);
    CHECK((res.eta - (X * res.beta + offset)).cwiseAbs().maxCoeff() < 1e-14);
    // intercept recovers the true rate up to sampling noise
    CHECK(res.beta(0) == Catch::Approx(0.7).margin(0.2));
}

TEST_CASE("rank-deficient designs are rejected by the unconstrained companion fit")
{
    Matrix X(6, 3);
    X.col(0).setOnes();
    X.col(1) << 1, 2, 3, 4, 5, 6;
    X.col(2) = 2.0 * X.col(1); // collinear
    ModelSpec spec;
    spec.X = X;
    spec.y = Vector::Ones(6);
    spec.fam = FamilySpec::gaussian();
    CHECK_THROWS_MATCHES(unconstrained_fit(spec), Error,
                         Catch::Matchers::MessageMatches(
                             Catch::Matchers::ContainsSubstring("RankDeficientDesign")));
}

TEST_CASE("fit validates its inputs")
{
    ModelSpec spec;
    spec.X = Matrix::Ones(4, 1);
    spec.y = Vector::Ones(3); // length mismatch
    spec.fam = FamilySpec::gaussian();
    CHECK_THROWS_MATCHES(fit(spec), Error,
                         Catch::Matchers::MessageMatches(
                             Catch::Matchers::ContainsSubstring("DimensionMismatch")));

    spec.y = Vector::Ones(4);
    spec.offset = Vector::Ones(2);
    CHECK_THROWS_AS(fit(spec), Error);
}

TEST_CASE("predict on link and response scales")
{
    ModelSpec spec;
    spec.X = Matrix::Ones(10, 1);
    spec.y = Vector::Constant(10, 3.0);
    spec.fam = FamilySpec::poisson();
    FitResult res = fit(spec);

    Matrix X_new = Matrix::Ones(2, 1);
    Vector eta = predict(res, spec.fam, X_new, PredictScale::link);
    Vector mu = predict(res, spec.fam, X_new, PredictScale::response);
    CHECK(eta(0) == Catch::Approx(std::log(3.0)).epsilon(1e-6));
    CHECK(mu(0) == Catch::Approx(3.0).epsilon(1e-6));

    Matrix bad = Matrix::Ones(2, 5);
    CHECK_THROWS_AS(predict(res, spec.fam, bad, PredictScale::link), Error);
}
