// Test-only reference implementations, independent of the library's solver
// paths: KKT enumeration for QPs, plain IRLS, Lawson-Hanson NNLS, PAVA, and
// a rejection sampler for truncated normals.
#ifndef CIRLS_TESTS_ORACLES_HPP
#define CIRLS_TESTS_ORACLES_HPP

#include <optional>
#include <vector>

#include "cirls/common.hpp"
#include "cirls/constraints.hpp"
#include "cirls/family.hpp"
#include "cirls/qp.hpp"
#include "cirls/rng.hpp"

namespace oracles {

using cirls::kInf;
using cirls::Matrix;
using cirls::Vector;

struct QpOracleResult {
    Vector beta;
    double objective;
};

// Brute force: enumerate every assignment of row states (inactive / at lower
// / at upper; equalities always pinned), solve the equality-constrained KKT
// system for each, keep the feasible candidate with minimal objective.
inline std::optional<QpOracleResult> kkt_enumerate(const cirls::QpProblem &qp)
{
    const int p = static_cast<int>(qp.H.rows());
    const int m = qp.cs.rows();

    std::vector<int> n_states(static_cast<std::size_t>(m));
    // state 0 = inactive, 1 = at lower, 2 = at upper
    std::vector<std::vector<int>> states(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
        if (qp.cs.is_equality_row(i)) {
            states[static_cast<std::size_t>(i)] = {1};
        } else {
            states[static_cast<std::size_t>(i)] = {0};
            if (qp.cs.l(i) > -kInf)
                states[static_cast<std::size_t>(i)].push_back(1);
            if (qp.cs.u(i) < kInf)
                states[static_cast<std::size_t>(i)].push_back(2);
        }
        n_states[static_cast<std::size_t>(i)] = static_cast<int>(states[static_cast<std::size_t>(i)].size());
    }

    long total = 1;
    for (int i = 0; i < m; ++i)
        total *= n_states[static_cast<std::size_t>(i)];

    std::optional<QpOracleResult> best;
    for (long combo = 0; combo < total; ++combo) {
        long c = combo;
        std::vector<int> pick(static_cast<std::size_t>(m), 0);
        for (int i = 0; i < m; ++i) {
            pick[static_cast<std::size_t>(i)] =
                states[static_cast<std::size_t>(i)][static_cast<std::size_t>(c % n_states[static_cast<std::size_t>(i)])];
            c /= n_states[static_cast<std::size_t>(i)];
        }
        int k = 0;
        for (int i = 0; i < m; ++i)
            if (pick[static_cast<std::size_t>(i)] != 0)
                ++k;

        Matrix kkt = Matrix::Zero(p + k, p + k);
        Vector rhs = Vector::Zero(p + k);
        kkt.topLeftCorner(p, p) = 2.0 * qp.H;
        rhs.head(p) = 2.0 * qp.q;
        int at = 0;
        for (int i = 0; i < m; ++i) {
            if (pick[static_cast<std::size_t>(i)] == 0)
                continue;
            kkt.block(p + at, 0, 1, p) = qp.cs.C.row(i);
            kkt.block(0, p + at, p, 1) = qp.cs.C.row(i).transpose();
            rhs(p + at) = pick[static_cast<std::size_t>(i)] == 1 ? qp.cs.l(i) : qp.cs.u(i);
            ++at;
        }
        Eigen::FullPivLU<Matrix> lu(kkt);
        if (!lu.isInvertible())
            continue;
        Vector sol = lu.solve(rhs);
        Vector beta = sol.head(p);
        if (!cirls::is_feasible(qp.cs, beta, 1e-9))
            continue;
        double obj = beta.dot(qp.H * beta) - 2.0 * qp.q.dot(beta);
        if (!best || obj < best->objective - 0.0)
            if (!best || obj < best->objective)
                best = QpOracleResult{beta, obj};
    }
    return best;
}

// Plain textbook IRLS for an unconstrained GLM, coded independently of the
// library's QP path: solves the weighted normal equations directly.
inline Vector plain_irls(const Matrix &X, const Vector &y, const cirls::FamilySpec &fam,
                         int max_iter = 50, double tol = 1e-12)
{
    const int n = static_cast<int>(X.rows());
    const int p = static_cast<int>(X.cols());
    Vector mu(n), eta(n);
    for (int i = 0; i < n; ++i) {
        switch (fam.family) {
        case cirls::Family::gaussian: mu(i) = y(i); break;
        case cirls::Family::poisson: mu(i) = y(i) + 0.1; break;
        case cirls::Family::binomial: mu(i) = (y(i) + 0.5) / 2.0; break;
        }
        eta(i) = cirls::family_detail::link_eval(fam, mu(i));
    }
    Vector beta = Vector::Zero(p);
    double dev_prev = cirls::kInf;
    for (int it = 0; it < max_iter; ++it) {
        Vector w(n), z(n);
        for (int i = 0; i < n; ++i) {
            mu(i) = cirls::family_detail::link_inverse(fam, eta(i));
            double var;
            switch (fam.family) {
            case cirls::Family::gaussian: var = 1.0; break;
            case cirls::Family::poisson: var = mu(i); break;
            case cirls::Family::binomial: var = mu(i) * (1.0 - mu(i)); break;
            }
            var = std::max(var, 1e-10);
            w(i) = var;
            z(i) = eta(i) + (y(i) - mu(i)) / var;
        }
        Matrix A = X.transpose() * w.asDiagonal() * X;
        Vector b = X.transpose() * (w.asDiagonal() * z);
        beta = A.ldlt().solve(b);
        eta = X * beta;
        for (int i = 0; i < n; ++i)
            mu(i) = cirls::family_detail::link_inverse(fam, eta(i));
        double dev = cirls::deviance(fam, y, mu);
        if (std::abs(dev - dev_prev) < tol * (1.0 + std::abs(dev)))
            break;
        dev_prev = dev;
    }
    return beta;
}

// Lawson-Hanson active-set nonnegative least squares.
inline Vector nnls(const Matrix &A, const Vector &b, int max_iter = 1000)
{
    const int p = static_cast<int>(A.cols());
    Vector x = Vector::Zero(p);
    std::vector<bool> passive(static_cast<std::size_t>(p), false);
    Vector w = A.transpose() * (b - A * x);
    int iter = 0;
    while (iter++ < max_iter) {
        int t = -1;
        double best = 1e-10;
        for (int j = 0; j < p; ++j)
            if (!passive[static_cast<std::size_t>(j)] && w(j) > best) {
                best = w(j);
                t = j;
            }
        if (t < 0)
            break;
        passive[static_cast<std::size_t>(t)] = true;
        while (true) {
            std::vector<int> idx;
            for (int j = 0; j < p; ++j)
                if (passive[static_cast<std::size_t>(j)])
                    idx.push_back(j);
            Matrix Ap(A.rows(), static_cast<Eigen::Index>(idx.size()));
            for (std::size_t k = 0; k < idx.size(); ++k)
                Ap.col(static_cast<Eigen::Index>(k)) = A.col(idx[k]);
            Vector zp = (Ap.transpose() * Ap).ldlt().solve(Ap.transpose() * b);
            bool all_pos = true;
            for (Eigen::Index k = 0; k < zp.size(); ++k)
                if (zp(k) <= 1e-12)
                    all_pos = false;
            if (all_pos) {
                x.setZero();
                for (std::size_t k = 0; k < idx.size(); ++k)
                    x(idx[k]) = zp(static_cast<Eigen::Index>(k));
                break;
            }
            double alpha = cirls::kInf;
            for (std::size_t k = 0; k < idx.size(); ++k) {
                double zk = zp(static_cast<Eigen::Index>(k));
                if (zk <= 1e-12) {
                    double xk = x(idx[k]);
                    alpha = std::min(alpha, xk / (xk - zk));
                }
            }
            for (std::size_t k = 0; k < idx.size(); ++k)
                x(idx[k]) += alpha * (zp(static_cast<Eigen::Index>(k)) - x(idx[k]));
            for (int j = 0; j < p; ++j)
                if (passive[static_cast<std::size_t>(j)] && x(j) <= 1e-12) {
                    passive[static_cast<std::size_t>(j)] = false;
                    x(j) = 0.0;
                }
        }
        w = A.transpose() * (b - A * x);
    }
    return x;
}

// Pool-adjacent-violators for isotonic least squares with unit weights.
inline Vector pava(const Vector &y)
{
    const int n = static_cast<int>(y.size());
    std::vector<double> level, weight;
    std::vector<int> count;
    for (int i = 0; i < n; ++i) {
        level.push_back(y(i));
        weight.push_back(1.0);
        count.push_back(1);
        while (level.size() > 1 && level[level.size() - 2] > level.back() + 0.0) {
            double w = weight[weight.size() - 2] + weight.back();
            double v = (weight[weight.size() - 2] * level[level.size() - 2] +
                        weight.back() * level.back()) /
                       w;
            int c = count[count.size() - 2] + count.back();
            level.pop_back();
            weight.pop_back();
            count.pop_back();
            level.back() = v;
            weight.back() = w;
            count.back() = c;
        }
    }
    Vector out(n);
    int at = 0;
    for (std::size_t b = 0; b < level.size(); ++b)
        for (int k = 0; k < count[b]; ++k)
            out(at++) = level[b];
    return out;
}

// Rejection sampler for a box-truncated multivariate normal (only usable
// when the feasible mass is appreciable).
inline Matrix rejection_tmvn(const Vector &theta, const Matrix &Sigma, const Vector &l,
                             const Vector &u, int n_draws, std::uint64_t seed)
{
    const int p = static_cast<int>(theta.size());
    Matrix chol = Eigen::LLT<Matrix>(Sigma).matrixL();
    cirls::CounterRng rng(cirls::CounterRng::derive(seed, {0x72656aULL}));
    Matrix out(n_draws, p);
    int got = 0;
    long attempts = 0;
    while (got < n_draws) {
        if (++attempts > 1000L * n_draws)
            throw std::runtime_error("rejection oracle: acceptance rate too low");
        Vector z(p);
        for (int j = 0; j < p; ++j)
            z(j) = cirls::norm_ppf(rng.next_unit());
        Vector x = theta + chol * z;
        bool ok = true;
        for (int j = 0; j < p; ++j)
            if (x(j) < l(j) || x(j) > u(j))
                ok = false;
        if (ok)
            out.row(got++) = x.transpose();
    }
    return out;
}

// Random strictly convex QP instances with a guaranteed-nonempty polytope:
// bounds are placed around C beta0 for a random anchor point beta0.
inline cirls::QpProblem random_qp(cirls::CounterRng &rng, int max_p = 6, int max_m = 6)
{
    int p = 1 + static_cast<int>(rng.next_u64() % static_cast<unsigned>(max_p));
    int m = static_cast<int>(rng.next_u64() % static_cast<unsigned>(std::min(p, max_m) + 1));

    cirls::QpProblem qp;
    Matrix A(p, p);
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j)
            A(i, j) = cirls::norm_ppf(rng.next_unit());
    qp.H = A.transpose() * A + 0.1 * Matrix::Identity(p, p);
    qp.q.resize(p);
    for (int j = 0; j < p; ++j)
        qp.q(j) = 2.0 * cirls::norm_ppf(rng.next_unit());

    while (true) {
        Matrix C(m, p);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < p; ++j)
                C(i, j) = cirls::norm_ppf(rng.next_unit());
        if (m > 0) {
            Eigen::JacobiSVD<Matrix> svd(C);
            if (svd.singularValues()(m - 1) < 1e-3)
                continue;
        }
        Vector beta0(p);
        for (int j = 0; j < p; ++j)
            beta0(j) = cirls::norm_ppf(rng.next_unit());
        Vector l(m), u(m);
        for (int i = 0; i < m; ++i) {
            double anchor = C.row(i).dot(beta0);
            switch (rng.next_u64() % 4) {
            case 0: // equality
                l(i) = u(i) = anchor;
                break;
            case 1: // box
                l(i) = anchor - rng.next_unit();
                u(i) = anchor + rng.next_unit();
                break;
            case 2: // lower only
                l(i) = anchor - 0.5 * rng.next_unit() + 0.25;
                u(i) = kInf;
                break;
            default: // upper only
                l(i) = -kInf;
                u(i) = anchor + 0.5 * rng.next_unit() - 0.25;
                break;
            }
            if (l(i) > u(i))
                std::swap(l(i), u(i));
        }
        // one-sided rows may have cut beta0 out; full row rank keeps the
        // polytope nonempty regardless
        qp.cs.C = C;
        qp.cs.l = l;
        qp.cs.u = u;
        break;
    }
    return qp;
}

} // namespace oracles

#endif
