#ifndef CIRLS_QP_HPP
#define CIRLS_QP_HPP

#include <cmath>
#include <vector>

#include "cirls/common.hpp"
#include "cirls/constraints.hpp"

namespace cirls {

// Strictly convex CIRLS step: minimise beta' H beta - 2 q' beta
// subject to l <= C beta <= u.
struct QpProblem {
    Matrix H; // p x p, symmetric positive definite (X' W X)
    Vector q; // length p (X' W z)
    ConstraintSet cs;
};

struct QpSolution {
    Vector beta;
    // Signed multipliers per original constraint row, in the convention
    // 2 H beta - 2 q = C' duals: >= 0 on active lower rows, <= 0 on active
    // upper rows, 0 on inactive rows.
    Vector duals;
    ActiveSet active;
    int iterations = 0;
    double objective = 0.0;
};

namespace qp_detail {

// One-sided expansion of a two-sided row: a' x >= b (or = b for equalities).
struct OneSided {
    Vector a;
    double b;
    int row;        // original constraint row
    BoundSide side; // which bound of the row this represents
    bool equality;
};

inline void expand_constraints(const ConstraintSet &cs, std::vector<OneSided> &eq,
                               std::vector<OneSided> &ineq)
{
    for (int i = 0; i < cs.rows(); ++i) {
        Vector c = cs.C.row(i).transpose();
        if (cs.is_equality_row(i)) {
            eq.push_back({c, cs.l(i), i, BoundSide::lower, true});
            continue;
        }
        if (cs.l(i) > -kInf)
            ineq.push_back({c, cs.l(i), i, BoundSide::lower, false});
        if (cs.u(i) < kInf)
            ineq.push_back({-c, -cs.u(i), i, BoundSide::upper, false});
    }
}

// Apply the Givens-based update that rotates component j of d into j-1,
// carrying the same rotation into the columns of J.
inline void rotate_into(Matrix &J, Vector &d, int j)
{
    double cc = d(j - 1);
    double ss = d(j);
    double h = std::hypot(cc, ss);
    if (h == 0.0)
        return;
    d(j) = 0.0;
    ss /= h;
    cc /= h;
    if (cc < 0.0) {
        cc = -cc;
        ss = -ss;
        d(j - 1) = -h;
    } else {
        d(j - 1) = h;
    }
    double xny = ss / (1.0 + cc);
    for (int k = 0; k < J.rows(); ++k) {
        double t1 = J(k, j - 1);
        double t2 = J(k, j);
        J(k, j - 1) = t1 * cc + t2 * ss;
        J(k, j) = xny * (t1 + J(k, j - 1)) - t2;
    }
}

} // namespace qp_detail

// Goldfarb-Idnani dual active-set method. The Cholesky factor of H is
// computed once; the active-set factorisation (J, R) is maintained by
// Givens updates across pivots. Blocking-constraint ties are broken by
// lowest one-sided index.
class GoldfarbIdnani {
public:
    // allow_ridge: on Cholesky failure retry once with jitter
    // delta * trace(H)/p, delta = 1e-10. Never applied silently elsewhere.
    static QpSolution solve(const QpProblem &qp, const ActiveSet &prior_active = {},
                            bool allow_ridge = false)
    {
        const int p = static_cast<int>(qp.H.rows());
        if (qp.H.cols() != p || qp.q.size() != p)
            fail(ErrorCode::DimensionMismatch, "QP matrices have inconsistent sizes");
        validate(qp.cs, p);

        std::vector<qp_detail::OneSided> eqc, inc;
        qp_detail::expand_constraints(qp.cs, eqc, inc);
        const int me = static_cast<int>(eqc.size());
        const int mi = static_cast<int>(inc.size());
        const int max_pivots = 50 * (p + qp.cs.rows() + 1);

        // Internally minimise 1/2 x' G x + g0' x with G = 2H, g0 = -2q, so
        // the GI multipliers are exactly the spec's signed duals.
        Matrix G = qp.H + qp.H.transpose(); // 2H, symmetrised
        Vector g0 = -2.0 * qp.q;

        Eigen::LLT<Matrix> llt(G);
        if (llt.info() != Eigen::Success) {
            if (!allow_ridge)
                fail(ErrorCode::NotPositiveDefinite, "Cholesky factorisation of H failed");
            double jitter = 1e-10 * G.trace() / p;
            llt.compute(G + jitter * Matrix::Identity(p, p));
            if (llt.info() != Eigen::Success)
                fail(ErrorCode::NotPositiveDefinite, "H not positive definite even with ridge");
        }
        Matrix L = llt.matrixL();
        const double c1 = G.trace();

        // J = L^{-T}; columns iq..p-1 span the reduced (free) space.
        Matrix J = L.transpose()
                       .triangularView<Eigen::Upper>()
                       .solve(Matrix::Identity(p, p));
        const double c2 = J.trace();

        Vector x = -llt.solve(g0);
        double f = 0.5 * g0.dot(x);

        Matrix R = Matrix::Zero(p, p);
        double R_norm = 1.0;
        int iq = 0;
        std::vector<int> A(static_cast<std::size_t>(p) + 1, 0); // active one-sided ids; <0 marks equality
        Vector u = Vector::Zero(p + 1);
        Vector d(p), z(p), r(p), np(p);
        int iterations = 0;

        auto compute_steps = [&](const Vector &normal) {
            d = J.transpose() * normal;
            z.setZero();
            if (iq < p)
                z = J.rightCols(p - iq) * d.tail(p - iq);
            if (iq > 0)
                r.head(iq) = R.topLeftCorner(iq, iq)
                                 .triangularView<Eigen::Upper>()
                                 .solve(d.head(iq));
        };

        auto add_constraint = [&]() -> bool {
            for (int j = p - 1; j >= iq + 1; --j)
                qp_detail::rotate_into(J, d, j);
            ++iq;
            R.col(iq - 1).head(iq) = d.head(iq);
            if (std::abs(d(iq - 1)) <= 1e-12 * R_norm)
                return false; // numerically dependent on the working set
            R_norm = std::max(R_norm, std::abs(d(iq - 1)));
            return true;
        };

        auto delete_constraint = [&](int one_sided_id) {
            int qq = -1;
            for (int i = me; i < iq; ++i)
                if (A[static_cast<std::size_t>(i)] == one_sided_id) {
                    qq = i;
                    break;
                }
            for (int i = qq; i < iq - 1; ++i) {
                A[static_cast<std::size_t>(i)] = A[static_cast<std::size_t>(i + 1)];
                u(i) = u(i + 1);
                R.col(i) = R.col(i + 1);
            }
            A[static_cast<std::size_t>(iq - 1)] = A[static_cast<std::size_t>(iq)];
            u(iq - 1) = u(iq);
            A[static_cast<std::size_t>(iq)] = 0;
            u(iq) = 0.0;
            for (int j = 0; j < iq; ++j)
                R(j, iq - 1) = 0.0;
            --iq;
            if (iq == 0)
                return;
            for (int j = qq; j < iq; ++j) {
                double cc = R(j, j);
                double ss = R(j + 1, j);
                double h = std::hypot(cc, ss);
                if (h == 0.0)
                    continue;
                cc /= h;
                ss /= h;
                R(j + 1, j) = 0.0;
                if (cc < 0.0) {
                    R(j, j) = -h;
                    cc = -cc;
                    ss = -ss;
                } else {
                    R(j, j) = h;
                }
                double xny = ss / (1.0 + cc);
                for (int k = j + 1; k < iq; ++k) {
                    double t1 = R(j, k);
                    double t2 = R(j + 1, k);
                    R(j, k) = t1 * cc + t2 * ss;
                    R(j + 1, k) = xny * (t1 + R(j, k)) - t2;
                }
                for (int k = 0; k < p; ++k) {
                    double t1 = J(k, j);
                    double t2 = J(k, j + 1);
                    J(k, j) = t1 * cc + t2 * ss;
                    J(k, j + 1) = xny * (J(k, j) + t1) - t2;
                }
            }
        };

        // Phase 1: pin equality constraints into the working set.
        for (int i = 0; i < me; ++i) {
            np = eqc[static_cast<std::size_t>(i)].a;
            compute_steps(np);
            double t2 = 0.0;
            double zn = z.dot(np);
            if (z.norm() > 1e-13 * np.norm())
                t2 = (eqc[static_cast<std::size_t>(i)].b - np.dot(x)) / zn;
            else if (std::abs(eqc[static_cast<std::size_t>(i)].b - np.dot(x)) >
                     1e-8 * (1.0 + std::abs(eqc[static_cast<std::size_t>(i)].b)))
                fail(ErrorCode::Infeasible, "inconsistent equality constraints");
            x += t2 * z;
            u.head(iq) -= t2 * r.head(iq);
            u(iq) = t2;
            f += 0.5 * t2 * t2 * zn;
            A[static_cast<std::size_t>(iq)] = -i - 1;
            if (!add_constraint())
                fail(ErrorCode::RankDeficientConstraints,
                     "equality constraints are linearly dependent");
        }

        // Preferred pivot order for warm starts: constraints from a prior
        // active set are tried first. Only the order changes, never the
        // unique optimum.
        std::vector<bool> preferred(static_cast<std::size_t>(mi), false);
        for (int i = 0; i < mi; ++i)
            if (prior_active.count({inc[static_cast<std::size_t>(i)].row,
                                    inc[static_cast<std::size_t>(i)].side}))
                preferred[static_cast<std::size_t>(i)] = true;

        std::vector<bool> in_active(static_cast<std::size_t>(mi), false);
        std::vector<bool> excluded(static_cast<std::size_t>(mi), false);
        Vector s = Vector::Zero(std::max(mi, 1));
        const double feas_tol = 100.0 * mi * 1e-12 * std::abs(c1 * c2) + 1e-12;

        while (true) {
            // Violation scan over inactive inequality constraints.
            double psi = 0.0;
            for (int i = 0; i < mi; ++i) {
                const auto &ci = inc[static_cast<std::size_t>(i)];
                s(i) = ci.a.dot(x) - ci.b;
                if (!in_active[static_cast<std::size_t>(i)])
                    psi += std::min(0.0, s(i));
                excluded[static_cast<std::size_t>(i)] = false;
            }
            if (std::abs(psi) <= feas_tol)
                break; // all constraints satisfied

            int ip = -1;
            bool retry_choice = true;
            while (retry_choice) {
                retry_choice = false;
                ip = -1;
                double worst = 0.0;
                for (int i = 0; i < mi; ++i) {
                    if (in_active[static_cast<std::size_t>(i)] ||
                        excluded[static_cast<std::size_t>(i)])
                        continue;
                    if (s(i) >= -1e-12)
                        continue;
                    if (preferred[static_cast<std::size_t>(i)]) {
                        ip = i;
                        break;
                    }
                    if (ip < 0 || s(i) < worst) {
                        ip = i;
                        worst = s(i);
                    }
                }
                if (ip < 0)
                    break;

                np = inc[static_cast<std::size_t>(ip)].a;
                u(iq) = 0.0;

                // Snapshot so a numerically dependent constraint can be
                // rejected without corrupting the working-set factorisation.
                Vector x_save = x;
                Vector u_save = u;
                Matrix J_save = J;
                Matrix R_save = R;
                std::vector<int> A_save = A;
                std::vector<bool> in_save = in_active;
                double f_save = f, Rn_save = R_norm;
                int iq_save = iq;

                // Inner dual iteration for the chosen violated constraint.
                while (true) {
                    if (++iterations > max_pivots)
                        fail(ErrorCode::MaxIterationsExceeded,
                             "dual active-set iteration cap exceeded");
                    compute_steps(np);

                    // Partial step bound from active inequality multipliers;
                    // ties broken by lowest one-sided index via strict <.
                    double t1 = kInf;
                    int drop_id = -1;
                    for (int k = me; k < iq; ++k) {
                        if (r(k) > 0.0 && A[static_cast<std::size_t>(k)] >= 0) {
                            double ratio = u(k) / r(k);
                            if (ratio < t1) {
                                t1 = ratio;
                                drop_id = A[static_cast<std::size_t>(k)];
                            }
                        }
                    }
                    double zn = z.dot(np);
                    double t2 = (z.norm() > 1e-13 * (1.0 + np.norm())) ? -s(ip) / zn : kInf;
                    double t = std::min(t1, t2);

                    if (t == kInf)
                        fail(ErrorCode::Infeasible, "constraint polytope is empty");

                    if (t2 == kInf) {
                        // Dual-only step: drop the blocking constraint.
                        u.head(iq) -= t * r.head(iq);
                        u(iq) += t;
                        in_active[static_cast<std::size_t>(drop_id)] = false;
                        delete_constraint(drop_id);
                        continue;
                    }

                    x += t * z;
                    f += t * zn * (0.5 * t + u(iq));
                    u.head(iq) -= t * r.head(iq);
                    u(iq) += t;

                    if (std::abs(t - t2) < 1e-13 * (1.0 + std::abs(t2))) {
                        // Full step: the violated constraint becomes active.
                        A[static_cast<std::size_t>(iq)] = ip;
                        if (!add_constraint()) {
                            x = x_save;
                            u = u_save;
                            J = J_save;
                            R = R_save;
                            A = A_save;
                            in_active = in_save;
                            f = f_save;
                            R_norm = Rn_save;
                            iq = iq_save;
                            excluded[static_cast<std::size_t>(ip)] = true;
                            retry_choice = true;
                            break;
                        }
                        in_active[static_cast<std::size_t>(ip)] = true;
                        break;
                    }
                    // Partial step: drop blocker, re-evaluate violation.
                    in_active[static_cast<std::size_t>(drop_id)] = false;
                    delete_constraint(drop_id);
                    s(ip) = np.dot(x) - inc[static_cast<std::size_t>(ip)].b;
                }
            }
            if (ip < 0)
                break;
        }

        QpSolution sol;
        sol.beta = x;
        sol.iterations = iterations;
        sol.objective = x.dot(qp.H * x) - 2.0 * qp.q.dot(x);
        sol.duals = Vector::Zero(qp.cs.rows());
        for (int k = 0; k < iq; ++k) {
            int id = A[static_cast<std::size_t>(k)];
            if (id < 0) {
                const auto &c = eqc[static_cast<std::size_t>(-id - 1)];
                sol.duals(c.row) = u(k);
                sol.active.insert({c.row, BoundSide::lower});
            } else {
                const auto &c = inc[static_cast<std::size_t>(id)];
                sol.duals(c.row) += (c.side == BoundSide::lower ? u(k) : -u(k));
                sol.active.insert({c.row, c.side});
            }
        }
        return sol;
    }
};

inline QpSolution qp_solve(const QpProblem &qp)
{
    return GoldfarbIdnani::solve(qp);
}

// Warm start affects pivot order only; the returned solution is identical
// to a cold solve.
inline QpSolution qp_solve_warm(const QpProblem &qp, const ActiveSet &prior_active)
{
    return GoldfarbIdnani::solve(qp, prior_active);
}

} // namespace cirls

#endif
