#ifndef CIRLS_CONSTRAINTS_HPP
#define CIRLS_CONSTRAINTS_HPP

#include <algorithm>
#include <cmath>
#include <set>
#include <utility>
#include <vector>

#include "cirls/common.hpp"

namespace cirls {

enum class BoundSide { lower, upper };

// (constraint row, which bound holds with equality)
using ActiveSet = std::set<std::pair<int, BoundSide>>;

// Linear constraint system l <= C beta <= u. Infinite bounds are explicit
// +/-inf sentinels; arithmetic must branch on them rather than treat them
// as large finite numbers.
struct ConstraintSet {
    Matrix C; // m x p
    Vector l; // length m, entries may be -inf
    Vector u; // length m, entries may be +inf

    int rows() const { return static_cast<int>(C.rows()); }
    int cols() const { return static_cast<int>(C.cols()); }
    bool empty() const { return C.rows() == 0; }

    bool is_equality_row(int i) const { return l(i) == u(i); }

    static ConstraintSet none(int p)
    {
        ConstraintSet cs;
        cs.C = Matrix::Zero(0, p);
        cs.l = Vector::Zero(0);
        cs.u = Vector::Zero(0);
        return cs;
    }
};

// D = [C; H] with H an orthonormal basis of the null space of C, so the
// augmented system is invertible and samples can be mapped back to beta.
struct AugmentedConstraints {
    Matrix D;     // p x p
    Vector l_aug; // length p
    Vector u_aug; // length p
    int m;        // original constraint count
};

inline void validate(const ConstraintSet &cs, int p)
{
    const int m = cs.rows();
    if (cs.cols() != p)
        fail(ErrorCode::DimensionMismatch,
             "constraint matrix has " + std::to_string(cs.cols()) +
                 " columns, expected " + std::to_string(p));
    if (cs.l.size() != m || cs.u.size() != m)
        fail(ErrorCode::DimensionMismatch, "bound vectors do not match constraint rows");
    for (int i = 0; i < m; ++i) {
        if (cs.l(i) > cs.u(i))
            fail(ErrorCode::InvalidBounds, "row " + std::to_string(i + 1) + " has l > u");
        if (cs.l(i) == -kInf && cs.u(i) == kInf)
            fail(ErrorCode::UnboundedRow,
                 "row " + std::to_string(i + 1) + " has both bounds infinite");
        if (cs.C.row(i).cwiseAbs().maxCoeff() == 0.0)
            fail(ErrorCode::ZeroRow, "row " + std::to_string(i + 1) + " is entirely zero");
        if (!cs.C.row(i).allFinite())
            fail(ErrorCode::InvalidData, "row " + std::to_string(i + 1) + " has non-finite entries");
    }
    if (m > 0) {
        Eigen::JacobiSVD<Matrix> svd(cs.C);
        double thresh = 1e-10 * svd.singularValues()(0);
        int rank = 0;
        for (int i = 0; i < svd.singularValues().size(); ++i)
            if (svd.singularValues()(i) > thresh)
                ++rank;
        if (rank < m)
            fail(ErrorCode::RankDeficientConstraints,
                 "constraint rows are linearly dependent (rank " + std::to_string(rank) +
                     " < m = " + std::to_string(m) + ")");
    }
}

// Nonnegativity of selected coefficients: one standard-basis row per index.
// Indices are 1-based.
inline ConstraintSet build_nonneg(int p, const std::vector<int> &indices)
{
    if (indices.empty())
        fail(ErrorCode::TooFewIndices, "nonneg builder needs at least one index");
    ConstraintSet cs;
    const int m = static_cast<int>(indices.size());
    cs.C = Matrix::Zero(m, p);
    cs.l = Vector::Zero(m);
    cs.u = Vector::Constant(m, kInf);
    for (int i = 0; i < m; ++i) {
        int j = indices[static_cast<std::size_t>(i)];
        if (j < 1 || j > p)
            fail(ErrorCode::IndexOutOfRange,
                 "index " + std::to_string(j) + " outside 1.." + std::to_string(p));
        cs.C(i, j - 1) = 1.0;
    }
    return cs;
}

// Sum-to-zero equality over the selected coefficients (single row, l = u = 0).
inline ConstraintSet build_sumzero(int p, const std::vector<int> &indices)
{
    if (indices.size() < 2)
        fail(ErrorCode::TooFewIndices, "sumzero builder needs at least two indices");
    ConstraintSet cs;
    cs.C = Matrix::Zero(1, p);
    cs.l = Vector::Zero(1);
    cs.u = Vector::Zero(1);
    for (int j : indices) {
        if (j < 1 || j > p)
            fail(ErrorCode::IndexOutOfRange,
                 "index " + std::to_string(j) + " outside 1.." + std::to_string(p));
        cs.C(0, j - 1) = 1.0;
    }
    return cs;
}

// Nondecreasing run: rows beta_{j+1} - beta_j >= 0 over a consecutive run of
// coefficients [first, first + k - 1], 1-based.
inline ConstraintSet build_monotone_increasing(int p, int first, int run_length)
{
    if (run_length < 2)
        fail(ErrorCode::RunTooShort, "monotone run must cover at least two coefficients");
    if (first < 1 || first + run_length - 1 > p)
        fail(ErrorCode::IndexOutOfRange, "monotone run falls outside 1..p");
    ConstraintSet cs;
    const int m = run_length - 1;
    cs.C = Matrix::Zero(m, p);
    cs.l = Vector::Zero(m);
    cs.u = Vector::Constant(m, kInf);
    for (int i = 0; i < m; ++i) {
        cs.C(i, first - 1 + i) = -1.0;
        cs.C(i, first + i) = 1.0;
    }
    return cs;
}

inline AugmentedConstraints augment(const ConstraintSet &cs)
{
    const int m = cs.rows();
    const int p = cs.cols();
    if (m > p)
        fail(ErrorCode::TooManyConstraints,
             "cannot augment: m = " + std::to_string(m) + " > p = " + std::to_string(p));

    AugmentedConstraints aug;
    aug.m = m;
    aug.D = Matrix::Zero(p, p);
    aug.l_aug = Vector::Constant(p, -kInf);
    aug.u_aug = Vector::Constant(p, kInf);

    if (m == 0) {
        aug.D = Matrix::Identity(p, p);
        return aug;
    }

    aug.D.topRows(m) = cs.C;
    aug.l_aug.head(m) = cs.l;
    aug.u_aug.head(m) = cs.u;

    if (m < p) {
        // Orthonormal null-space basis of C from the full QR of C^T: the
        // trailing p - m columns of Q span ker(C).
        Eigen::HouseholderQR<Matrix> qr(cs.C.transpose());
        Matrix Q = qr.householderQ();
        aug.D.bottomRows(p - m) = Q.rightCols(p - m).transpose();
    }
    return aug;
}

// Rows holding with equality at beta, with relative tolerance
// tol * (1 + |bound|). Equality rows (l = u) are reported once, as lower.
inline ActiveSet active_set(const ConstraintSet &cs, const Vector &beta, double tol = 1e-6)
{
    if (beta.size() != cs.cols())
        fail(ErrorCode::DimensionMismatch, "beta length does not match constraint columns");
    ActiveSet out;
    for (int i = 0; i < cs.rows(); ++i) {
        double v = cs.C.row(i).dot(beta);
        if (cs.l(i) > -kInf && std::abs(v - cs.l(i)) <= tol * (1.0 + std::abs(cs.l(i)))) {
            out.insert({i, BoundSide::lower});
            continue;
        }
        if (cs.is_equality_row(i))
            continue;
        if (cs.u(i) < kInf && std::abs(v - cs.u(i)) <= tol * (1.0 + std::abs(cs.u(i))))
            out.insert({i, BoundSide::upper});
    }
    return out;
}

// Count of active rows with equality rows counted once.
inline int active_row_count(const ActiveSet &active)
{
    std::set<int> rows;
    for (const auto &[row, side] : active)
        rows.insert(row);
    return static_cast<int>(rows.size());
}

inline bool is_feasible(const ConstraintSet &cs, const Vector &beta, double eps = 1e-8)
{
    for (int i = 0; i < cs.rows(); ++i) {
        double v = cs.C.row(i).dot(beta);
        if (cs.l(i) > -kInf && v < cs.l(i) - eps * (1.0 + std::abs(cs.l(i))))
            return false;
        if (cs.u(i) < kInf && v > cs.u(i) + eps * (1.0 + std::abs(cs.u(i))))
            return false;
    }
    return true;
}

} // namespace cirls

#endif
