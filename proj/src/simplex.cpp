#include "gcgm/simplex.hpp"

#include <algorithm>
#include <vector>

namespace gcgm {
namespace {

constexpr double kPivotEps = 1e-11;

class Tableau {
public:
    Tableau(const Matrix& A, const Vector& b) : rows_(A.rows()), cols_(A.cols()) {
        // Columns: [0, cols) structural, [cols, cols + rows) artificial, last = rhs.
        T_ = Matrix::Zero(rows_ + 1, cols_ + rows_ + 1);
        basis_.resize(static_cast<std::size_t>(rows_));
        for (Eigen::Index i = 0; i < rows_; ++i) {
            const double sign = b(i) < 0 ? -1.0 : 1.0;
            T_.row(i).head(cols_) = sign * A.row(i);
            T_(i, cols_ + i) = 1.0;
            T_(i, rhs()) = sign * b(i);
            basis_[static_cast<std::size_t>(i)] = cols_ + i;
        }
    }

    Eigen::Index rhs() const { return cols_ + rows_; }
    Eigen::Index obj() const { return rows_; }
    bool artificial(Eigen::Index j) const { return j >= cols_ && j < cols_ + rows_; }

    // Rebuild the reduced-cost row for the given column costs.
    void set_objective(const Vector& column_cost) {
        T_.row(obj()).setZero();
        T_.row(obj()).head(column_cost.size()) = column_cost.transpose();
        for (Eigen::Index i = 0; i < rows_; ++i) {
            const double cb = column_cost(basis_[static_cast<std::size_t>(i)]);
            if (cb != 0.0) T_.row(obj()) -= cb * T_.row(i);
        }
    }

    void pivot(Eigen::Index r, Eigen::Index c) {
        T_.row(r) /= T_(r, c);
        for (Eigen::Index i = 0; i <= rows_; ++i) {
            if (i == r) continue;
            const double f = T_(i, c);
            if (f != 0.0) T_.row(i) -= f * T_.row(r);
        }
        basis_[static_cast<std::size_t>(r)] = c;
    }

    // Bland's rule iterations. Returns false if unbounded.
    bool optimize(bool allow_artificial) {
        const Eigen::Index limit = 50 * (cols_ + rows_ + 1) + 1000;
        for (Eigen::Index iter = 0; iter < limit; ++iter) {
            Eigen::Index enter = -1;
            for (Eigen::Index j = 0; j < cols_ + rows_; ++j) {
                if (!allow_artificial && artificial(j)) continue;
                if (T_(obj(), j) < -kPivotEps) {
                    enter = j;
                    break;
                }
            }
            if (enter < 0) return true;

            Eigen::Index leave = -1;
            double best_ratio = kInfinity;
            for (Eigen::Index i = 0; i < rows_; ++i) {
                const double a = T_(i, enter);
                if (a <= kPivotEps) continue;
                const double ratio = T_(i, rhs()) / a;
                const bool better = leave < 0 || ratio < best_ratio - 1e-14;
                const bool tie_lower_index =
                    leave >= 0 && ratio <= best_ratio + 1e-14 &&
                    basis_[static_cast<std::size_t>(i)] < basis_[static_cast<std::size_t>(leave)];
                if (better || tie_lower_index) {
                    best_ratio = std::min(best_ratio, ratio);
                    leave = i;
                }
            }
            if (leave < 0) return false;
            pivot(leave, enter);
        }
        throw std::runtime_error("simplex: iteration limit reached");
    }

    // Pivot artificial variables out of the basis where possible.
    void expel_artificials() {
        for (Eigen::Index i = 0; i < rows_; ++i) {
            if (!artificial(basis_[static_cast<std::size_t>(i)])) continue;
            Eigen::Index best = -1;
            double best_abs = kPivotEps;
            for (Eigen::Index j = 0; j < cols_; ++j) {
                if (std::abs(T_(i, j)) > best_abs) {
                    best_abs = std::abs(T_(i, j));
                    best = j;
                }
            }
            // A row without structural entries is redundant; its artificial stays at zero.
            if (best >= 0) pivot(i, best);
        }
    }

    double objective_value() const { return -T_(obj(), rhs()); }

    Vector solution() const {
        Vector x = Vector::Zero(cols_);
        for (Eigen::Index i = 0; i < rows_; ++i) {
            const Eigen::Index j = basis_[static_cast<std::size_t>(i)];
            if (j < cols_) x(j) = std::max(0.0, T_(i, rhs()));
        }
        return x;
    }

private:
    Eigen::Index rows_;
    Eigen::Index cols_;
    Matrix T_;
    std::vector<Eigen::Index> basis_;
};

}  // namespace

LpResult solve_standard_lp(const Matrix& A, const Vector& b, const Vector& cost) {
    require(A.rows() == b.size(), "solve_standard_lp: row count mismatch");
    require(A.cols() == cost.size(), "solve_standard_lp: column count mismatch");

    LpResult result;
    const Eigen::Index rows = A.rows();
    const Eigen::Index cols = A.cols();

    Tableau tab(A, b);

    Vector phase1 = Vector::Zero(cols + rows);
    phase1.tail(rows).setOnes();
    tab.set_objective(phase1);
    tab.optimize(true);

    const double feas_tol = 1e-9 * (1.0 + b.lpNorm<1>());
    if (tab.objective_value() > feas_tol) {
        result.status = LpStatus::Infeasible;
        return result;
    }
    tab.expel_artificials();

    Vector phase2 = Vector::Zero(cols + rows);
    phase2.head(cols) = cost;
    tab.set_objective(phase2);
    if (!tab.optimize(false)) {
        result.status = LpStatus::Unbounded;
        return result;
    }

    result.status = LpStatus::Optimal;
    result.x = tab.solution();
    result.value = cost.dot(result.x);
    return result;
}

}  // namespace gcgm
