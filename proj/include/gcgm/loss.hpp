#pragma once

#include "gcgm/atomic_set.hpp"
#include "gcgm/common.hpp"

#include <memory>
#include <string>

namespace gcgm {

/// Samples a_i^T as the rows of A (n x d) with targets b (n).
struct DataMatrix {
    Matrix A;
    Vector b;

    Eigen::Index samples() const noexcept { return A.rows(); }
    Eigen::Index features() const noexcept { return A.cols(); }
};

/// Dense CSV: a header line `n d`, then n lines of `a_i1,...,a_id,b_i`.
DataMatrix load_data_csv(const std::string& path);
void save_data_csv(const DataMatrix& data, const std::string& path);

/// Smooth convex loss over a shared, immutable data matrix.
///
///   quadratic  f(x) = 1/2 ||A x - b||^2
///   logistic   f(x) = (1/n) sum_i log(1 + exp(-b_i a_i^T x)),  b_i in {-1, +1}
///
/// Most evaluations come in two flavours: from x directly, or from the cached
/// prediction A x which the solver updates incrementally.
class Loss {
public:
    enum class Kind { Quadratic, Logistic };

    static Loss quadratic(DataMatrix data);
    static Loss logistic(DataMatrix data);

    Kind kind() const noexcept { return kind_; }
    const DataMatrix& data() const noexcept { return *data_; }
    Eigen::Index dimension() const noexcept { return data_->features(); }

    Vector predict(const Vector& x) const;

    double value(const Vector& x) const;
    Vector gradient(const Vector& x) const;
    double value_at_prediction(const Vector& prediction) const;
    Vector gradient_at_prediction(const Vector& prediction) const;

    /// Diagonal weights w with Hessian = A^T diag(w) A at the given prediction.
    Vector curvature_weights(const Vector& prediction) const;
    /// sup over predictions of the per-sample curvature: 1 (quadratic), 1/(4n) (logistic).
    double curvature_bound() const noexcept;

    /// g(w) = f(M w), i.e. the same loss with data A M.
    Loss composed_with(const Matrix& map) const;

    std::string describe() const;

private:
    Loss(Kind kind, std::shared_ptr<const DataMatrix> data) : kind_(kind), data_(std::move(data)) {}

    Kind kind_;
    std::shared_ptr<const DataMatrix> data_;
};

/// L such that f(y) <= f(x) + grad f(x)^T (y - x) + L/2 kappa_{P~}(y - x)^2, with
/// P~ = P u -P.
///
///   signed basis (scale C):  curvature_bound * C^2 * max_i ||A_{:,i}||^2
///   hypercube (scale C):     curvature_bound * C^2 * (sum_i ||A_{:,i}||)^2
///   explicit list:           curvature_bound * max_{p,q} |(A p)^T (A q)| over symmetrized atoms
double smoothness_wrt(const Loss& loss, const AtomicSet& set);

}  // namespace gcgm
