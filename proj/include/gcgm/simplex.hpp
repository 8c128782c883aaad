#pragma once

#include "gcgm/common.hpp"

namespace gcgm {

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpResult {
    LpStatus status = LpStatus::Infeasible;
    Vector x;
    double value = 0.0;
};

/// Dense two-phase primal simplex for
///
///     minimize cost^T x  subject to  A x = b,  x >= 0.
///
/// Bland's rule is used in both phases, so it terminates on degenerate
/// problems at the price of speed. Intended for desk-scale problems
/// (tens of rows, a few hundred columns).
LpResult solve_standard_lp(const Matrix& A, const Vector& b, const Vector& cost);

}  // namespace gcgm
