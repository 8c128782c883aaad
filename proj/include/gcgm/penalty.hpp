#pragma once

#include "gcgm/common.hpp"

#include <string>

namespace gcgm {

/// Quadratic-growth certificate phi(xi) >= mu * xi^2 - phi0 and the step bound
/// xi_step(nu) <= nu / mu + xi0.
///
/// mu == 0 means no such certificate exists and convergence is not guaranteed.
/// mu == +inf marks penalties whose domain is bounded by a capacity, for which
/// the step is simply bounded by xi0 = capacity.
struct GrowthConstants {
    double mu = 0.0;
    double phi0 = 0.0;
    double xi0 = 0.0;

    bool convergence_guaranteed() const noexcept { return mu > 0.0; }
    bool bounded_step() const noexcept { return is_infinite(mu); }
};

/// Scalar penalty phi : R+ -> R+ applied to the gauge, weighted by lambda.
///
///   power        lambda * xi^alpha / alpha                                 (alpha >= 1)
///   log-barrier  lambda * (-log(Cb - xi)/beta - xi/(Cb beta) + log(Cb)/beta) (xi < Cb)
///   indicator    0 on [0, Cb], +inf beyond (lambda has no effect)
///
/// The set scale C never enters here; it is folded into the AtomicSet.
class Penalty {
public:
    enum class Kind { Power, LogBarrier, Indicator };

    static Penalty power(double alpha, double lambda = 1.0);
    static Penalty log_barrier(double capacity, double beta, double lambda = 1.0);
    static Penalty indicator(double capacity);

    Kind kind() const noexcept { return kind_; }
    double lambda() const noexcept { return lambda_; }
    double alpha() const noexcept { return alpha_; }
    double capacity() const noexcept { return capacity_; }
    double beta() const noexcept { return beta_; }
    const GrowthConstants& growth() const noexcept { return growth_; }

    /// phi(xi); +inf outside the domain. Throws ContractViolation for xi < 0.
    double value(double xi) const;
    /// phi*(nu) = sup_{xi >= 0} nu xi - phi(xi). +inf for alpha = 1 and nu > lambda.
    double conjugate(double nu) const;
    /// argmin_{xi >= 0} -nu xi + phi(xi). Returns 0 for nu <= phi'(0+).
    /// Throws UnboundedStepError when the minimum is not attained (alpha = 1, nu > lambda).
    double xi_step(double nu) const;

    /// phi'(xi) and phi''(xi) on the interior of the domain. Only meaningful for smooth kinds.
    double derivative(double xi) const;
    double second_derivative(double xi) const;
    /// Twice differentiable on the open domain (everything except the indicator).
    bool smooth() const noexcept { return kind_ != Kind::Indicator; }

    std::string describe() const;

private:
    Penalty() = default;

    Kind kind_ = Kind::Power;
    double lambda_ = 1.0;
    double alpha_ = 2.0;
    double capacity_ = 0.0;
    double beta_ = 1.0;
    GrowthConstants growth_;
};

}  // namespace gcgm
