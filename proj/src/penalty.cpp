#include "gcgm/penalty.hpp"

#include <iomanip>
#include <sstream>

namespace gcgm {
namespace {

// Iterates built as convex combinations of steps xi <= Cb can overshoot Cb by a
// few ulps; the indicator domain test absorbs exactly that much.
constexpr double kDomainSlack = 64 * std::numeric_limits<double>::epsilon();

void check_nonneg(double xi) {
    if (!(xi >= 0.0)) throw ContractViolation("penalty: argument must be nonnegative");
}

}  // namespace

Penalty Penalty::power(double alpha, double lambda) {
    require(alpha >= 1.0 && std::isfinite(alpha), "power penalty: alpha must be >= 1");
    require(lambda > 0.0 && std::isfinite(lambda), "power penalty: lambda must be positive");
    Penalty p;
    p.kind_ = Kind::Power;
    p.alpha_ = alpha;
    p.lambda_ = lambda;
    if (alpha >= 2.0) {
        // lambda xi^alpha / alpha >= (lambda/2) xi^2 - phi0 with the gap maximal at xi = 1.
        p.growth_.mu = lambda / 2.0;
        p.growth_.phi0 = alpha == 2.0 ? 0.0 : lambda * (alpha - 2.0) / (2.0 * alpha);
        // (nu/lambda)^(1/(alpha-1)) <= max(1, nu/lambda) <= 2 nu / lambda + 1.
        p.growth_.xi0 = alpha == 2.0 ? 0.0 : 1.0;
    }
    return p;
}

Penalty Penalty::log_barrier(double capacity, double beta, double lambda) {
    require(capacity > 0.0 && std::isfinite(capacity), "log-barrier: capacity must be positive");
    require(beta > 0.0 && std::isfinite(beta), "log-barrier: beta must be positive");
    require(lambda > 0.0 && std::isfinite(lambda), "log-barrier: lambda must be positive");
    Penalty p;
    p.kind_ = Kind::LogBarrier;
    p.capacity_ = capacity;
    p.beta_ = beta;
    p.lambda_ = lambda;
    p.growth_ = {kInfinity, 0.0, capacity};
    return p;
}

Penalty Penalty::indicator(double capacity) {
    require(capacity > 0.0 && std::isfinite(capacity), "indicator: capacity must be positive");
    Penalty p;
    p.kind_ = Kind::Indicator;
    p.capacity_ = capacity;
    p.lambda_ = 1.0;
    p.growth_ = {kInfinity, 0.0, capacity};
    return p;
}

double Penalty::value(double xi) const {
    check_nonneg(xi);
    switch (kind_) {
        case Kind::Power:
            if (is_infinite(xi)) return kInfinity;
            return lambda_ * std::pow(xi, alpha_) / alpha_;
        case Kind::LogBarrier: {
            if (xi >= capacity_) return kInfinity;
            const double r = xi / capacity_;
            // -log(Cb - xi) + log(Cb) = -log1p(-xi/Cb); the value at 0 is exactly 0.
            return lambda_ * (-std::log1p(-r) - r) / beta_;
        }
        case Kind::Indicator:
            return xi <= capacity_ * (1.0 + kDomainSlack) ? 0.0 : kInfinity;
    }
    return kInfinity;
}

double Penalty::conjugate(double nu) const {
    if (std::isnan(nu)) throw ContractViolation("penalty conjugate: nu is NaN");
    // phi is nondecreasing with phi(0) = 0, so phi*(nu) = 0 whenever nu <= phi'(0+).
    switch (kind_) {
        case Kind::Power: {
            if (alpha_ == 1.0) return nu <= lambda_ ? 0.0 : kInfinity;
            if (nu <= 0.0) return 0.0;
            const double conj_exp = alpha_ / (alpha_ - 1.0);
            return lambda_ * std::pow(nu / lambda_, conj_exp) / conj_exp;
        }
        case Kind::LogBarrier: {
            if (nu <= 0.0) return 0.0;
            const double v = nu / lambda_;
            const double C = capacity_;
            return lambda_ * (C * v - std::log1p(C * beta_ * v) / beta_);
        }
        case Kind::Indicator:
            return capacity_ * std::max(nu, 0.0);
    }
    return kInfinity;
}

double Penalty::xi_step(double nu) const {
    if (!std::isfinite(nu)) throw ContractViolation("xi_step: nu must be finite");
    switch (kind_) {
        case Kind::Power:
            if (alpha_ == 1.0) {
                if (nu > lambda_) {
                    throw UnboundedStepError("xi_step: penalty slope lambda is below the support value; step is unbounded");
                }
                return 0.0;
            }
            if (nu <= 0.0) return 0.0;
            if (alpha_ == 2.0) return nu / lambda_;
            return std::pow(nu / lambda_, 1.0 / (alpha_ - 1.0));
        case Kind::LogBarrier: {
            if (nu <= 0.0) return 0.0;
            const double v = nu / lambda_;
            const double C = capacity_;
            const double cbv = C * beta_ * v;
            // C^2 beta v / (C beta v + 1), written to stay below C for huge v.
            return C * (cbv / (cbv + 1.0));
        }
        case Kind::Indicator:
            return nu > 0.0 ? capacity_ : 0.0;
    }
    return 0.0;
}

double Penalty::derivative(double xi) const {
    check_nonneg(xi);
    switch (kind_) {
        case Kind::Power:
            return alpha_ == 1.0 ? lambda_ : lambda_ * std::pow(xi, alpha_ - 1.0);
        case Kind::LogBarrier:
            if (xi >= capacity_) return kInfinity;
            return lambda_ / beta_ * (1.0 / (capacity_ - xi) - 1.0 / capacity_);
        case Kind::Indicator:
            return 0.0;
    }
    return 0.0;
}

double Penalty::second_derivative(double xi) const {
    check_nonneg(xi);
    switch (kind_) {
        case Kind::Power:
            if (alpha_ == 1.0) return 0.0;
            if (alpha_ == 2.0) return lambda_;
            return lambda_ * (alpha_ - 1.0) * std::pow(xi, alpha_ - 2.0);
        case Kind::LogBarrier: {
            if (xi >= capacity_) return kInfinity;
            const double gap = capacity_ - xi;
            return lambda_ / (beta_ * gap * gap);
        }
        case Kind::Indicator:
            return 0.0;
    }
    return 0.0;
}

std::string Penalty::describe() const {
    std::ostringstream os;
    os << std::setprecision(17);
    switch (kind_) {
        case Kind::Power:
            os << "power(alpha=" << alpha_ << ",lambda=" << lambda_ << ")";
            break;
        case Kind::LogBarrier:
            os << "log-barrier(capacity=" << capacity_ << ",beta=" << beta_ << ",lambda=" << lambda_ << ")";
            break;
        case Kind::Indicator:
            os << "indicator(capacity=" << capacity_ << ")";
            break;
    }
    return os.str();
}

}  // namespace gcgm
