#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace gcgm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using AtomId = std::int64_t;

// +inf is the single sentinel for "outside the penalty domain" / "unbounded".
// IEEE infinity already saturates under +, max and comparisons, so nothing
// downstream needs special casing beyond is_infinite().
inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

inline bool is_infinite(double v) noexcept { return v == kInfinity; }

// Error hierarchy. Everything derives from std::runtime_error or
// std::logic_error so callers that do not care can catch the std base.

/// A caller broke an operation's precondition.
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// The scalar step has no finite minimizer (penalty grows too slowly).
class UnboundedStepError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The iterates left every sane range (non-finite values or runaway growth).
class DivergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// x is not in the cone generated by the atoms, so its gauge is +inf.
class InfeasibleGaugeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A duality gap came out negative beyond roundoff; screening must stop.
class CertificateError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input file. Carries the byte offset where parsing failed.
class FormatError : public std::runtime_error {
public:
    FormatError(const std::string& what, std::int64_t offset = -1)
        : std::runtime_error(offset >= 0 ? what + " (at byte offset " + std::to_string(offset) + ")" : what),
          offset_(offset) {}

    std::int64_t offset() const noexcept { return offset_; }

private:
    std::int64_t offset_;
};

inline void require(bool cond, const char* msg) {
    if (!cond) throw ContractViolation(msg);
}

inline bool all_finite(const Vector& v) { return v.allFinite(); }

}  // namespace gcgm
