#pragma once

#include "gcgm/atomic_set.hpp"
#include "gcgm/common.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace gcgm {

/// Outcome of one pass of the gap-safe rule.
struct ScreenReport {
    std::int64_t t = 0;
    std::vector<AtomId> removed_ids;
    double threshold = 0.0;  // 2 sqrt(L gap)
    double sigma = 0.0;
    AtomId remaining = 0;
};

/// Gaps below -kGapRoundoff are treated as a corrupted certificate.
inline constexpr double kGapRoundoff = 1e-10;

/// Deactivate every active atom p with sigma + p^T grad > 2 sqrt(L gap).
///
/// `sigma` is the support value of -grad over the atoms the caller optimized
/// over, `gap` the primal-form gap at the same point and `L` the smoothness
/// constant relative to the symmetrized set. Such atoms cannot be in the support
/// of any minimizer. The test carries a relative roundoff guard of a few ulps
/// of sigma, and the highest scoring active atom is always kept.
///
/// Throws CertificateError when gap < -kGapRoundoff (nothing is removed).
ScreenReport apply_rule(AtomMask& mask, const AtomicSet& set, const Vector& grad, double sigma, double gap, double L,
                        std::int64_t t = 0);

/// Degeneracy margin: min over p outside the support of sigma(-grad*) + grad*^T p.
/// +inf when every atom is in the support. Hypercubes beyond the maskable size are rejected.
double delta(const AtomicSet& set, const Vector& grad_star, const std::vector<AtomId>& support_ids);

/// Atom ids whose ledger weight exceeds relative_tol times the largest weight.
std::vector<AtomId> support_of(const std::map<AtomId, double>& coeffs, double relative_tol = 1e-6);

/// sqrt(L * min_gap) < delta / 4: the active set is guaranteed to equal the support.
bool identification_reached(double L, double min_gap, double delta);

struct SupportCertificate {
    std::vector<AtomId> support_ids;
    std::optional<double> delta;
    std::optional<std::int64_t> identified_at;
    double L = 0.0;
    double min_gap = kInfinity;

    /// JSON document with fields support_ids, delta, identified_at, L, min_gap
    /// (non-finite numbers and missing values are written as null).
    std::string to_json() const;
};

}  // namespace gcgm
