#pragma once

#include "gcgm/common.hpp"

#include <map>
#include <string>
#include <vector>

namespace gcgm {

/// Finite atomic set P0 scaled by C, i.e. the set C * conv(P0).
///
/// Three kinds are supported:
///  - SignedBasis:       atoms {+C e_k, -C e_k}. Atom ids are 2k (plus) and 2k+1 (minus).
///  - HypercubeVertices: atoms C * {-1,+1}^d. Atom id bit k set means coordinate k is -C.
///                       The LMO is a sign oracle, so the 2^d atoms are never materialized.
///  - ExplicitList:      m user supplied atoms stored column-wise; id is the column index.
///
/// Instances are immutable and safe to share between concurrent solver runs.
class AtomicSet {
public:
    enum class Kind { SignedBasis, HypercubeVertices, ExplicitList };

    static AtomicSet signed_basis(int dimension, double scale = 1.0);
    static AtomicSet hypercube(int dimension, double scale = 1.0);
    /// `atoms` is d x m, one atom per column. Atoms must be finite and pairwise distinct.
    static AtomicSet explicit_list(Matrix atoms, double scale = 1.0);

    Kind kind() const noexcept { return kind_; }
    int dimension() const noexcept { return dim_; }
    double scale() const noexcept { return scale_; }
    /// Number of atoms m (2d, 2^d or the column count). Saturates at INT64_MAX for huge cubes.
    AtomId size() const noexcept;
    /// True when 0 lies in C * conv(P0).
    bool contains_zero() const noexcept { return contains_zero_; }
    /// True when P0 = -P0.
    bool symmetric() const noexcept { return symmetric_; }

    /// Unscaled atoms of an explicit list (d x m). Empty for the implicit kinds.
    const Matrix& base_atoms() const noexcept { return atoms_; }

    /// The scaled atom C * p_id as a dense vector.
    Vector atom(AtomId id) const;
    /// C * p_id^T z, evaluated the same way by lmo() so the two agree bitwise.
    double dot(AtomId id, const Vector& z) const;
    /// x += weight * C * p_id
    void axpy(AtomId id, double weight, Vector& x) const;

    /// Whether a per-atom mask can be stored (always except for large hypercubes).
    bool maskable() const noexcept;

    /// Atom set {M p : p in P0} with the same scale, as an explicit list.
    AtomicSet transformed(const Matrix& map) const;
    /// Materialized copy as an explicit list (same atoms, same ids for the finite kinds).
    AtomicSet as_explicit() const;

    std::string describe() const;

private:
    AtomicSet() = default;

    Kind kind_ = Kind::SignedBasis;
    int dim_ = 0;
    double scale_ = 1.0;
    Matrix atoms_;
    bool contains_zero_ = true;
    bool symmetric_ = true;
};

/// Largest hypercube dimension for which per-vertex masks are materialized.
inline constexpr int kMaxMaskedHypercubeDim = 20;

/// Backing store for the active set S^(t).
///
/// For sets too large to mask (hypercubes beyond kMaxMaskedHypercubeDim) the mask
/// is implicitly full and cannot be narrowed.
class AtomMask {
public:
    AtomMask() = default;
    static AtomMask full(const AtomicSet& set);

    bool implicit() const noexcept { return implicit_; }
    bool active(AtomId id) const { return implicit_ || active_[static_cast<std::size_t>(id)] != 0; }
    AtomId active_count() const noexcept { return count_; }
    AtomId size() const noexcept { return implicit_ ? count_ : static_cast<AtomId>(active_.size()); }
    bool empty() const noexcept { return count_ == 0; }
    bool all_active() const noexcept { return implicit_ || count_ == static_cast<AtomId>(active_.size()); }

    /// Returns true if the atom was active.
    bool deactivate(AtomId id);
    std::vector<AtomId> active_ids() const;

private:
    std::vector<char> active_;
    AtomId count_ = 0;
    bool implicit_ = false;
};

struct LmoResult {
    AtomId atom = 0;
    double sigma = 0.0;
};

/// Active atom maximizing p^T z, ties to the lowest id. Throws ContractViolation on an empty mask.
LmoResult lmo(const AtomicSet& set, const AtomMask& mask, const Vector& z);
LmoResult lmo(const AtomicSet& set, const Vector& z);

/// sigma_{C P}(z) over the active atoms.
double support_value(const AtomicSet& set, const AtomMask& mask, const Vector& z);
double support_value(const AtomicSet& set, const Vector& z);
/// sigma over P u -P; equals max(sigma(z), sigma(-z)).
double symmetric_support_value(const AtomicSet& set, const Vector& z);

/// A minimal conic decomposition x = sum_i c_i atom_i.
struct GaugeDecomposition {
    double value = 0.0;
    std::map<AtomId, double> coefficients;
};

/// kappa_{C P}(x). Closed forms for the implicit kinds, exact simplex LP for explicit lists.
/// Throws InfeasibleGaugeError when x is outside cone(P0).
double gauge_value(const AtomicSet& set, const Vector& x);
GaugeDecomposition gauge_decomposition(const AtomicSet& set, const Vector& x);

/// P u -P with duplicates removed. Implicit kinds are already symmetric.
AtomicSet symmetrize(const AtomicSet& set);

/// Plain-text atom file: header `atoms <m> <d>` then one whitespace-separated atom per line.
AtomicSet load_atoms(const std::string& path, double scale = 1.0);
void save_atoms(const AtomicSet& set, const std::string& path);

}  // namespace gcgm
