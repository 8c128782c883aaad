#include "gcgm/atomic_set.hpp"

#include "gcgm/simplex.hpp"
#include "text_reader.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace gcgm {
namespace {

bool same_atom(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b) {
    const double tol = 1e-12 * std::max({1.0, a.lpNorm<Eigen::Infinity>(), b.lpNorm<Eigen::Infinity>()});
    return (a - b).lpNorm<Eigen::Infinity>() <= tol;
}

bool zero_in_hull(const Matrix& atoms) {
    const Eigen::Index d = atoms.rows();
    const Eigen::Index m = atoms.cols();
    Matrix A(d + 1, m);
    A.topRows(d) = atoms;
    A.row(d).setOnes();
    Vector b = Vector::Zero(d + 1);
    b(d) = 1.0;
    return solve_standard_lp(A, b, Vector::Zero(m)).status == LpStatus::Optimal;
}

bool closed_under_negation(const Matrix& atoms) {
    for (Eigen::Index i = 0; i < atoms.cols(); ++i) {
        bool found = false;
        for (Eigen::Index j = 0; j < atoms.cols() && !found; ++j) {
            found = same_atom(atoms.col(j), -atoms.col(i));
        }
        if (!found) return false;
    }
    return true;
}

void check_atom_id(const AtomicSet& set, AtomId id) {
    if (id < 0 || id >= set.size()) throw ContractViolation("atom id out of range");
}

}  // namespace

AtomicSet AtomicSet::signed_basis(int dimension, double scale) {
    require(dimension >= 1, "signed_basis: dimension must be positive");
    require(scale > 0 && std::isfinite(scale), "signed_basis: scale must be positive and finite");
    AtomicSet s;
    s.kind_ = Kind::SignedBasis;
    s.dim_ = dimension;
    s.scale_ = scale;
    return s;
}

AtomicSet AtomicSet::hypercube(int dimension, double scale) {
    require(dimension >= 1, "hypercube: dimension must be positive");
    require(dimension <= 62, "hypercube: vertex ids are 64-bit masks, dimension must be <= 62");
    require(scale > 0 && std::isfinite(scale), "hypercube: scale must be positive and finite");
    AtomicSet s;
    s.kind_ = Kind::HypercubeVertices;
    s.dim_ = dimension;
    s.scale_ = scale;
    return s;
}

AtomicSet AtomicSet::explicit_list(Matrix atoms, double scale) {
    require(atoms.rows() >= 1 && atoms.cols() >= 1, "explicit_list: need at least one atom of positive dimension");
    require(atoms.allFinite(), "explicit_list: atoms must be finite");
    require(scale > 0 && std::isfinite(scale), "explicit_list: scale must be positive and finite");
    for (Eigen::Index i = 0; i < atoms.cols(); ++i) {
        for (Eigen::Index j = i + 1; j < atoms.cols(); ++j) {
            if (same_atom(atoms.col(i), atoms.col(j))) throw ContractViolation("explicit_list: duplicate atoms");
        }
    }
    AtomicSet s;
    s.kind_ = Kind::ExplicitList;
    s.dim_ = static_cast<int>(atoms.rows());
    s.scale_ = scale;
    s.atoms_ = std::move(atoms);
    s.contains_zero_ = zero_in_hull(s.atoms_);
    s.symmetric_ = closed_under_negation(s.atoms_);
    return s;
}

AtomId AtomicSet::size() const noexcept {
    switch (kind_) {
        case Kind::SignedBasis:
            return 2 * static_cast<AtomId>(dim_);
        case Kind::HypercubeVertices:
            return dim_ >= 63 ? std::numeric_limits<AtomId>::max() : (AtomId{1} << dim_);
        case Kind::ExplicitList:
            return static_cast<AtomId>(atoms_.cols());
    }
    return 0;
}

bool AtomicSet::maskable() const noexcept {
    return kind_ != Kind::HypercubeVertices || dim_ <= kMaxMaskedHypercubeDim;
}

Vector AtomicSet::atom(AtomId id) const {
    Vector v = Vector::Zero(dim_);
    axpy(id, 1.0, v);
    return v;
}

double AtomicSet::dot(AtomId id, const Vector& z) const {
    check_atom_id(*this, id);
    switch (kind_) {
        case Kind::SignedBasis: {
            const double zk = z(static_cast<Eigen::Index>(id / 2));
            return scale_ * ((id % 2 == 0) ? zk : -zk);
        }
        case Kind::HypercubeVertices: {
            double acc = 0.0;
            for (int k = 0; k < dim_; ++k) acc += ((id >> k) & 1) ? -z(k) : z(k);
            return scale_ * acc;
        }
        case Kind::ExplicitList:
            return scale_ * atoms_.col(static_cast<Eigen::Index>(id)).dot(z);
    }
    return 0.0;
}

void AtomicSet::axpy(AtomId id, double weight, Vector& x) const {
    check_atom_id(*this, id);
    const double w = weight * scale_;
    switch (kind_) {
        case Kind::SignedBasis:
            x(static_cast<Eigen::Index>(id / 2)) += (id % 2 == 0) ? w : -w;
            break;
        case Kind::HypercubeVertices:
            for (int k = 0; k < dim_; ++k) x(k) += ((id >> k) & 1) ? -w : w;
            break;
        case Kind::ExplicitList:
            x.noalias() += w * atoms_.col(static_cast<Eigen::Index>(id));
            break;
    }
}

AtomicSet AtomicSet::as_explicit() const {
    if (kind_ == Kind::ExplicitList) return *this;
    require(maskable(), "as_explicit: hypercube too large to materialize");
    const AtomId m = size();
    Matrix atoms(dim_, m);
    for (AtomId id = 0; id < m; ++id) atoms.col(static_cast<Eigen::Index>(id)) = atom(id) / scale_;
    return explicit_list(std::move(atoms), scale_);
}

AtomicSet AtomicSet::transformed(const Matrix& map) const {
    require(map.cols() == dim_, "transformed: map column count must equal the dimension");
    const AtomicSet base = as_explicit();
    return explicit_list(map * base.atoms_, scale_);
}

std::string AtomicSet::describe() const {
    std::ostringstream os;
    os << std::setprecision(17);
    switch (kind_) {
        case Kind::SignedBasis:
            os << "signed-basis(d=" << dim_ << ",C=" << scale_ << ")";
            break;
        case Kind::HypercubeVertices:
            os << "hypercube(d=" << dim_ << ",C=" << scale_ << ")";
            break;
        case Kind::ExplicitList:
            os << "explicit(m=" << atoms_.cols() << ",d=" << dim_ << ",C=" << scale_ << ")";
            break;
    }
    return os.str();
}

AtomMask AtomMask::full(const AtomicSet& set) {
    AtomMask mask;
    if (!set.maskable()) {
        mask.implicit_ = true;
        mask.count_ = set.size();
        return mask;
    }
    mask.active_.assign(static_cast<std::size_t>(set.size()), 1);
    mask.count_ = set.size();
    return mask;
}

bool AtomMask::deactivate(AtomId id) {
    if (implicit_) throw ContractViolation("AtomMask: implicit masks cannot be narrowed");
    auto& slot = active_.at(static_cast<std::size_t>(id));
    if (slot == 0) return false;
    slot = 0;
    --count_;
    return true;
}

std::vector<AtomId> AtomMask::active_ids() const {
    require(!implicit_, "AtomMask: implicit masks cannot be enumerated");
    std::vector<AtomId> ids;
    ids.reserve(static_cast<std::size_t>(count_));
    for (std::size_t i = 0; i < active_.size(); ++i) {
        if (active_[i]) ids.push_back(static_cast<AtomId>(i));
    }
    return ids;
}

namespace {

void check_direction(const AtomicSet& set, const Vector& z) {
    require(z.size() == set.dimension(), "lmo: dimension mismatch");
    require(z.allFinite(), "lmo: direction must be finite");
}

// Zero entries map to +1, which is also the lowest-id choice among tied vertices.
LmoResult sign_oracle(const AtomicSet& set, const Vector& z) {
    AtomId id = 0;
    for (int k = 0; k < set.dimension(); ++k) {
        if (z(k) < 0) id |= AtomId{1} << k;
    }
    return {id, set.dot(id, z)};
}

}  // namespace

LmoResult lmo(const AtomicSet& set, const AtomMask& mask, const Vector& z) {
    check_direction(set, z);
    if (mask.empty()) throw ContractViolation("lmo: empty atom mask");
    if (set.kind() == AtomicSet::Kind::HypercubeVertices && mask.all_active()) return sign_oracle(set, z);

    LmoResult best{-1, -kInfinity};
    const AtomId m = set.size();
    for (AtomId id = 0; id < m; ++id) {
        if (!mask.active(id)) continue;
        const double v = set.dot(id, z);
        if (v > best.sigma) best = {id, v};
    }
    return best;
}

LmoResult lmo(const AtomicSet& set, const Vector& z) {
    check_direction(set, z);
    if (set.kind() == AtomicSet::Kind::HypercubeVertices) return sign_oracle(set, z);
    LmoResult best{-1, -kInfinity};
    const AtomId m = set.size();
    for (AtomId id = 0; id < m; ++id) {
        const double v = set.dot(id, z);
        if (v > best.sigma) best = {id, v};
    }
    return best;
}

double support_value(const AtomicSet& set, const AtomMask& mask, const Vector& z) {
    return lmo(set, mask, z).sigma;
}

double support_value(const AtomicSet& set, const Vector& z) { return lmo(set, z).sigma; }

double symmetric_support_value(const AtomicSet& set, const Vector& z) {
    return std::max(support_value(set, z), support_value(set, Vector(-z)));
}

GaugeDecomposition gauge_decomposition(const AtomicSet& set, const Vector& x) {
    require(x.size() == set.dimension(), "gauge: dimension mismatch");
    require(x.allFinite(), "gauge: x must be finite");
    GaugeDecomposition out;
    const double C = set.scale();

    switch (set.kind()) {
        case AtomicSet::Kind::SignedBasis:
            for (Eigen::Index k = 0; k < x.size(); ++k) {
                if (x(k) > 0) out.coefficients[2 * k] = x(k) / C;
                if (x(k) < 0) out.coefficients[2 * k + 1] = -x(k) / C;
            }
            out.value = x.lpNorm<1>() / C;
            return out;
        case AtomicSet::Kind::HypercubeVertices: {
            // x / ||x||_inf lies in the cube; peel it apart one coordinate level at a time.
            out.value = x.lpNorm<Eigen::Infinity>() / C;
            if (out.value == 0.0) return out;
            std::vector<Eigen::Index> order(static_cast<std::size_t>(x.size()));
            for (Eigen::Index k = 0; k < x.size(); ++k) order[static_cast<std::size_t>(k)] = k;
            std::sort(order.begin(), order.end(), [&](auto a, auto b) { return std::abs(x(a)) > std::abs(x(b)); });
            const double t = out.value * C;
            // u = x / t has |u_k| <= 1; write u as a convex combination of sign vectors.
            Vector u = x / t;
            double prev = 1.0;
            for (std::size_t r = 0; r <= order.size(); ++r) {
                const double level = r < order.size() ? std::abs(u(order[r])) : 0.0;
                const double w = prev - level;
                if (w > 0) {
                    // Vertex: coordinates ranked before r follow sign(u); the rest split evenly
                    // between +1 and -1, which averages to 0 for those coordinates.
                    AtomId plus = 0, minus = 0;
                    for (std::size_t q = 0; q < order.size(); ++q) {
                        const Eigen::Index k = order[q];
                        const bool neg = q < r ? (u(k) < 0) : false;
                        const bool neg2 = q < r ? (u(k) < 0) : true;
                        if (neg) plus |= AtomId{1} << k;
                        if (neg2) minus |= AtomId{1} << k;
                    }
                    out.coefficients[plus] += 0.5 * w * out.value;
                    out.coefficients[minus] += 0.5 * w * out.value;
                }
                prev = level;
            }
            return out;
        }
        case AtomicSet::Kind::ExplicitList: {
            const Matrix& P = set.base_atoms();
            const LpResult lp = solve_standard_lp(P, x / C, Vector::Ones(P.cols()));
            if (lp.status != LpStatus::Optimal) {
                throw InfeasibleGaugeError("gauge: x is outside the cone generated by the atoms");
            }
            out.value = lp.value;
            for (Eigen::Index i = 0; i < lp.x.size(); ++i) {
                if (lp.x(i) > 0) out.coefficients[i] = lp.x(i);
            }
            return out;
        }
    }
    return out;
}

double gauge_value(const AtomicSet& set, const Vector& x) {
    switch (set.kind()) {
        case AtomicSet::Kind::SignedBasis:
            require(x.size() == set.dimension(), "gauge: dimension mismatch");
            return x.lpNorm<1>() / set.scale();
        case AtomicSet::Kind::HypercubeVertices:
            require(x.size() == set.dimension(), "gauge: dimension mismatch");
            return x.lpNorm<Eigen::Infinity>() / set.scale();
        case AtomicSet::Kind::ExplicitList:
            return gauge_decomposition(set, x).value;
    }
    return kInfinity;
}

AtomicSet symmetrize(const AtomicSet& set) {
    if (set.kind() != AtomicSet::Kind::ExplicitList || set.symmetric()) return set;
    const Matrix& P = set.base_atoms();
    std::vector<Vector> cols;
    cols.reserve(static_cast<std::size_t>(2 * P.cols()));
    for (Eigen::Index i = 0; i < P.cols(); ++i) cols.emplace_back(P.col(i));
    for (Eigen::Index i = 0; i < P.cols(); ++i) {
        const Vector neg = -P.col(i);
        const bool present = std::any_of(cols.begin(), cols.end(), [&](const Vector& c) { return same_atom(c, neg); });
        if (!present) cols.push_back(neg);
    }
    Matrix out(P.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = cols[j];
    return AtomicSet::explicit_list(std::move(out), set.scale());
}

AtomicSet load_atoms(const std::string& path, double scale) {
    TextReader in = TextReader::open(path);
    const auto header_at = in.offset();
    if (in.word() != "atoms") throw FormatError("atom file: expected header 'atoms <m> <d>'", header_at);
    const auto m = in.integer();
    const auto d = in.integer();
    if (m < 1 || d < 1) throw FormatError("atom file: m and d must be positive", header_at);
    in.end_of_line();
    Matrix atoms(d, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index k = 0; k < d; ++k) atoms(k, i) = in.real();
        in.end_of_line();
    }
    in.expect_eof();
    try {
        return AtomicSet::explicit_list(std::move(atoms), scale);
    } catch (const ContractViolation& e) {
        throw FormatError(std::string("atom file: ") + e.what());
    }
}

void save_atoms(const AtomicSet& set, const std::string& path) {
    const AtomicSet ex = set.as_explicit();
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << std::setprecision(17);
    out << "atoms " << ex.base_atoms().cols() << ' ' << ex.dimension() << '\n';
    for (Eigen::Index i = 0; i < ex.base_atoms().cols(); ++i) {
        for (Eigen::Index k = 0; k < ex.dimension(); ++k) out << (k ? " " : "") << ex.base_atoms()(k, i);
        out << '\n';
    }
}

}  // namespace gcgm
