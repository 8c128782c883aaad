#include "gcgm/screening.hpp"

#include <json.hpp>

#include <algorithm>

namespace gcgm {
namespace {

nlohmann::json number_or_null(double v) {
    return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

}  // namespace

ScreenReport apply_rule(AtomMask& mask, const AtomicSet& set, const Vector& grad, double sigma, double gap, double L,
                        std::int64_t t) {
    if (mask.implicit()) throw ContractViolation("apply_rule: this atomic set is too large to screen");
    require(grad.size() == set.dimension(), "apply_rule: dimension mismatch");
    require(L > 0.0, "apply_rule: smoothness constant must be positive");
    if (std::isnan(gap) || gap < -kGapRoundoff) {
        throw CertificateError("apply_rule: negative duality gap " + std::to_string(gap) + "; refusing to screen");
    }

    ScreenReport report;
    report.t = t;
    report.sigma = sigma;
    report.threshold = 2.0 * std::sqrt(L * std::max(gap, 0.0));
    report.remaining = mask.active_count();
    if (is_infinite(report.threshold)) return report;

    const double guard = 16 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(sigma));
    const double cut = report.threshold + guard;

    AtomId best = -1;
    double best_score = kInfinity;  // smallest sigma + p^T grad, i.e. highest p^T z
    std::vector<AtomId> candidates;
    const AtomId m = set.size();
    for (AtomId id = 0; id < m; ++id) {
        if (!mask.active(id)) continue;
        const double slack = sigma + set.dot(id, grad);
        if (slack < best_score) {
            best_score = slack;
            best = id;
        }
        if (slack > cut) candidates.push_back(id);
    }
    for (AtomId id : candidates) {
        if (id == best) continue;
        mask.deactivate(id);
        report.removed_ids.push_back(id);
    }
    report.remaining = mask.active_count();
    return report;
}

double delta(const AtomicSet& set, const Vector& grad_star, const std::vector<AtomId>& support_ids) {
    require(set.maskable(), "delta: atomic set too large to enumerate");
    require(grad_star.size() == set.dimension(), "delta: dimension mismatch");
    const Vector z = -grad_star;
    const double sigma = support_value(set, z);
    std::vector<char> in_support(static_cast<std::size_t>(set.size()), 0);
    for (AtomId id : support_ids) in_support.at(static_cast<std::size_t>(id)) = 1;

    double out = kInfinity;
    for (AtomId id = 0; id < set.size(); ++id) {
        if (in_support[static_cast<std::size_t>(id)]) continue;
        out = std::min(out, sigma - set.dot(id, z));
    }
    return std::max(out, 0.0);
}

std::vector<AtomId> support_of(const std::map<AtomId, double>& coeffs, double relative_tol) {
    double biggest = 0.0;
    for (const auto& [id, c] : coeffs) biggest = std::max(biggest, c);
    std::vector<AtomId> out;
    if (biggest <= 0.0) return out;
    for (const auto& [id, c] : coeffs) {
        if (c > relative_tol * biggest) out.push_back(id);
    }
    return out;
}

bool identification_reached(double L, double min_gap, double delta) {
    if (!(delta > 0.0) || !std::isfinite(min_gap)) return false;
    return std::sqrt(L * std::max(min_gap, 0.0)) < delta / 4.0;
}

std::string SupportCertificate::to_json() const {
    nlohmann::json j;
    j["support_ids"] = support_ids;
    j["delta"] = delta ? number_or_null(*delta) : nlohmann::json(nullptr);
    j["identified_at"] = identified_at ? nlohmann::json(*identified_at) : nlohmann::json(nullptr);
    j["L"] = number_or_null(L);
    j["min_gap"] = number_or_null(min_gap);
    return j.dump(2);
}

}  // namespace gcgm
