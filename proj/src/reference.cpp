#include "gcgm/experiments.hpp"

#include <Eigen/Cholesky>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <set>

namespace gcgm {
namespace {

struct RestrictedPoint {
    Vector x;
    Vector prediction;
    Vector grad;
    double kappa = 0.0;
    double value = kInfinity;
};

// Coefficient-space view of the problem restricted to a list of atoms:
// F(c) = f(Q c) + phi(1^T c) with Q the matrix of (scaled) atoms.
class RestrictedProblem {
public:
    explicit RestrictedProblem(const Problem& p) : p_(p) {}

    RestrictedPoint at(const std::vector<AtomId>& ids, const Vector& c) const {
        RestrictedPoint pt;
        pt.x = Vector::Zero(p_.set.dimension());
        for (std::size_t j = 0; j < ids.size(); ++j) p_.set.axpy(ids[j], c(static_cast<Eigen::Index>(j)), pt.x);
        pt.prediction = p_.loss.predict(pt.x);
        pt.kappa = c.sum();
        pt.value = p_.loss.value_at_prediction(pt.prediction) + p_.penalty.value(std::max(pt.kappa, 0.0));
        pt.grad = p_.loss.gradient_at_prediction(pt.prediction);
        return pt;
    }

    Vector coefficient_gradient(const std::vector<AtomId>& ids, const RestrictedPoint& pt) const {
        const double slope = p_.penalty.derivative(std::max(pt.kappa, 0.0));
        Vector g(static_cast<Eigen::Index>(ids.size()));
        for (std::size_t j = 0; j < ids.size(); ++j) g(static_cast<Eigen::Index>(j)) = p_.set.dot(ids[j], pt.grad) + slope;
        return g;
    }

    Matrix coefficient_hessian(const std::vector<AtomId>& ids, const RestrictedPoint& pt) const {
        const Eigen::Index k = static_cast<Eigen::Index>(ids.size());
        Matrix Q(p_.set.dimension(), k);
        for (Eigen::Index j = 0; j < k; ++j) Q.col(j) = p_.set.atom(ids[static_cast<std::size_t>(j)]);
        const Matrix AQ = p_.loss.data().A * Q;
        const Vector w = p_.loss.curvature_weights(pt.prediction);
        Matrix H = AQ.transpose() * w.asDiagonal() * AQ;
        H.array() += p_.penalty.second_derivative(std::max(pt.kappa, 0.0));
        return H;
    }

private:
    const Problem& p_;
};

// Projected Newton with an active set over the conic coefficients. Returns false
// if it fails to settle; the caller then keeps the unrefined iterate.
double projected_norm(const Vector& c, const Vector& g) {
    double out = 0.0;
    for (Eigen::Index j = 0; j < c.size(); ++j) {
        if (!(c(j) <= 0.0 && g(j) > 0.0)) out = std::max(out, std::abs(g(j)));
    }
    return out;
}

bool polish(const Problem& problem, std::vector<AtomId>& ids, Vector& c) {
    RestrictedProblem rp(problem);

    for (int outer = 0; outer < 200; ++outer) {
        // Projected Newton on the nonnegative orthant of the current atoms.
        for (int inner = 0; inner < 200; ++inner) {
            if (ids.empty()) break;
            const RestrictedPoint pt = rp.at(ids, c);
            const Vector g = rp.coefficient_gradient(ids, pt);
            const Eigen::Index k = g.size();

            // Coordinates held at the bound: zero weight and a gradient pushing outward.
            std::vector<Eigen::Index> free;
            for (Eigen::Index j = 0; j < k; ++j) {
                if (!(c(j) <= 0.0 && g(j) > 0.0)) free.push_back(j);
            }
            const double projected = projected_norm(c, g);
            const double scale = 1.0 + std::abs(problem.penalty.derivative(std::max(pt.kappa, 0.0)));
            if (free.empty() || projected <= 1e-15 * scale) break;

            const Matrix H = rp.coefficient_hessian(ids, pt);
            const Eigen::Index nf = static_cast<Eigen::Index>(free.size());
            Matrix Hf(nf, nf);
            Vector gf(nf);
            for (Eigen::Index a = 0; a < nf; ++a) {
                gf(a) = g(free[a]);
                for (Eigen::Index b = 0; b < nf; ++b) Hf(a, b) = H(free[a], free[b]);
            }
            Hf.diagonal().array() += 1e-14 * (1.0 + Hf.diagonal().cwiseAbs().maxCoeff());
            Vector df = Eigen::LDLT<Matrix>(Hf).solve(-gf);
            if (!df.allFinite() || gf.dot(df) >= 0.0) df = -gf;

            Vector d = Vector::Zero(k);
            for (Eigen::Index a = 0; a < nf; ++a) d(free[a]) = df(a);

            // Armijo search along the projection arc.
            double step = 1.0;
            bool moved = false;
            for (int ls = 0; ls < 60; ++ls) {
                const Vector trial = (c + step * d).cwiseMax(0.0);
                const RestrictedPoint tp = rp.at(ids, trial);
                if (!std::isfinite(tp.value)) {
                    step *= 0.5;
                    continue;
                }
                const bool decrease = tp.value < pt.value + 1e-4 * g.dot(trial - c);
                // Close to the optimum the decrease drops below the resolution of the
                // value, so progress is judged on the projected gradient instead.
                const bool flat = tp.value <= pt.value + 1e-14 * (1.0 + std::abs(pt.value)) &&
                                  projected_norm(trial, rp.coefficient_gradient(ids, tp)) < 0.5 * projected;
                if (decrease || flat) {
                    c = trial;
                    moved = true;
                    break;
                }
                step *= 0.5;
            }
            if (!moved) break;
        }

        // Atoms left at zero leave the face.
        std::vector<AtomId> kept_ids;
        std::vector<double> kept_c;
        for (Eigen::Index j = 0; j < c.size(); ++j) {
            if (c(j) > 0.0) {
                kept_ids.push_back(ids[static_cast<std::size_t>(j)]);
                kept_c.push_back(c(j));
            }
        }
        ids = std::move(kept_ids);
        c = Eigen::Map<const Vector>(kept_c.data(), static_cast<Eigen::Index>(kept_c.size()));

        // Optimality outside the face: no atom may score above phi'(kappa).
        const RestrictedPoint pt = rp.at(ids, c);
        const double slope = problem.penalty.derivative(std::max(pt.kappa, 0.0));
        const Vector z = -pt.grad;
        const std::set<AtomId> inside(ids.begin(), ids.end());
        AtomId worst = -1;
        double worst_excess = 1e-13 * (1.0 + std::abs(slope));
        for (AtomId id = 0; id < problem.set.size(); ++id) {
            if (inside.count(id)) continue;
            const double excess = problem.set.dot(id, z) - slope;
            if (excess > worst_excess) {
                worst_excess = excess;
                worst = id;
            }
        }
        if (worst < 0) return true;
        ids.push_back(worst);
        c.conservativeResize(c.size() + 1);
        c(c.size() - 1) = 0.0;
    }
    return false;
}

std::string hex64(std::uint64_t v) {
    char buf[19];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

nlohmann::json finite_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

double number_or(const nlohmann::json& j, double fallback) { return j.is_null() ? fallback : j.get<double>(); }

}  // namespace

Reference reference_solve(const Problem& problem, const ReferenceOptions& options) {
    require(options.iters >= 1, "reference_solve: iters must be >= 1");
    require(problem.set.maskable(), "reference_solve: atomic set too large to enumerate");

    SolverConfig cfg;
    cfg.max_iters = options.iters;
    cfg.gap_tolerance = options.tol;
    cfg.schedule = options.schedule;
    cfg.trace_every = options.iters;
    cfg.record_time = false;

    Vector best_x = Vector::Zero(problem.set.dimension());
    double best_gap = kInfinity;
    const StepObserver track = [&](const SolverState& s, const StepInfo& info) {
        if (info.gap < best_gap) {
            best_x = s.x;
            best_gap = info.gap;
        }
    };
    RunResult run_result = run(problem, cfg, track);
    run_result.rethrow();

    Reference ref;
    ref.iterations = run_result.state.t;
    ref.fingerprint = problem.fingerprint();
    ref.L = problem.L;
    ref.x = best_x;
    ref.gap = best_gap;
    ref.support_ids = support_of(run_result.state.coeffs);

    if (options.refine && problem.penalty.smooth()) {
        const auto& ledger = run_result.state.coeffs;
        std::vector<AtomId> ids = support_of(ledger);
        Vector c(static_cast<Eigen::Index>(ids.size()));
        for (std::size_t j = 0; j < ids.size(); ++j) c(static_cast<Eigen::Index>(j)) = ledger.at(ids[j]);

        if (polish(problem, ids, c)) {
            SolverState probe = initial_state(problem);
            for (std::size_t j = 0; j < ids.size(); ++j) {
                probe.coeffs[ids[j]] = c(static_cast<Eigen::Index>(j));
                problem.set.axpy(ids[j], c(static_cast<Eigen::Index>(j)), probe.x);
            }
            probe.kappa_bound = c.sum();
            probe.prediction = problem.loss.predict(probe.x);
            SolverConfig plain;
            const StepInfo info = evaluate(probe, problem, plain);
            if (info.gap < best_gap) {
                ref.x = probe.x;
                ref.gap = info.gap;
                ref.refined = true;
                ref.support_ids.clear();
                for (std::size_t j = 0; j < ids.size(); ++j) {
                    if (c(static_cast<Eigen::Index>(j)) > 0.0) ref.support_ids.push_back(ids[j]);
                }
                std::sort(ref.support_ids.begin(), ref.support_ids.end());
            }
        }
    }

    ref.grad = problem.loss.gradient(ref.x);
    ref.objective = problem.objective(ref.x);
    const GaugeDecomposition dec = gauge_decomposition(problem.set, ref.x);
    ref.support_coeffs.clear();
    for (AtomId id : ref.support_ids) {
        const auto it = dec.coefficients.find(id);
        ref.support_coeffs.push_back(it == dec.coefficients.end() ? 0.0 : it->second);
    }
    ref.delta = delta(problem.set, ref.grad, ref.support_ids);
    ref.reached_tolerance = ref.gap <= options.tol;
    return ref;
}

std::string Reference::to_json() const {
    nlohmann::json j;
    j["x"] = std::vector<double>(x.data(), x.data() + x.size());
    j["grad"] = std::vector<double>(grad.data(), grad.data() + grad.size());
    j["support_ids"] = support_ids;
    j["support_coeffs"] = support_coeffs;
    j["delta"] = finite_or_null(delta);
    j["objective"] = objective;
    j["gap"] = finite_or_null(gap);
    j["L"] = L;
    j["reached_tolerance"] = reached_tolerance;
    j["refined"] = refined;
    j["iterations"] = iterations;
    j["fingerprint"] = hex64(fingerprint);
    return j.dump(2);
}

Reference Reference::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(std::string("reference: ") + e.what(), static_cast<std::int64_t>(e.byte));
    }
    try {
        Reference r;
        const auto x = j.at("x").get<std::vector<double>>();
        const auto g = j.at("grad").get<std::vector<double>>();
        r.x = Eigen::Map<const Vector>(x.data(), static_cast<Eigen::Index>(x.size()));
        r.grad = Eigen::Map<const Vector>(g.data(), static_cast<Eigen::Index>(g.size()));
        r.support_ids = j.at("support_ids").get<std::vector<AtomId>>();
        r.support_coeffs = j.value("support_coeffs", std::vector<double>{});
        r.delta = number_or(j.at("delta"), kInfinity);
        r.objective = j.at("objective").get<double>();
        r.gap = number_or(j.at("gap"), kInfinity);
        r.L = j.at("L").get<double>();
        r.reached_tolerance = j.at("reached_tolerance").get<bool>();
        r.refined = j.value("refined", false);
        r.iterations = j.at("iterations").get<std::int64_t>();
        r.fingerprint = std::stoull(j.at("fingerprint").get<std::string>(), nullptr, 16);
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("reference: ") + e.what());
    }
}

}  // namespace gcgm
