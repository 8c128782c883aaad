#include "gcgm/solver.hpp"

#include <chrono>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <ostream>

namespace gcgm {
namespace {

// The incremental prediction A x is rebuilt from scratch this often.
constexpr std::int64_t kPredictionRefresh = 4096;

class Fnv1a {
public:
    void bytes(const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            h_ ^= p[i];
            h_ *= 0x100000001b3ULL;
        }
    }
    template <typename T>
    void value(const T& v) {
        bytes(&v, sizeof(T));
    }
    void matrix(const Matrix& m) {
        value(m.rows());
        value(m.cols());
        bytes(m.data(), sizeof(double) * static_cast<std::size_t>(m.size()));
    }
    void vector(const Vector& v) {
        value(v.size());
        bytes(v.data(), sizeof(double) * static_cast<std::size_t>(v.size()));
    }
    std::uint64_t digest() const { return h_; }

private:
    std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

Vector atom_image(const Problem& problem, AtomId id) {
    const Matrix& A = problem.loss.data().A;
    if (problem.set.kind() == AtomicSet::Kind::SignedBasis) {
        const double w = (id % 2 == 0 ? 1.0 : -1.0) * problem.set.scale();
        return w * A.col(static_cast<Eigen::Index>(id / 2));
    }
    return A * problem.set.atom(id);
}

std::int64_t count_nonzeros(const std::map<AtomId, double>& coeffs) {
    return static_cast<std::int64_t>(support_of(coeffs).size());
}

}  // namespace

Problem::Problem(Loss loss_, Penalty penalty_, AtomicSet set_)
    : loss(std::move(loss_)), penalty(std::move(penalty_)), set(std::move(set_)), L(0.0) {
    require(set.dimension() == loss.dimension(), "Problem: atomic set and loss dimensions differ");
    L = smoothness_wrt(loss, symmetrize(set));
}

Problem::Problem(Loss loss_, Penalty penalty_, AtomicSet set_, double smoothness)
    : loss(std::move(loss_)), penalty(std::move(penalty_)), set(std::move(set_)), L(smoothness) {
    require(set.dimension() == loss.dimension(), "Problem: atomic set and loss dimensions differ");
    require(smoothness > 0.0, "Problem: smoothness constant must be positive");
}

double Problem::objective(const Vector& x) const {
    return loss.value(x) + penalty.value(gauge_value(set, x));
}

std::uint64_t Problem::fingerprint() const {
    Fnv1a h;
    h.value(static_cast<int>(loss.kind()));
    h.matrix(loss.data().A);
    h.vector(loss.data().b);
    h.value(static_cast<int>(penalty.kind()));
    h.value(penalty.lambda());
    h.value(penalty.alpha());
    h.value(penalty.capacity());
    h.value(penalty.beta());
    h.value(static_cast<int>(set.kind()));
    h.value(set.dimension());
    h.value(set.scale());
    h.matrix(set.base_atoms());
    return h.digest();
}

double step_size(StepSchedule schedule, std::int64_t t) {
    require(t >= 1, "step_size: t must be >= 1");
    const double td = static_cast<double>(t);
    const double theta = schedule == StepSchedule::TwoOverTPlusOne ? 2.0 / (td + 1.0) : 4.0 / (td + 2.0);
    return std::min(theta, 1.0);
}

void SolverConfig::validate() const {
    require(max_iters >= 1, "SolverConfig: max_iters must be >= 1");
    require(gap_tolerance >= 0.0, "SolverConfig: gap_tolerance must be nonnegative");
    require(screen_every >= 1, "SolverConfig: screen_every must be >= 1");
    require(trace_every >= 1, "SolverConfig: trace_every must be >= 1");
    require(divergence_bound > 0.0, "SolverConfig: divergence_bound must be positive");
    require(objective_blowup > 0.0, "SolverConfig: objective_blowup must be positive");
}

SolverState initial_state(const Problem& problem) {
    SolverState s;
    s.x = Vector::Zero(problem.set.dimension());
    s.prediction = Vector::Zero(problem.loss.data().samples());
    s.mask = AtomMask::full(problem.set);
    s.initial_objective = problem.loss.value_at_prediction(s.prediction) + problem.penalty.value(0.0);
    return s;
}

double gap_primal(const Vector& x, const Vector& s, const Vector& grad, double h_x, double h_s) {
    require(x.size() == s.size() && x.size() == grad.size(), "gap_primal: dimension mismatch");
    if (is_infinite(h_x)) return kInfinity;
    return -grad.dot(s - x) + h_x - h_s;
}

double certified_kappa(const Problem& problem, const SolverState& state) {
    switch (problem.set.kind()) {
        case AtomicSet::Kind::SignedBasis:
        case AtomicSet::Kind::HypercubeVertices:
            return std::min(gauge_value(problem.set, state.x), state.kappa_bound);
        case AtomicSet::Kind::ExplicitList:
            return state.kappa_bound;
    }
    return state.kappa_bound;
}

void evaluate(SolverState& state, const Problem& problem, const SolverConfig& config, StepInfo& info) {
    info = StepInfo{};
    info.t = state.t;

    if (!state.x.allFinite() || state.x.lpNorm<Eigen::Infinity>() > config.divergence_bound) {
        throw DivergenceError("iterate norm exceeded " + std::to_string(config.divergence_bound) + " at t=" +
                              std::to_string(state.t));
    }

    info.grad = problem.loss.gradient_at_prediction(state.prediction);
    info.kappa = certified_kappa(problem, state);
    const double h_x = problem.penalty.value(info.kappa);
    info.objective = problem.loss.value_at_prediction(state.prediction) + h_x;
    // Large transient objectives are normal for penalties with a growth guarantee,
    // so the blow-up test only applies to the weak powers.
    const bool weak = !problem.penalty.growth().convergence_guaranteed();
    if (!std::isfinite(info.objective) ||
        (weak && info.objective > config.objective_blowup * (1.0 + std::abs(state.initial_objective)))) {
        throw DivergenceError("objective blew up to " + std::to_string(info.objective) + " at t=" +
                              std::to_string(state.t));
    }

    const Vector z = -info.grad;
    const bool prune = config.screening_enabled && config.screening_mode == ScreeningMode::PruneLmo;
    const LmoResult pick = prune ? lmo(problem.set, state.mask, z) : lmo(problem.set, z);
    info.atom = pick.atom;
    info.sigma = pick.sigma;

    // sigma <= 0 gives xi = 0, i.e. s = 0, for every nondecreasing phi.
    info.xi = problem.penalty.xi_step(pick.sigma);
    Vector s = Vector::Zero(problem.set.dimension());
    if (info.xi > 0.0) problem.set.axpy(pick.atom, info.xi, s);
    info.gap = gap_primal(state.x, s, info.grad, h_x, problem.penalty.value(info.xi));

    if (prune && config.conservative_sigma && !state.mask.all_active()) {
        const LmoResult full = lmo(problem.set, z);
        const double xi_full = problem.penalty.xi_step(full.sigma);
        Vector s_full = Vector::Zero(problem.set.dimension());
        if (xi_full > 0.0) problem.set.axpy(full.atom, xi_full, s_full);
        info.sigma = full.sigma;
        info.gap = gap_primal(state.x, s_full, info.grad, h_x, problem.penalty.value(xi_full));
    }

    if (info.gap < state.min_gap) {
        state.min_gap = info.gap;
        state.min_gap_t = state.t;
    }
    info.min_gap = state.min_gap;

    if (config.screening_enabled && (state.t - 1) % config.screen_every == 0) {
        info.screen = apply_rule(state.mask, problem.set, info.grad, info.sigma, info.gap, problem.L, state.t);
        info.screened = true;
    }
}

StepInfo evaluate(SolverState& state, const Problem& problem, const SolverConfig& config) {
    StepInfo info;
    evaluate(state, problem, config, info);
    return info;
}

void advance(SolverState& state, const Problem& problem, const SolverConfig& config, const StepInfo& info) {
    const double theta = step_size(config.schedule, state.t);
    const double keep = 1.0 - theta;
    const double w = theta * info.xi;

    state.x *= keep;
    if (w > 0.0) problem.set.axpy(info.atom, w, state.x);

    if ((state.t + 1) % kPredictionRefresh == 0) {
        state.prediction = problem.loss.predict(state.x);
    } else {
        state.prediction *= keep;
        if (w > 0.0) state.prediction.noalias() += w * atom_image(problem, info.atom);
    }

    for (auto it = state.coeffs.begin(); it != state.coeffs.end();) {
        it->second *= keep;
        it = it->second == 0.0 ? state.coeffs.erase(it) : std::next(it);
    }
    if (w > 0.0) state.coeffs[info.atom] += w;
    state.kappa_bound = keep * state.kappa_bound + w;
    ++state.t;
}

StepInfo step(SolverState& state, const Problem& problem, const SolverConfig& config) {
    StepInfo info = evaluate(state, problem, config);
    advance(state, problem, config, info);
    return info;
}

RunResult run(const Problem& problem, const SolverConfig& config, const StepObserver& observer) {
    config.validate();
    if (config.screening_enabled) {
        require(problem.set.maskable(), "run: screening needs a maskable atomic set");
    }
    RunResult result;
    result.state = initial_state(problem);
    SolverState& state = result.state;
    const auto start = std::chrono::steady_clock::now();

    auto record = [&](const StepInfo& info) {
        TraceRecord r;
        r.t = info.t;
        r.objective = info.objective;
        r.gap = info.gap;
        r.min_gap = state.min_gap;
        r.sigma = info.sigma;
        r.active_atoms = state.mask.active_count();
        r.nonzero_coeffs = count_nonzeros(state.coeffs);
        r.xi = info.xi;
        if (config.record_time) {
            r.elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        }
        result.trace.push_back(r);
    };

    StepInfo info;
    for (std::int64_t iter = 1; iter <= config.max_iters; ++iter) {
        try {
            evaluate(state, problem, config, info);
        } catch (const UnboundedStepError& e) {
            info.xi = kInfinity;
            info.gap = kInfinity;
            record(info);
            result.status = RunStatus::UnboundedStep;
            result.message = e.what();
            result.error = std::current_exception();
            return result;
        } catch (const DivergenceError& e) {
            record(info);
            result.status = RunStatus::Diverged;
            result.message = e.what();
            result.error = std::current_exception();
            return result;
        } catch (const CertificateError& e) {
            record(info);
            result.status = RunStatus::CertificateFailure;
            result.message = e.what();
            result.error = std::current_exception();
            return result;
        }
        if (observer) observer(state, info);

        const bool done = state.min_gap <= config.gap_tolerance;
        if (info.t == 1 || info.t % config.trace_every == 0 || iter == config.max_iters || done) record(info);
        if (done) {
            result.status = RunStatus::GapTolerance;
            return result;
        }
        // The returned state stays at the last evaluated iterate so it matches the trace.
        if (iter < config.max_iters) advance(state, problem, config, info);
    }
    result.status = RunStatus::MaxIterations;
    return result;
}

void write_trace_csv(std::ostream& out, const std::vector<TraceRecord>& trace) {
    out << "t,objective,gap,min_gap,sigma,active_atoms,nonzeros,xi,elapsed_s\n";
    out << std::setprecision(17);
    for (const auto& r : trace) {
        out << r.t << ',' << r.objective << ',' << r.gap << ',' << r.min_gap << ',' << r.sigma << ','
            << r.active_atoms << ',' << r.nonzero_coeffs << ',' << r.xi << ',' << r.elapsed << '\n';
    }
}

void write_trace_csv(const std::string& path, const std::vector<TraceRecord>& trace) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    write_trace_csv(out, trace);
}

std::string to_string(RunStatus status) {
    switch (status) {
        case RunStatus::MaxIterations:
            return "max-iterations";
        case RunStatus::GapTolerance:
            return "gap-tolerance";
        case RunStatus::UnboundedStep:
            return "unbounded-step";
        case RunStatus::Diverged:
            return "diverged";
        case RunStatus::CertificateFailure:
            return "certificate-failure";
    }
    return "unknown";
}

}  // namespace gcgm
