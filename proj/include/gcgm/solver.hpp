#pragma once

#include "gcgm/atomic_set.hpp"
#include "gcgm/common.hpp"
#include "gcgm/loss.hpp"
#include "gcgm/penalty.hpp"
#include "gcgm/screening.hpp"

#include <exception>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace gcgm {

/// minimize f(x) + phi(kappa_P(x)). Owns its pieces; the data matrix is shared.
struct Problem {
    Problem(Loss loss, Penalty penalty, AtomicSet set);
    /// Same as above with a caller-supplied smoothness constant (must be a valid upper bound).
    Problem(Loss loss, Penalty penalty, AtomicSet set, double smoothness);

    Loss loss;
    Penalty penalty;
    AtomicSet set;
    /// Smoothness of f relative to the symmetrized set.
    double L;

    /// f(x) + phi(kappa(x)) with the exact gauge.
    double objective(const Vector& x) const;
    /// Stable 64-bit hash of the loss data, penalty and atomic set.
    std::uint64_t fingerprint() const;
};

enum class StepSchedule { TwoOverTPlusOne, FourOverTPlusTwo };
enum class ScreeningMode { PruneLmo, ReportOnly };

/// theta^(t) for t >= 1: 2/(t+1) or 4/(t+2), capped at 1.
double step_size(StepSchedule schedule, std::int64_t t);

struct SolverConfig {
    std::int64_t max_iters = 1000;
    double gap_tolerance = 0.0;
    StepSchedule schedule = StepSchedule::TwoOverTPlusOne;
    bool screening_enabled = false;
    ScreeningMode screening_mode = ScreeningMode::PruneLmo;
    std::int64_t screen_every = 1;
    /// In prune mode, certify with sigma and gap over all atoms instead of S^(t).
    bool conservative_sigma = false;
    std::int64_t trace_every = 1;
    /// Abort when ||x||_inf exceeds this bound.
    double divergence_bound = 1e12;
    /// For penalties without a convergence guarantee, abort when the objective exceeds
    /// this factor times (1 + |objective at x = 0|).
    double objective_blowup = 1e6;
    /// Record wall-clock time in the trace (off gives byte-reproducible traces).
    bool record_time = true;

    void validate() const;
};

/// Iterate plus the conic ledger x = sum_i coeffs[i] * atom_i.
struct SolverState {
    Vector x;
    Vector prediction;  // A x, updated incrementally
    std::int64_t t = 1;
    std::map<AtomId, double> coeffs;
    double kappa_bound = 0.0;  // sum of coeffs, an upper bound on kappa(x)
    AtomMask mask;             // S^(t)
    double min_gap = kInfinity;
    std::int64_t min_gap_t = 0;
    double initial_objective = 0.0;
};

SolverState initial_state(const Problem& problem);

/// Everything computed at x^(t) during one iteration.
struct StepInfo {
    std::int64_t t = 0;
    AtomId atom = -1;
    double sigma = 0.0;  // support value over the atoms used for the certificate
    double xi = 0.0;
    double kappa = 0.0;  // gauge value used in h(x)
    double objective = 0.0;
    double gap = kInfinity;
    double min_gap = kInfinity;
    Vector grad;
    ScreenReport screen;
    bool screened = false;
};

struct TraceRecord {
    std::int64_t t = 0;
    double objective = 0.0;
    double gap = 0.0;
    double min_gap = 0.0;
    double sigma = 0.0;
    std::int64_t active_atoms = 0;
    std::int64_t nonzero_coeffs = 0;
    double xi = 0.0;
    double elapsed = 0.0;
};

/// gap(x, -grad f(x)) = -grad^T (s - x) + h(x) - h(s); +inf when h(x) is +inf.
double gap_primal(const Vector& x, const Vector& s, const Vector& grad, double h_x, double h_s);

/// Gauge value used in the gap: exact closed form for the implicit kinds,
/// the ledger sum (a valid upper bound) for explicit lists.
double certified_kappa(const Problem& problem, const SolverState& state);

/// Gradient, LMO, scalar step, gap and (optionally) screening at x^(t). The
/// state's iterate is not moved. `info` is filled progressively, so on an
/// exception it holds whatever was computed before the failure.
void evaluate(SolverState& state, const Problem& problem, const SolverConfig& config, StepInfo& info);
StepInfo evaluate(SolverState& state, const Problem& problem, const SolverConfig& config);

/// x <- (1 - theta) x + theta s and the matching ledger update; t <- t + 1.
void advance(SolverState& state, const Problem& problem, const SolverConfig& config, const StepInfo& info);

/// evaluate() followed by advance().
StepInfo step(SolverState& state, const Problem& problem, const SolverConfig& config);

enum class RunStatus { MaxIterations, GapTolerance, UnboundedStep, Diverged, CertificateFailure };

struct RunResult {
    SolverState state;
    std::vector<TraceRecord> trace;
    RunStatus status = RunStatus::MaxIterations;
    std::string message;
    std::exception_ptr error;

    bool ok() const noexcept { return !error; }
    void rethrow() const {
        if (error) std::rethrow_exception(error);
    }
};

/// Called after every evaluate(), with the state still at x^(t) and S^(t) already screened.
using StepObserver = std::function<void(const SolverState&, const StepInfo&)>;

/// Iterate until max_iters or min_gap <= gap_tolerance. The returned state is the
/// last evaluated iterate x^(T) with its mask S^(T). Step failures end the run
/// with the failing iteration recorded in the trace and the exception stored.
RunResult run(const Problem& problem, const SolverConfig& config, const StepObserver& observer = {});

/// Header `t,objective,gap,min_gap,sigma,active_atoms,nonzeros,xi,elapsed_s`.
void write_trace_csv(std::ostream& out, const std::vector<TraceRecord>& trace);
void write_trace_csv(const std::string& path, const std::vector<TraceRecord>& trace);

std::string to_string(RunStatus status);

}  // namespace gcgm
