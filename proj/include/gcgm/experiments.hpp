#pragma once

#include "gcgm/common.hpp"
#include "gcgm/loss.hpp"
#include "gcgm/solver.hpp"

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace gcgm {

/// The one random source used by the experiments.
///
/// Uniform bits come from std::mt19937_64, whose output sequence is fixed by the
/// C++ standard. Normals are produced here with the Box-Muller transform on
/// 53-bit uniforms instead of std::normal_distribution, whose algorithm is
/// implementation defined, so draws are identical on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double normal();
    std::uint64_t bits() { return engine_(); }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// n samples of i.i.d. standard normal features in R^d (filled row by row) with all labels +1.
DataMatrix gen_synthetic(std::uint64_t seed, int n = 100, int d = 50);

/// Rows of the IDX image file whose label is one of `digits`, pixels scaled to [0, 1].
/// Labels map to -1 for digits.first and +1 for digits.second.
/// Throws FormatError (with byte offset) on bad magic numbers, truncation or count mismatch.
DataMatrix load_mnist_pair(const std::string& images_path, const std::string& labels_path,
                           std::pair<int, int> digits = {4, 9});

/// High-accuracy solution used as ground truth by the residual and safety checks.
struct Reference {
    Vector x;
    Vector grad;
    std::vector<AtomId> support_ids;
    std::vector<double> support_coeffs;
    double delta = 0.0;
    double objective = 0.0;
    double gap = kInfinity;
    double L = 0.0;
    bool reached_tolerance = false;
    bool refined = false;
    std::int64_t iterations = 0;
    std::uint64_t fingerprint = 0;

    std::string to_json() const;
    static Reference from_json(const std::string& text);
};

struct ReferenceOptions {
    std::int64_t iters = 1'000'000;
    double tol = 1e-10;
    /// Polish the long-run iterate by exact minimization over its support.
    bool refine = true;
    StepSchedule schedule = StepSchedule::TwoOverTPlusOne;
};

/// Long unscreened gCGM run, then an active-set Newton polish in the conic
/// coefficients of the candidate support. The polished point is accepted only
/// if its certified gap is below the long run's best gap.
Reference reference_solve(const Problem& problem, const ReferenceOptions& options = {});

/// Per-iteration distances to the reference.
struct ResidualRow {
    std::int64_t t = 0;
    double objective_error = 0.0;
    double gap = 0.0;
    double min_gap = 0.0;
    double gradient_error = 0.0;  // sigma_{P~}(grad f(x) - grad*)
    double residual_bound = 0.0;  // sqrt(L gap)
    std::int64_t active_atoms = 0;
    std::int64_t support_error = 0;  // |S^(t) symmetric-difference supp(x*)|
};

using ResidualSeries = std::vector<ResidualRow>;

/// Snapshot of an iterate and its active set, taken by IterateRecorder.
struct IterateSnapshot {
    std::int64_t t = 0;
    Vector x;
    double objective = 0.0;
    double gap = 0.0;
    double min_gap = 0.0;
    std::vector<AtomId> active_ids;
};

/// Observer that keeps snapshots of every `every`-th iterate.
class IterateRecorder {
public:
    explicit IterateRecorder(std::uint64_t fingerprint, std::int64_t every = 1) : fingerprint_(fingerprint), every_(every) {}

    void operator()(const SolverState& state, const StepInfo& info);
    StepObserver observer() {
        return [this](const SolverState& s, const StepInfo& i) { (*this)(s, i); };
    }

    std::uint64_t fingerprint() const noexcept { return fingerprint_; }
    const std::vector<IterateSnapshot>& snapshots() const noexcept { return snapshots_; }

private:
    std::uint64_t fingerprint_;
    std::int64_t every_;
    std::vector<IterateSnapshot> snapshots_;
};

/// Residual series of recorded iterates against a reference of the same problem.
/// Throws ContractViolation when the fingerprints of the problem, the recording
/// and the reference differ.
ResidualSeries residuals(const Problem& problem, const IterateRecorder& trace, const Reference& reference);

void write_residuals_csv(const std::string& path, const ResidualSeries& series);

/// Least-squares slope of log(value) against log(t) for t in [t_lo, t_hi].
/// Throws ContractViolation with fewer than 5 points or a nonpositive value in the window.
double rate_slope(std::span<const double> t, std::span<const double> values, double t_lo, double t_hi);

}  // namespace gcgm
