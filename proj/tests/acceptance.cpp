// Acceptance checks. Prints one PASS/FAIL line per criterion and exits nonzero
// if any selected criterion fails. Criterion 9 needs the MNIST files and exits
// with code 77 (skip) when run alone without them.

#include "gcgm/cli.hpp"
#include "gcgm/experiments.hpp"
#include "oracles.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

using namespace gcgm;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances and sizes.
constexpr double kPowerConjugateTol = 1e-12;  // relative
constexpr int kGridPoints = 100'000;
constexpr int kSafetySeeds = 20;
constexpr std::int64_t kReferenceIters = 1'000'000;
constexpr double kReferenceTol = 1e-12;
constexpr std::int64_t kScreenedIters = 10'000;
constexpr double kRateSlopeMax = -0.9;
constexpr double kRateTLo = 1e2;
constexpr double kRateTHi = 1e4;
constexpr double kRoundoffFloor = 1e3 * 2.220446049250313e-16;  // times (1 + |P*|)
constexpr double kResidualSlack = 1e-8;
constexpr int kInvarianceMaps = 10;
constexpr std::int64_t kInvarianceIters = 300;
constexpr double kInvarianceTol = 1e-7;  // relative to max(1, |value|)
constexpr double kGaugeTol = 1e-9;
constexpr double kDualGapTol = 1e-6;
constexpr std::int64_t kMnistIters = 10'000;
constexpr double kMnistLambda = 1e-3;
constexpr std::int64_t kMnistFours = 5842;
constexpr std::int64_t kMnistNines = 5949;

struct Outcome {
    bool pass = true;
    std::string detail;
};

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(4);
    os << v;
    return os.str();
}

bool close(double a, double b, double tol) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(b)); }

// ---- criterion 1

Outcome conjugates() {
    Outcome o;
    const Penalty sq = Penalty::power(2.0, 1.0);
    double worst = 0.0;
    for (int i = 0; i <= 200; ++i) {
        const double nu = 0.5 * i;
        const double want = nu * nu / 2.0;
        worst = std::max(worst, std::abs(sq.conjugate(nu) - want) / std::max(1.0, want));
    }
    if (worst > kPowerConjugateTol) o.pass = false;

    struct Params {
        double cap, beta, lambda;
    };
    int grid_misses = 0, closed_misses = 0;
    for (const Params& q : {Params{10.0, 1.0, 1.0}, Params{2.0, 3.0, 0.5}, Params{1.0, 0.5, 2.0}}) {
        const Penalty pen = Penalty::log_barrier(q.cap, q.beta, q.lambda);
        for (double nu : {0.0, 0.01, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 50.0, 100.0}) {
            // closed forms for lambda = 1, rescaled through phi = lambda * phi_1
            const double v = nu / q.lambda;
            const double cbv = q.cap * q.beta * v;
            const double conj = q.lambda * (q.cap * v - std::log(cbv + 1.0) / q.beta);
            const double xi = q.cap * q.cap * q.beta * v / (cbv + 1.0);
            if (!close(pen.conjugate(nu), conj, 1e-12) || !close(pen.xi_step(nu), xi, 1e-12)) ++closed_misses;

            const auto psi = [&](double x) { return nu * x - oracle::log_barrier_phi(q.cap, q.beta, q.lambda, x); };
            const auto g = oracle::grid_max(psi, 0.0, q.cap, kGridPoints);
            // concavity: the true maximum exceeds the grid maximum by at most |psi'| * step
            const double slope = nu - q.lambda / q.beta * (1.0 / (q.cap - g.arg) - 1.0 / q.cap);
            const double excess = pen.conjugate(nu) - g.value;
            const bool arg_ok = std::abs(pen.xi_step(nu) - g.arg) <= g.step * (1.0 + 1e-9);
            const bool value_ok = excess >= -1e-12 * (1.0 + std::abs(g.value)) &&
                                  excess <= std::abs(slope) * g.step + 1e-12 * (1.0 + std::abs(g.value));
            if (!arg_ok || !value_ok) ++grid_misses;
        }
    }
    if (grid_misses || closed_misses) o.pass = false;
    o.detail = "power rel err " + fmt(worst) + ", log-barrier closed-form misses " + std::to_string(closed_misses) +
               ", grid misses " + std::to_string(grid_misses);
    return o;
}

// ---- criteria 2 to 5 share the synthetic runs

struct SyntheticRun {
    std::uint64_t seed = 0;
    double lambda = 0.0;
    Reference ref;
    bool ok = false;
    std::int64_t safety_violations = 0;
    std::int64_t residual_violations = 0;
    double worst_residual_margin = -kInfinity;
    std::vector<double> t, objective_error, min_gap;
    std::optional<std::int64_t> identify_t;
    bool identify_exact = false;
};

Problem synthetic_problem(std::uint64_t seed, double lambda) {
    return Problem(Loss::logistic(gen_synthetic(seed, 100, 50)), Penalty::power(2.0, lambda), AtomicSet::signed_basis(50));
}

SyntheticRun synthetic_run(std::uint64_t seed, double lambda) {
    SyntheticRun r;
    r.seed = seed;
    r.lambda = lambda;
    const Problem p = synthetic_problem(seed, lambda);
    r.ref = reference_solve(p, {kReferenceIters, kReferenceTol, true});
    const std::set<AtomId> support(r.ref.support_ids.begin(), r.ref.support_ids.end());
    const double scale = p.set.scale();

    SolverConfig cfg;
    cfg.max_iters = kScreenedIters;
    cfg.screening_enabled = true;
    cfg.record_time = false;
    const auto observer = [&](const SolverState& s, const StepInfo& info) {
        for (AtomId id : support) r.safety_violations += s.mask.active(id) ? 0 : 1;

        // sigma over the symmetrized signed basis is C times the max-norm
        const double residual = scale * (info.grad - r.ref.grad).lpNorm<Eigen::Infinity>();
        const double bound = std::sqrt(p.L * std::max(info.gap, 0.0));
        r.worst_residual_margin = std::max(r.worst_residual_margin, residual - bound);
        if (residual > bound + kResidualSlack) ++r.residual_violations;

        r.t.push_back(static_cast<double>(info.t));
        r.objective_error.push_back(info.objective - r.ref.objective);
        r.min_gap.push_back(s.min_gap);

        if (!r.identify_t && r.ref.delta > 0.0 && std::sqrt(p.L * s.min_gap) < r.ref.delta / 4.0) {
            r.identify_t = info.t;
            r.identify_exact = s.mask.active_ids() == r.ref.support_ids;
        }
    };
    r.ok = run(p, cfg, observer).ok();
    return r;
}

std::vector<SyntheticRun>& synthetic_runs() {
    static std::vector<SyntheticRun> runs = [] {
        std::vector<SyntheticRun> out;
        for (double lambda : {0.01, 1.0}) {
            for (int seed = 0; seed < kSafetySeeds; ++seed) out.push_back(synthetic_run(seed, lambda));
        }
        return out;
    }();
    return runs;
}

Outcome safety() {
    Outcome o;
    std::int64_t violations = 0, failed = 0, unreached = 0;
    std::size_t min_support = SIZE_MAX, max_support = 0;
    for (const auto& r : synthetic_runs()) {
        violations += r.safety_violations;
        failed += r.ok ? 0 : 1;
        unreached += r.ref.reached_tolerance ? 0 : 1;
        min_support = std::min(min_support, r.ref.support_ids.size());
        max_support = std::max(max_support, r.ref.support_ids.size());
    }
    o.pass = violations == 0 && failed == 0;
    o.detail = std::to_string(synthetic_runs().size()) + " runs, " + std::to_string(violations) +
               " violations, reference support sizes " + std::to_string(min_support) + ".." +
               std::to_string(max_support) + ", references short of tolerance " + std::to_string(unreached);
    return o;
}

// Fit window [kRateTLo, kRateTHi], cut at the first value at or below the
// roundoff floor: past that point the series is evaluation noise, not a rate.
struct SlopeFit {
    bool floor_limited = false;  // hit the floor before 5 points were available
    double slope = 0.0;
    double t_end = 0.0;
};

SlopeFit fit_until_floor(const std::vector<double>& t, const std::vector<double>& v, double floor) {
    SlopeFit fit;
    fit.t_end = kRateTHi;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] >= kRateTLo && t[i] <= kRateTHi && v[i] <= floor) {
            fit.t_end = t[i] - 1.0;
            break;
        }
    }
    std::size_t points = 0;
    for (double ti : t) points += (ti >= kRateTLo && ti <= fit.t_end) ? 1 : 0;
    if (points < 5) {
        fit.floor_limited = true;
        return fit;
    }
    fit.slope = rate_slope(t, v, kRateTLo, fit.t_end);
    return fit;
}

Outcome rate() {
    Outcome o;
    double worst_obj = -kInfinity, worst_gap = -kInfinity;
    int fitted = 0, floored = 0, truncated = 0;
    for (const auto& r : synthetic_runs()) {
        if (r.lambda != 1.0) continue;
        const double floor = kRoundoffFloor * (1.0 + std::abs(r.ref.objective));
        for (const auto* series : {&r.objective_error, &r.min_gap}) {
            const SlopeFit fit = fit_until_floor(r.t, *series, floor);
            if (fit.floor_limited) {
                ++floored;
                continue;
            }
            ++fitted;
            truncated += fit.t_end < kRateTHi ? 1 : 0;
            double& worst = series == &r.objective_error ? worst_obj : worst_gap;
            worst = std::max(worst, fit.slope);
        }
    }
    o.pass = fitted > 0 && worst_obj <= kRateSlopeMax && worst_gap <= kRateSlopeMax;
    o.detail = "lambda=1, " + std::to_string(kSafetySeeds) + " seeds: max slope objective error " + fmt(worst_obj) +
               ", min_gap " + fmt(worst_gap) + "; " + std::to_string(fitted) + " series fitted (" +
               std::to_string(truncated) + " cut at the roundoff floor), " + std::to_string(floored) +
               " at the floor before 5 points of the window";
    return o;
}

Outcome residual_bound() {
    Outcome o;
    std::int64_t violations = 0, checked = 0;
    double margin = -kInfinity;
    for (const auto& r : synthetic_runs()) {
        violations += r.residual_violations;
        checked += static_cast<std::int64_t>(r.t.size());
        margin = std::max(margin, r.worst_residual_margin);
    }
    o.pass = violations == 0;
    o.detail = std::to_string(checked) + " iterates, " + std::to_string(violations) +
               " violations, max(residual - bound) " + fmt(margin);
    return o;
}

Outcome identification() {
    Outcome o;
    int with_delta = 0, reached = 0, exact = 0;
    for (const auto& r : synthetic_runs()) {
        if (!(r.ref.delta > 0.0)) continue;
        ++with_delta;
        if (!r.identify_t) continue;
        ++reached;
        exact += r.identify_exact ? 1 : 0;
    }
    o.pass = exact == reached;
    o.detail = std::to_string(with_delta) + " runs with delta > 0, condition reached in " + std::to_string(reached) +
               ", active set exact in " + std::to_string(exact);
    return o;
}

// ---- criterion 6

Outcome invariance() {
    Outcome o;
    std::mt19937_64 rng(2024);
    int mismatches = 0;
    double worst = 0.0;
    for (int trial = 0; trial < kInvarianceMaps; ++trial) {
        const int d = 3 + trial % 8;
        const int m = 2 * d + 1;
        const int n = 4 * d;
        DataMatrix data{oracle::random_matrix(rng, n, d), oracle::random_vector(rng, n)};
        for (Eigen::Index i = 0; i < n; ++i) data.b(i) = data.b(i) >= 0.0 ? 1.0 : -1.0;
        const Matrix atoms = oracle::random_matrix(rng, d, m);
        // well conditioned but far from orthogonal
        const Matrix M = Matrix::Identity(d, d) + 0.4 * oracle::random_matrix(rng, d, d) / std::sqrt(double(d));
        const Matrix Minv = M.inverse();

        const Loss loss = Loss::logistic(data);
        const Penalty pen = Penalty::power(2.0, 0.05);
        const Problem a(loss, pen, AtomicSet::explicit_list(atoms));
        const Problem b(loss.composed_with(Minv), pen, AtomicSet::explicit_list(M * atoms));
        if (!close(a.L, b.L, 1e-9)) ++mismatches;

        SolverConfig cfg;
        cfg.max_iters = kInvarianceIters;
        cfg.screening_enabled = true;
        cfg.record_time = false;
        std::vector<StepInfo> ia, ib;
        std::vector<Vector> xa, xb;
        const RunResult ra = run(a, cfg, [&](const SolverState& s, const StepInfo& i) {
            ia.push_back(i);
            xa.push_back(s.x);
        });
        const RunResult rb = run(b, cfg, [&](const SolverState& s, const StepInfo& i) {
            ib.push_back(i);
            xb.push_back(s.x);
        });
        if (!ra.ok() || !rb.ok() || ia.size() != ib.size()) {
            ++mismatches;
            continue;
        }
        const auto track = [&](double u, double v) {
            worst = std::max(worst, std::abs(u - v) / std::max(1.0, std::abs(u)));
            return close(v, u, kInvarianceTol);
        };
        for (std::size_t k = 0; k < ia.size(); ++k) {
            bool same = ia[k].atom == ib[k].atom;
            same = track(ia[k].kappa, ib[k].kappa) && same;
            same = track(ia[k].sigma, ib[k].sigma) && same;
            same = track(ia[k].xi, ib[k].xi) && same;
            same = track(ia[k].gap, ib[k].gap) && same;
            const Vector mapped = M * xa[k];
            for (Eigen::Index j = 0; j < d; ++j) same = track(mapped(j), xb[k](j)) && same;
            if (!same) ++mismatches;
        }
        // exact gauges agree as well
        if (!track(gauge_value(a.set, ra.state.x), gauge_value(b.set, rb.state.x))) ++mismatches;
    }
    o.pass = mismatches == 0;
    o.detail = std::to_string(kInvarianceMaps) + " maps, " + std::to_string(mismatches) +
               " mismatched iterations, max relative difference " + fmt(worst);
    return o;
}

// ---- criterion 7

struct CliOutput {
    int code;
    std::string out;
};

CliOutput cli(std::vector<std::string> args) {
    args.insert(args.begin(), "gcgm");
    std::vector<const char*> argv;
    for (const auto& s : args) argv.push_back(s.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str() + err.str()};
}

std::int64_t field_t(const std::string& line) {
    const auto at = line.find(" t=");
    return at == std::string::npos ? -1 : std::stoll(line.substr(at + 3));
}

Outcome divergence_paths() {
    Outcome o;
    const fs::path dir = fs::temp_directory_path() / "gcgm_acceptance_divergence";
    fs::remove_all(dir);
    fs::create_directories(dir);
    {
        std::ofstream csv(dir / "one.csv");
        csv << "1 1\n1,2\n";
    }
    const auto unbounded = cli({"synthetic", "--data", (dir / "one.csv").string(), "--loss", "quadratic", "--alpha",
                                "1", "--lambda", "1", "--iters", "100", "--out", dir.string()});
    const bool u_ok = unbounded.code == kExitDiverged && unbounded.out.find("status=unbounded-step") != std::string::npos &&
                      field_t(unbounded.out) == 1;

    const auto weak = cli({"synthetic", "--alpha", "1.2", "--lambda", "0.01", "--iters", "10000", "--no-timing",
                           "--out", dir.string()});
    const std::int64_t t = field_t(weak.out);
    const bool w_ok = weak.code == kExitDiverged && weak.out.find("status=diverged") != std::string::npos && t >= 1 &&
                      t <= 10'000;

    const auto strong = cli({"synthetic", "--alpha", "2", "--lambda", "0.01", "--iters", "10000", "--screen", "off",
                             "--trace-every", "1000", "--no-timing", "--out", dir.string()});
    const bool s_ok = strong.code == kExitOk && field_t(strong.out) == 10'000;

    o.pass = u_ok && w_ok && s_ok;
    o.detail = "alpha=1 c=2: exit " + std::to_string(unbounded.code) + " at t=" + std::to_string(field_t(unbounded.out)) +
               "; alpha=1.2: exit " + std::to_string(weak.code) + " at t=" + std::to_string(t) +
               "; alpha=2: exit " + std::to_string(strong.code) + " at t=" + std::to_string(field_t(strong.out));
    fs::remove_all(dir);
    return o;
}

// ---- criterion 8

Outcome gauge_and_dual_gap() {
    Outcome o;
    std::mt19937_64 rng(77);
    const int d = 6;
    const AtomicSet lp = AtomicSet::signed_basis(d).as_explicit();
    double worst_gauge = 0.0;
    for (int i = 0; i < 100; ++i) {
        const Vector x = oracle::random_vector(rng, d);
        worst_gauge = std::max(worst_gauge, std::abs(gauge_value(lp, x) - x.lpNorm<1>()));
    }

    double worst_gap = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix A = oracle::random_matrix(rng, d, d) + 2.0 * Matrix::Identity(d, d);
        const Vector b = oracle::random_vector(rng, d);
        const double alpha = trial % 2 ? 3.0 : 2.0;
        const double lambda = 0.5 + 0.1 * trial;
        const Problem p(Loss::quadratic({A, b}), Penalty::power(alpha, lambda), AtomicSet::signed_basis(d));

        SolverState s = initial_state(p);
        s.x = oracle::random_vector(rng, d);
        s.prediction = p.loss.predict(s.x);
        s.kappa_bound = s.x.lpNorm<1>();
        const auto info = evaluate(s, p, SolverConfig{});

        const Vector z = -(A.transpose() * (A * s.x - b));
        const double f = oracle::quadratic_loss(A, b, s.x);
        const double h = oracle::power_phi(alpha, lambda, s.x.lpNorm<1>());
        const double sigma = oracle::support(oracle::signed_basis_atoms(d, 1.0), z);
        const auto conj = oracle::conjugate([&](double xi) { return oracle::power_phi(alpha, lambda, xi); }, sigma,
                                            4.0 * std::pow(sigma / lambda, 1.0 / (alpha - 1.0)) + 1.0);
        const double dual_gap = f + h + oracle::quadratic_conjugate(A, b, -z) + conj.value;
        worst_gap = std::max(worst_gap, std::abs(info.gap - dual_gap));
    }
    o.pass = worst_gauge <= kGaugeTol && worst_gap <= kDualGapTol;
    o.detail = "max |LP gauge - l1| " + fmt(worst_gauge) + ", max |dual gap - primal gap| " + fmt(worst_gap);
    return o;
}

// ---- criterion 9

Outcome mnist(const std::string& dir, bool& missing) {
    Outcome o;
    const fs::path images = fs::path(dir) / "train-images-idx3-ubyte";
    const fs::path labels = fs::path(dir) / "train-labels-idx1-ubyte";
    if (!fs::exists(images) || !fs::exists(labels)) {
        missing = true;
        o.pass = false;
        o.detail = "MNIST files not found in " + dir;
        return o;
    }
    const DataMatrix data = load_mnist_pair(images.string(), labels.string());
    const auto fours = (data.b.array() < 0.0).count();
    const auto nines = (data.b.array() > 0.0).count();
    const bool shape_ok = data.features() == 784 && fours == kMnistFours && nines == kMnistNines;

    const Problem p(Loss::logistic(data), Penalty::power(2.0, kMnistLambda), AtomicSet::signed_basis(784));
    SolverConfig cfg;
    cfg.max_iters = kMnistIters;
    cfg.screening_enabled = true;
    cfg.trace_every = 1000;
    AtomId prev = p.set.size();
    std::int64_t increases = 0;
    const RunResult r = run(p, cfg, [&](const SolverState& s, const StepInfo&) {
        if (s.mask.active_count() > prev) ++increases;
        prev = s.mask.active_count();
    });
    // Nonzeros of x are read off its minimal decomposition. The solver ledger is
    // not minimal: a removed atom can keep a decaying weight that cancels against
    // its active opposite, so it is reported but not judged.
    const auto nonzeros = support_of(gauge_decomposition(p.set, r.state.x).coefficients);
    std::int64_t outside = 0;
    for (AtomId id : nonzeros) outside += r.state.mask.active(id) ? 0 : 1;
    std::int64_t ledger_outside = 0;
    for (AtomId id : support_of(r.state.coeffs)) ledger_outside += r.state.mask.active(id) ? 0 : 1;

    o.pass = shape_ok && r.ok() && r.state.t == kMnistIters && increases == 0 && outside == 0;
    o.detail = "d=" + std::to_string(data.features()) + ", fours " + std::to_string(fours) + ", nines " +
               std::to_string(nines) + ", t=" + std::to_string(r.state.t) + ", |S| " +
               std::to_string(p.set.size()) + " -> " + std::to_string(r.state.mask.active_count()) +
               ", increases " + std::to_string(increases) + ", nonzeros " + std::to_string(nonzeros.size()) +
               " with " + std::to_string(outside) + " outside S (solver ledger entries outside S: " +
               std::to_string(ledger_outside) + ")";
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gcgm acceptance checks"};
    std::vector<int> only;
    std::string mnist_dir = std::getenv("GCGM_MNIST_DIR") ? std::getenv("GCGM_MNIST_DIR") : "/root/data/mnist";
    app.add_option("--only", only, "Criteria to run (default: all)")->delimiter(',')->check(CLI::Range(1, 9));
    app.add_option("--mnist-dir", mnist_dir, "Directory with the MNIST IDX files");
    CLI11_PARSE(app, argc, argv);

    const std::map<int, std::string> names{{1, "conjugate identities"},   {2, "screening safety"},
                                           {3, "O(1/t) rate"},            {4, "residual bound"},
                                           {5, "support identification"}, {6, "affine invariance"},
                                           {7, "divergence paths"},       {8, "gauge and dual gap oracles"},
                                           {9, "MNIST screening"}};
    std::set<int> selected(only.begin(), only.end());
    if (selected.empty()) {
        for (const auto& [id, name] : names) selected.insert(id);
    }

    bool all_pass = true;
    bool mnist_missing = false;
    for (int id : selected) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            switch (id) {
                case 1: o = conjugates(); break;
                case 2: o = safety(); break;
                case 3: o = rate(); break;
                case 4: o = residual_bound(); break;
                case 5: o = identification(); break;
                case 6: o = invariance(); break;
                case 7: o = divergence_paths(); break;
                case 8: o = gauge_and_dual_gap(); break;
                case 9: o = mnist(mnist_dir, mnist_missing); break;
            }
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::cout << "criterion " << id << " (" << names.at(id) << "): " << (o.pass ? "PASS" : "FAIL") << " -- "
                  << o.detail << " [" << fmt(secs) << " s]" << std::endl;
        all_pass = all_pass && o.pass;
    }
    if (mnist_missing && selected == std::set<int>{9}) return 77;
    return all_pass ? 0 : 1;
}
