#include "gcgm/cli.hpp"

#include "gcgm/experiments.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <optional>
#include <sstream>

namespace gcgm {
namespace {

namespace fs = std::filesystem;

struct Options {
    std::string verb;
    std::uint64_t seed = 0;
    int n = 100;
    int d = 50;
    std::string problem = "synthetic";
    std::string loss = "logistic";
    std::string data_csv;
    std::string atoms_file;
    double scale = 1.0;
    std::string penalty = "power";
    double alpha = 2.0;
    std::vector<double> lambdas{1.0};
    double capacity = 1.0;
    double beta = 1.0;
    std::int64_t iters = 10'000;
    double gap_tol = 0.0;
    std::string screen = "prune";
    std::int64_t screen_every = 1;
    bool conservative = false;
    std::string theta = "2t1";
    std::int64_t trace_every = 1;
    bool no_timing = false;
    std::string out = ".";
    std::string images;
    std::string labels;
    std::string test_images;
    std::string test_labels;
    std::string reference;
    double ref_tol = 1e-10;
    bool no_refine = false;
    std::int64_t record_every = 1;
    std::string input;
    std::string column = "objective_error";
    double t_lo = 100.0;
    double t_hi = 10'000.0;
};

std::string hex64(std::uint64_t v) {
    char buf[19];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string num(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

std::string source_of(const Options& o) {
    if (!o.data_csv.empty()) return "csv";
    if (o.verb == "synthetic" || o.verb == "mnist") return o.verb;
    return o.problem;
}

struct Inputs {
    Loss loss;
    AtomicSet set;
    double L;
    std::optional<Loss> test;
};

Loss make_loss(const std::string& kind, DataMatrix data) {
    return kind == "quadratic" ? Loss::quadratic(std::move(data)) : Loss::logistic(std::move(data));
}

Inputs load_inputs(const Options& o) {
    const std::string source = source_of(o);
    DataMatrix data;
    std::optional<DataMatrix> test;
    if (source == "csv") {
        data = load_data_csv(o.data_csv);
    } else if (source == "mnist") {
        if (o.images.empty() || o.labels.empty()) throw ContractViolation("mnist needs --images and --labels");
        data = load_mnist_pair(o.images, o.labels);
        if (!o.test_images.empty() || !o.test_labels.empty()) {
            if (o.test_images.empty() || o.test_labels.empty()) {
                throw ContractViolation("--test-images and --test-labels go together");
            }
            test = load_mnist_pair(o.test_images, o.test_labels);
        }
    } else {
        data = gen_synthetic(o.seed, o.n, o.d);
    }
    const int dim = static_cast<int>(data.features());
    AtomicSet set = o.atoms_file.empty() ? AtomicSet::signed_basis(dim, o.scale) : load_atoms(o.atoms_file, o.scale);
    Loss loss = make_loss(o.loss, std::move(data));
    const double L = smoothness_wrt(loss, symmetrize(set));
    std::optional<Loss> test_loss;
    if (test) test_loss = make_loss(o.loss, std::move(*test));
    return {std::move(loss), std::move(set), L, std::move(test_loss)};
}

Penalty make_penalty(const Options& o, double lambda) {
    if (o.penalty == "log-barrier") return Penalty::log_barrier(o.capacity, o.beta, lambda);
    if (o.penalty == "indicator") return Penalty::indicator(o.capacity);
    return Penalty::power(o.alpha, lambda);
}

SolverConfig make_config(const Options& o) {
    SolverConfig c;
    c.max_iters = o.iters;
    c.gap_tolerance = o.gap_tol;
    c.schedule = o.theta == "4t2" ? StepSchedule::FourOverTPlusTwo : StepSchedule::TwoOverTPlusOne;
    c.screening_enabled = o.screen != "off";
    c.screening_mode = o.screen == "report" ? ScreeningMode::ReportOnly : ScreeningMode::PruneLmo;
    c.screen_every = o.screen_every;
    c.conservative_sigma = o.conservative;
    c.trace_every = o.trace_every;
    c.record_time = !o.no_timing;
    return c;
}

// Everything that determines a run's output, in a fixed order.
std::string canonical(const Options& o, const Problem& p, bool with_solver) {
    std::ostringstream os;
    os << "verb=" << o.verb << ";problem=" << p.loss.describe() << ";" << p.penalty.describe() << ";"
       << p.set.describe() << ";fingerprint=" << hex64(p.fingerprint()) << ";iters=" << o.iters
       << ";theta=" << o.theta;
    if (with_solver) {
        os << ";gap_tol=" << num(o.gap_tol) << ";screen=" << o.screen << ";screen_every=" << o.screen_every
           << ";conservative=" << o.conservative << ";trace_every=" << o.trace_every
           << ";record_every=" << o.record_every << ";reference=" << o.reference;
    } else {
        os << ";ref_tol=" << num(o.ref_tol) << ";refine=" << !o.no_refine;
    }
    return os.str();
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << text;
    if (text.empty() || text.back() != '\n') out << '\n';
}

double misclassification(const Loss& loss, const Vector& x) {
    const Vector margin = loss.data().b.cwiseProduct(loss.predict(x));
    return static_cast<double>((margin.array() <= 0.0).count()) / static_cast<double>(margin.size());
}

struct RunSummary {
    double lambda = 0.0;
    RunStatus status = RunStatus::MaxIterations;
    std::string message;
    std::string stem;
    std::int64_t t = 0;
    double min_gap = kInfinity;
    std::int64_t active = 0;
    std::int64_t nonzeros = 0;
    std::optional<double> train_error;
    std::optional<double> test_error;
    std::optional<std::int64_t> identified_at;
};

std::optional<Reference> load_reference(const Options& o, const Problem& p) {
    if (o.reference.empty()) return std::nullopt;
    Reference ref = Reference::from_json(read_file(o.reference));
    if (ref.fingerprint != p.fingerprint()) {
        throw ContractViolation("reference " + o.reference + " belongs to a different problem");
    }
    return ref;
}

// One solver run of the synthetic/mnist/residuals verbs, with all its output files.
RunSummary solve_one(const Options& o, const Inputs& in, double lambda) {
    const Problem p(in.loss, make_penalty(o, lambda), in.set, in.L);
    const SolverConfig cfg = make_config(o);
    const std::optional<Reference> ref = load_reference(o, p);
    const std::string stem = hex64(fnv1a(canonical(o, p, true)));

    std::ostringstream events;
    events << "t,removed_id,threshold,sigma,remaining\n" << std::setprecision(17);
    std::optional<std::int64_t> identified_at;
    IterateRecorder recorder(p.fingerprint(), o.record_every);
    const bool record = o.verb == "residuals";

    const StepObserver observer = [&](const SolverState& s, const StepInfo& info) {
        if (info.screened) {
            for (AtomId id : info.screen.removed_ids) {
                events << info.t << ',' << id << ',' << info.screen.threshold << ',' << info.screen.sigma << ','
                       << info.screen.remaining << '\n';
            }
        }
        if (ref && !identified_at && identification_reached(p.L, s.min_gap, ref->delta)) identified_at = info.t;
        if (record) recorder(s, info);
    };
    const RunResult result = run(p, cfg, observer);

    const fs::path dir(o.out);
    write_trace_csv((dir / ("trace-" + stem + ".csv")).string(), result.trace);
    write_file(dir / ("events-" + stem + ".csv"), events.str());

    SupportCertificate cert;
    cert.L = p.L;
    cert.min_gap = result.state.min_gap;
    if (ref) {
        cert.support_ids = ref->support_ids;
        cert.delta = ref->delta;
        cert.identified_at = identified_at;
    } else {
        cert.support_ids = support_of(result.state.coeffs);
    }
    write_file(dir / ("certificate-" + stem + ".json"), cert.to_json());

    if (record && ref) {
        write_residuals_csv((dir / ("residuals-" + stem + ".csv")).string(), residuals(p, recorder, *ref));
    }

    RunSummary s;
    s.lambda = lambda;
    s.status = result.status;
    s.message = result.message;
    s.stem = stem;
    s.t = result.trace.empty() ? 0 : result.trace.back().t;
    s.min_gap = result.state.min_gap;
    s.active = result.state.mask.active_count();
    s.nonzeros = static_cast<std::int64_t>(support_of(result.state.coeffs).size());
    s.identified_at = identified_at;
    if (o.verb == "mnist" && result.ok()) {
        s.train_error = misclassification(p.loss, result.state.x);
        if (in.test) s.test_error = misclassification(*in.test, result.state.x);
    }

    nlohmann::json manifest;
    manifest["config"] = canonical(o, p, true);
    manifest["seed"] = o.seed;
    manifest["status"] = to_string(result.status);
    manifest["message"] = result.message;
    manifest["iterations"] = s.t;
    manifest["L"] = p.L;
    manifest["min_gap"] = std::isfinite(s.min_gap) ? nlohmann::json(s.min_gap) : nlohmann::json(nullptr);
    manifest["active_atoms"] = s.active;
    manifest["nonzeros"] = s.nonzeros;
    if (s.train_error) manifest["train_error"] = *s.train_error;
    if (s.test_error) manifest["test_error"] = *s.test_error;
    write_file(dir / ("run-" + stem + ".json"), manifest.dump(2));
    return s;
}

int exit_code_for(RunStatus status) {
    switch (status) {
        case RunStatus::MaxIterations:
        case RunStatus::GapTolerance:
            return kExitOk;
        case RunStatus::UnboundedStep:
        case RunStatus::Diverged:
            return kExitDiverged;
        case RunStatus::CertificateFailure:
            return kExitError;
    }
    return kExitError;
}

int do_runs(const Options& o, std::ostream& out) {
    const Inputs in = load_inputs(o);
    std::vector<std::future<RunSummary>> jobs;
    for (double lambda : o.lambdas) {
        jobs.push_back(std::async(std::launch::async, [&o, &in, lambda] { return solve_one(o, in, lambda); }));
    }
    int code = kExitOk;
    out << std::setprecision(6);
    for (auto& job : jobs) {
        const RunSummary s = job.get();
        out << "lambda=" << s.lambda << " status=" << to_string(s.status) << " t=" << s.t << " min_gap=" << s.min_gap
            << " active=" << s.active << " nonzeros=" << s.nonzeros;
        if (s.train_error) out << " train_error=" << *s.train_error;
        if (s.test_error) out << " test_error=" << *s.test_error;
        if (!o.reference.empty()) {
            out << " identified_at=" << (s.identified_at ? std::to_string(*s.identified_at) : "none");
        }
        out << " files=" << s.stem;
        if (!s.message.empty()) out << " message=\"" << s.message << '"';
        out << '\n';
        code = std::max(code, exit_code_for(s.status));
    }
    return code;
}

int do_reference(const Options& o, std::ostream& out) {
    const Inputs in = load_inputs(o);
    ReferenceOptions ro;
    ro.iters = o.iters;
    ro.tol = o.ref_tol;
    ro.refine = !o.no_refine;
    ro.schedule = o.theta == "4t2" ? StepSchedule::FourOverTPlusTwo : StepSchedule::TwoOverTPlusOne;

    std::vector<std::future<std::string>> jobs;
    for (double lambda : o.lambdas) {
        jobs.push_back(std::async(std::launch::async, [&, lambda] {
            const Problem p(in.loss, make_penalty(o, lambda), in.set, in.L);
            const Reference ref = reference_solve(p, ro);
            const fs::path path = fs::path(o.out) / ("reference-" + hex64(fnv1a(canonical(o, p, false))) + ".json");
            write_file(path, ref.to_json());
            std::ostringstream line;
            line << std::setprecision(6) << "lambda=" << lambda << " gap=" << ref.gap << " delta=" << ref.delta
                 << " support=" << ref.support_ids.size() << " refined=" << ref.refined
                 << " reached_tolerance=" << ref.reached_tolerance << " file=" << path.string() << '\n';
            return line.str();
        }));
    }
    for (auto& job : jobs) out << job.get();
    return kExitOk;
}

int do_rate(const Options& o, std::ostream& out) {
    if (o.input.empty()) throw ContractViolation("rate needs --input");
    std::istringstream text(read_file(o.input));
    std::string line;
    if (!std::getline(text, line)) throw FormatError(o.input + ": empty file", 0);
    std::int64_t offset = static_cast<std::int64_t>(line.size()) + 1;

    auto split = [](const std::string& s) {
        std::vector<std::string> cells;
        std::stringstream ss(s);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        return cells;
    };
    const auto header = split(line);
    const auto find = [&](const std::string& name) {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw FormatError(o.input + ": no column named " + name, 0);
        return static_cast<std::size_t>(it - header.begin());
    };
    const std::size_t tcol = find("t");
    const std::size_t vcol = find(o.column);

    std::vector<double> ts, vs;
    while (std::getline(text, line)) {
        if (!line.empty()) {
            const auto cells = split(line);
            if (cells.size() != header.size()) throw FormatError(o.input + ": wrong number of cells", offset);
            try {
                ts.push_back(std::stod(cells[tcol]));
                vs.push_back(std::stod(cells[vcol]));
            } catch (const std::exception&) {
                throw FormatError(o.input + ": not a number", offset);
            }
        }
        offset += static_cast<std::int64_t>(line.size()) + 1;
    }
    out << std::setprecision(17) << rate_slope(ts, vs, o.t_lo, o.t_hi) << '\n';
    return kExitOk;
}

void add_options(CLI::App& app, Options& o) {
    const std::vector<std::string> verbs{"synthetic", "mnist", "reference", "residuals", "rate"};
    app.add_option("verb", o.verb, "synthetic | mnist | reference | residuals | rate")
        ->required()
        ->check(CLI::IsMember(verbs));

    app.add_option("--seed", o.seed, "Seed of the synthetic data generator");
    app.add_option("--n", o.n, "Synthetic sample count")->check(CLI::PositiveNumber);
    app.add_option("--d", o.d, "Synthetic dimension")->check(CLI::PositiveNumber);
    app.add_option("--problem", o.problem, "Data source for reference/residuals")
        ->check(CLI::IsMember({"synthetic", "mnist"}));
    app.add_option("--loss", o.loss, "Loss function")->check(CLI::IsMember({"logistic", "quadratic"}));
    app.add_option("--data", o.data_csv, "Dense CSV data file (header `n d`, rows a_1..a_d,b)");
    app.add_option("--atoms", o.atoms_file, "Explicit atom file (default: signed basis)");
    app.add_option("--scale", o.scale, "Scale C of the atomic set")->check(CLI::PositiveNumber);

    app.add_option("--penalty", o.penalty, "Penalty kind")->check(CLI::IsMember({"power", "log-barrier", "indicator"}));
    app.add_option("--alpha", o.alpha, "Exponent of the power penalty");
    app.add_option("--lambda", o.lambdas, "Penalty weight(s); several values run as a sweep")->delimiter(',');
    app.add_option("--capacity", o.capacity, "Cap of the log-barrier/indicator penalty")->check(CLI::PositiveNumber);
    app.add_option("--beta", o.beta, "Sharpness of the log-barrier penalty")->check(CLI::PositiveNumber);

    app.add_option("--iters", o.iters, "Iteration budget")->check(CLI::PositiveNumber);
    app.add_option("--gap-tol", o.gap_tol, "Stop once the best gap is at most this");
    app.add_option("--screen", o.screen, "Screening mode")->check(CLI::IsMember({"prune", "report", "off"}));
    app.add_option("--screen-every", o.screen_every, "Run the screening rule every k iterations")
        ->check(CLI::PositiveNumber);
    app.add_flag("--conservative", o.conservative, "Certify with sigma over all atoms while pruning");
    app.add_option("--theta", o.theta, "Step schedule 2/(t+1) or 4/(t+2)")->check(CLI::IsMember({"2t1", "4t2"}));
    app.add_option("--trace-every", o.trace_every, "Trace every k-th iteration")->check(CLI::PositiveNumber);
    app.add_flag("--no-timing", o.no_timing, "Write elapsed_s as 0 for byte-identical traces");
    app.add_option("--out", o.out, "Output directory");

    app.add_option("--images", o.images, "MNIST training images (IDX)");
    app.add_option("--labels", o.labels, "MNIST training labels (IDX)");
    app.add_option("--test-images", o.test_images, "MNIST test images (IDX)");
    app.add_option("--test-labels", o.test_labels, "MNIST test labels (IDX)");

    app.add_option("--reference", o.reference, "Reference solution JSON");
    app.add_option("--ref-tol", o.ref_tol, "Gap tolerance of the reference solve");
    app.add_flag("--no-refine", o.no_refine, "Skip the Newton polish of the reference solve");
    app.add_option("--record-every", o.record_every, "Residuals: keep every k-th iterate")->check(CLI::PositiveNumber);

    app.add_option("--input", o.input, "rate: CSV file with a `t` column");
    app.add_option("--column", o.column, "rate: column to fit");
    app.add_option("--t-lo", o.t_lo, "rate: window start");
    app.add_option("--t-hi", o.t_hi, "rate: window end");

    app.set_config("--config", "", "key=value configuration file (flags override it)");
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Generalized conditional gradient experiments", "gcgm"};
    Options o;
    add_options(app, o);
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitError;
    }

    try {
        if (o.lambdas.empty()) throw ContractViolation("--lambda needs at least one value");
        if (o.verb == "rate") return do_rate(o, out);
        fs::create_directories(o.out);
        if (o.verb == "reference") return do_reference(o, out);
        if (o.verb == "residuals") {
            if (o.reference.empty()) throw ContractViolation("residuals needs --reference");
            if (o.lambdas.size() != 1) throw ContractViolation("residuals takes a single --lambda");
        }
        return do_runs(o, out);
    } catch (const FormatError& e) {
        err << "format error: " << e.what() << '\n';
        return kExitFormat;
    } catch (const UnboundedStepError& e) {
        err << "unbounded step: " << e.what() << '\n';
        return kExitDiverged;
    } catch (const DivergenceError& e) {
        err << "diverged: " << e.what() << '\n';
        return kExitDiverged;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitError;
    }
}

}  // namespace gcgm
