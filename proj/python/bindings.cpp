#include "gcgm/experiments.hpp"

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace gcgm;

namespace {

AtomMask mask_from(const AtomicSet& set, const std::optional<std::vector<AtomId>>& active) {
    AtomMask mask = AtomMask::full(set);
    if (!active) return mask;
    require(set.maskable(), "an active set needs a maskable atomic set");
    std::vector<char> keep(static_cast<std::size_t>(set.size()), 0);
    for (AtomId id : *active) {
        require(id >= 0 && id < set.size(), "active atom id out of range");
        keep[static_cast<std::size_t>(id)] = 1;
    }
    for (AtomId id = 0; id < set.size(); ++id) {
        if (!keep[static_cast<std::size_t>(id)]) mask.deactivate(id);
    }
    return mask;
}

SolverConfig make_config(std::int64_t max_iters, double gap_tol, const std::string& screening,
                         std::int64_t screen_every, bool conservative, const std::string& schedule,
                         std::int64_t trace_every) {
    SolverConfig cfg;
    cfg.max_iters = max_iters;
    cfg.gap_tolerance = gap_tol;
    if (screening == "prune") {
        cfg.screening_enabled = true;
    } else if (screening == "report") {
        cfg.screening_enabled = true;
        cfg.screening_mode = ScreeningMode::ReportOnly;
    } else if (screening != "off") {
        throw ContractViolation("screening must be 'prune', 'report' or 'off'");
    }
    cfg.screen_every = screen_every;
    cfg.conservative_sigma = conservative;
    if (schedule == "4t2") {
        cfg.schedule = StepSchedule::FourOverTPlusTwo;
    } else if (schedule != "2t1") {
        throw ContractViolation("schedule must be '2t1' or '4t2'");
    }
    cfg.trace_every = trace_every;
    cfg.record_time = false;
    cfg.validate();
    return cfg;
}

py::dict trace_dict(const std::vector<TraceRecord>& trace) {
    const auto column = [&](auto field) {
        std::vector<double> out;
        out.reserve(trace.size());
        for (const auto& r : trace) out.push_back(static_cast<double>(r.*field));
        return out;
    };
    py::dict d;
    d["t"] = column(&TraceRecord::t);
    d["objective"] = column(&TraceRecord::objective);
    d["gap"] = column(&TraceRecord::gap);
    d["min_gap"] = column(&TraceRecord::min_gap);
    d["sigma"] = column(&TraceRecord::sigma);
    d["active_atoms"] = column(&TraceRecord::active_atoms);
    d["nonzeros"] = column(&TraceRecord::nonzero_coeffs);
    d["xi"] = column(&TraceRecord::xi);
    return d;
}

}  // namespace

PYBIND11_MODULE(_gcgm, m) {
    m.doc() = "Generalized conditional gradient with gauge penalties and safe screening";

    py::register_exception<ContractViolation>(m, "ContractViolation", PyExc_ValueError);
    py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
    py::register_exception<UnboundedStepError>(m, "UnboundedStepError", PyExc_ArithmeticError);
    py::register_exception<DivergenceError>(m, "DivergenceError", PyExc_ArithmeticError);
    py::register_exception<InfeasibleGaugeError>(m, "InfeasibleGaugeError", PyExc_ValueError);
    py::register_exception<CertificateError>(m, "CertificateError", PyExc_RuntimeError);

    py::class_<AtomicSet>(m, "AtomicSet")
        .def_static("signed_basis", &AtomicSet::signed_basis, py::arg("dimension"), py::arg("scale") = 1.0)
        .def_static("hypercube", &AtomicSet::hypercube, py::arg("dimension"), py::arg("scale") = 1.0)
        .def_static("explicit_list", &AtomicSet::explicit_list, py::arg("atoms"), py::arg("scale") = 1.0)
        .def_static("load", &load_atoms, py::arg("path"), py::arg("scale") = 1.0)
        .def("save", [](const AtomicSet& s, const std::string& path) { save_atoms(s, path); })
        .def_property_readonly("dimension", &AtomicSet::dimension)
        .def_property_readonly("scale", &AtomicSet::scale)
        .def_property_readonly("size", &AtomicSet::size)
        .def_property_readonly("maskable", &AtomicSet::maskable)
        .def("atom", &AtomicSet::atom, py::arg("id"))
        .def("transformed", &AtomicSet::transformed, py::arg("map"))
        .def("symmetrized", [](const AtomicSet& s) { return symmetrize(s); })
        .def("__repr__", &AtomicSet::describe);

    m.def(
        "lmo",
        [](const AtomicSet& set, const Vector& z, const std::optional<std::vector<AtomId>>& active) {
            const LmoResult r = active ? lmo(set, mask_from(set, active), z) : lmo(set, z);
            return py::make_tuple(r.atom, r.sigma);
        },
        py::arg("set"), py::arg("z"), py::arg("active") = py::none(),
        "Best atom id and support value sigma over the (optionally restricted) atoms.");
    m.def("gauge", &gauge_value, py::arg("set"), py::arg("x"));
    m.def(
        "gauge_decomposition",
        [](const AtomicSet& set, const Vector& x) {
            const auto g = gauge_decomposition(set, x);
            return py::make_tuple(g.value, g.coefficients);
        },
        py::arg("set"), py::arg("x"));
    m.def("support_value", py::overload_cast<const AtomicSet&, const Vector&>(&support_value), py::arg("set"),
          py::arg("z"));

    py::class_<Penalty>(m, "Penalty")
        .def_static("power", &Penalty::power, py::arg("alpha"), py::arg("lam") = 1.0)
        .def_static("log_barrier", &Penalty::log_barrier, py::arg("capacity"), py::arg("beta"), py::arg("lam") = 1.0)
        .def_static("indicator", &Penalty::indicator, py::arg("capacity"))
        .def("value", &Penalty::value, py::arg("xi"))
        .def("conjugate", &Penalty::conjugate, py::arg("nu"))
        .def("xi_step", &Penalty::xi_step, py::arg("nu"))
        .def_property_readonly("growth",
                               [](const Penalty& p) {
                                   const auto& g = p.growth();
                                   py::dict d;
                                   d["mu"] = g.mu;
                                   d["phi0"] = g.phi0;
                                   d["xi0"] = g.xi0;
                                   d["convergence_guaranteed"] = g.convergence_guaranteed();
                                   return d;
                               })
        .def("__repr__", &Penalty::describe);

    py::class_<Loss>(m, "Loss")
        .def_static(
            "quadratic", [](const Matrix& A, const Vector& b) { return Loss::quadratic({A, b}); }, py::arg("A"),
            py::arg("b"))
        .def_static(
            "logistic", [](const Matrix& A, const Vector& b) { return Loss::logistic({A, b}); }, py::arg("A"),
            py::arg("b"))
        .def("value", &Loss::value, py::arg("x"))
        .def("gradient", &Loss::gradient, py::arg("x"))
        .def("composed_with", &Loss::composed_with, py::arg("map"));

    py::class_<Problem>(m, "Problem")
        .def(py::init([](const Loss& loss, const Penalty& penalty, const AtomicSet& set, std::optional<double> L) {
                 return L ? Problem(loss, penalty, set, *L) : Problem(loss, penalty, set);
             }),
             py::arg("loss"), py::arg("penalty"), py::arg("set"), py::arg("L") = py::none())
        .def_readonly("L", &Problem::L)
        .def("objective", &Problem::objective, py::arg("x"))
        .def_property_readonly("fingerprint", &Problem::fingerprint);

    m.def(
        "solve",
        [](const Problem& p, std::int64_t max_iters, double gap_tol, const std::string& screening,
           std::int64_t screen_every, bool conservative, const std::string& schedule, std::int64_t trace_every) {
            const SolverConfig cfg =
                make_config(max_iters, gap_tol, screening, screen_every, conservative, schedule, trace_every);
            RunResult r;
            {
                py::gil_scoped_release release;
                r = run(p, cfg);
            }
            py::dict out;
            out["x"] = r.state.x;
            out["status"] = to_string(r.status);
            out["message"] = r.message;
            out["t"] = r.trace.empty() ? 0 : r.trace.back().t;
            out["min_gap"] = r.state.min_gap;
            out["coefficients"] = r.state.coeffs;
            out["active"] = r.state.mask.implicit() ? py::object(py::none()) : py::cast(r.state.mask.active_ids());
            out["trace"] = trace_dict(r.trace);
            return out;
        },
        py::arg("problem"), py::arg("max_iters") = 1000, py::arg("gap_tol") = 0.0, py::arg("screening") = "off",
        py::arg("screen_every") = 1, py::arg("conservative") = false, py::arg("schedule") = "2t1",
        py::arg("trace_every") = 1,
        "Run gCGM. Step failures are reported through 'status' and 'message' instead of raising.");

    m.def(
        "reference_solve",
        [](const Problem& p, std::int64_t iters, double tol, bool refine) {
            Reference ref;
            {
                py::gil_scoped_release release;
                ref = reference_solve(p, {iters, tol, refine});
            }
            py::dict out;
            out["x"] = ref.x;
            out["grad"] = ref.grad;
            out["support"] = ref.support_ids;
            out["coefficients"] = ref.support_coeffs;
            out["delta"] = ref.delta;
            out["objective"] = ref.objective;
            out["gap"] = ref.gap;
            out["reached_tolerance"] = ref.reached_tolerance;
            out["json"] = ref.to_json();
            return out;
        },
        py::arg("problem"), py::arg("iters") = 1'000'000, py::arg("tol") = 1e-10, py::arg("refine") = true);

    m.def(
        "screen",
        [](const AtomicSet& set, const Vector& grad, double sigma, double gap, double L,
           const std::optional<std::vector<AtomId>>& active) {
            AtomMask mask = mask_from(set, active);
            const auto report = apply_rule(mask, set, grad, sigma, gap, L);
            return py::make_tuple(report.removed_ids, report.threshold, mask.active_ids());
        },
        py::arg("set"), py::arg("grad"), py::arg("sigma"), py::arg("gap"), py::arg("L"),
        py::arg("active") = py::none(), "Apply the gap-safe rule once. Returns (removed, threshold, still active).");
    m.def("delta", &delta, py::arg("set"), py::arg("grad_star"), py::arg("support"));
    m.def("identification_reached", &identification_reached, py::arg("L"), py::arg("min_gap"), py::arg("delta"));

    m.def(
        "gen_synthetic",
        [](std::uint64_t seed, int n, int d) {
            const DataMatrix data = gen_synthetic(seed, n, d);
            return py::make_tuple(data.A, data.b);
        },
        py::arg("seed"), py::arg("n") = 100, py::arg("d") = 50);
    m.def(
        "load_mnist_pair",
        [](const std::string& images, const std::string& labels, std::pair<int, int> digits) {
            const DataMatrix data = load_mnist_pair(images, labels, digits);
            return py::make_tuple(data.A, data.b);
        },
        py::arg("images"), py::arg("labels"), py::arg("digits") = std::pair<int, int>{4, 9});
    m.def("rate_slope",
          [](const std::vector<double>& t, const std::vector<double>& v, double lo, double hi) {
              return rate_slope(t, v, lo, hi);
          },
          py::arg("t"), py::arg("values"), py::arg("t_lo"), py::arg("t_hi"));
}
