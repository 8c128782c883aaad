#include "gcgm/experiments.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <iterator>

namespace gcgm {

void IterateRecorder::operator()(const SolverState& state, const StepInfo& info) {
    if ((info.t - 1) % every_ != 0) return;
    IterateSnapshot snap;
    snap.t = info.t;
    snap.x = state.x;
    snap.objective = info.objective;
    snap.gap = info.gap;
    snap.min_gap = info.min_gap;
    if (!state.mask.implicit()) snap.active_ids = state.mask.active_ids();
    snapshots_.push_back(std::move(snap));
}

ResidualSeries residuals(const Problem& problem, const IterateRecorder& trace, const Reference& reference) {
    const std::uint64_t fp = problem.fingerprint();
    require(trace.fingerprint() == fp, "residuals: recording belongs to a different problem");
    require(reference.fingerprint == fp, "residuals: reference belongs to a different problem");
    require(reference.grad.size() == problem.set.dimension(), "residuals: reference dimension mismatch");

    const AtomicSet sym = symmetrize(problem.set);
    std::vector<AtomId> support = reference.support_ids;
    std::sort(support.begin(), support.end());

    ResidualSeries out;
    out.reserve(trace.snapshots().size());
    for (const auto& snap : trace.snapshots()) {
        ResidualRow row;
        row.t = snap.t;
        row.objective_error = snap.objective - reference.objective;
        row.gap = snap.gap;
        row.min_gap = snap.min_gap;
        row.gradient_error = support_value(sym, problem.loss.gradient(snap.x) - reference.grad);
        row.residual_bound = std::sqrt(problem.L * std::max(snap.gap, 0.0));
        row.active_atoms = static_cast<std::int64_t>(snap.active_ids.size());
        std::vector<AtomId> active = snap.active_ids;
        std::sort(active.begin(), active.end());
        std::vector<AtomId> diff;
        std::set_symmetric_difference(active.begin(), active.end(), support.begin(), support.end(),
                                      std::back_inserter(diff));
        row.support_error = static_cast<std::int64_t>(diff.size());
        out.push_back(row);
    }
    return out;
}

void write_residuals_csv(const std::string& path, const ResidualSeries& series) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << "t,objective_error,gap,min_gap,gradient_error,residual_bound,active_atoms,support_error\n";
    out << std::setprecision(17);
    for (const auto& r : series) {
        out << r.t << ',' << r.objective_error << ',' << r.gap << ',' << r.min_gap << ',' << r.gradient_error << ','
            << r.residual_bound << ',' << r.active_atoms << ',' << r.support_error << '\n';
    }
}

double rate_slope(std::span<const double> t, std::span<const double> values, double t_lo, double t_hi) {
    require(t.size() == values.size(), "rate_slope: length mismatch");
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] < t_lo || t[i] > t_hi) continue;
        require(t[i] > 0.0 && values[i] > 0.0, "rate_slope: nonpositive value in the fitting window");
        const double lx = std::log(t[i]);
        const double ly = std::log(values[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++n;
    }
    require(n >= 5, "rate_slope: fewer than 5 points in the fitting window");
    const double nd = static_cast<double>(n);
    const double denom = nd * sxx - sx * sx;
    require(denom > 0.0, "rate_slope: degenerate window");
    return (nd * sxy - sx * sy) / denom;
}

}  // namespace gcgm
