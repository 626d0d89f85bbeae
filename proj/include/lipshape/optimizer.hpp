#pragma once

// Volume-constrained descent loop with Armijo backtracking and rescaling to
// the initial square integral after every trial step.

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "descent.hpp"
#include "disk_mesh.hpp"
#include "fem.hpp"
#include "radial_shape.hpp"
#include "shape_gradient.hpp"

namespace lipshape {

struct LineSearchOptions {
    double initial_step = 1.0 / 16.0;
    double factor = 0.5;
    double min_step = 1e-8;
    double armijo = 1e-5;
};

struct RunConfig {
    RunConfig(ProblemData problem, RadialShape start) : data(std::move(problem)), initial(std::move(start)) {}

    ProblemData data;
    RadialShape initial;
    DescentMethod method = DescentMethod::formula;
    DerivativeForm form = DerivativeForm::volume;
    int mesh_level = 24;
    int max_iterations = 250;
    LineSearchOptions line_search;
    DirectionOptions direction;

    void validate() const
    {
        if (initial.size() < 8) throw std::invalid_argument("RunConfig: need at least 8 angular nodes");
        if (mesh_level < 1) throw std::invalid_argument("RunConfig: mesh level must be >= 1");
        if (max_iterations < 1) throw std::invalid_argument("RunConfig: max_iterations must be >= 1");
        const auto& ls = line_search;
        if (!(ls.factor > 0.0 && ls.factor < 1.0)) throw std::invalid_argument("RunConfig: step factor not in (0, 1)");
        if (!(ls.min_step > 0.0 && ls.min_step <= ls.initial_step))
            throw std::invalid_argument("RunConfig: need 0 < min_step <= initial_step");
        if (!(ls.armijo > 0.0 && ls.armijo < 1.0)) throw std::invalid_argument("RunConfig: Armijo constant not in (0, 1)");
    }
};

struct IterationRecord {
    int iteration;
    double energy;                // energy after the iteration
    double derivative;            // <I_h(f_old), g>
    std::optional<double> sigma;  // accepted step, empty if every trial was rejected
    double seconds;               // wall time since the start of the run
};

enum class Termination { max_iterations, line_search_failed, zero_direction };

inline const char* to_string(Termination t)
{
    switch (t) {
    case Termination::max_iterations: return "max_iterations";
    case Termination::line_search_failed: return "line_search_failed";
    case Termination::zero_direction: return "zero_direction";
    }
    return "?";
}

struct RunResult {
    RadialShape initial_shape;  // after rescaling, i.e. the iterate f_0
    double initial_energy;
    double gamma;  // int f_0^2, conserved by every accepted iterate
    std::vector<IterationRecord> records;
    RadialShape final_shape;
    Termination termination;

    double final_energy() const { return records.empty() ? initial_energy : records.back().energy; }
};

/// Called after every completed iteration with the record and current shape.
using IterationObserver = std::function<void(const IterationRecord&, const RadialShape&)>;

inline RunResult run(const DiskMesh& mesh, const RunConfig& config, const IterationObserver& observer = {})
{
    config.validate();
    const auto clock_start = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - clock_start).count();
    };
    const auto& data = config.data;
    const auto& ls = config.line_search;

    const double gamma = square_integral(config.initial);
    RadialShape f = rescale_to_square_integral(config.initial, gamma);
    FemField u = solve_state(mesh, f, data);
    double e = energy(mesh, f, u, data);

    RunResult result{f, e, gamma, {}, f, Termination::max_iterations};
    for (int it = 1; it <= config.max_iterations; ++it) {
        const FemField p = solve_adjoint(mesh, f, u, data);
        const auto grad = compute_shape_gradient(mesh, f, u, p, data, config.form);
        const auto dir = compute_direction(config.method, grad, f, config.direction);

        IterationRecord rec{it, e, dir.predicted_decrease, std::nullopt, 0.0};
        if (dir.critical || !(dir.predicted_decrease < 0.0)) {
            rec.seconds = elapsed();
            result.records.push_back(rec);
            if (observer) observer(rec, f);
            result.termination = Termination::zero_direction;
            break;
        }

        for (double sigma = ls.initial_step; sigma >= ls.min_step; sigma *= ls.factor) {
            PeriodicLinear trial = f.radii() + sigma * dir.g;
            if (!(trial.min_value() > 0.0)) continue;
            RadialShape ft = rescale_to_square_integral(RadialShape(std::move(trial)), gamma);
            FemField ut = solve_state(mesh, ft, data);
            const double et = energy(mesh, ft, ut, data);
            if (et < e + ls.armijo * sigma * dir.predicted_decrease) {
                f = std::move(ft);
                u = std::move(ut);
                e = et;
                rec.sigma = sigma;
                break;
            }
        }
        rec.energy = e;
        rec.seconds = elapsed();
        result.records.push_back(rec);
        if (observer) observer(rec, f);
        if (!rec.sigma) {
            result.termination = Termination::line_search_failed;
            break;
        }
    }
    result.final_shape = f;
    return result;
}

inline RunResult run(const RunConfig& config, const IterationObserver& observer = {})
{
    config.validate();
    return run(generate_disk_mesh(config.mesh_level), config, observer);
}

/// energy.csv: iteration,energy,derivative,sigma,seconds. Row 0 holds the
/// initial energy. Seconds are written only when with_timing is set so that
/// repeated runs produce identical files.
inline void save_energy_csv(const RunResult& r, const std::string& path, bool with_timing = false)
{
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    os << "iteration,energy,derivative,sigma,seconds\n" << std::setprecision(17);
    os << 0 << ',' << r.initial_energy << ",,,0\n";
    for (const auto& rec : r.records) {
        os << rec.iteration << ',' << rec.energy << ',' << rec.derivative << ',';
        if (rec.sigma) os << *rec.sigma;
        else os << "rejected";
        os << ',' << (with_timing ? rec.seconds : 0.0) << '\n';
    }
}

struct DerivativeCheck {
    double pairing;                     // <I_h(f), v>
    std::vector<double> steps;          // t values
    std::vector<double> difference;     // (E(f + t v) - E(f - t v)) / (2t)
    std::vector<double> relative_error; // |difference - pairing| / |difference|
    double observed_order;              // convergence order of the differences, NaN with fewer than 3 steps
};

/// Central finite differences of the discrete energy along v, without
/// volume renormalisation, compared against the shape derivative.
inline DerivativeCheck check_derivative(const DiskMesh& mesh, const ProblemData& data, DerivativeForm form,
                                        const RadialShape& f, const PeriodicLinear& v,
                                        const std::vector<double>& steps)
{
    f.radii().check_same_size(v);
    if (steps.empty()) throw std::invalid_argument("check_derivative: no step sizes");
    const FemField u = solve_state(mesh, f, data);
    const FemField p = solve_adjoint(mesh, f, u, data);
    DerivativeCheck out;
    out.pairing = pairing(compute_shape_gradient(mesh, f, u, p, data, form), v);
    out.steps = steps;
    for (double t : steps) {
        const double ep = discrete_energy(mesh, RadialShape(f.radii() + t * v), data);
        const double em = discrete_energy(mesh, RadialShape(f.radii() + (-t) * v), data);
        const double d = (ep - em) / (2.0 * t);
        out.difference.push_back(d);
        out.relative_error.push_back(std::abs(d - out.pairing) / std::abs(d));
    }
    out.observed_order = std::nan("");
    if (steps.size() >= 3) {
        const double d1 = std::abs(out.difference[0] - out.difference[1]);
        const double d2 = std::abs(out.difference[1] - out.difference[2]);
        out.observed_order = std::log(d1 / d2) / std::log(steps[0] / steps[1]);
    }
    return out;
}

}  // namespace lipshape
