// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <lipshape/lipshape.hpp>

#include "oracles.hpp"

using namespace lipshape;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

std::string fmt(const char* format, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, format, args...);
    return buf;
}

ShapeGradient cosine_gradient(std::size_t n)
{
    return {DerivativeForm::volume, PeriodicLinear::sample(n, [](double p) { return std::cos(p); }),
            PeriodicLinear::zeros(n)};
}

struct RandomInstance {
    ShapeGradient grad;
    RadialShape f;
};

RandomInstance random_instance(std::size_t n, std::mt19937& rng)
{
    std::uniform_real_distribution<double> u(-1.0, 1.0), r(0.5, 1.5);
    auto h = PeriodicLinear::sample(n, [&](double) { return u(rng); });
    auto H = PeriodicLinear::sample(n, [&](double) { return 0.3 * u(rng); });
    auto f = RadialShape::sample(n, [&](double) { return r(rng); });
    return {{DerivativeForm::volume, std::move(h), std::move(H)}, std::move(f)};
}

double transport_cost(const ReducedDensity& r)
{
    std::vector<double> supply, demand;
    for (auto i : r.positive) supply.push_back(r.a[i]);
    for (auto j : r.negative) demand.push_back(-r.a[j]);
    return oracle::transport_lp(supply, demand, [&](std::size_t i, std::size_t j) {
        return circular_distance(r.positive[i], r.negative[j], r.a.size());
    });
}

double relative(double a, double b) { return std::abs(a - b) / std::abs(b); }

Outcome transform_identities()
{
    std::mt19937 rng(1);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const auto f = RadialShape::sample(128, [](double p) { return 1.0 + 0.3 * std::cos(3 * p) + 0.1 * std::sin(p); });
    double det_err = 0.0, coeff_err = 0.0;
    for (int k = 0; k < 10000; ++k) {
        const Vec2 x(u(rng), u(rng));
        const auto t = transform_at(f, x);
        const double fv = f.eval(polar_direction(x).phi);
        det_err = std::max({det_err, std::abs(t.jacobian.determinant() - fv * fv), std::abs(t.det - fv * fv)});
        const Mat2 inv = t.jacobian.inverse();
        coeff_err = std::max(coeff_err, (t.coeff_matrix - fv * fv * inv * inv.transpose()).cwiseAbs().maxCoeff());
    }
    return {det_err <= 1e-12 && coeff_err <= 1e-12,
            fmt("max |det - f^2| = %.2e, max |A_f - f^2 J^-1 J^-T| = %.2e", det_err, coeff_err)};
}

Outcome fem_convergence()
{
    std::vector<double> errors;
    const ProblemData data{[](const Vec2&) { return 1.0; }, [](const Vec2&) { return 0.0; },
                           [](const Vec2&) { return Vec2(0, 0); }};
    for (int level : {8, 16, 32}) {
        const auto mesh = generate_disk_mesh(level);
        const auto u = solve_state(mesh, RadialShape::constant(64, 1.0), data);
        double e = 0.0;
        for (const auto& q : mesh.quadrature_points()) {
            const double d = u.value_at(mesh, q) - 0.25 * (1.0 - q.x.squaredNorm());
            e += q.weight * d * d;
        }
        errors.push_back(std::sqrt(e));
    }
    const double r1 = errors[0] / errors[1], r2 = errors[1] / errors[2];
    return {std::abs(r1 - 4.0) <= 1.0 && std::abs(r2 - 4.0) <= 1.0,
            fmt("L2 errors %.3e, %.3e, %.3e; ratios %.3f, %.3f", errors[0], errors[1], errors[2], r1, r2)};
}

Outcome derivative_consistency()
{
    const auto mesh = generate_disk_mesh(16);
    const auto data = builtin_experiment("disk").data;
    const auto f = RadialShape::sample(128, [](double p) { return 1.0 + 0.1 * std::cos(p); });
    const auto v = PeriodicLinear::sample(128, [](double p) { return std::cos(2 * p) + 0.5 * std::cos(3 * p); });
    const auto cv = check_derivative(mesh, data, DerivativeForm::volume, f, v, {1e-4});
    const auto cb = check_derivative(mesh, data, DerivativeForm::boundary, f, v, {1e-4});
    const double ev = relative(cv.pairing, cv.difference[0]);
    const double eb = relative(cb.pairing, cb.difference[0]);
    const double ex = relative(cb.pairing, cv.pairing);
    return {ev <= 0.05 && eb <= 0.05 && ex <= 0.05,
            fmt("FD %.6e; volume %.6e (rel %.2e), boundary %.6e (rel %.2e), forms differ by %.2e",
                cv.difference[0], cv.pairing, ev, cb.pairing, eb, ex)};
}

Outcome formula_optimality()
{
    std::mt19937 rng(42);
    std::uniform_int_distribution<int> size(8, 64);
    double worst_lp = 0.0, worst_slope = 0.0, worst_constraint = 0.0, worst_lemma = -1e300;
    for (int trial = 0; trial < 100; ++trial) {
        const auto in = random_instance(std::size_t(size(rng)), rng);
        const std::size_t n = in.f.size();
        const auto d = formula_direction(in.grad, in.f);
        std::vector<double> c(n);
        for (std::size_t i = 0; i < n; ++i) {
            auto e = PeriodicLinear::zeros(n);
            e[i] = 1.0;
            c[i] = pairing(in.grad, e);
        }
        const double lp = oracle::lipschitz_lp(c, mass_times(in.f.radii()), in.f.radii().spacing());
        worst_lp = std::max(worst_lp, relative(d.predicted_decrease, lp));
        worst_slope = std::max(worst_slope, d.g.max_abs_slope());
        worst_constraint = std::max(worst_constraint, std::abs(integral_product(d.g, in.f.radii())));
        worst_lemma = std::max(worst_lemma, d.g.max_abs() - std::numbers::pi * d.g.max_abs_slope());
    }
    return {worst_lp <= 1e-6 && worst_slope <= 1.0 + 1e-10 && worst_constraint <= 1e-9 && worst_lemma <= 1e-12,
            fmt("max rel LP gap %.2e, max |g'| %.15f, max |int g f| %.2e, max(|g|_inf - pi |g'|_inf) %.2e", worst_lp,
                worst_slope, worst_constraint, worst_lemma)};
}

Outcome cosine_directions()
{
    const std::size_t n = 512;
    const auto f = RadialShape::constant(n, 1.0);
    const auto g = cosine_gradient(n);
    const double pf = formula_direction(g, f).predicted_decrease;
    const double ph = h1_direction(g, f).predicted_decrease;
    const double rf = relative(pf, -4.0), rh = relative(ph, -std::sqrt(std::numbers::pi));
    return {rf <= 0.02 && rh <= 0.02,
            fmt("formula %.8f vs -4 (rel %.2e), H1 %.8f vs -sqrt(pi) (rel %.2e)", pf, rf, ph, rh)};
}

Outcome sinkhorn_checks()
{
    std::mt19937 rng(7);
    std::uniform_int_distribution<int> size(8, 32);
    double worst_residual = 0.0, worst_cost = 0.0;
    bool all_converged = true;
    for (int trial = 0; trial < 20; ++trial) {
        const auto in = random_instance(std::size_t(size(rng)), rng);
        const auto red = reduce(in.grad, in.f);
        const auto sk = solve_sinkhorn(red, {});
        all_converged = all_converged && sk.converged;
        worst_residual = std::max({worst_residual, sk.row_residual, sk.col_residual});
        SinkhornOptions fine;
        fine.delta = 0.005;
        fine.max_iter = 200000;
        const auto skf = solve_sinkhorn(red, fine);
        all_converged = all_converged && skf.converged;
        worst_residual = std::max({worst_residual, skf.row_residual, skf.col_residual});
        worst_cost = std::max(worst_cost, relative(skf.transport_cost, transport_cost(red)));
    }

    // sinkhorn vs formula at delta = 0.05 on the cosine density and the disk start
    double worst_pair = relative(sinkhorn_direction(cosine_gradient(128), RadialShape::constant(128, 1.0)).predicted_decrease,
                                 formula_direction(cosine_gradient(128), RadialShape::constant(128, 1.0)).predicted_decrease);
    {
        const auto setup = builtin_experiment("disk");
        const auto mesh = generate_disk_mesh(16);
        const auto f = initial_shape(setup, 128);
        const auto u = solve_state(mesh, f, setup.data);
        const auto p = solve_adjoint(mesh, f, u, setup.data);
        const auto grad = compute_shape_gradient(mesh, f, u, p, setup.data, DerivativeForm::volume);
        const auto s = sinkhorn_direction(grad, f);
        all_converged = all_converged && s.converged;
        worst_pair = std::max(worst_pair, relative(s.predicted_decrease, formula_direction(grad, f).predicted_decrease));
    }
    return {all_converged && worst_residual <= 1e-6 && worst_cost <= 0.01 && worst_pair <= 0.10,
            fmt("max marginal residual %.2e, entropic vs LP cost at delta=0.005 rel %.2e, sinkhorn vs formula "
                "pairing rel %.2e",
                worst_residual, worst_cost, worst_pair)};
}

std::string artifacts(const RunResult& r)
{
    std::ostringstream os;
    os.precision(17);
    for (const auto& rec : r.records)
        os << rec.iteration << ',' << rec.energy << ',' << rec.derivative << ',' << rec.sigma.value_or(-1) << '\n';
    for (std::size_t i = 0; i < r.final_shape.size(); ++i) os << r.final_shape[i] << '\n';
    return os.str();
}

Outcome optimizer_contract()
{
    const auto setup = builtin_experiment("disk");
    const auto mesh = generate_disk_mesh(16);
    bool armijo = true, identical = true;
    double worst_gamma = 0.0;
    int accepted = 0;
    for (auto method : {DescentMethod::formula, DescentMethod::sinkhorn, DescentMethod::h1}) {
        RunConfig cfg(setup.data, initial_shape(setup, 128));
        cfg.method = method;
        cfg.mesh_level = 16;
        cfg.max_iterations = 15;
        const double gamma = square_integral(cfg.initial);
        const auto r = run(mesh, cfg, [&](const IterationRecord&, const RadialShape& f) {
            worst_gamma = std::max(worst_gamma, relative(square_integral(f), gamma));
        });
        double e_old = r.initial_energy;
        for (const auto& rec : r.records) {
            if (rec.sigma) {
                ++accepted;
                armijo = armijo && rec.energy < e_old + 1e-5 * *rec.sigma * rec.derivative;
            }
            e_old = rec.energy;
        }
        identical = identical && artifacts(r) == artifacts(run(mesh, cfg));
    }
    return {armijo && worst_gamma <= 1e-10 && identical && accepted > 0,
            fmt("%d accepted steps satisfy Armijo: %s; max rel drift of int f^2 %.2e; repeated runs identical: %s",
                accepted, armijo ? "yes" : "no", worst_gamma, identical ? "yes" : "no")};
}

RunResult disk_run(DescentMethod method)
{
    const auto setup = builtin_experiment("disk");
    RunConfig cfg(setup.data, initial_shape(setup, 128));
    cfg.method = method;
    cfg.mesh_level = 16;
    cfg.max_iterations = 50;
    return run(cfg);
}

Outcome disk_reproduction(const RunResult& r)
{
    bool decreasing = r.records.size() == 50;
    double e_old = r.initial_energy;
    for (const auto& rec : r.records) {
        decreasing = decreasing && rec.sigma && rec.energy < e_old;
        e_old = rec.energy;
    }
    const auto& f = r.final_shape;
    const double mean = f.radii().integral() / two_pi;
    double dev = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) dev = std::max(dev, std::abs(f[i] - mean) / mean);
    return {decreasing && dev <= 0.10,
            fmt("%zu iterations, energy %.6e -> %.6e strictly decreasing: %s; max radial deviation %.2f%%",
                r.records.size(), r.initial_energy, r.final_energy(), decreasing ? "yes" : "no", 100.0 * dev)};
}

Outcome comparison(const RunResult& formula, const RunResult& h1)
{
    return {formula.final_energy() <= h1.final_energy(),
            fmt("formula/volume %.10e vs H1/volume %.10e after 50 iterations (qualitative)", formula.final_energy(),
                h1.final_energy())};
}

Outcome square_zero()
{
    const auto setup = builtin_experiment("square-zero");
    RunConfig cfg(setup.data, initial_shape(setup, 128));
    cfg.mesh_level = 16;
    cfg.max_iterations = 250;
    const auto r = run(cfg);
    const double factor = r.initial_energy / r.final_energy();
    return {factor >= 10.0, fmt("energy %.6e -> %.6e after %zu iterations (%s), reduction factor %.1f",
                                r.initial_energy, r.final_energy(), r.records.size(), to_string(r.termination), factor)};
}

}  // namespace

int main()
{
    int failures = 0;
    auto report = [&](int id, const char* name, double limit_seconds, const std::function<Outcome()>& check) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o{false, ""};
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool pass = o.pass && secs <= limit_seconds;
        failures += pass ? 0 : 1;
        std::printf("%s criterion %d: %s | %s | %.2f s (limit %.0f s)\n", pass ? "PASS" : "FAIL", id, name,
                    o.detail.c_str(), secs, limit_seconds);
        std::fflush(stdout);
    };

    report(1, "transform identities", 5, transform_identities);
    report(2, "FEM convergence against (1 - |x|^2)/4", 60, fem_convergence);
    report(3, "shape derivative against finite differences", 120, derivative_consistency);
    report(4, "formula direction optimality", 60, formula_optimality);
    report(5, "analytic directions for q = cos", 10, cosine_directions);
    report(6, "Sinkhorn correctness", 120, sinkhorn_checks);
    report(7, "optimizer contract", 600, optimizer_contract);

    std::optional<RunResult> formula;
    report(8, "disk experiment reproduction", 600, [&] {
        formula = disk_run(DescentMethod::formula);
        return disk_reproduction(*formula);
    });
    report(9, "formula energy not above H1 energy", 600, [&] {
        if (!formula) formula = disk_run(DescentMethod::formula);
        return comparison(*formula, disk_run(DescentMethod::h1));
    });
    report(10, "zero-energy square experiment", 1800, square_zero);
    return failures == 0 ? 0 : 1;
}
