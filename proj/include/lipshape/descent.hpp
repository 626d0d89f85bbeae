#pragma once

// Descent directions in S^N for a projected shape derivative: the closed-form
// W^{1,infinity} steepest descent, its entropic optimal-transport
// approximation, and the H^1 Riesz-type direction used as a baseline.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "periodic_linear.hpp"
#include "radial_shape.hpp"
#include "shape_gradient.hpp"

namespace lipshape {

enum class DescentMethod { formula, sinkhorn, h1 };

inline const char* to_string(DescentMethod m)
{
    switch (m) {
    case DescentMethod::formula: return "formula";
    case DescentMethod::sinkhorn: return "sinkhorn";
    case DescentMethod::h1: return "h1";
    }
    return "?";
}

/// Which closed-form construction the formula method uses.
///  - segment: classifies the N segments by the mean of the cumulative
///    density G over each segment and takes the weighted median as beta.
///    The result solves the discrete minimisation exactly.
///  - nodal:   classifies nodes by G(phi_i) with beta = max{G_i : M_i < pi}
///    and the tolerance band eps = 3/(2N) (max G - min G), assembling slopes
///    from the trapezoidal average of neighbouring node classes.
enum class FormulaVariant { segment, nodal };

struct FormulaOptions {
    FormulaVariant variant = FormulaVariant::segment;
};

enum class SinkhornRecovery { three_case, direct };

struct SinkhornOptions {
    double delta = 0.05;
    int max_iter = 2000;
    double tol = 1e-6;
    SinkhornRecovery recovery = SinkhornRecovery::three_case;
};

struct DirectionOptions {
    FormulaOptions formula;
    SinkhornOptions sinkhorn;
};

struct Direction {
    PeriodicLinear g;
    DescentMethod method;
    double predicted_decrease = 0.0;  // <I_h(f), g>
    bool critical = false;            // g is identically zero
    bool converged = true;            // false only for a Sinkhorn run that hit max_iter
    int iterations = 0;
};

namespace detail {

/// Shift g by the constant that makes int g f = 0.
inline void enforce_volume_constraint(PeriodicLinear& g, const RadialShape& f)
{
    g.add_constant(-integral_product(g, f.radii()) / f.radii().integral());
}

inline Direction finish(PeriodicLinear g, DescentMethod method, const ShapeGradient& grad, const RadialShape& f,
                        bool critical)
{
    if (critical) g = PeriodicLinear::zeros(f.size());
    else enforce_volume_constraint(g, f);
    Direction d{std::move(g), method};
    d.critical = critical;
    d.predicted_decrease = critical ? 0.0 : pairing(grad, d.g);
    return d;
}

/// Nodal values of G = H_bar - H_bar(0) - int_0^phi (h_bar - c f_bar).
inline std::vector<double> cumulative_density(const ShapeGradient& grad, const RadialShape& f, double c,
                                              std::vector<double>* segment_means = nullptr)
{
    const std::size_t n = f.size();
    const double h = f.radii().spacing();
    std::vector<double> nodal(n);
    if (segment_means) segment_means->assign(n, 0.0);
    double gamma = 0.0;  // int_0^{phi_s} q
    for (std::size_t s = 0; s < n; ++s) {
        const double qa = grad.h_bar[s] - c * f[s];
        const double qb = grad.h_bar.node(s + 1) - c * f.radii().node(s + 1);
        nodal[s] = grad.H_bar[s] - grad.H_bar[0] - gamma;
        if (segment_means)
            (*segment_means)[s] = 0.5 * (grad.H_bar[s] + grad.H_bar.node(s + 1)) - grad.H_bar[0] -
                                  (gamma + h * (2.0 * qa + qb) / 6.0);
        gamma += 0.5 * h * (qa + qb);
    }
    return nodal;
}

inline PeriodicLinear integrate_slopes(const std::vector<double>& slopes, double h)
{
    std::vector<double> g(slopes.size());
    g[0] = 0.0;
    for (std::size_t s = 0; s + 1 < slopes.size(); ++s) g[s + 1] = g[s] + h * slopes[s];
    return PeriodicLinear(std::move(g));
}

inline bool negligible_spread(const std::vector<double>& v)
{
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    const double scale = std::max(std::abs(*lo), std::abs(*hi));
    return *hi - *lo <= 64.0 * std::numeric_limits<double>::epsilon() * scale;
}

inline Direction formula_segment(const ShapeGradient& grad, const RadialShape& f, double c)
{
    const std::size_t n = f.size();
    std::vector<double> means;
    cumulative_density(grad, f, c, &means);
    if (negligible_spread(means)) return finish(PeriodicLinear::zeros(n), DescentMethod::formula, grad, f, true);

    std::vector<double> sorted = means;
    std::nth_element(sorted.begin(), sorted.begin() + long(n / 2), sorted.end());
    const double beta = sorted[n / 2];

    std::size_t n_plus = 0, n_minus = 0, n_zero = 0;
    for (double m : means) {
        if (m > beta) ++n_plus;
        else if (m < beta) ++n_minus;
        else ++n_zero;
    }
    const double k = (double(n_plus) - double(n_minus)) / double(n_zero);
    std::vector<double> slopes(n);
    for (std::size_t s = 0; s < n; ++s) slopes[s] = means[s] > beta ? -1.0 : (means[s] < beta ? 1.0 : k);
    return finish(integrate_slopes(slopes, f.radii().spacing()), DescentMethod::formula, grad, f, false);
}

inline Direction formula_nodal(const ShapeGradient& grad, const RadialShape& f, double c)
{
    const std::size_t n = f.size();
    const auto big_g = cumulative_density(grad, f, c);
    if (negligible_spread(big_g)) return finish(PeriodicLinear::zeros(n), DescentMethod::formula, grad, f, true);

    // beta = max{G_i : h #{j : G_j <= G_i} < pi}, i.e. 2 #{...} < N
    std::vector<double> sorted = big_g;
    std::sort(sorted.begin(), sorted.end());
    double beta = sorted.front();
    for (std::size_t i = 0; i < n; ++i) {
        const auto count = std::size_t(std::upper_bound(sorted.begin(), sorted.end(), sorted[i]) - sorted.begin());
        if (2 * count < n) beta = std::max(beta, sorted[i]);
    }
    const double eps = 1.5 / double(n) * (sorted.back() - sorted.front());

    std::vector<int> cls(n);  // +1 in O+, -1 in O-, 0 in O0
    std::size_t n_plus = 0, n_minus = 0, n_zero = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (big_g[i] > beta + eps) cls[i] = 1, ++n_plus;
        else if (big_g[i] < beta - eps) cls[i] = -1, ++n_minus;
        else cls[i] = 0, ++n_zero;
    }
    const double k = (double(n_plus) - double(n_minus)) / double(n_zero);
    auto sigma = [&](std::size_t i) { return cls[i] > 0 ? -1.0 : (cls[i] < 0 ? 1.0 : k); };
    std::vector<double> slopes(n);
    for (std::size_t s = 0; s < n; ++s) slopes[s] = 0.5 * (sigma(s) + sigma((s + 1) % n));
    return finish(integrate_slopes(slopes, f.radii().spacing()), DescentMethod::formula, grad, f, false);
}

}  // namespace detail

/// Closed-form W^{1,infinity} steepest descent direction: |g'| <= 1 a.e. and
/// int g f = 0. Returns g = 0 flagged critical when the derivative vanishes
/// on the admissible directions.
inline Direction formula_direction(const ShapeGradient& grad, const RadialShape& f, const FormulaOptions& opt = {})
{
    grad.h_bar.check_same_size(f.radii());
    const double c = grad.h_bar.integral() / f.radii().integral();
    return opt.variant == FormulaVariant::segment ? detail::formula_segment(grad, f, c)
                                                  : detail::formula_nodal(grad, f, c);
}

/// Circular distance between nodes i and j, at most pi.
inline double circular_distance(std::size_t i, std::size_t j, std::size_t n)
{
    const std::size_t d = i > j ? i - j : j - i;
    return two_pi * double(std::min(d, n - d)) / double(n);
}

struct SinkhornResult {
    std::vector<double> potential_plus;   // delta log u_i on N+
    std::vector<double> potential_minus;  // delta log v_j on N-
    int iterations = 0;
    double row_residual = 0.0;  // mean |a_i - sum_j P_ij| over N+
    double col_residual = 0.0;  // mean |(-a_j) - sum_i P_ij| over N-
    bool converged = false;
    double transport_cost = 0.0;  // sum C_ij P_ij
};

namespace detail {

inline double log_sum_exp(const std::vector<double>& x)
{
    const double m = *std::max_element(x.begin(), x.end());
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double v : x) s += std::exp(v - m);
    return m + std::log(s);
}

}  // namespace detail

/// Log-domain Sinkhorn iterations for the entropic transport of the positive
/// masses a_i (i in N+) onto -a_j (j in N-) with circular distance cost.
inline SinkhornResult solve_sinkhorn(const ReducedDensity& red, const SinkhornOptions& opt)
{
    if (!(opt.delta > 0.0)) throw std::invalid_argument("solve_sinkhorn: delta must be positive");
    const auto& P = red.positive;
    const auto& M = red.negative;
    if (P.empty() || M.empty()) throw std::invalid_argument("solve_sinkhorn: need both positive and negative mass");
    const std::size_t n = red.a.size(), np = P.size(), nm = M.size();
    const double delta = opt.delta;

    std::vector<double> cost(np * nm);
    for (std::size_t i = 0; i < np; ++i)
        for (std::size_t j = 0; j < nm; ++j) cost[i * nm + j] = circular_distance(P[i], M[j], n);

    SinkhornResult res;
    auto& F = res.potential_plus;
    auto& G = res.potential_minus;
    F.assign(np, 0.0);
    G.assign(nm, 0.0);
    std::vector<double> row_lse(np), col_lse(nm), buf;

    auto compute_row_lse = [&] {
        buf.resize(nm);
        for (std::size_t i = 0; i < np; ++i) {
            for (std::size_t j = 0; j < nm; ++j) buf[j] = (G[j] - cost[i * nm + j]) / delta;
            row_lse[i] = detail::log_sum_exp(buf);
        }
    };
    for (int it = 0;; ++it) {
        compute_row_lse();
        if (it > 0) {
            double rr = 0.0, cr = 0.0;
            for (std::size_t i = 0; i < np; ++i) rr += std::abs(red.a[P[i]] - std::exp(F[i] / delta + row_lse[i]));
            for (std::size_t j = 0; j < nm; ++j) cr += std::abs(-red.a[M[j]] - std::exp(G[j] / delta + col_lse[j]));
            res.row_residual = rr / double(np);
            res.col_residual = cr / double(nm);
            if (!std::isfinite(rr) || !std::isfinite(cr))
                throw std::runtime_error("solve_sinkhorn: non-finite scaling after " + std::to_string(it) +
                                         " iterations");
            if (res.row_residual <= opt.tol && res.col_residual <= opt.tol) {
                res.converged = true;
                res.iterations = it;
                break;
            }
        }
        if (it == opt.max_iter) {
            res.iterations = it;
            break;
        }
        for (std::size_t i = 0; i < np; ++i) F[i] = delta * (std::log(red.a[P[i]]) - row_lse[i]);
        buf.resize(np);
        for (std::size_t j = 0; j < nm; ++j) {
            for (std::size_t i = 0; i < np; ++i) buf[i] = (F[i] - cost[i * nm + j]) / delta;
            col_lse[j] = detail::log_sum_exp(buf);
            G[j] = delta * (std::log(-red.a[M[j]]) - col_lse[j]);
        }
    }
    for (std::size_t i = 0; i < np; ++i)
        for (std::size_t j = 0; j < nm; ++j)
            res.transport_cost += cost[i * nm + j] * std::exp((F[i] + G[j] - cost[i * nm + j]) / delta);
    return res;
}

/// Descent direction from the entropic transport potentials. The Lipschitz
/// bound |g'| <= 1 is not guaranteed when a_i = 0 at some node.
inline Direction sinkhorn_direction(const ShapeGradient& grad, const RadialShape& f, const SinkhornOptions& opt = {})
{
    const auto red = reduce(grad, f);
    const std::size_t n = f.size();
    if (red.positive.empty() || red.negative.empty())
        return detail::finish(PeriodicLinear::zeros(n), DescentMethod::sinkhorn, grad, f, true);

    const auto sk = solve_sinkhorn(red, opt);
    const auto& P = red.positive;
    const auto& M = red.negative;
    // ascent potential xi; the descent direction is -xi
    std::vector<double> xi(n, 0.0);
    auto c_transform = [&](std::size_t k) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < M.size(); ++j)
            best = std::min(best, -sk.potential_minus[j] + circular_distance(k, M[j], n));
        return best;
    };
    if (opt.recovery == SinkhornRecovery::direct) {
        for (std::size_t i = 0; i < P.size(); ++i) xi[P[i]] = sk.potential_plus[i];
        for (std::size_t j = 0; j < M.size(); ++j) xi[M[j]] = -sk.potential_minus[j];
    } else {
        for (std::size_t p : P) xi[p] = c_transform(p);
        for (std::size_t m : M) {
            double best = -std::numeric_limits<double>::infinity();
            for (std::size_t p : P) best = std::max(best, xi[p] - circular_distance(p, m, n));
            xi[m] = best;
        }
    }
    for (std::size_t z : red.zero) xi[z] = c_transform(z);

    PeriodicLinear g(std::move(xi));
    g *= -1.0;
    auto d = detail::finish(std::move(g), DescentMethod::sinkhorn, grad, f, false);
    d.converged = sk.converged;
    d.iterations = sk.iterations;
    return d;
}

/// Minimiser of 1/2 int |v'|^2 + <I_h(f), v> subject to int v f = 0,
/// rescaled so that the L2 norm of g' is one.
inline Direction h1_direction(const ShapeGradient& grad, const RadialShape& f)
{
    grad.h_bar.check_same_size(f.radii());
    const std::size_t n = f.size();
    if (n < 3) throw std::invalid_argument("h1_direction: need at least 3 nodes");
    const double h = f.radii().spacing();
    const auto m = mass_times(f.radii());

    std::vector<Eigen::Triplet<double>> trip;
    const int ni = int(n);
    for (int s = 0; s < ni; ++s) {
        const int t = (s + 1) % ni;
        trip.emplace_back(s, s, 1.0 / h);
        trip.emplace_back(t, t, 1.0 / h);
        trip.emplace_back(s, t, -1.0 / h);
        trip.emplace_back(t, s, -1.0 / h);
    }
    for (int i = 0; i < ni; ++i) {
        trip.emplace_back(i, ni, m[i]);
        trip.emplace_back(ni, i, m[i]);
    }
    Eigen::SparseMatrix<double> sys(ni + 1, ni + 1);
    sys.setFromTriplets(trip.begin(), trip.end());

    // r_i = int h_bar phi_i + int H_bar phi_i'
    const auto mh = mass_times(grad.h_bar);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(ni + 1);
    for (std::size_t i = 0; i < n; ++i)
        rhs[Eigen::Index(i)] = -(mh[i] + 0.5 * (grad.H_bar[(i + n - 1) % n] - grad.H_bar.node(i + 1)));

    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(sys);
    if (lu.info() != Eigen::Success) throw std::runtime_error("h1_direction: saddle-point factorization failed");
    const Eigen::VectorXd sol = lu.solve(rhs);
    PeriodicLinear g(std::vector<double>(sol.data(), sol.data() + ni));
    const double norm = std::sqrt(integral_derivative_product(g, g));
    if (!(norm > 0.0))
        return detail::finish(PeriodicLinear::zeros(n), DescentMethod::h1, grad, f, true);
    g *= 1.0 / norm;
    return detail::finish(std::move(g), DescentMethod::h1, grad, f, false);
}

inline Direction compute_direction(DescentMethod method, const ShapeGradient& grad, const RadialShape& f,
                                   const DirectionOptions& opt = {})
{
    switch (method) {
    case DescentMethod::formula: return formula_direction(grad, f, opt.formula);
    case DescentMethod::sinkhorn: return sinkhorn_direction(grad, f, opt.sinkhorn);
    case DescentMethod::h1: return h1_direction(grad, f);
    }
    throw std::invalid_argument("compute_direction: unknown method");
}

inline void save_direction_csv(const Direction& d, const std::string& path)
{
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    write_periodic_csv(os, {"phi", "g"}, {&d.g});
}

}  // namespace lipshape
