#pragma once

// Discrete shape derivative of the tracking energy with respect to the
// radial function, in volume form (densities h, H on B_h) or boundary form
// (density xi on the boundary polygon), projected onto the periodic P1 space
// on the circle.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "disk_mesh.hpp"
#include "fem.hpp"
#include "periodic_linear.hpp"
#include "quadrature.hpp"
#include "radial_shape.hpp"

namespace lipshape {

enum class DerivativeForm { volume, boundary };

inline const char* to_string(DerivativeForm form) { return form == DerivativeForm::volume ? "volume" : "boundary"; }

/// Weighted sample points on the circle side: every density value carries the
/// angle it contributes at and its integration weight.
struct AngularSample {
    double phi;
    double weight;
};

/// Volume-form densities at the mesh quadrature points.
struct VolumeDensities {
    std::vector<AngularSample> samples;
    std::vector<double> h;
    std::vector<Vec2> H;
    std::vector<Vec2> omega;  // omega_x, needed for the H test factor v(omega) omega^perp
};

/// Boundary-form density at Gauss points along the boundary edges.
struct BoundaryDensities {
    std::vector<AngularSample> samples;
    std::vector<double> xi;
};

/// Projected derivative data. For the boundary form h_bar holds xi_bar and
/// H_bar is identically zero.
struct ShapeGradient {
    DerivativeForm form;
    PeriodicLinear h_bar;
    PeriodicLinear H_bar;

    const PeriodicLinear& xi_bar() const { return h_bar; }
    std::size_t size() const { return h_bar.size(); }
};

/// c and the nodal masses a_i = int q phi_i of q = h_bar - H_bar' - c f_bar.
struct ReducedDensity {
    double c;
    std::vector<double> a;
    std::vector<std::size_t> positive;
    std::vector<std::size_t> negative;
    std::vector<std::size_t> zero;
};

inline VolumeDensities volume_form_densities(const DiskMesh& mesh, const RadialShape& f, const FemField& state,
                                             const FemField& adjoint, const ProblemData& data)
{
    const auto& qps = mesh.quadrature_points();
    VolumeDensities out;
    out.samples.reserve(qps.size());
    out.h.reserve(qps.size());
    out.H.reserve(qps.size());
    out.omega.reserve(qps.size());

    int cached_triangle = -1;
    Vec2 gu = Vec2::Zero(), gp = Vec2::Zero();
    for (const auto& q : qps) {
        if (q.triangle != cached_triangle) {
            gu = state.gradient_on(mesh, q.triangle);
            gp = adjoint.gradient_on(mesh, q.triangle);
            cached_triangle = q.triangle;
        }
        const Vec2& w = q.omega;
        const double fv = f.eval(q.phi);
        const double df = f.eval_slope(q.phi);
        const Vec2 grad_t = df * perp(w);
        const Vec2 y = fv * q.x;

        const double u_w = gu.dot(w);
        const double p_w = gp.dot(w);
        const double diff = state.value_at(mesh, q) - data.target(y);
        // gradient of z o Phi_f along omega equals f (grad z)(Phi_f x) . omega
        const double zhat_w = fv * data.target_gradient(y).dot(w);

        const double h = 2.0 * df * df / (fv * fv * fv) * u_w * p_w -
                         (grad_t.dot(gu) * p_w + grad_t.dot(gp) * u_w) / (fv * fv) +
                         fv * (diff * diff - q.radius * diff * zhat_w - q.radius * data.source(y) * p_w);
        const Vec2 H = (p_w * gu + u_w * gp) / fv - (2.0 / (fv * fv)) * u_w * p_w * grad_t;

        out.samples.push_back({q.phi, q.weight});
        out.h.push_back(h);
        out.H.push_back(H);
        out.omega.push_back(w);
    }
    return out;
}

namespace detail {

/// Parameters s in (0, 1) where the segment a->b crosses a node ray of the
/// n-node angular grid. Assumes the segment subtends less than pi.
inline std::vector<double> angular_breakpoints(const Vec2& a, const Vec2& b, std::size_t n)
{
    std::vector<double> cuts{0.0, 1.0};
    const double pa = polar_direction(a).phi;
    double pb = polar_direction(b).phi;
    if (pb < pa) pb += two_pi;
    const double h = two_pi / double(n);
    for (double node = std::ceil(pa / h) * h; node < pb; node += h) {
        const Vec2 e(std::cos(node), std::sin(node));
        const double ca = a.x() * e.y() - a.y() * e.x();
        const double cb = b.x() * e.y() - b.y() * e.x();
        if (ca == cb) continue;
        const double s = ca / (ca - cb);
        if (s > 1e-12 && s < 1.0 - 1e-12) cuts.push_back(s);
    }
    std::sort(cuts.begin(), cuts.end());
    return cuts;
}

}  // namespace detail

/// xi = 1/2 (u - z_f)^2 f + (1/f)(1 + |grad_T f|^2 / f^2)(grad u . nu)(grad p . nu)
/// on each boundary edge, with nu the edge normal and the gradients of the
/// adjacent triangle. Each edge is split where it crosses an angular node and
/// integrated with 3-point Gauss on every piece.
inline BoundaryDensities boundary_form_density(const DiskMesh& mesh, const RadialShape& f, const FemField& state,
                                               const FemField& adjoint, const ProblemData& data)
{
    BoundaryDensities out;
    for (const auto& edge : mesh.boundary_edges()) {
        const Vec2& va = mesh.vertices()[edge.a];
        const Vec2& vb = mesh.vertices()[edge.b];
        const double u_n = state.gradient_on(mesh, edge.triangle).dot(edge.normal);
        const double p_n = adjoint.gradient_on(mesh, edge.triangle).dot(edge.normal);
        const double ua = state[edge.a], ub = state[edge.b];
        const auto cuts = detail::angular_breakpoints(va, vb, f.size());
        for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
            const double s0 = cuts[c], ds = cuts[c + 1] - cuts[c];
            if (ds <= 0.0) continue;
            for (std::size_t g = 0; g < detail::gauss3_points.size(); ++g) {
                const double s = s0 + ds * detail::gauss3_points[g];
                const Vec2 x = (1.0 - s) * va + s * vb;
                const auto pd = polar_direction(x);
                const double fv = f.eval(pd.phi);
                const double df = f.eval_slope(pd.phi);
                const double diff = (1.0 - s) * ua + s * ub - data.target(fv * x);
                const double xi =
                    0.5 * diff * diff * fv + (1.0 + df * df / (fv * fv)) * u_n * p_n / fv;
                out.samples.push_back({pd.phi, edge.length * ds * detail::gauss3_weights[g]});
                out.xi.push_back(xi);
            }
        }
    }
    return out;
}

namespace detail {

inline Eigen::SparseMatrix<double> periodic_mass_matrix(std::size_t n)
{
    const double h = two_pi / double(n);
    std::vector<Eigen::Triplet<double>> trip;
    for (std::size_t s = 0; s < n; ++s) {
        const int i = int(s), j = int((s + 1) % n);
        trip.emplace_back(i, i, h / 3.0);
        trip.emplace_back(j, j, h / 3.0);
        trip.emplace_back(i, j, h / 6.0);
        trip.emplace_back(j, i, h / 6.0);
    }
    Eigen::SparseMatrix<double> m(n, n);
    m.setFromTriplets(trip.begin(), trip.end());
    return m;
}

/// Adds weight * value into the (at most two) hats covering phi.
inline void accumulate_hats(std::vector<double>& rhs, double phi, double weighted_value)
{
    const std::size_t n = rhs.size();
    const double s = wrap_angle(phi) / two_pi * double(n);
    auto seg = static_cast<std::size_t>(std::floor(s));
    if (seg >= n) seg = n - 1;
    const double t = s - double(seg);
    rhs[seg] += (1.0 - t) * weighted_value;
    rhs[(seg + 1) % n] += t * weighted_value;
}

inline PeriodicLinear solve_mass(const std::vector<double>& rhs)
{
    const auto m = periodic_mass_matrix(rhs.size());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(m);
    const Eigen::VectorXd x = ldlt.solve(Eigen::Map<const Eigen::VectorXd>(rhs.data(), Eigen::Index(rhs.size())));
    return PeriodicLinear(std::vector<double>(x.data(), x.data() + x.size()));
}

}  // namespace detail

/// L2 projection onto S^N: int h_bar v = int_{B_h} h v(omega_x) dx and
/// int H_bar v = int_{B_h} H . v(omega_x) omega_x^perp dx for all v in S^N.
inline ShapeGradient project_to_circle(std::size_t n_nodes, const VolumeDensities& d)
{
    std::vector<double> rh(n_nodes, 0.0), rH(n_nodes, 0.0);
    for (std::size_t k = 0; k < d.samples.size(); ++k) {
        const auto& s = d.samples[k];
        detail::accumulate_hats(rh, s.phi, s.weight * d.h[k]);
        detail::accumulate_hats(rH, s.phi, s.weight * d.H[k].dot(perp(d.omega[k])));
    }
    return {DerivativeForm::volume, detail::solve_mass(rh), detail::solve_mass(rH)};
}

/// int xi_bar v = int_{boundary of B_h} xi v(omega_x) for all v in S^N.
inline ShapeGradient project_to_circle(std::size_t n_nodes, const BoundaryDensities& d)
{
    std::vector<double> r(n_nodes, 0.0);
    for (std::size_t k = 0; k < d.samples.size(); ++k)
        detail::accumulate_hats(r, d.samples[k].phi, d.samples[k].weight * d.xi[k]);
    return {DerivativeForm::boundary, detail::solve_mass(r), PeriodicLinear::zeros(n_nodes)};
}

inline ShapeGradient compute_shape_gradient(const DiskMesh& mesh, const RadialShape& f, const FemField& state,
                                            const FemField& adjoint, const ProblemData& data, DerivativeForm form)
{
    if (form == DerivativeForm::volume)
        return project_to_circle(f.size(), volume_form_densities(mesh, f, state, adjoint, data));
    return project_to_circle(f.size(), boundary_form_density(mesh, f, state, adjoint, data));
}

/// <I_h(f), v> = int h_bar v + H_bar v'.
inline double pairing(const ShapeGradient& grad, const PeriodicLinear& v)
{
    if (v.size() != grad.size())
        throw std::invalid_argument("pairing: direction has " + std::to_string(v.size()) + " nodes, gradient has " +
                                    std::to_string(grad.size()));
    return integral_product(grad.h_bar, v) + integral_product_derivative(grad.H_bar, v);
}

inline ReducedDensity reduce(const ShapeGradient& grad, const RadialShape& f)
{
    grad.h_bar.check_same_size(f.radii());
    const std::size_t n = grad.size();
    ReducedDensity r;
    r.c = grad.h_bar.integral() / f.radii().integral();
    PeriodicLinear q = grad.h_bar;
    q += (-r.c) * f.radii();
    // int H_bar phi_i' = (H_{i-1} - H_{i+1}) / 2, the H_bar' term after integration by parts
    r.a = mass_times(q);
    for (std::size_t i = 0; i < n; ++i) r.a[i] += 0.5 * (grad.H_bar[(i + n - 1) % n] - grad.H_bar.node(i + 1));
    for (std::size_t i = 0; i < n; ++i) {
        if (r.a[i] > 0.0)
            r.positive.push_back(i);
        else if (r.a[i] < 0.0)
            r.negative.push_back(i);
        else
            r.zero.push_back(i);
    }
    return r;
}

inline void save_gradient_csv(const ShapeGradient& g, const std::string& path)
{
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    if (g.form == DerivativeForm::volume)
        write_periodic_csv(os, {"phi", "h_bar", "H_bar"}, {&g.h_bar, &g.H_bar});
    else
        write_periodic_csv(os, {"phi", "xi_bar"}, {&g.h_bar});
}

}  // namespace lipshape
