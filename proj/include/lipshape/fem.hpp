#pragma once

// P1 finite elements on the fixed disk mesh for the pulled-back state and
// adjoint problems
//
//   int_B A_f grad u . grad eta = int_B F(Phi_f(x)) eta f^2
//   int_B A_f grad p . grad eta = int_B (u - z(Phi_f(x))) eta f^2
//
// with homogeneous Dirichlet data. Every integral uses the degree-6 rule.

#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "disk_mesh.hpp"
#include "radial_shape.hpp"

namespace lipshape {

/// Source F, target z and its a.e. gradient, all in physical coordinates.
struct ProblemData {
    std::function<double(const Vec2&)> source;
    std::function<double(const Vec2&)> target;
    std::function<Vec2(const Vec2&)> target_gradient;
};

class SolverError : public std::runtime_error {
  public:
    SolverError(const std::string& what, double residual) : std::runtime_error(what), residual_(residual) {}
    double residual() const { return residual_; }

  private:
    double residual_;
};

/// Nodal P1 coefficients, one per mesh vertex, exactly zero on the boundary.
class FemField {
  public:
    FemField() = default;
    explicit FemField(std::vector<double> values) : values_(std::move(values)) {}

    static FemField zeros(const DiskMesh& mesh) { return FemField(std::vector<double>(mesh.n_vertices(), 0.0)); }

    const std::vector<double>& values() const { return values_; }
    double operator[](std::size_t v) const { return values_[v]; }
    std::size_t size() const { return values_.size(); }

    double value_at(const DiskMesh& mesh, const QuadPoint& q) const
    {
        const auto& tri = mesh.triangles()[q.triangle];
        return q.bary[0] * values_[tri[0]] + q.bary[1] * values_[tri[1]] + q.bary[2] * values_[tri[2]];
    }

    Vec2 gradient_on(const DiskMesh& mesh, int triangle) const
    {
        const auto& tri = mesh.triangles()[triangle];
        const auto& g = mesh.geometry()[triangle].grad;
        return values_[tri[0]] * g[0] + values_[tri[1]] * g[1] + values_[tri[2]] * g[2];
    }

  private:
    std::vector<double> values_;
};

inline void save_field_csv(const FemField& u, const std::string& path)
{
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    os << "vertex_index,value\n" << std::setprecision(17);
    for (std::size_t i = 0; i < u.size(); ++i) os << i << ',' << u[i] << '\n';
}

/// f, f' and A_f at one quadrature point, plus the physical image Phi_f(x).
struct PointTransform {
    double f;
    double slope;
    Mat2 coeff;
    Vec2 image;
};

inline std::vector<PointTransform> transform_at_points(const DiskMesh& mesh, const RadialShape& f)
{
    std::vector<PointTransform> out;
    out.reserve(mesh.quadrature_points().size());
    for (const auto& q : mesh.quadrature_points()) {
        const double fv = f.eval(q.phi);
        const double df = f.eval_slope(q.phi);
        const Vec2 b = (df / fv) * perp(q.omega);
        Mat2 a = Mat2::Identity() - q.omega * b.transpose() - b * q.omega.transpose() +
                 b.squaredNorm() * (q.omega * q.omega.transpose());
        out.push_back({fv, df, a, fv * q.x});
    }
    return out;
}

inline constexpr double solver_tolerance = 1e-10;

namespace detail {

using SparseMatrix = Eigen::SparseMatrix<double>;

inline SparseMatrix assemble_stiffness(const DiskMesh& mesh, const std::vector<PointTransform>& tf)
{
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(mesh.n_triangles() * 9);
    const auto& qps = mesh.quadrature_points();
    std::size_t q = 0;
    for (std::size_t t = 0; t < mesh.n_triangles(); ++t) {
        Mat2 a_avg = Mat2::Zero();  // sum_q w_q A_q; P1 gradients are constant per triangle
        while (q < qps.size() && qps[q].triangle == int(t)) {
            a_avg += qps[q].weight * tf[q].coeff;
            ++q;
        }
        const auto& tri = mesh.triangles()[t];
        const auto& g = mesh.geometry()[t].grad;
        for (int i = 0; i < 3; ++i) {
            const int row = mesh.interior_index(tri[i]);
            if (row < 0) continue;
            for (int j = 0; j < 3; ++j) {
                const int col = mesh.interior_index(tri[j]);
                if (col < 0) continue;
                triplets.emplace_back(row, col, g[i].dot(a_avg * g[j]));
            }
        }
    }
    SparseMatrix k(mesh.n_interior(), mesh.n_interior());
    k.setFromTriplets(triplets.begin(), triplets.end());
    return k;
}

/// rhs_i = sum_q w_q load_q lambda_i(x_q) over interior vertices.
inline Eigen::VectorXd assemble_load(const DiskMesh& mesh, const std::vector<double>& load)
{
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(mesh.n_interior());
    const auto& qps = mesh.quadrature_points();
    for (std::size_t q = 0; q < qps.size(); ++q) {
        const auto& tri = mesh.triangles()[qps[q].triangle];
        for (int i = 0; i < 3; ++i) {
            const int row = mesh.interior_index(tri[i]);
            if (row >= 0) rhs[row] += qps[q].weight * load[q] * qps[q].bary[i];
        }
    }
    return rhs;
}

inline FemField solve_dirichlet(const DiskMesh& mesh, const std::vector<PointTransform>& tf,
                                const std::vector<double>& load)
{
    const SparseMatrix k = assemble_stiffness(mesh, tf);
    const Eigen::VectorXd rhs = assemble_load(mesh, load);
    std::vector<double> values(mesh.n_vertices(), 0.0);
    const double rhs_norm = rhs.norm();
    if (rhs_norm == 0.0) return FemField(std::move(values));

    Eigen::SimplicialLDLT<SparseMatrix> ldlt(k);
    if (ldlt.info() != Eigen::Success) throw SolverError("stiffness factorization failed", -1.0);
    if ((ldlt.vectorD().array() <= 0.0).any())
        throw SolverError("stiffness matrix is not positive definite (radial function not positive?)", -1.0);
    Eigen::VectorXd x = ldlt.solve(rhs);
    Eigen::VectorXd r = rhs - k * x;
    double residual = r.norm() / rhs_norm;
    if (residual > solver_tolerance) {
        x += ldlt.solve(r);
        r = rhs - k * x;
        residual = r.norm() / rhs_norm;
    }
    if (!(residual <= solver_tolerance))
        throw SolverError("linear solve residual " + std::to_string(residual) + " above tolerance", residual);

    for (std::size_t v = 0; v < mesh.n_vertices(); ++v) {
        const int i = mesh.interior_index(int(v));
        if (i >= 0) values[v] = x[i];
    }
    return FemField(std::move(values));
}

}  // namespace detail

inline FemField solve_state(const DiskMesh& mesh, const RadialShape& f, const ProblemData& data)
{
    const auto tf = transform_at_points(mesh, f);
    std::vector<double> load(tf.size());
    for (std::size_t q = 0; q < tf.size(); ++q) load[q] = data.source(tf[q].image) * tf[q].f * tf[q].f;
    return detail::solve_dirichlet(mesh, tf, load);
}

inline FemField solve_adjoint(const DiskMesh& mesh, const RadialShape& f, const FemField& state,
                              const ProblemData& data)
{
    const auto tf = transform_at_points(mesh, f);
    const auto& qps = mesh.quadrature_points();
    std::vector<double> load(tf.size());
    for (std::size_t q = 0; q < tf.size(); ++q)
        load[q] = (state.value_at(mesh, qps[q]) - data.target(tf[q].image)) * tf[q].f * tf[q].f;
    return detail::solve_dirichlet(mesh, tf, load);
}

/// Tracking energy 1/2 int_{B_h} (u - z o Phi_f)^2 f^2.
inline double energy(const DiskMesh& mesh, const RadialShape& f, const FemField& state, const ProblemData& data)
{
    const auto& qps = mesh.quadrature_points();
    double e = 0.0;
    for (const auto& q : qps) {
        const double fv = f.eval(q.phi);
        const double diff = state.value_at(mesh, q) - data.target(fv * q.x);
        e += q.weight * diff * diff * fv * fv;
    }
    return 0.5 * e;
}

/// Energy of the discrete state on shape f (state solve included).
inline double discrete_energy(const DiskMesh& mesh, const RadialShape& f, const ProblemData& data)
{
    return energy(mesh, f, solve_state(mesh, f, data), data);
}

}  // namespace lipshape
