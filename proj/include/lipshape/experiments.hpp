#pragma once

// Built-in test problems and output helpers shared by the command-line tool.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "disk_mesh.hpp"
#include "fem.hpp"
#include "radial_shape.hpp"

namespace lipshape {

struct Experiment {
    std::string name;
    ProblemData data;
    /// Initial radial function, before sampling at the nodes.
    std::function<double(double)> initial_radius;
};

/// Radial function of the axis-aligned square of area pi centred at 0.
inline double square_radial_function(double phi)
{
    return 0.5 * std::sqrt(std::numbers::pi) / std::max(std::abs(std::cos(phi)), std::abs(std::sin(phi)));
}

// Kinks are resolved by taking the first branch: sign(0) = +1 and the left
// term of a tied minimum.
namespace detail {
inline double sign_right(double x) { return x >= 0.0 ? 1.0 : -1.0; }
}  // namespace detail

inline const std::vector<std::string>& experiment_names()
{
    static const std::vector<std::string> names{"level-set-square", "disk", "square-zero", "double-ball"};
    return names;
}

inline Experiment builtin_experiment(const std::string& name)
{
    using std::numbers::pi;
    auto unit = [](double) { return 1.0; };
    if (name == "level-set-square") {
        return {name,
                {[](const Vec2&) { return 0.0; },
                 [](const Vec2& x) { return std::abs(x.x() + x.y()) + std::abs(x.x() - x.y()); },
                 [](const Vec2& x) {
                     const double s = detail::sign_right(x.x() + x.y()), d = detail::sign_right(x.x() - x.y());
                     return Vec2(s + d, s - d);
                 }},
                unit};
    }
    if (name == "disk") {
        return {name,
                {[](const Vec2&) { return 1.0; }, [](const Vec2& x) { return 1.0 - x.squaredNorm(); },
                 [](const Vec2& x) { return Vec2(-2.0 * x); }},
                square_radial_function};
    }
    if (name == "square-zero") {
        return {name,
                {[](const Vec2& x) { return 16.0 * pi - 32.0 * x.x() * x.x() - 32.0 * x.y() * x.y(); },
                 [](const Vec2& x) { return (pi - 4.0 * x.x() * x.x()) * (pi - 4.0 * x.y() * x.y()); },
                 [](const Vec2& x) {
                     return Vec2(-8.0 * x.x() * (pi - 4.0 * x.y() * x.y()), -8.0 * x.y() * (pi - 4.0 * x.x() * x.x()));
                 }},
                unit};
    }
    if (name == "double-ball") {
        const double c = 1.0 / std::numbers::sqrt2;
        return {name,
                {[](const Vec2&) { return 1.0; },
                 [c](const Vec2& x) {
                     const double l = (x.x() - c) * (x.x() - c), r = (x.x() + c) * (x.x() + c);
                     return 0.125 - 0.25 * std::min(l, r) - 0.25 * x.y() * x.y();
                 },
                 [c](const Vec2& x) {
                     const double l = (x.x() - c) * (x.x() - c), r = (x.x() + c) * (x.x() + c);
                     return Vec2(-0.5 * (l <= r ? x.x() - c : x.x() + c), -0.5 * x.y());
                 }},
                unit};
    }
    std::string known;
    for (const auto& n : experiment_names()) known += (known.empty() ? "" : ", ") + n;
    throw std::invalid_argument("unknown experiment '" + name + "' (known: " + known + ")");
}

inline RadialShape initial_shape(const Experiment& e, std::size_t n_nodes)
{
    return RadialShape::sample(n_nodes, e.initial_radius);
}

/// Legacy ASCII VTK of Phi_f(B_h). The file is a picture of the optimised
/// shape; computations always stay on the undeformed disk mesh.
inline void export_deformed_mesh(const DiskMesh& mesh, const RadialShape& f, const std::string& path)
{
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    os << "# vtk DataFile Version 3.0\n"
       << "deformed display mesh Phi_f(B_h); not the computational mesh\n"
       << "ASCII\nDATASET UNSTRUCTURED_GRID\n"
       << "POINTS " << mesh.n_vertices() << " double\n"
       << std::setprecision(17);
    for (const auto& v : mesh.vertices()) {
        const Vec2 y = map_point(f, v);
        os << y.x() << ' ' << y.y() << " 0\n";
    }
    os << "CELLS " << mesh.n_triangles() << ' ' << 4 * mesh.n_triangles() << '\n';
    for (const auto& t : mesh.triangles()) os << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
    os << "CELL_TYPES " << mesh.n_triangles() << '\n';
    for (std::size_t t = 0; t < mesh.n_triangles(); ++t) os << "5\n";
}

}  // namespace lipshape
