#pragma once

// Fixed triangulation B_h of the unit disk. Boundary vertices lie on the unit
// circle, so B_h is the inscribed polygon and strictly smaller than B.

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "quadrature.hpp"
#include "radial_shape.hpp"

namespace lipshape {

class MeshError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

using Triangle = std::array<int, 3>;

struct TriangleGeometry {
    double area;
    std::array<Vec2, 3> grad;  // gradients of the barycentric coordinates
};

struct BoundaryEdge {
    int a, b;      // counterclockwise along the boundary loop
    int triangle;  // the single adjacent triangle
    Vec2 normal;   // outward unit normal
    double length;
};

/// A degree-6 quadrature point of the mesh, with its polar data cached.
struct QuadPoint {
    int triangle;
    std::array<double, 3> bary;
    Vec2 x;
    double weight;  // rule weight times triangle area
    double radius;
    Vec2 omega;
    double phi;
};

class DiskMesh {
  public:
    static constexpr double boundary_tolerance = 1e-12;

    /// Validates all invariants; throws MeshError naming the violated one.
    DiskMesh(std::vector<Vec2> vertices, std::vector<Triangle> triangles)
        : vertices_(std::move(vertices)), triangles_(std::move(triangles))
    {
        validate_and_build();
    }

    const std::vector<Vec2>& vertices() const { return vertices_; }
    const std::vector<Triangle>& triangles() const { return triangles_; }
    const std::vector<int>& boundary_loop() const { return boundary_loop_; }
    const std::vector<BoundaryEdge>& boundary_edges() const { return boundary_edges_; }
    const std::vector<TriangleGeometry>& geometry() const { return geometry_; }
    const std::vector<QuadPoint>& quadrature_points() const { return quad_points_; }

    /// Interior unknown number of a vertex, or -1 on the boundary.
    int interior_index(int v) const { return interior_index_[v]; }
    int n_interior() const { return n_interior_; }
    std::size_t n_vertices() const { return vertices_.size(); }
    std::size_t n_triangles() const { return triangles_.size(); }
    std::size_t n_edges() const { return n_edges_; }

    double area() const
    {
        double a = 0.0;
        for (const auto& g : geometry_) a += g.area;
        return a;
    }

    bool is_boundary(int v) const { return interior_index_[v] < 0; }

  private:
    void validate_and_build()
    {
        const int nv = static_cast<int>(vertices_.size());
        if (triangles_.empty()) throw MeshError("mesh has no triangles");

        geometry_.reserve(triangles_.size());
        for (std::size_t t = 0; t < triangles_.size(); ++t) {
            const auto& tri = triangles_[t];
            for (int v : tri)
                if (v < 0 || v >= nv)
                    throw MeshError("triangle " + std::to_string(t) + " references vertex " + std::to_string(v) +
                                    " out of range");
            const Vec2 e1 = vertices_[tri[1]] - vertices_[tri[0]];
            const Vec2 e2 = vertices_[tri[2]] - vertices_[tri[0]];
            const double twice_area = e1.x() * e2.y() - e1.y() * e2.x();
            if (!(twice_area > 0.0))
                throw MeshError("orientation: triangle " + std::to_string(t) +
                                " is not counterclockwise (signed area " + std::to_string(0.5 * twice_area) + ")");
            TriangleGeometry g;
            g.area = 0.5 * twice_area;
            for (int k = 0; k < 3; ++k) {
                const Vec2 opp = vertices_[tri[(k + 2) % 3]] - vertices_[tri[(k + 1) % 3]];
                g.grad[k] = Vec2(-opp.y(), opp.x()) / twice_area;
            }
            geometry_.push_back(g);
        }

        // directed edge -> triangle; an undirected edge seen once is a boundary edge
        std::map<std::pair<int, int>, int> directed;
        for (std::size_t t = 0; t < triangles_.size(); ++t)
            for (int k = 0; k < 3; ++k) {
                const int a = triangles_[t][k], b = triangles_[t][(k + 1) % 3];
                if (!directed.emplace(std::pair{a, b}, int(t)).second)
                    throw MeshError("edge (" + std::to_string(a) + "," + std::to_string(b) +
                                    ") appears twice with the same orientation");
            }
        std::map<int, std::pair<int, int>> next;  // boundary: a -> (b, triangle)
        n_edges_ = 0;
        for (const auto& [e, t] : directed) {
            const bool shared = directed.count({e.second, e.first}) > 0;
            if (!shared) {
                if (!next.emplace(e.first, std::pair{e.second, t}).second)
                    throw MeshError("boundary is not a single simple loop at vertex " + std::to_string(e.first));
                ++n_edges_;
            } else if (e.first < e.second) {
                ++n_edges_;
            }
        }
        if (next.empty()) throw MeshError("mesh has no boundary");

        const long euler = long(nv) - long(n_edges_) + long(triangles_.size());
        if (euler != 1) throw MeshError("Euler characteristic V - E + T = " + std::to_string(euler) + ", expected 1");

        const int start = next.begin()->first;
        int v = start;
        do {
            auto it = next.find(v);
            if (it == next.end()) throw MeshError("boundary loop is open at vertex " + std::to_string(v));
            const auto [w, t] = it->second;
            const Vec2 d = vertices_[w] - vertices_[v];
            BoundaryEdge edge{v, w, t, Vec2(d.y(), -d.x()).normalized(), d.norm()};
            boundary_edges_.push_back(edge);
            boundary_loop_.push_back(v);
            v = w;
            if (boundary_loop_.size() > next.size()) throw MeshError("boundary loop does not close");
        } while (v != start);
        if (boundary_loop_.size() != next.size())
            throw MeshError("boundary consists of more than one loop");

        for (int b : boundary_loop_) {
            const double r = vertices_[b].norm();
            if (std::abs(r - 1.0) > boundary_tolerance)
                throw MeshError("boundary radius: vertex " + std::to_string(b) + " has |v| = " + std::to_string(r) +
                                ", expected 1");
        }

        interior_index_.assign(nv, 0);
        for (int b : boundary_loop_) interior_index_[b] = -1;
        n_interior_ = 0;
        for (int i = 0; i < nv; ++i)
            if (interior_index_[i] == 0) interior_index_[i] = n_interior_++;

        const auto rule = quadrature_rule();
        quad_points_.reserve(triangles_.size() * rule.size());
        for (std::size_t t = 0; t < triangles_.size(); ++t) {
            const auto& tri = triangles_[t];
            for (std::size_t q = 0; q < rule.size(); ++q) {
                const auto& l = rule.points[q];
                QuadPoint p;
                p.triangle = int(t);
                p.bary = l;
                p.x = l[0] * vertices_[tri[0]] + l[1] * vertices_[tri[1]] + l[2] * vertices_[tri[2]];
                p.weight = rule.weights[q] * geometry_[t].area;
                p.radius = p.x.norm();
                const auto pd = polar_direction(p.x);
                p.omega = pd.omega;
                p.phi = pd.phi;
                quad_points_.push_back(p);
            }
        }
    }

    std::vector<Vec2> vertices_;
    std::vector<Triangle> triangles_;
    std::vector<int> boundary_loop_;
    std::vector<BoundaryEdge> boundary_edges_;
    std::vector<int> interior_index_;
    std::vector<TriangleGeometry> geometry_;
    std::vector<QuadPoint> quad_points_;
    int n_interior_ = 0;
    std::size_t n_edges_ = 0;
};

/// Concentric rings: ring k (1..level) carries 6k equally spaced vertices at
/// radius k/level; neighbouring rings are joined by a zipper fan. The result
/// has 1 + 3 level (level + 1) vertices and 6 level^2 triangles.
inline DiskMesh generate_disk_mesh(int level)
{
    if (level < 1) throw std::invalid_argument("generate_disk_mesh: level must be >= 1");
    std::vector<Vec2> vertices{Vec2::Zero()};
    std::vector<int> ring_start{0};
    for (int k = 1; k <= level; ++k) {
        ring_start.push_back(int(vertices.size()));
        const int n = 6 * k;
        const double r = double(k) / double(level);
        for (int j = 0; j < n; ++j) {
            const double a = two_pi * double(j) / double(n);
            // exact unit radius on the boundary ring
            vertices.emplace_back(k == level ? Vec2(std::cos(a), std::sin(a)) : Vec2(r * std::cos(a), r * std::sin(a)));
        }
    }

    std::vector<Triangle> triangles;
    auto push = [&](int a, int b, int c) {
        const Vec2 e1 = vertices[b] - vertices[a];
        const Vec2 e2 = vertices[c] - vertices[a];
        if (e1.x() * e2.y() - e1.y() * e2.x() < 0.0) std::swap(b, c);
        triangles.push_back({a, b, c});
    };
    for (int j = 0; j < 6; ++j) push(0, ring_start[1] + j, ring_start[1] + (j + 1) % 6);
    for (int k = 2; k <= level; ++k) {
        const int n0 = 6 * (k - 1), n1 = 6 * k;
        const int s0 = ring_start[k - 1], s1 = ring_start[k];
        int i = 0, j = 0;
        while (i < n0 || j < n1) {
            // advance whichever ring has the smaller next angle; compare (j+1)/n1 and (i+1)/n0 exactly
            const bool advance_outer = j < n1 && (i == n0 || long(j + 1) * n0 <= long(i + 1) * n1);
            if (advance_outer) {
                push(s0 + i % n0, s1 + j, s1 + (j + 1) % n1);
                ++j;
            } else {
                push(s0 + i, s1 + j % n1, s0 + (i + 1) % n0);
                ++i;
            }
        }
    }
    return DiskMesh(std::move(vertices), std::move(triangles));
}

// Text format: "V T", then V lines "x y", then T lines "i j k" (0-based, CCW).

inline void save_mesh(const DiskMesh& mesh, const std::string& path)
{
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    os << mesh.n_vertices() << ' ' << mesh.n_triangles() << '\n' << std::setprecision(17);
    for (const auto& v : mesh.vertices()) os << v.x() << ' ' << v.y() << '\n';
    for (const auto& t : mesh.triangles()) os << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

inline DiskMesh load_mesh(const std::string& path)
{
    std::ifstream is(path);
    if (!is) throw MeshError("cannot open " + path);
    long nv = -1, nt = -1;
    if (!(is >> nv >> nt) || nv <= 0 || nt <= 0) throw MeshError(path + ": malformed header, expected 'V T'");
    std::vector<Vec2> vertices(nv);
    for (long i = 0; i < nv; ++i) {
        double x, y;
        if (!(is >> x >> y)) throw MeshError(path + ": malformed vertex line " + std::to_string(i));
        vertices[i] = Vec2(x, y);
    }
    std::vector<Triangle> triangles(nt);
    for (long t = 0; t < nt; ++t) {
        Triangle tri;
        if (!(is >> tri[0] >> tri[1] >> tri[2])) throw MeshError(path + ": malformed triangle line " + std::to_string(t));
        triangles[t] = tri;
    }
    std::string rest;
    if (is >> rest) throw MeshError(path + ": trailing data after " + std::to_string(nt) + " triangles");
    return DiskMesh(std::move(vertices), std::move(triangles));
}

}  // namespace lipshape
