#pragma once

// Star-shaped domains Omega_f = { x : |x| < f(omega_x) } described by a
// positive periodic piecewise-linear radial function, together with the
// transform Phi_f(x) = f(omega_x) x from the unit disk onto Omega_f.

#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "periodic_linear.hpp"

namespace lipshape {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Points closer to the origin than this use omega = (1, 0).
inline constexpr double origin_radius = 1e-14;

class RadialShape {
  public:
    /// Throws std::domain_error if some radius is not strictly positive.
    explicit RadialShape(PeriodicLinear radii) : radii_(std::move(radii))
    {
        for (std::size_t i = 0; i < radii_.size(); ++i)
            if (!(radii_[i] > 0.0) || !std::isfinite(radii_[i]))
                throw std::domain_error("RadialShape: radius at node " + std::to_string(i) +
                                        " is not positive (" + std::to_string(radii_[i]) + ")");
    }

    explicit RadialShape(std::vector<double> radii) : RadialShape(PeriodicLinear(std::move(radii))) {}

    static RadialShape constant(std::size_t n, double r) { return RadialShape(PeriodicLinear::constant(n, r)); }

    template <typename Fn>
    static RadialShape sample(std::size_t n, Fn&& fn)
    {
        return RadialShape(PeriodicLinear::sample(n, std::forward<Fn>(fn)));
    }

    std::size_t size() const { return radii_.size(); }
    const PeriodicLinear& radii() const { return radii_; }
    double operator[](std::size_t i) const { return radii_[i]; }
    double node_angle(std::size_t i) const { return radii_.node_angle(i); }

    double eval(double phi) const { return radii_.eval(phi); }
    double eval_slope(double phi) const { return radii_.slope(phi); }

  private:
    PeriodicLinear radii_;
};

/// Unit direction of x and its polar angle in [0, 2*pi).
struct PolarDirection {
    Vec2 omega;
    double phi;
};

inline PolarDirection polar_direction(const Vec2& x)
{
    const double r = x.norm();
    if (r < origin_radius) return {Vec2(1.0, 0.0), 0.0};
    return {x / r, wrap_angle(std::atan2(x.y(), x.x()))};
}

inline Vec2 perp(const Vec2& a) { return Vec2(-a.y(), a.x()); }

inline Vec2 map_point(const RadialShape& f, const Vec2& x)
{
    if (x.norm() < origin_radius) return Vec2::Zero();
    return f.eval(polar_direction(x).phi) * x;
}

struct TransformData {
    Vec2 point_image;
    Mat2 jacobian;
    double det;
    /// A_f = det * J^{-1} J^{-T}
    Mat2 coeff_matrix;
};

/// Phi_f, its Jacobian f I + omega (x) grad_T f, det = f^2 and the pulled-back
/// diffusion matrix A_f(omega_x).
inline TransformData transform_at(const RadialShape& f, const Vec2& x)
{
    const auto [omega, phi] = polar_direction(x);
    const double fv = f.eval(phi);
    const Vec2 grad_t = f.eval_slope(phi) * perp(omega);
    const Vec2 b = grad_t / fv;

    TransformData out;
    out.point_image = x.norm() < origin_radius ? Vec2::Zero() : Vec2(fv * x);
    out.jacobian = fv * Mat2::Identity() + omega * grad_t.transpose();
    out.det = fv * fv;
    out.coeff_matrix = Mat2::Identity() - omega * b.transpose() - b * omega.transpose() +
                       b.squaredNorm() * (omega * omega.transpose());
    return out;
}

/// Integral of f^2 over [0, 2*pi], exact for piecewise-linear f.
inline double square_integral(const RadialShape& f) { return integral_product(f.radii(), f.radii()); }

/// Area of Omega_f, i.e. half the square integral.
inline double volume(const RadialShape& f) { return 0.5 * square_integral(f); }

inline RadialShape rescale_to_square_integral(const RadialShape& f, double gamma)
{
    if (!(gamma > 0.0)) throw std::invalid_argument("rescale_to_square_integral: target must be positive");
    PeriodicLinear r = f.radii();
    r *= std::sqrt(gamma / square_integral(f));
    return RadialShape(std::move(r));
}

struct StarShapeDiagnostics {
    double min_radius;       // f_0
    double lipschitz;        // L = max |f'|
    double star_margin;      // Omega_f is star-shaped w.r.t. B_eps(0)
    double hold_all_radius;  // Omega_f is contained in B_R(0)
};

inline StarShapeDiagnostics star_shape_diagnostics(const RadialShape& f)
{
    StarShapeDiagnostics d;
    d.min_radius = f.radii().min_value();
    d.lipschitz = f.radii().max_abs_slope();
    d.star_margin = d.min_radius * d.min_radius / (d.lipschitz * std::numbers::pi + d.min_radius);
    d.hold_all_radius = std::sqrt(square_integral(f) / two_pi) + std::numbers::pi * d.lipschitz;
    return d;
}

// CSV with header "phi,f", one row per node, 17 significant digits.

inline void write_periodic_csv(std::ostream& os, const std::vector<std::string>& header,
                               const std::vector<const PeriodicLinear*>& columns)
{
    for (std::size_t c = 0; c < header.size(); ++c) os << (c ? "," : "") << header[c];
    os << '\n' << std::setprecision(17);
    const std::size_t n = columns.front()->size();
    for (std::size_t i = 0; i < n; ++i) {
        os << columns.front()->node_angle(i);
        for (const auto* col : columns) os << ',' << (*col)[i];
        os << '\n';
    }
}

inline void save_shape_csv(const RadialShape& f, const std::string& path)
{
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    write_periodic_csv(os, {"phi", "f"}, {&f.radii()});
}

inline RadialShape load_shape_csv(const std::string& path)
{
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open " + path);
    std::string line;
    if (!std::getline(is, line) || line.rfind("phi,f", 0) != 0)
        throw std::runtime_error(path + ": expected header 'phi,f'");
    std::vector<double> values;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw std::runtime_error(path + ": malformed row '" + line + "'");
        values.push_back(std::stod(line.substr(comma + 1)));
    }
    if (values.empty()) throw std::runtime_error(path + ": no rows");
    return RadialShape(std::move(values));
}

}  // namespace lipshape
