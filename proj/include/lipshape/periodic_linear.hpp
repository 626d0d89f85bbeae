#pragma once

// Continuous, periodic, piecewise-linear functions on [0, 2*pi) with N
// equispaced nodes phi_i = 2*pi*i/N. Node N is identified with node 0.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace lipshape {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Reduce an angle to [0, 2*pi).
inline double wrap_angle(double phi)
{
    double r = std::fmod(phi, two_pi);
    if (r < 0.0) r += two_pi;
    if (r >= two_pi) r = 0.0;
    return r;
}

/// Location of an angle inside the node grid: segment index s covers
/// [phi_s, phi_{s+1}) and t in [0, 1) is the local coordinate.
struct SegmentPosition {
    std::size_t segment;
    double t;
};

class PeriodicLinear {
  public:
    PeriodicLinear() = default;

    explicit PeriodicLinear(std::vector<double> values) : values_(std::move(values))
    {
        if (values_.empty())
            throw std::invalid_argument("PeriodicLinear: need at least one node");
    }

    static PeriodicLinear zeros(std::size_t n) { return PeriodicLinear(std::vector<double>(n, 0.0)); }

    static PeriodicLinear constant(std::size_t n, double c) { return PeriodicLinear(std::vector<double>(n, c)); }

    template <typename Fn>
    static PeriodicLinear sample(std::size_t n, Fn&& fn)
    {
        std::vector<double> v(n);
        for (std::size_t i = 0; i < n; ++i) v[i] = fn(two_pi * double(i) / double(n));
        return PeriodicLinear(std::move(v));
    }

    std::size_t size() const { return values_.size(); }
    double spacing() const { return two_pi / double(values_.size()); }
    double node_angle(std::size_t i) const { return two_pi * double(i) / double(values_.size()); }

    std::span<const double> values() const { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }
    double& operator[](std::size_t i) { return values_[i]; }

    /// Value at node i with periodic wrap (i may equal N).
    double node(std::size_t i) const { return values_[i % values_.size()]; }

    SegmentPosition locate(double phi) const
    {
        const double n = double(values_.size());
        double s = wrap_angle(phi) / two_pi * n;
        // node angles computed as 2*pi*i/N must land on node i
        const double nearest = std::round(s);
        if (std::abs(s - nearest) < 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, n))
            s = nearest >= n ? 0.0 : nearest;
        auto seg = static_cast<std::size_t>(std::floor(s));
        if (seg >= values_.size()) seg = values_.size() - 1;
        double t = s - double(seg);
        return {seg, t};
    }

    double eval(double phi) const
    {
        auto [s, t] = locate(phi);
        const double a = values_[s];
        const double b = node(s + 1);
        return a + t * (b - a);
    }

    /// Constant derivative of the segment containing phi; right-segment
    /// convention at nodes.
    double slope(double phi) const { return segment_slope(locate(phi).segment); }

    double segment_slope(std::size_t s) const { return (node(s + 1) - values_[s]) / spacing(); }

    double max_abs_slope() const
    {
        double m = 0.0;
        for (std::size_t s = 0; s < size(); ++s) m = std::max(m, std::abs(segment_slope(s)));
        return m;
    }

    double max_abs() const
    {
        double m = 0.0;
        for (double v : values_) m = std::max(m, std::abs(v));
        return m;
    }

    double min_value() const
    {
        double m = values_[0];
        for (double v : values_) m = std::min(m, v);
        return m;
    }

    double integral() const
    {
        double s = 0.0;
        for (double v : values_) s += v;
        return s * spacing();
    }

    PeriodicLinear& operator+=(const PeriodicLinear& o)
    {
        check_same_size(o);
        for (std::size_t i = 0; i < size(); ++i) values_[i] += o.values_[i];
        return *this;
    }

    PeriodicLinear& operator*=(double a)
    {
        for (double& v : values_) v *= a;
        return *this;
    }

    PeriodicLinear& add_constant(double a)
    {
        for (double& v : values_) v += a;
        return *this;
    }

    friend PeriodicLinear operator*(double a, PeriodicLinear v) { return v *= a; }
    friend PeriodicLinear operator+(PeriodicLinear a, const PeriodicLinear& b) { return a += b; }

    void check_same_size(const PeriodicLinear& o) const
    {
        if (o.size() != size())
            throw std::invalid_argument("PeriodicLinear: node count mismatch (" + std::to_string(size()) +
                                        " vs " + std::to_string(o.size()) + ")");
    }

  private:
    std::vector<double> values_;
};

/// Exact integral of u*v over the period.
inline double integral_product(const PeriodicLinear& u, const PeriodicLinear& v)
{
    u.check_same_size(v);
    const double h = u.spacing();
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double ua = u[i], ub = u.node(i + 1);
        const double va = v[i], vb = v.node(i + 1);
        s += 2.0 * ua * va + ua * vb + ub * va + 2.0 * ub * vb;
    }
    return s * h / 6.0;
}

/// Exact integral of u * v' over the period.
inline double integral_product_derivative(const PeriodicLinear& u, const PeriodicLinear& v)
{
    u.check_same_size(v);
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) s += 0.5 * (u[i] + u.node(i + 1)) * (v.node(i + 1) - v[i]);
    return s;
}

/// Exact integral of u' * v' over the period.
inline double integral_derivative_product(const PeriodicLinear& u, const PeriodicLinear& v)
{
    u.check_same_size(v);
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) s += (u.node(i + 1) - u[i]) * (v.node(i + 1) - v[i]);
    return s / u.spacing();
}

/// Vector (integral of u * phi_i)_i, i.e. the periodic mass matrix applied to u.
inline std::vector<double> mass_times(const PeriodicLinear& u)
{
    const std::size_t n = u.size();
    const double h = u.spacing();
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double left = u[(i + n - 1) % n];
        const double right = u.node(i + 1);
        r[i] = h * (4.0 * u[i] + left + right) / 6.0;
    }
    return r;
}

}  // namespace lipshape
