#pragma once

#include <array>
#include <span>

namespace lipshape {

/// Triangle rule in barycentric coordinates. Weights sum to one; multiply
/// by the triangle area when integrating.
struct QuadratureRule {
    std::span<const std::array<double, 3>> points;
    std::span<const double> weights;

    std::size_t size() const { return weights.size(); }
};

namespace detail {

// Dunavant's 12-point rule, exact for polynomials of degree 6. Abscissae and
// weights re-solved from the moment equations to full double precision.
inline constexpr double d6_a1 = 0.50142650965817915742;
inline constexpr double d6_b1 = 0.5 * (1.0 - d6_a1);
inline constexpr double d6_a2 = 0.87382197101699554332;
inline constexpr double d6_b2 = 0.5 * (1.0 - d6_a2);
inline constexpr double d6_c1 = 0.053145049844816947353;
inline constexpr double d6_c2 = 0.31035245103378440542;
inline constexpr double d6_c3 = 1.0 - d6_c1 - d6_c2;
inline constexpr double d6_w1 = 0.11678627572637936603;
inline constexpr double d6_w2 = 0.050844906370206816921;
inline constexpr double d6_w3 = 0.082851075618373575194;

inline constexpr std::array<std::array<double, 3>, 12> degree6_points{{
    {d6_a1, d6_b1, d6_b1},
    {d6_b1, d6_a1, d6_b1},
    {d6_b1, d6_b1, d6_a1},
    {d6_a2, d6_b2, d6_b2},
    {d6_b2, d6_a2, d6_b2},
    {d6_b2, d6_b2, d6_a2},
    {d6_c1, d6_c2, d6_c3},
    {d6_c2, d6_c1, d6_c3},
    {d6_c1, d6_c3, d6_c2},
    {d6_c3, d6_c1, d6_c2},
    {d6_c2, d6_c3, d6_c1},
    {d6_c3, d6_c2, d6_c1},
}};

inline constexpr std::array<double, 12> degree6_weights{
    d6_w1, d6_w1, d6_w1, d6_w2, d6_w2, d6_w2, d6_w3, d6_w3, d6_w3, d6_w3, d6_w3, d6_w3,
};

// Gauss-Legendre on [0, 1].
inline constexpr std::array<double, 3> gauss3_points{
    0.5 - 0.38729833462074168852, 0.5, 0.5 + 0.38729833462074168852};
inline constexpr std::array<double, 3> gauss3_weights{5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};

}  // namespace detail

/// Symmetric 12-point rule, all points strictly inside the triangle.
/// Exact for polynomials of total degree <= 6; degree 7 and above are not
/// integrated exactly.
inline QuadratureRule quadrature_rule() { return {detail::degree6_points, detail::degree6_weights}; }

}  // namespace lipshape
