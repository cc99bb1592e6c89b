#pragma once

/// @file fe.hpp
/// @brief Tabulated P2/P1 reference data and per-point element geometry.

#include <array>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <tuple>

#include "fsi/mesh.hpp"
#include "fsi/ref_element.hpp"

namespace fsi {

/// Reference P2 (velocity / geometry) and P1 (pressure) data at the points
/// of one volume rule.
struct ElementTables {
    QuadRule rule;
    std::vector<std::array<double, 6>> phi;
    std::vector<std::array<double, 12>> dphi;  // interleaved x, y
    std::vector<std::array<double, 3>> psi;    // P1

    explicit ElementTables(int degree) : rule(quad_rule(degree)) {
        const RefBasis p2(2), p1(1);
        for (const auto& x : rule.points) {
            std::array<double, 6> v{};
            std::array<double, 12> g{};
            std::array<double, 3> q{};
            p2.values(x, v.data());
            p2.gradients(x, g.data());
            p1.values(x, q.data());
            phi.push_back(v);
            dphi.push_back(g);
            psi.push_back(q);
        }
    }

    int size() const { return rule.size(); }

    /// Shared immutable tables per degree.
    static const ElementTables& get(int degree) {
        static std::mutex mu;
        static std::map<int, std::unique_ptr<ElementTables>> cache;
        std::lock_guard lock(mu);
        auto& slot = cache[degree];
        if (!slot) slot = std::make_unique<ElementTables>(degree);
        return *slot;
    }
};

/// Physical data of triangle j at quadrature point k for a given point array.
struct PointGeometry {
    Vec2 x;
    double det = 0.0;
    double weight = 0.0;       // quadrature weight times det
    std::array<Vec2, 6> grad;  // physical P2 gradients
};

/// Geometry from tabulated reference values v[6] and gradients d[12].
inline PointGeometry point_geometry(const Mesh& mesh, std::span<const Vec2> points, int j,
                                    const double* v, const double* d, double w) {
    const auto& g = mesh.tri_grid(j);
    Mat2 J = Mat2::Zero();
    Vec2 x = Vec2::Zero();
    for (int p = 0; p < 6; ++p) {
        const Vec2& a = points[g[p]];
        x += v[p] * a;
        J.col(0) += d[2 * p] * a;
        J.col(1) += d[2 * p + 1] * a;
    }
    PointGeometry pg;
    pg.x = x;
    pg.det = J(0, 0) * J(1, 1) - J(0, 1) * J(1, 0);
    pg.weight = w * pg.det;
    // grad phi = J^{-T} grad_hat phi
    const double inv = 1.0 / pg.det;
    for (int p = 0; p < 6; ++p) {
        const double gx = d[2 * p], gy = d[2 * p + 1];
        pg.grad[p] = Vec2((J(1, 1) * gx - J(1, 0) * gy) * inv, (-J(0, 1) * gx + J(0, 0) * gy) * inv);
    }
    return pg;
}

inline PointGeometry point_geometry(const Mesh& mesh, std::span<const Vec2> points, int j,
                                    const ElementTables& tab, int k) {
    return point_geometry(mesh, points, j, tab.phi[k].data(), tab.dphi[k].data(),
                          tab.rule.weights[k]);
}

/// Geometry at an arbitrary reference point (weight 1), with the P2 values.
inline std::pair<PointGeometry, std::array<double, 6>> point_geometry_at(
    const Mesh& mesh, std::span<const Vec2> points, int j, const Vec2& xh) {
    std::array<double, 6> v{};
    std::array<double, 12> d{};
    p2_basis().values(xh, v.data());
    p2_basis().gradients(xh, d.data());
    return {point_geometry(mesh, points, j, v.data(), d.data(), 1.0), v};
}

/// Scalar P2 field at quadrature point k of triangle j.
inline double eval_scalar(const Mesh& mesh, std::span<const double> f, int j,
                          const ElementTables& tab, int k) {
    double s = 0.0;
    for (int p = 0; p < 6; ++p) s += tab.phi[k][p] * f[mesh.tri_grid(j)[p]];
    return s;
}

inline Vec2 eval_vector(const Mesh& mesh, std::span<const Vec2> f, int j, const ElementTables& tab,
                        int k) {
    Vec2 s = Vec2::Zero();
    for (int p = 0; p < 6; ++p) s += tab.phi[k][p] * f[mesh.tri_grid(j)[p]];
    return s;
}

/// Gradient (rows = components) of a vector P2 field.
inline Mat2 eval_gradient(const Mesh& mesh, std::span<const Vec2> f, int j, const PointGeometry& pg) {
    Mat2 G = Mat2::Zero();
    for (int p = 0; p < 6; ++p) G += f[mesh.tri_grid(j)[p]] * pg.grad[p].transpose();
    return G;
}

/// Gauss points on a reference edge; the P2 map along an edge is quadratic,
/// so n points integrate degree 2n - 1 integrands exactly.
struct EdgeRule {
    std::vector<double> t, w;
    explicit EdgeRule(int n) { std::tie(t, w) = gauss_legendre(n); }
};

/// Reference point at parameter t on local edge k and the reference tangent.
inline std::pair<Vec2, Vec2> reference_edge_point(int k, double t) {
    static const Vec2 start[3] = {Vec2(0, 0), Vec2(1, 0), Vec2(0, 1)};
    static const Vec2 tang[3] = {Vec2(1, 0), Vec2(-1, 1), Vec2(0, -1)};
    return {start[k] + t * tang[k], tang[k]};
}

struct EdgePoint {
    Vec2 xh;       // reference coords
    Vec2 x;        // physical point
    Vec2 normal;   // unit outward normal
    double ds = 0; // weight times arc-length element
};

/// Edge quadrature points of local edge k of triangle j (outward normals for CCW triangles).
inline std::vector<EdgePoint> edge_points(const Mesh& mesh, std::span<const Vec2> points, int j,
                                          int k, const EdgeRule& rule) {
    std::vector<EdgePoint> out;
    for (std::size_t q = 0; q < rule.t.size(); ++q) {
        const auto [xh, th] = reference_edge_point(k, rule.t[q]);
        const auto J = iso_map_jacobian(mesh, points, j, xh);
        const Vec2 tau = J.matrix * th;
        const double len = tau.norm();
        out.push_back({xh, iso_map_eval(mesh, points, j, xh), Vec2(tau.y(), -tau.x()) / len,
                       rule.w[q] * len});
    }
    return out;
}

}  // namespace fsi
