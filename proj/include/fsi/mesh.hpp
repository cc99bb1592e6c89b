#pragma once

/// @file mesh.hpp
/// @brief Quadratic isoparametric triangle meshes with boundary markers.
///
/// Grid points are stored vertices first, followed by one mid-edge point per
/// edge. Topology is immutable; moving meshes reuse the topology and carry
/// their own point arrays.

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "fsi/error.hpp"
#include "fsi/ref_element.hpp"

namespace fsi {

enum class Marker : int { Sigma1 = 1, Sigma2 = 2, Sigma3 = 3, Sigma4 = 4, Interface = 5 };

inline std::string to_string(Marker m) {
    switch (m) {
        case Marker::Sigma1: return "Sigma1";
        case Marker::Sigma2: return "Sigma2";
        case Marker::Sigma3: return "Sigma3";
        case Marker::Sigma4: return "Sigma4";
        case Marker::Interface: return "Interface";
    }
    return "?";
}

/// Accepts 1..5 or the names printed by to_string (case sensitive).
inline Marker parse_marker(const std::string& s) {
    if (s == "1" || s == "Sigma1") return Marker::Sigma1;
    if (s == "2" || s == "Sigma2") return Marker::Sigma2;
    if (s == "3" || s == "Sigma3") return Marker::Sigma3;
    if (s == "4" || s == "Sigma4") return Marker::Sigma4;
    if (s == "5" || s == "Interface") return Marker::Interface;
    throw InputError("unknown boundary marker '" + s + "'");
}

struct BoundaryEdge {
    int triangle = 0;
    int local_edge = 0;  // k: vertices (k, k+1 mod 3)
    Marker marker = Marker::Sigma1;
};

struct Circle {
    Vec2 center{0.0, 0.0};
    double radius = 1.0;

    double distance(const Vec2& x) const { return (x - center).norm() - radius; }
    Vec2 project(const Vec2& x) const {
        const Vec2 d = x - center;
        return center + radius * d / d.norm();
    }
};

/// Marks boundary edges with the given marker whose endpoints lie on the
/// circle as curved: their mid-edge grid point is projected onto it.
struct CurveDirective {
    Circle circle;
    Marker marker = Marker::Interface;
};

/// Returns the curved mid-edge point for the boundary edge (a, b), if any.
using CurvedMidFn = std::function<std::optional<Vec2>(int a, int b, Marker)>;

class Mesh {
public:
    static constexpr int kOrder = 2;
    static constexpr int kLocal = 6;

    Mesh() = default;

    /// Elevates a vertex triangulation to order 2 and validates it.
    Mesh(std::vector<Vec2> vertices, std::vector<std::array<int, 3>> triangles,
         std::vector<BoundaryEdge> boundary, const CurvedMidFn& curved_mid = {})
        : vertices_(std::move(vertices)), triangles_(std::move(triangles)),
          boundary_(std::move(boundary)) {
        build_topology();
        build_grid(curved_mid);
        validate_jacobians();
    }

    int order() const { return kOrder; }
    int num_vertices() const { return static_cast<int>(vertices_.size()); }
    int num_triangles() const { return static_cast<int>(triangles_.size()); }
    int num_edges() const { return static_cast<int>(edge_vertices_.size()); }
    int num_grid_points() const { return static_cast<int>(grid_points_.size()); }

    const std::vector<Vec2>& vertices() const { return vertices_; }
    const std::vector<std::array<int, 3>>& triangles() const { return triangles_; }
    const std::vector<Vec2>& grid_points() const { return grid_points_; }
    const std::vector<BoundaryEdge>& boundary_edges() const { return boundary_; }

    /// Global grid-point indices of triangle j in reference local order.
    const std::array<int, kLocal>& tri_grid(int j) const { return tri_grid_[j]; }
    bool curved(int j) const { return curved_[j]; }

    const std::array<int, 2>& edge_vertices(int e) const { return edge_vertices_[e]; }
    /// Triangles adjacent to edge e; second entry -1 on the boundary.
    const std::array<int, 2>& edge_triangles(int e) const { return edge_tris_[e]; }
    int tri_edge(int j, int k) const { return tri_edges_[j][k]; }
    int edge_grid_point(int e) const { return num_vertices() + e; }

    /// Local grid indices of the three nodes on local edge k (start, end, mid).
    static std::array<int, 3> local_edge_nodes(int k) { return {k, (k + 1) % 3, 3 + k}; }

    /// Grid points lying on any boundary edge with this marker.
    std::vector<int> grid_points_with_marker(Marker m) const {
        std::vector<char> flag(num_grid_points(), 0);
        for (const auto& be : boundary_)
            if (be.marker == m)
                for (int p : local_edge_nodes(be.local_edge)) flag[tri_grid_[be.triangle][p]] = 1;
        std::vector<int> out;
        for (int i = 0; i < num_grid_points(); ++i)
            if (flag[i]) out.push_back(i);
        return out;
    }

    bool has_marker(Marker m) const {
        return std::any_of(boundary_.begin(), boundary_.end(),
                           [m](const BoundaryEdge& b) { return b.marker == m; });
    }

private:
    void build_topology() {
        const int nv = num_vertices();
        for (std::size_t j = 0; j < triangles_.size(); ++j) {
            const auto& t = triangles_[j];
            for (int v : t)
                if (v < 0 || v >= nv)
                    throw InputError("triangle " + std::to_string(j) + " references vertex " +
                                     std::to_string(v) + " out of range");
            const Vec2 a = vertices_[t[0]], b = vertices_[t[1]], c = vertices_[t[2]];
            const double area2 = (b - a).x() * (c - a).y() - (b - a).y() * (c - a).x();
            if (!(area2 > 0.0))
                throw TanglingError("inverted or degenerate triangle (clockwise or zero area)",
                                    static_cast<int>(j));
        }
        std::map<std::pair<int, int>, int> edge_id;
        tri_edges_.resize(triangles_.size());
        for (std::size_t j = 0; j < triangles_.size(); ++j) {
            for (int k = 0; k < 3; ++k) {
                const int a = triangles_[j][k], b = triangles_[j][(k + 1) % 3];
                const auto key = std::minmax(a, b);
                auto it = edge_id.find({key.first, key.second});
                if (it == edge_id.end()) {
                    const int e = static_cast<int>(edge_vertices_.size());
                    edge_id.emplace(std::pair{key.first, key.second}, e);
                    edge_vertices_.push_back({a, b});
                    edge_tris_.push_back({static_cast<int>(j), -1});
                    tri_edges_[j][k] = e;
                } else {
                    const int e = it->second;
                    if (edge_tris_[e][1] != -1)
                        throw InputError("edge (" + std::to_string(a) + "," + std::to_string(b) +
                                         ") shared by more than two triangles");
                    if (edge_vertices_[e][0] == a)
                        throw InputError("edge (" + std::to_string(a) + "," + std::to_string(b) +
                                         ") has the same orientation in both triangles");
                    edge_tris_[e][1] = static_cast<int>(j);
                    tri_edges_[j][k] = e;
                }
            }
        }
        std::vector<int> listed(edge_vertices_.size(), 0);
        for (const auto& be : boundary_) {
            if (be.triangle < 0 || be.triangle >= num_triangles() || be.local_edge < 0 ||
                be.local_edge > 2)
                throw InputError("boundary edge references invalid triangle/edge");
            const int e = tri_edges_[be.triangle][be.local_edge];
            if (edge_tris_[e][1] != -1)
                throw InputError("boundary edge (triangle " + std::to_string(be.triangle) +
                                 ") is an interior edge");
            if (listed[e]++)
                throw InputError("boundary edge listed twice");
        }
        for (std::size_t e = 0; e < edge_vertices_.size(); ++e)
            if (edge_tris_[e][1] == -1 && !listed[e])
                throw InputError("boundary edge (" + std::to_string(edge_vertices_[e][0]) + "," +
                                 std::to_string(edge_vertices_[e][1]) + ") carries no marker");
    }

    void build_grid(const CurvedMidFn& curved_mid) {
        grid_points_ = vertices_;
        grid_points_.reserve(vertices_.size() + edge_vertices_.size());
        std::vector<std::optional<Marker>> edge_marker(edge_vertices_.size());
        for (const auto& be : boundary_)
            edge_marker[tri_edges_[be.triangle][be.local_edge]] = be.marker;
        std::vector<char> edge_curved(edge_vertices_.size(), 0);
        for (std::size_t e = 0; e < edge_vertices_.size(); ++e) {
            const auto [a, b] = edge_vertices_[e];
            Vec2 mid = 0.5 * (vertices_[a] + vertices_[b]);
            if (edge_marker[e] && curved_mid) {
                if (auto c = curved_mid(a, b, *edge_marker[e])) {
                    mid = *c;
                    edge_curved[e] = 1;
                }
            }
            grid_points_.push_back(mid);
        }
        const int nv = num_vertices();
        tri_grid_.resize(triangles_.size());
        curved_.assign(triangles_.size(), false);
        for (std::size_t j = 0; j < triangles_.size(); ++j) {
            for (int k = 0; k < 3; ++k) {
                tri_grid_[j][k] = triangles_[j][k];
                const int e = tri_edges_[j][k];
                tri_grid_[j][3 + k] = nv + e;
                if (edge_curved[e]) curved_[j] = true;
            }
        }
    }

    void validate_jacobians() const;

    std::vector<Vec2> vertices_;
    std::vector<std::array<int, 3>> triangles_;
    std::vector<BoundaryEdge> boundary_;
    std::vector<Vec2> grid_points_;
    std::vector<std::array<int, kLocal>> tri_grid_;
    std::vector<bool> curved_;
    std::vector<std::array<int, 2>> edge_vertices_;
    std::vector<std::array<int, 2>> edge_tris_;
    std::vector<std::array<int, 3>> tri_edges_;
};

// ---------------------------------------------------------------------------
// Isoparametric maps
// ---------------------------------------------------------------------------

inline const RefBasis& p2_basis() {
    static const RefBasis b(2);
    return b;
}

/// Psi_j(xh) = sum_p phi_p(xh) a_{i(j,p)} for the given point array.
inline Vec2 iso_map_eval(const Mesh& mesh, std::span<const Vec2> points, int j, const Vec2& xh) {
    double phi[Mesh::kLocal];
    p2_basis().values(xh, phi);
    Vec2 x = Vec2::Zero();
    const auto& g = mesh.tri_grid(j);
    for (int p = 0; p < Mesh::kLocal; ++p) x += phi[p] * points[g[p]];
    return x;
}

inline Vec2 iso_map_eval(const Mesh& mesh, int j, const Vec2& xh) {
    return iso_map_eval(mesh, mesh.grid_points(), j, xh);
}

struct Jacobian {
    Mat2 matrix;  // column b = d x / d xh_b
    double det = 0.0;
};

inline Jacobian iso_map_jacobian(const Mesh& mesh, std::span<const Vec2> points, int j,
                                 const Vec2& xh) {
    double grad[2 * Mesh::kLocal];
    p2_basis().gradients(xh, grad);
    Mat2 J = Mat2::Zero();
    const auto& g = mesh.tri_grid(j);
    for (int p = 0; p < Mesh::kLocal; ++p) {
        J.col(0) += grad[2 * p] * points[g[p]];
        J.col(1) += grad[2 * p + 1] * points[g[p]];
    }
    return {J, J.determinant()};
}

inline Jacobian iso_map_jacobian(const Mesh& mesh, int j, const Vec2& xh) {
    return iso_map_jacobian(mesh, mesh.grid_points(), j, xh);
}

/// Smallest Jacobian determinant over quadrature points and nodes, with the
/// triangle where it occurs.
inline std::pair<double, int> min_jacobian(const Mesh& mesh, std::span<const Vec2> points,
                                           int degree = default_quad_degree(2)) {
    static thread_local std::map<int, std::vector<Vec2>> samples_cache;
    auto& samples = samples_cache[degree];
    if (samples.empty()) {
        const QuadRule q = quad_rule(degree);
        samples = q.points;
        for (int p = 0; p < Mesh::kLocal; ++p) samples.push_back(p2_basis().node(p));
    }
    double best = std::numeric_limits<double>::infinity();
    int where = -1;
    for (int j = 0; j < mesh.num_triangles(); ++j)
        for (const auto& xh : samples) {
            const double d = iso_map_jacobian(mesh, points, j, xh).det;
            if (d < best) {
                best = d;
                where = j;
            }
        }
    return {best, where};
}

/// Throws TanglingError if any sampled Jacobian determinant is non-positive.
inline void check_jacobians(const Mesh& mesh, std::span<const Vec2> points,
                            const std::string& context) {
    const auto [d, j] = min_jacobian(mesh, points);
    if (!(d > 0.0)) throw TanglingError(context + ": non-positive Jacobian " + std::to_string(d), j);
}

inline void Mesh::validate_jacobians() const { check_jacobians(*this, grid_points_, "mesh"); }

/// Area of the mesh by quadrature of det J.
inline double mesh_area(const Mesh& mesh, std::span<const Vec2> points, int degree = 8) {
    const QuadRule q = quad_rule(degree);
    double a = 0.0;
    for (int j = 0; j < mesh.num_triangles(); ++j)
        for (int k = 0; k < q.size(); ++k)
            a += q.weights[k] * iso_map_jacobian(mesh, points, j, q.points[k]).det;
    return a;
}

inline double mesh_area(const Mesh& mesh) { return mesh_area(mesh, mesh.grid_points()); }

/// Locates the triangle containing x and its reference coordinates.
inline std::optional<std::pair<int, Vec2>> locate_point(const Mesh& mesh,
                                                        std::span<const Vec2> points,
                                                        const Vec2& x, double tol = 1e-10) {
    for (int j = 0; j < mesh.num_triangles(); ++j) {
        const auto& t = mesh.triangles()[j];
        // quick reject on the vertex bounding box, padded for curved edges
        Vec2 lo = points[t[0]], hi = points[t[0]];
        for (int p = 0; p < Mesh::kLocal; ++p) {
            lo = lo.cwiseMin(points[mesh.tri_grid(j)[p]]);
            hi = hi.cwiseMax(points[mesh.tri_grid(j)[p]]);
        }
        const double pad = 0.25 * (hi - lo).norm() + tol;
        if ((x.array() < lo.array() - pad).any() || (x.array() > hi.array() + pad).any()) continue;
        Vec2 xh(1.0 / 3.0, 1.0 / 3.0);
        for (int it = 0; it < 30; ++it) {
            const Vec2 r = iso_map_eval(mesh, points, j, xh) - x;
            const auto jac = iso_map_jacobian(mesh, points, j, xh);
            const Vec2 dx = jac.matrix.lu().solve(r);
            xh -= dx;
            if (dx.norm() < 1e-15) break;
        }
        if ((iso_map_eval(mesh, points, j, xh) - x).norm() > 1e-9) continue;
        if (xh[0] >= -tol && xh[1] >= -tol && xh[0] + xh[1] <= 1.0 + tol) return std::pair{j, xh};
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Text I/O
// ---------------------------------------------------------------------------

/// Curved-mid function for circle directives.
inline CurvedMidFn circle_curves(std::vector<Vec2> vertices, std::vector<CurveDirective> curves) {
    if (curves.empty()) return {};
    return [vertices = std::move(vertices), curves = std::move(curves)](
               int a, int b, Marker m) -> std::optional<Vec2> {
        for (const auto& c : curves) {
            if (c.marker != m) continue;
            const double tol = 1e-9 * std::max(1.0, c.circle.radius);
            if (std::abs(c.circle.distance(vertices[a])) < tol &&
                std::abs(c.circle.distance(vertices[b])) < tol)
                return c.circle.project(0.5 * (vertices[a] + vertices[b]));
        }
        return std::nullopt;
    };
}

/// Parses `nv nt nbe m`, vertices, triangles, boundary edges and optional
/// `curve circle cx cy r marker` lines.
inline Mesh parse_mesh(std::istream& in, std::vector<CurveDirective> curves = {}) {
    int nv = 0, nt = 0, nbe = 0, m = 0;
    if (!(in >> nv >> nt >> nbe >> m)) throw InputError("mesh: cannot read header 'nv nt nbe m'");
    if (nv < 3 || nt < 1 || nbe < 0) throw InputError("mesh: invalid counts in header");
    if (m != Mesh::kOrder) throw InputError("mesh: unsupported order m=" + std::to_string(m));
    std::vector<Vec2> v(nv);
    for (int i = 0; i < nv; ++i)
        if (!(in >> v[i].x() >> v[i].y()))
            throw InputError("mesh: cannot read vertex " + std::to_string(i));
    std::vector<std::array<int, 3>> t(nt);
    for (int j = 0; j < nt; ++j)
        if (!(in >> t[j][0] >> t[j][1] >> t[j][2]))
            throw InputError("mesh: cannot read triangle " + std::to_string(j));
    std::vector<BoundaryEdge> be(nbe);
    for (int k = 0; k < nbe; ++k) {
        std::string marker;
        if (!(in >> be[k].triangle >> be[k].local_edge >> marker))
            throw InputError("mesh: cannot read boundary edge " + std::to_string(k));
        be[k].marker = parse_marker(marker);
    }
    std::string word;
    while (in >> word) {
        if (word.starts_with('#')) {
            std::string rest;
            std::getline(in, rest);
            continue;
        }
        std::string kind, marker;
        CurveDirective c;
        if (word != "curve" || !(in >> kind) || kind != "circle" ||
            !(in >> c.circle.center.x() >> c.circle.center.y() >> c.circle.radius >> marker))
            throw InputError("mesh: malformed trailing directive near '" + word + "'");
        c.marker = parse_marker(marker);
        curves.push_back(c);
    }
    auto fn = circle_curves(v, curves);
    return Mesh(std::move(v), std::move(t), std::move(be), fn);
}

inline Mesh read_mesh(const std::string& path, std::vector<CurveDirective> curves = {}) {
    std::ifstream f(path);
    if (!f) throw InputError("cannot open mesh file '" + path + "'");
    return parse_mesh(f, std::move(curves));
}

inline void write_mesh(std::ostream& out, const Mesh& mesh,
                       const std::vector<CurveDirective>& curves = {}) {
    out << mesh.num_vertices() << ' ' << mesh.num_triangles() << ' '
        << mesh.boundary_edges().size() << ' ' << mesh.order() << '\n';
    out.precision(17);
    for (const auto& v : mesh.vertices()) out << v.x() << ' ' << v.y() << '\n';
    for (const auto& t : mesh.triangles()) out << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
    for (const auto& b : mesh.boundary_edges())
        out << b.triangle << ' ' << b.local_edge << ' ' << static_cast<int>(b.marker) << '\n';
    for (const auto& c : curves)
        out << "curve circle " << c.circle.center.x() << ' ' << c.circle.center.y() << ' '
            << c.circle.radius << ' ' << static_cast<int>(c.marker) << '\n';
}

}  // namespace fsi
