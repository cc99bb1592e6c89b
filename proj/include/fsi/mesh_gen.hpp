#pragma once

/// @file mesh_gen.hpp
/// @brief Structured generators for channels with a circular hole or body.
///
/// The carve generator starts from a tensor grid, snaps the vertices nearest
/// to a circle onto it, splits the triangles into fluid / solid / void
/// regions and extracts matching fluid and solid meshes.

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <limits>
#include <optional>
#include <set>
#include <vector>

#include "fsi/error.hpp"
#include "fsi/mesh.hpp"

namespace fsi {

struct Rect {
    double x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;
    double area() const { return (x1 - x0) * (y1 - y0); }
    bool contains(const Vec2& p, double tol = 0.0) const {
        return p.x() >= x0 - tol && p.x() <= x1 + tol && p.y() >= y0 - tol && p.y() <= y1 + tol;
    }
};

struct SideMarkers {
    Marker left = Marker::Sigma1;
    Marker right = Marker::Sigma2;
    Marker bottom = Marker::Sigma1;
    Marker top = Marker::Sigma1;
};

inline void check_rect(const Rect& r) {
    if (!(r.x1 > r.x0) || !(r.y1 > r.y0)) throw InputError("degenerate rectangle extent");
}

/// n equal cells on [a, b] with n = ceil((b - a)/h).
inline std::vector<double> uniform_lines(double a, double b, double h) {
    if (!(h > 0.0)) throw InputError("mesh size h must be positive");
    const int n = std::max(1, static_cast<int>(std::ceil((b - a) / h - 1e-9)));
    std::vector<double> x(n + 1);
    for (int i = 0; i <= n; ++i) x[i] = a + (b - a) * i / n;
    x[n] = b;
    return x;
}

/// Graded grid lines on [a, b]: spacing h_fine on [fine_lo, fine_hi], growing
/// linearly to h_coarse over a distance `blend`. Every value in `required`
/// becomes a grid line exactly.
inline std::vector<double> graded_lines(double a, double b, double h_fine, double h_coarse,
                                        double fine_lo, double fine_hi, double blend,
                                        std::vector<double> required = {}) {
    if (!(h_fine > 0.0) || !(h_coarse > 0.0)) throw InputError("mesh size h must be positive");
    if (!(b > a)) throw InputError("degenerate grid interval");
    auto spacing = [&](double x) {
        const double d = x < fine_lo ? fine_lo - x : (x > fine_hi ? x - fine_hi : 0.0);
        const double s = blend > 0.0 ? std::min(1.0, d / blend) : (d > 0.0 ? 1.0 : 0.0);
        return h_fine + (h_coarse - h_fine) * s;
    };
    required.push_back(a);
    required.push_back(b);
    std::sort(required.begin(), required.end());
    required.erase(std::unique(required.begin(), required.end()), required.end());
    std::vector<double> out{required.front()};
    for (std::size_t k = 0; k + 1 < required.size(); ++k) {
        const double p = required[k], q = required[k + 1];
        if (p < a || q > b) throw InputError("required grid line outside the interval");
        constexpr int kSamples = 2000;
        std::vector<double> cum(kSamples + 1, 0.0);
        for (int i = 0; i < kSamples; ++i) {
            const double x = p + (q - p) * (i + 0.5) / kSamples;
            cum[i + 1] = cum[i] + (q - p) / kSamples / spacing(x);
        }
        const int n = std::max(1, static_cast<int>(std::ceil(cum.back() - 1e-9)));
        for (int c = 1; c < n; ++c) {
            const double target = cum.back() * c / n;
            const auto it = std::lower_bound(cum.begin(), cum.end(), target);
            const int i = std::max(1, static_cast<int>(it - cum.begin()));
            const double f = (target - cum[i - 1]) / (cum[i] - cum[i - 1]);
            out.push_back(p + (q - p) * (i - 1 + f) / kSamples);
        }
        out.push_back(q);
    }
    return out;
}

/// Vertex triangulation of a tensor grid (before order elevation).
struct GridTriangulation {
    std::vector<Vec2> vertices;
    std::vector<std::array<int, 3>> triangles;
};

inline GridTriangulation tensor_grid(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() < 2 || ys.size() < 2) throw InputError("tensor grid needs two lines per axis");
    GridTriangulation g;
    const int nx = static_cast<int>(xs.size()), ny = static_cast<int>(ys.size());
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) g.vertices.emplace_back(xs[i], ys[j]);
    auto id = [nx](int i, int j) { return j * nx + i; };
    for (int j = 0; j + 1 < ny; ++j)
        for (int i = 0; i + 1 < nx; ++i) {
            const int a = id(i, j), b = id(i + 1, j), c = id(i + 1, j + 1), d = id(i, j + 1);
            g.triangles.push_back({a, b, c});
            g.triangles.push_back({a, c, d});
        }
    return g;
}

namespace detail {

inline Marker side_marker(const Rect& r, const SideMarkers& s, const Vec2& a, const Vec2& b) {
    if (a.x() == r.x0 && b.x() == r.x0) return s.left;
    if (a.x() == r.x1 && b.x() == r.x1) return s.right;
    if (a.y() == r.y0 && b.y() == r.y0) return s.bottom;
    if (a.y() == r.y1 && b.y() == r.y1) return s.top;
    throw InputError("boundary edge does not lie on the rectangle sides");
}

inline double signed_area2(const Vec2& a, const Vec2& b, const Vec2& c) {
    return (b - a).x() * (c - a).y() - (b - a).y() * (c - a).x();
}

}  // namespace detail

/// Structured mesh of an arbitrary tensor grid; rectangle sides marked per `sides`.
inline Mesh generate_grid_mesh(const std::vector<double>& xs, const std::vector<double>& ys,
                               const SideMarkers& sides = {}) {
    auto g = tensor_grid(xs, ys);
    const Rect r{xs.front(), xs.back(), ys.front(), ys.back()};
    check_rect(r);
    std::map<std::pair<int, int>, int> count;
    for (const auto& t : g.triangles)
        for (int k = 0; k < 3; ++k) ++count[std::minmax(t[k], t[(k + 1) % 3])];
    std::vector<BoundaryEdge> be;
    for (std::size_t j = 0; j < g.triangles.size(); ++j)
        for (int k = 0; k < 3; ++k) {
            const int a = g.triangles[j][k], b = g.triangles[j][(k + 1) % 3];
            if (count[std::minmax(a, b)] == 1)
                be.push_back({static_cast<int>(j), k,
                              detail::side_marker(r, sides, g.vertices[a], g.vertices[b])});
        }
    return Mesh(std::move(g.vertices), std::move(g.triangles), std::move(be));
}

inline Mesh generate_rectangle_mesh(const Rect& r, double h, const SideMarkers& sides = {}) {
    check_rect(r);
    return generate_grid_mesh(uniform_lines(r.x0, r.x1, h), uniform_lines(r.y0, r.y1, h), sides);
}

enum class DiskRole { Solid, Void };

struct CarveSpec {
    std::vector<double> xs, ys;
    Circle circle;
    DiskRole disk = DiskRole::Void;
    std::optional<Rect> bar;  // solid region outside the disk
    SideMarkers sides;        // fluid edges on the rectangle
    Marker fluid_void_marker = Marker::Sigma1;
    Marker solid_outer_marker = Marker::Sigma3;
    bool smooth = true;
};

struct CarvedMeshes {
    Mesh fluid;
    std::optional<Mesh> solid;
    std::vector<std::pair<int, int>> interface_pairs;  // (fluid grid point, solid grid point)
    std::vector<std::pair<int, int>> body_edges;       // fluid (triangle, local edge) on the body
    std::vector<CurveDirective> curves;
};

/// Tensor grid with a circle carved in; see CarveSpec.
inline CarvedMeshes carve_meshes(const CarveSpec& spec) {
    const Rect rect{spec.xs.front(), spec.xs.back(), spec.ys.front(), spec.ys.back()};
    check_rect(rect);
    const Circle& C = spec.circle;
    if (!(C.radius > 0.0)) throw InputError("circle radius must be positive");
    auto g = tensor_grid(spec.xs, spec.ys);
    auto& P = g.vertices;
    const int nv = static_cast<int>(P.size());
    const int nt = static_cast<int>(g.triangles.size());

    // edges of the base triangulation
    std::map<std::pair<int, int>, int> edge_id;
    std::vector<std::array<int, 2>> edges;
    std::vector<std::array<int, 2>> edge_tris;
    std::vector<std::array<int, 3>> tri_edges(nt);
    for (int j = 0; j < nt; ++j)
        for (int k = 0; k < 3; ++k) {
            const auto key = std::minmax(g.triangles[j][k], g.triangles[j][(k + 1) % 3]);
            auto [it, fresh] = edge_id.try_emplace({key.first, key.second},
                                                   static_cast<int>(edges.size()));
            if (fresh) {
                edges.push_back({key.first, key.second});
                edge_tris.push_back({j, -1});
            } else {
                edge_tris[it->second][1] = j;
            }
            tri_edges[j][k] = it->second;
        }

    // constraint lines: rectangle sides are hard, bar sides are soft
    std::vector<double> vlines{rect.x0, rect.x1}, hlines{rect.y0, rect.y1};
    if (spec.bar) {
        vlines.push_back(spec.bar->x0);
        vlines.push_back(spec.bar->x1);
        hlines.push_back(spec.bar->y0);
        hlines.push_back(spec.bar->y1);
    }
    auto on_line = [](double c, const std::vector<double>& lines) -> std::optional<int> {
        for (std::size_t k = 0; k < lines.size(); ++k)
            if (c == lines[k]) return static_cast<int>(k);
        return std::nullopt;
    };

    enum Status { In, Out, On };
    std::vector<Status> st(nv);
    const double on_tol = 1e-12 * C.radius;
    for (int i = 0; i < nv; ++i) {
        const double d = C.distance(P[i]);
        st[i] = std::abs(d) <= on_tol ? On : (d < 0.0 ? In : Out);
        if (st[i] == On) P[i] = C.project(P[i]);
    }
    const std::vector<Vec2> P0 = P;
    std::vector<char> snapped(nv, 0);

    std::vector<std::vector<int>> tris_of(nv);
    for (int j = 0; j < nt; ++j)
        for (int v : g.triangles[j]) tris_of[v].push_back(j);

    // smallest area ratio (new / original) over the triangles incident to i
    auto quality = [&](int i) {
        double q = std::numeric_limits<double>::infinity();
        for (int j : tris_of[i]) {
            const auto& t = g.triangles[j];
            const double before = detail::signed_area2(P0[t[0]], P0[t[1]], P0[t[2]]);
            q = std::min(q, detail::signed_area2(P[t[0]], P[t[1]], P[t[2]]) / before);
        }
        return q;
    };

    auto snap_target = [&](int i) -> std::optional<Vec2> {
        const Vec2 x = P[i];
        const auto lv = on_line(x.x(), vlines), lh = on_line(x.y(), hlines);
        const bool hard_v = lv && *lv < 2, hard_h = lh && *lh < 2;
        if (lv && lh && (hard_v || hard_h)) return std::nullopt;  // corner
        auto slide = [&](bool horizontal, double c) -> std::optional<Vec2> {
            const double off = horizontal ? c - C.center.y() : c - C.center.x();
            const double disc = C.radius * C.radius - off * off;
            if (disc < 0.0) return std::nullopt;
            const double s = std::sqrt(disc);
            if (horizontal) {
                const double xa = C.center.x() - s, xb = C.center.x() + s;
                return Vec2(std::abs(xa - x.x()) < std::abs(xb - x.x()) ? xa : xb, c);
            }
            const double ya = C.center.y() - s, yb = C.center.y() + s;
            return Vec2(c, std::abs(ya - x.y()) < std::abs(yb - x.y()) ? ya : yb);
        };
        std::optional<Vec2> target;
        if (lh && (hard_h || !lv)) target = slide(true, x.y());
        else if (lv) target = slide(false, x.x());
        if (!target && (hard_h || hard_v)) return std::nullopt;
        if (!target) target = C.project(x);
        if (!rect.contains(*target)) return std::nullopt;
        return target;
    };

    // quality of snapping i, with the move undone
    auto trial = [&](int i) -> double {
        const auto t = snap_target(i);
        if (!t) return -std::numeric_limits<double>::infinity();
        const Vec2 keep = P[i];
        P[i] = *t;
        const double q = quality(i);
        P[i] = keep;
        return q;
    };

    for (int pass = 0;; ++pass) {
        if (pass > 50) throw InputError("circle snapping did not terminate");
        bool changed = false;
        for (const auto& e : edges) {
            const int a = e[0], b = e[1];
            if (!((st[a] == In && st[b] == Out) || (st[a] == Out && st[b] == In))) continue;
            // prefer the endpoint closer to the circle unless it ruins a triangle
            int first = a, second = b;
            if (std::abs(C.distance(P[b])) < std::abs(C.distance(P[a]))) std::swap(first, second);
            const double q1 = trial(first), q2 = trial(second);
            int pick = q1 >= 0.1 || q1 >= q2 ? first : second;
            if (!(std::max(q1, q2) > 0.0))
                throw InputError("circle too large relative to h: cannot snap edge near (" +
                                 std::to_string(P[a].x()) + "," + std::to_string(P[a].y()) + ")");
            P[pick] = *snap_target(pick);
            st[pick] = On;
            snapped[pick] = 1;
            changed = true;
        }
        if (!changed) break;
    }

    if (spec.smooth) {
        std::vector<std::set<int>> nbr(nv);
        for (const auto& e : edges) {
            nbr[e[0]].insert(e[1]);
            nbr[e[1]].insert(e[0]);
        }
        std::vector<int> movers;
        for (int i = 0; i < nv; ++i) {
            if (st[i] == On || on_line(P[i].x(), vlines) || on_line(P[i].y(), hlines)) continue;
            if (std::any_of(nbr[i].begin(), nbr[i].end(), [&](int k) { return snapped[k] != 0; }))
                movers.push_back(i);
        }
        std::vector<Vec2> target(movers.size());
        for (std::size_t k = 0; k < movers.size(); ++k) {
            Vec2 s = Vec2::Zero();
            for (int n : nbr[movers[k]]) s += P[n];
            target[k] = s / static_cast<double>(nbr[movers[k]].size());
        }
        for (std::size_t k = 0; k < movers.size(); ++k) {
            const int i = movers[k];
            const Vec2 keep = P[i];
            const double d_old = C.distance(keep), d_new = C.distance(target[k]);
            if ((d_old < 0.0) != (d_new < 0.0) || std::abs(d_new) < 0.25 * std::abs(d_old))
                continue;
            P[i] = target[k];
            bool ok = true;
            for (int j : tris_of[i]) {
                const auto& t = g.triangles[j];
                const double before = detail::signed_area2(P0[t[0]], P0[t[1]], P0[t[2]]);
                if (detail::signed_area2(P[t[0]], P[t[1]], P[t[2]]) < 0.2 * before) ok = false;
            }
            if (!ok) P[i] = keep;
        }
    }

    // regions
    enum Region { Fluid, Solid, Void };
    std::vector<Region> region(nt);
    std::vector<char> in_disk(nt, 0);
    for (int j = 0; j < nt; ++j) {
        const auto& t = g.triangles[j];
        in_disk[j] = std::none_of(t.begin(), t.end(), [&](int v) { return st[v] == Out; });
        if (in_disk[j]) {
            region[j] = spec.disk == DiskRole::Solid ? Solid : Void;
            continue;
        }
        const Vec2 c = (P[t[0]] + P[t[1]] + P[t[2]]) / 3.0;
        region[j] = spec.bar && spec.bar->contains(c) ? Solid : Fluid;
    }
    for (int j = 0; j < nt; ++j) {
        if (region[j] == Void) continue;
        const auto& t = g.triangles[j];
        if (!(detail::signed_area2(P[t[0]], P[t[1]], P[t[2]]) > 0.0))
            throw InputError("circle too large relative to h: snapping inverted triangle " +
                             std::to_string(j));
    }

    // mid-edge points on the circle are computed once and shared by both sides
    std::vector<std::optional<Vec2>> curved_mid(edges.size());
    for (std::size_t e = 0; e < edges.size(); ++e) {
        const auto [t0, t1] = edge_tris[e];
        if (t1 < 0 || in_disk[t0] == in_disk[t1]) continue;
        curved_mid[e] = C.project(0.5 * (P[edges[e][0]] + P[edges[e][1]]));
    }

    struct Sub {
        std::vector<int> vmap, tmap, vertex_base;
        std::optional<Mesh> mesh;
    };
    auto extract = [&](Region want, bool fluid_side) -> Sub {
        Sub s;
        s.vmap.assign(nv, -1);
        s.tmap.assign(nt, -1);
        std::vector<Vec2> verts;
        std::vector<std::array<int, 3>> tris;
        for (int j = 0; j < nt; ++j)
            if (region[j] == want)
                for (int v : g.triangles[j]) s.vmap[v] = 0;
        for (int i = 0; i < nv; ++i)
            if (s.vmap[i] == 0) {
                s.vmap[i] = static_cast<int>(verts.size());
                verts.push_back(P[i]);
                s.vertex_base.push_back(i);
            }
        for (int j = 0; j < nt; ++j) {
            if (region[j] != want) continue;
            s.tmap[j] = static_cast<int>(tris.size());
            const auto& t = g.triangles[j];
            tris.push_back({s.vmap[t[0]], s.vmap[t[1]], s.vmap[t[2]]});
        }
        if (tris.empty()) return s;
        std::vector<BoundaryEdge> be;
        for (int j = 0; j < nt; ++j) {
            if (region[j] != want) continue;
            for (int k = 0; k < 3; ++k) {
                const int e = tri_edges[j][k];
                const int other = edge_tris[e][0] == j ? edge_tris[e][1] : edge_tris[e][0];
                std::optional<Marker> mk;
                if (other < 0) {
                    const Vec2 a = P[g.triangles[j][k]], b = P[g.triangles[j][(k + 1) % 3]];
                    mk = fluid_side ? detail::side_marker(rect, spec.sides, a, b)
                                    : spec.solid_outer_marker;
                } else if (region[other] != want) {
                    if (region[other] == Void)
                        mk = fluid_side ? spec.fluid_void_marker : spec.solid_outer_marker;
                    else
                        mk = Marker::Interface;
                }
                if (mk) be.push_back({s.tmap[j], k, *mk});
            }
        }
        std::map<std::pair<int, int>, int> local_edge;
        for (std::size_t e = 0; e < edges.size(); ++e) {
            const int a = s.vmap[edges[e][0]], b = s.vmap[edges[e][1]];
            if (a >= 0 && b >= 0 && curved_mid[e]) local_edge[std::minmax(a, b)] = static_cast<int>(e);
        }
        CurvedMidFn fn = [&, local_edge](int a, int b, Marker) -> std::optional<Vec2> {
            auto it = local_edge.find(std::minmax(a, b));
            if (it == local_edge.end()) return std::nullopt;
            return curved_mid[it->second];
        };
        try {
            s.mesh.emplace(std::move(verts), std::move(tris), std::move(be), fn);
        } catch (const TanglingError& e) {
            throw InputError(std::string("circle under-resolved by h: curved element inverted: ") +
                             e.what());
        }
        return s;
    };

    Sub fl = extract(Fluid, true);
    if (!fl.mesh) throw InputError("carve: no fluid triangles left");
    Sub so = extract(Solid, false);

    CarvedMeshes out{std::move(*fl.mesh), std::nullopt, {}, {}, {}};
    out.curves.push_back({C, spec.disk == DiskRole::Solid ? Marker::Interface : spec.fluid_void_marker});
    // body edges: fluid edges facing the solid or the void disk
    for (int j = 0; j < nt; ++j) {
        if (region[j] != Fluid) continue;
        for (int k = 0; k < 3; ++k) {
            const int e = tri_edges[j][k];
            const int other = edge_tris[e][0] == j ? edge_tris[e][1] : edge_tris[e][0];
            if (other >= 0 && region[other] != Fluid) out.body_edges.emplace_back(fl.tmap[j], k);
        }
    }
    if (so.mesh) {
        out.solid = std::move(so.mesh);
        const Mesh& fm = out.fluid;
        const Mesh& sm = *out.solid;
        std::map<int, int> pairs;
        for (int j = 0; j < nt; ++j) {
            if (region[j] != Fluid) continue;
            for (int k = 0; k < 3; ++k) {
                const int e = tri_edges[j][k];
                const int other = edge_tris[e][0] == j ? edge_tris[e][1] : edge_tris[e][0];
                if (other < 0 || region[other] != Solid) continue;
                int ks = 0;
                while (tri_edges[other][ks] != e) ++ks;
                const int jf = fl.tmap[j], js = so.tmap[other];
                // the solid side runs the edge in the opposite direction
                pairs[fm.tri_grid(jf)[k]] = sm.tri_grid(js)[(ks + 1) % 3];
                pairs[fm.tri_grid(jf)[(k + 1) % 3]] = sm.tri_grid(js)[ks];
                pairs[fm.tri_grid(jf)[3 + k]] = sm.tri_grid(js)[3 + ks];
            }
        }
        for (const auto& [f, s] : pairs) {
            if (fm.grid_points()[f] != sm.grid_points()[s])
                throw Error("carve: interface grid points do not coincide");
            out.interface_pairs.emplace_back(f, s);
        }
    }
    return out;
}

/// Rectangle with the disk removed; the circular boundary gets `hole_marker`.
inline Mesh generate_hole_mesh(const Rect& r, const Circle& c, double h,
                               const SideMarkers& sides = {},
                               Marker hole_marker = Marker::Sigma1) {
    check_rect(r);
    CarveSpec spec;
    spec.xs = uniform_lines(r.x0, r.x1, h);
    spec.ys = uniform_lines(r.y0, r.y1, h);
    spec.circle = c;
    spec.disk = DiskRole::Void;
    spec.sides = sides;
    spec.fluid_void_marker = hole_marker;
    return std::move(carve_meshes(spec).fluid);
}

}  // namespace fsi
