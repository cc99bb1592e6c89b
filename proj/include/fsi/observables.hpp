#pragma once

/// @file observables.hpp
/// @brief Forces on immersed bodies, material-point traces and field norms.

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "fsi/fe.hpp"
#include "fsi/problem.hpp"

namespace fsi {

/// Fluid boundary edges (triangle, local edge) forming the body surface.
struct TractionProbe {
    std::vector<std::pair<int, int>> edges;
    double scale = 1000.0;
};

struct Force {
    double drag = 0.0;
    double lift = 0.0;
};

/// scale * int_S sigma_f n ds on the given fluid points, n pointing out of the body.
inline Force lift_drag(const FsiProblem& pb, std::span<const Vec2> points, const Eigen::VectorXd& X,
                       const TractionProbe& probe, int edge_points_per_edge = 4) {
    const Mesh& m = pb.fluid();
    std::set<std::pair<int, int>> bnd;
    for (const auto& be : m.boundary_edges()) bnd.emplace(be.triangle, be.local_edge);
    const auto u = pb.fluid_velocity(X);
    const auto p = pb.pressure(X);
    const double mu = pb.fluid_params().rho * pb.fluid_params().nu;
    const EdgeRule rule(edge_points_per_edge);
    const RefBasis p1(1);
    Vec2 f = Vec2::Zero();
    for (const auto& [j, k] : probe.edges) {
        if (j < 0 || j >= m.num_triangles() || k < 0 || k > 2 || !bnd.count({j, k}))
            throw InputError("traction probe edge is not on the fluid boundary");
        for (const auto& ep : edge_points(m, points, j, k, rule)) {
            const auto [pg, v] = point_geometry_at(m, points, j, ep.xh);
            const Mat2 G = eval_gradient(m, u, j, pg);
            double q[3];
            p1.values(ep.xh, q);
            double pr = 0.0;
            for (int a = 0; a < 3; ++a) pr += q[a] * p[m.triangles()[j][a]];
            const Mat2 sigma = mu * (G + G.transpose()) - pr * Mat2::Identity();
            f += sigma * (-ep.normal) * ep.ds;
        }
    }
    return {probe.scale * f.x(), probe.scale * f.y()};
}

inline Force lift_drag(const FsiProblem& pb, const SystemState& s, const TractionProbe& probe) {
    return lift_drag(pb, s.fluid_points, s.X, probe);
}

/// A material point of the reference solid, located once.
class MaterialPoint {
public:
    MaterialPoint(const Mesh& solid, const Vec2& z) : mesh_(&solid), z_(z) {
        const auto loc = locate_point(solid, solid.grid_points(), z, 1e-9);
        if (!loc) throw InputError("material point lies outside the solid");
        tri_ = loc->first;
        p2_basis().values(loc->second, w_.data());
    }

    const Vec2& reference() const { return z_; }

    Vec2 position(std::span<const Vec2> phi) const {
        if (phi.size() != static_cast<std::size_t>(mesh_->num_grid_points()))
            throw InputError("solid positions do not match the solid mesh");
        Vec2 x = Vec2::Zero();
        for (int p = 0; p < 6; ++p) x += w_[p] * phi[mesh_->tri_grid(tri_)[p]];
        return x;
    }

    Vec2 displacement(std::span<const Vec2> phi) const { return position(phi) - z_; }

private:
    const Mesh* mesh_;
    Vec2 z_;
    int tri_ = -1;
    std::array<double, 6> w_{};
};

inline Vec2 tail_displacement(const Mesh& solid, std::span<const Vec2> phi, const Vec2& z) {
    return MaterialPoint(solid, z).displacement(phi);
}

struct NormSet {
    double l2 = 0.0;
    double linf = 0.0;
    double grad_l2 = 0.0;
    double grad_linf = 0.0;
};

struct FieldNorms {
    std::array<NormSet, 2> component;
    NormSet vector;
};

/// Norms of a - b; L-infinity variants are maxima over grid and quadrature points.
inline FieldNorms field_norms(const Mesh& mesh, std::span<const Vec2> a, std::span<const Vec2> b,
                              int degree = default_quad_degree(2)) {
    const std::size_t n = mesh.num_grid_points();
    if (a.size() != n || b.size() != n) throw InputError("field_norms: coefficient length mismatch");
    std::vector<Vec2> d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = a[i] - b[i];
    FieldNorms out;
    for (const auto& x : d) {
        for (int c = 0; c < 2; ++c)
            out.component[c].linf = std::max(out.component[c].linf, std::abs(x[c]));
        out.vector.linf = std::max(out.vector.linf, x.norm());
    }
    const auto& tab = ElementTables::get(degree);
    const auto& z = mesh.grid_points();
    for (int j = 0; j < mesh.num_triangles(); ++j)
        for (int k = 0; k < tab.size(); ++k) {
            const auto pg = point_geometry(mesh, z, j, tab, k);
            const Vec2 v = eval_vector(mesh, d, j, tab, k);
            const Mat2 G = eval_gradient(mesh, d, j, pg);
            for (int c = 0; c < 2; ++c) {
                auto& s = out.component[c];
                s.l2 += v[c] * v[c] * pg.weight;
                s.linf = std::max(s.linf, std::abs(v[c]));
                s.grad_l2 += G.row(c).squaredNorm() * pg.weight;
                s.grad_linf = std::max(s.grad_linf, G.row(c).norm());
            }
            out.vector.l2 += v.squaredNorm() * pg.weight;
            out.vector.linf = std::max(out.vector.linf, v.norm());
            out.vector.grad_l2 += G.squaredNorm() * pg.weight;
            out.vector.grad_linf = std::max(out.vector.grad_linf, G.norm());
        }
    for (auto* s : {&out.component[0], &out.component[1], &out.vector}) {
        s->l2 = std::sqrt(s->l2);
        s->grad_l2 = std::sqrt(s->grad_l2);
    }
    return out;
}

}  // namespace fsi
