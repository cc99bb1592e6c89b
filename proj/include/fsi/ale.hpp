#pragma once

/// @file ale.hpp
/// @brief Fluid mesh motion between time levels and the ALE frame.

#include <algorithm>
#include <span>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "fsi/error.hpp"
#include "fsi/fe.hpp"
#include "fsi/mesh.hpp"

namespace fsi {

/// phi^n = phi^{n-1} + dt v^{n-1}, pointwise on solid grid points.
inline std::vector<Vec2> advance_interface(std::span<const Vec2> phi_prev,
                                           std::span<const Vec2> v_prev, double dt) {
    if (phi_prev.size() != v_prev.size())
        throw InputError("advance_interface: size mismatch");
    std::vector<Vec2> out(phi_prev.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = phi_prev[i] + dt * v_prev[i];
    return out;
}

/// mu = lambda = 1 + (max|T| - min|T|)/|T_j| with max/min over the whole mesh.
inline std::vector<double> stiffening_coefficients(const Mesh& mesh) {
    std::vector<double> area(mesh.num_triangles());
    for (int j = 0; j < mesh.num_triangles(); ++j) {
        const auto& t = mesh.triangles()[j];
        const Vec2 a = mesh.vertices()[t[0]], b = mesh.vertices()[t[1]], c = mesh.vertices()[t[2]];
        area[j] = 0.5 * ((b - a).x() * (c - a).y() - (b - a).y() * (c - a).x());
    }
    const auto [lo, hi] = std::minmax_element(area.begin(), area.end());
    const double spread = *hi - *lo;
    std::vector<double> c(area.size());
    for (std::size_t j = 0; j < area.size(); ++j) c[j] = 1.0 + spread / area[j];
    return c;
}

/// P1 elasticity on the initial fluid mesh with stiffened small elements.
/// Factorized once; each solve only changes the boundary data.
class MeshMotionOperator {
public:
    using SpMat = Eigen::SparseMatrix<double>;

    explicit MeshMotionOperator(const Mesh& fluid0) : mesh_(&fluid0) {
        const int nv = fluid0.num_vertices();
        std::vector<char> on_boundary(nv, 0);
        for (const auto& be : fluid0.boundary_edges()) {
            const auto& t = fluid0.triangles()[be.triangle];
            on_boundary[t[be.local_edge]] = 1;
            on_boundary[t[(be.local_edge + 1) % 3]] = 1;
        }
        slot_.assign(nv, -1);
        int ni = 0, nb = 0;
        for (int i = 0; i < nv; ++i) slot_[i] = on_boundary[i] ? nb++ : ni++;
        boundary_ = on_boundary;
        ninterior_ = ni;

        coef_ = stiffening_coefficients(fluid0);
        std::vector<Eigen::Triplet<double>> full;
        for (int j = 0; j < fluid0.num_triangles(); ++j) {
            const auto& t = fluid0.triangles()[j];
            const Vec2 a = fluid0.vertices()[t[0]], b = fluid0.vertices()[t[1]],
                       c = fluid0.vertices()[t[2]];
            const double area = 0.5 * ((b - a).x() * (c - a).y() - (b - a).y() * (c - a).x());
            // P1 gradients
            std::array<Vec2, 3> g{Vec2(b.y() - c.y(), c.x() - b.x()), Vec2(c.y() - a.y(), a.x() - c.x()),
                                  Vec2(a.y() - b.y(), b.x() - a.x())};
            for (auto& v : g) v /= 2.0 * area;
            const double mu = coef_[j], lam = coef_[j];
            for (int ip = 0; ip < 3; ++ip)
                for (int c1 = 0; c1 < 2; ++c1)
                    for (int jp = 0; jp < 3; ++jp)
                        for (int d = 0; d < 2; ++d) {
                            double k = mu * ((c1 == d ? g[jp].dot(g[ip]) : 0.0) + g[jp][c1] * g[ip][d]) +
                                       lam * g[jp][d] * g[ip][c1];
                            full.emplace_back(2 * t[ip] + c1, 2 * t[jp] + d, k * area);
                        }
        }
        K_.resize(2 * nv, 2 * nv);
        K_.setFromTriplets(full.begin(), full.end());

        std::vector<Eigen::Triplet<double>> tii, tib;
        for (int r = 0; r < K_.outerSize(); ++r)
            for (SpMat::InnerIterator it(K_, r); it; ++it) {
                const int row = static_cast<int>(it.row()), col = static_cast<int>(it.col());
                if (boundary_[row / 2]) continue;
                const int ri = 2 * slot_[row / 2] + row % 2;
                if (boundary_[col / 2])
                    tib.emplace_back(ri, 2 * slot_[col / 2] + col % 2, it.value());
                else
                    tii.emplace_back(ri, 2 * slot_[col / 2] + col % 2, it.value());
            }
        Kii_.resize(2 * ni, 2 * ni);
        Kii_.setFromTriplets(tii.begin(), tii.end());
        Kib_.resize(2 * ni, 2 * nb);
        Kib_.setFromTriplets(tib.begin(), tib.end());
        if (ni > 0) {
            solver_.compute(Kii_);
            if (solver_.info() != Eigen::Success)
                throw SolverError("mesh motion: factorization of the interior block failed");
        }
    }

    const Mesh& mesh() const { return *mesh_; }
    const SpMat& stiffness() const { return K_; }
    const std::vector<double>& coefficients() const { return coef_; }
    bool is_boundary_vertex(int v) const { return boundary_[v] != 0; }

    /// Vertex positions from boundary-vertex targets (entries of interior
    /// vertices in `boundary_positions` are ignored).
    std::vector<Vec2> solve_vertices(std::span<const Vec2> boundary_positions) const {
        const auto& v0 = mesh_->vertices();
        const int nv = static_cast<int>(v0.size());
        if (static_cast<int>(boundary_positions.size()) != nv)
            throw InputError("mesh motion: expected one position per vertex");
        Eigen::VectorXd db = Eigen::VectorXd::Zero(Kib_.cols());
        for (int i = 0; i < nv; ++i)
            if (boundary_[i]) {
                const Vec2 d = boundary_positions[i] - v0[i];
                db[2 * slot_[i]] = d.x();
                db[2 * slot_[i] + 1] = d.y();
            }
        std::vector<Vec2> out(v0.begin(), v0.end());
        Eigen::VectorXd di;
        if (ninterior_ > 0) {
            di = solver_.solve(-(Kib_ * db));
            if (solver_.info() != Eigen::Success) throw SolverError("mesh motion: solve failed");
        }
        for (int i = 0; i < nv; ++i) {
            if (boundary_[i])
                out[i] = boundary_positions[i];
            else
                out[i] = v0[i] + Vec2(di[2 * slot_[i]], di[2 * slot_[i] + 1]);
        }
        return out;
    }

private:
    const Mesh* mesh_;
    std::vector<double> coef_;
    std::vector<char> boundary_;
    std::vector<int> slot_;
    int ninterior_ = 0;
    SpMat K_, Kii_, Kib_;
    Eigen::SimplicialLDLT<SpMat> solver_;
};

/// New fluid grid points: interface grid points (vertices and mid-edge
/// points) placed at the given targets, other boundary points fixed, interior
/// vertices from the elasticity solve, interior mid-edge points straight.
inline std::vector<Vec2> move_fluid_mesh(const MeshMotionOperator& op,
                                         std::span<const int> interface_points,
                                         std::span<const Vec2> targets) {
    const Mesh& m = op.mesh();
    if (interface_points.size() != targets.size())
        throw InputError("move_fluid_mesh: size mismatch");
    const int nv = m.num_vertices();
    std::vector<Vec2> bpos(m.vertices().begin(), m.vertices().end());
    for (std::size_t k = 0; k < interface_points.size(); ++k) {
        const int i = interface_points[k];
        if (i < 0 || i >= m.num_grid_points()) throw InputError("move_fluid_mesh: bad grid point");
        if (i < nv) {
            if (!op.is_boundary_vertex(i))
                throw InputError("move_fluid_mesh: interface target on interior vertex");
            bpos[i] = targets[k];
        }
    }
    const auto verts = op.solve_vertices(bpos);
    std::vector<Vec2> pts = m.grid_points();
    for (int i = 0; i < nv; ++i) pts[i] = verts[i];
    for (int e = 0; e < m.num_edges(); ++e)
        if (m.edge_triangles(e)[1] >= 0) {
            const auto [a, b] = m.edge_vertices(e);
            pts[m.edge_grid_point(e)] = 0.5 * (verts[a] + verts[b]);
        }
    for (std::size_t k = 0; k < interface_points.size(); ++k) pts[interface_points[k]] = targets[k];
    check_jacobians(m, pts, "fluid mesh at new time level");
    return pts;
}

/// Grid points at t^{n-1} and t^n with the mesh velocity of the step.
class AleFrame {
public:
    AleFrame(std::vector<Vec2> old_points, std::vector<Vec2> new_points, double dt)
        : old_(std::move(old_points)), new_(std::move(new_points)), dt_(dt) {
        validate();
        w_.resize(old_.size());
        for (std::size_t i = 0; i < old_.size(); ++i) w_[i] = (new_[i] - old_[i]) / dt_;
    }

    /// Frame whose velocity is given exactly on some points; those points
    /// are moved to old + dt w so the two descriptions agree bitwise.
    AleFrame(std::vector<Vec2> old_points, std::vector<Vec2> new_points, double dt,
             std::span<const int> exact_points, std::span<const Vec2> exact_velocity)
        : AleFrame(std::move(old_points), std::move(new_points), dt) {
        if (exact_points.size() != exact_velocity.size())
            throw InputError("AleFrame: size mismatch");
        for (std::size_t k = 0; k < exact_points.size(); ++k) {
            const int i = exact_points[k];
            w_[i] = exact_velocity[k];
            new_[i] = old_[i] + dt_ * w_[i];
        }
    }

    double dt() const { return dt_; }
    int size() const { return static_cast<int>(old_.size()); }
    const std::vector<Vec2>& old_points() const { return old_; }
    const std::vector<Vec2>& new_points() const { return new_; }
    const std::vector<Vec2>& velocity() const { return w_; }

    /// Points at t^{n-1} + s dt for s in [0, 1].
    std::vector<Vec2> points_at(double s) const {
        if (s == 0.0) return old_;
        if (s == 1.0) return new_;
        std::vector<Vec2> p(old_.size());
        for (std::size_t i = 0; i < p.size(); ++i) p[i] = old_[i] + s * (new_[i] - old_[i]);
        return p;
    }

    std::vector<Vec2> half_points() const { return points_at(0.5); }

private:
    void validate() const {
        if (old_.size() != new_.size()) throw InputError("AleFrame: point counts differ");
        if (!(dt_ > 0.0)) throw InputError("AleFrame: dt must be positive");
    }

    std::vector<Vec2> old_, new_, w_;
    double dt_;
};

/// Frame with Jacobian checks on the new and the half-step mesh.
inline AleFrame build_frame(const Mesh& mesh, std::vector<Vec2> old_points,
                            std::vector<Vec2> new_points, double dt) {
    if (static_cast<int>(old_points.size()) != mesh.num_grid_points())
        throw InputError("build_frame: point count does not match the mesh");
    AleFrame f(std::move(old_points), std::move(new_points), dt);
    check_jacobians(mesh, f.new_points(), "mesh at t^n");
    check_jacobians(mesh, f.half_points(), "mesh at t^{n-1/2}");
    return f;
}

inline const std::vector<Vec2>& mesh_velocity(const AleFrame& f) { return f.velocity(); }

namespace detail {

template <class Integrand>
double gcl_defect(const Mesh& mesh, const AleFrame& frame, int degree, Integrand f) {
    const auto& tab = ElementTables::get(degree);
    const auto half = frame.half_points();
    const auto& w = frame.velocity();
    double now = 0.0, before = 0.0, flux = 0.0;
    for (int j = 0; j < mesh.num_triangles(); ++j)
        for (int k = 0; k < tab.size(); ++k) {
            const double v = f(j, k);
            now += point_geometry(mesh, frame.new_points(), j, tab, k).weight * v;
            before += point_geometry(mesh, frame.old_points(), j, tab, k).weight * v;
            const auto pg = point_geometry(mesh, half, j, tab, k);
            double divw = 0.0;
            for (int p = 0; p < 6; ++p) divw += w[mesh.tri_grid(j)[p]].dot(pg.grad[p]);
            flux += pg.weight * v * divw;
        }
    return std::abs(now - before - frame.dt() * flux);
}

}  // namespace detail

/// |int_{t^n} f - int_{t^{n-1}} f - dt int_{t^{n-1/2}} f div w| for frozen coefficients.
inline double gcl_residual(const Mesh& mesh, const AleFrame& frame, std::span<const double> f,
                           int degree = default_quad_degree(2)) {
    if (static_cast<int>(f.size()) != mesh.num_grid_points())
        throw InputError("gcl_residual: coefficient count mismatch");
    const auto& tab = ElementTables::get(degree);
    return detail::gcl_defect(mesh, frame, degree,
                              [&](int j, int k) { return eval_scalar(mesh, f, j, tab, k); });
}

/// Same identity with the integrand |u|^2 of a vector field.
inline double gcl_residual_squared(const Mesh& mesh, const AleFrame& frame,
                                   std::span<const Vec2> u, int degree = default_quad_degree(2)) {
    if (static_cast<int>(u.size()) != mesh.num_grid_points())
        throw InputError("gcl_residual: coefficient count mismatch");
    const auto& tab = ElementTables::get(degree);
    return detail::gcl_defect(mesh, frame, degree,
                              [&](int j, int k) { return eval_vector(mesh, u, j, tab, k).squaredNorm(); });
}

}  // namespace fsi
