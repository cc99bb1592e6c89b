#pragma once

/// @file assembly.hpp
/// @brief Assembly of the monolithic step system and its solution.
///
/// Unknown X = (u^n and v^n on merged velocity nodes, p^n). Fluid terms are
/// integrated on the fluid mesh at t^n, t^{n-1} (old mass) and t^{n-1/2}
/// (convection); solid terms on the reference solid mesh.

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#ifdef FSI_HAVE_UMFPACK
#include <Eigen/UmfPackSupport>
#endif

#include "fsi/ale.hpp"
#include "fsi/fe.hpp"
#include "fsi/problem.hpp"

namespace fsi {

using SpMat = Eigen::SparseMatrix<double>;
using Triplets = std::vector<Eigen::Triplet<double>>;

namespace detail {

inline void check_finite(const Eigen::VectorXd& v, const char* what) {
    if (!v.allFinite()) throw InputError(std::string("non-finite values in ") + what);
}

inline void check_finite(std::span<const Vec2> v, const char* what) {
    for (const auto& x : v)
        if (!x.allFinite()) throw InputError(std::string("non-finite values in ") + what);
}

}  // namespace detail

/// Fluid part of the step: mass, convection with Temam term, viscous stress,
/// pressure coupling, gravity and the old-mesh mass on the right-hand side.
inline void assemble_fluid(const FsiProblem& pb, const SystemState& prev, const AleFrame& frame,
                           double t_new, Triplets& A, Eigen::VectorXd& b) {
    const Mesh& m = pb.fluid();
    const DofMap& dm = pb.dofs();
    if (frame.size() != m.num_grid_points()) throw InputError("frame does not match the fluid mesh");
    (void)t_new;
    const auto& tab = ElementTables::get(pb.quad_degree);
    const double rho = pb.fluid_params().rho, nu = pb.fluid_params().nu, dt = frame.dt();
    const Vec2 g = pb.forcing().g_fluid;
    const auto u_prev = pb.fluid_velocity(prev.X);
    const auto& w = frame.velocity();
    const auto half = frame.half_points();
    const auto& pn = frame.new_points();
    const auto& po = frame.old_points();
    const bool conv = pb.fluid_params().convection;

    Eigen::Matrix<double, 12, 12> K;
    Eigen::Matrix<double, 3, 12> B;
    Eigen::Matrix<double, 12, 1> f;
    std::array<int, 12> vdof;
    std::array<int, 3> pdof;
    for (int j = 0; j < m.num_triangles(); ++j) {
        K.setZero();
        B.setZero();
        f.setZero();
        const auto& gi = m.tri_grid(j);
        for (int p = 0; p < 6; ++p)
            for (int c = 0; c < 2; ++c) vdof[2 * p + c] = dm.fluid_dof(gi[p], c);
        for (int r = 0; r < 3; ++r) pdof[r] = dm.pressure_dof(m.triangles()[j][r]);

        for (int k = 0; k < tab.size(); ++k) {
            const auto& phi = tab.phi[k];
            const auto& psi = tab.psi[k];
            // new mesh: mass, viscous, pressure, gravity
            const auto pg = point_geometry(m, pn, j, tab, k);
            const double wk = pg.weight;
            for (int p = 0; p < 6; ++p) {
                for (int q = 0; q < 6; ++q) {
                    const double mass = rho / dt * phi[p] * phi[q] * wk;
                    const double lap = rho * nu * pg.grad[q].dot(pg.grad[p]) * wk;
                    for (int c = 0; c < 2; ++c) {
                        K(2 * p + c, 2 * q + c) += mass + lap;
                        for (int d = 0; d < 2; ++d)
                            K(2 * p + c, 2 * q + d) += rho * nu * pg.grad[q][c] * pg.grad[p][d] * wk;
                    }
                }
                for (int c = 0; c < 2; ++c) {
                    f[2 * p + c] += rho * g[c] * phi[p] * wk;
                    for (int r = 0; r < 3; ++r) B(r, 2 * p + c) -= psi[r] * pg.grad[p][c] * wk;
                }
            }
            // old mesh: rho/dt <u^{n-1}, phi>
            const double wo = tab.rule.weights[k] * point_geometry(m, po, j, tab, k).det;
            const Vec2 uo = eval_vector(m, u_prev, j, tab, k);
            for (int p = 0; p < 6; ++p)
                for (int c = 0; c < 2; ++c) f[2 * p + c] += rho / dt * uo[c] * phi[p] * wo;
            if (!conv) continue;
            // half mesh: (a . grad) u + (div u^{n-1}/2 - div w) u, a = u^{n-1} - w
            const auto ph = point_geometry(m, half, j, tab, k);
            Vec2 a = Vec2::Zero();
            double div_u = 0.0, div_w = 0.0;
            for (int p = 0; p < 6; ++p) {
                const int i = gi[p];
                a += phi[p] * (u_prev[i] - w[i]);
                div_u += u_prev[i].dot(ph.grad[p]);
                div_w += w[i].dot(ph.grad[p]);
            }
            const double react = 0.5 * div_u - div_w;
            for (int p = 0; p < 6; ++p)
                for (int q = 0; q < 6; ++q) {
                    const double v = rho * phi[p] * (a.dot(ph.grad[q]) + react * phi[q]) * ph.weight;
                    K(2 * p, 2 * q) += v;
                    K(2 * p + 1, 2 * q + 1) += v;
                }
        }
        for (int r = 0; r < 12; ++r) {
            b[vdof[r]] += f[r];
            for (int c = 0; c < 12; ++c) A.emplace_back(vdof[r], vdof[c], K(r, c));
        }
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 12; ++c) {
                A.emplace_back(pdof[r], vdof[c], B(r, c));
                A.emplace_back(vdof[c], pdof[r], B(r, c));
            }
    }
}

/// Adds int_{Sigma2} traction . phi on the fluid mesh with the given points.
inline void add_fluid_traction(const FsiProblem& pb, std::span<const Vec2> points, double t,
                               const TractionField& traction, Eigen::VectorXd& b) {
    if (!traction) return;
    const Mesh& m = pb.fluid();
    const EdgeRule rule(pb.edge_points);
    for (const auto& be : m.boundary_edges()) {
        if (be.marker != Marker::Sigma2) continue;
        for (const auto& ep : edge_points(m, points, be.triangle, be.local_edge, rule)) {
            const Vec2 s = traction(ep.x, ep.normal, t);
            double phi[6];
            p2_basis().values(ep.xh, phi);
            for (int p = 0; p < 6; ++p)
                for (int c = 0; c < 2; ++c)
                    b[pb.dofs().fluid_dof(m.tri_grid(be.triangle)[p], c)] += s[c] * phi[p] * ep.ds;
        }
    }
}

/// Outflow condition sigma n = -p_g n with grad p_g = rho g (g constant).
inline void apply_outflow_traction(const FsiProblem& pb, std::span<const Vec2> points,
                                   const Vec2& g, Eigen::VectorXd& b) {
    add_fluid_traction(pb, points, 0.0, outflow_traction(pb.fluid_params().rho, g), b);
}

/// Solid terms that are linear in v: mass, gravity and Sigma4 traction.
inline void assemble_solid_linear(const FsiProblem& pb, const SystemState& prev, double dt,
                                  double t_new, Triplets& A, Eigen::VectorXd& b) {
    if (!pb.has_solid()) return;
    const Mesh& s = pb.solid();
    const DofMap& dm = pb.dofs();
    const auto& tab = ElementTables::get(pb.quad_degree);
    const double rho = pb.material().rho();
    const Vec2 g = pb.forcing().g_solid;
    const auto v_prev = pb.solid_velocity(prev.X);
    const auto& z = s.grid_points();
    for (int j = 0; j < s.num_triangles(); ++j) {
        const auto& gi = s.tri_grid(j);
        for (int k = 0; k < tab.size(); ++k) {
            const auto& phi = tab.phi[k];
            const double wk = tab.rule.weights[k] * point_geometry(s, z, j, tab, k).det;
            const Vec2 vo = eval_vector(s, v_prev, j, tab, k);
            for (int p = 0; p < 6; ++p) {
                for (int c = 0; c < 2; ++c)
                    b[dm.solid_dof(gi[p], c)] += (rho / dt * vo[c] + rho * g[c]) * phi[p] * wk;
                for (int q = 0; q < 6; ++q) {
                    const double mass = rho / dt * phi[p] * phi[q] * wk;
                    for (int c = 0; c < 2; ++c)
                        A.emplace_back(dm.solid_dof(gi[p], c), dm.solid_dof(gi[q], c), mass);
                }
            }
        }
    }
    if (const auto& tr = pb.forcing().solid_traction) {
        const EdgeRule rule(pb.edge_points);
        for (const auto& be : s.boundary_edges()) {
            if (be.marker != Marker::Sigma4) continue;
            for (const auto& ep : edge_points(s, z, be.triangle, be.local_edge, rule)) {
                const Vec2 f = tr(ep.x, ep.normal, t_new);
                double phi[6];
                p2_basis().values(ep.xh, phi);
                for (int p = 0; p < 6; ++p)
                    for (int c = 0; c < 2; ++c)
                        b[dm.solid_dof(s.tri_grid(be.triangle)[p], c)] += f[c] * phi[p] * ep.ds;
            }
        }
    }
}

/// Internal force <sigma(phi^n + dt v), grad psi> and its tangent
/// dt A_s(grad(phi^n + dt v); grad v, grad psi).
struct SolidStress {
    Eigen::VectorXd force;
    Triplets tangent;
};

inline SolidStress solid_stress(const FsiProblem& pb, std::span<const Vec2> phi_n,
                                std::span<const Vec2> v, double dt, bool with_tangent = true) {
    SolidStress out;
    out.force = Eigen::VectorXd::Zero(pb.dofs().size());
    if (!pb.has_solid()) return out;
    const Mesh& s = pb.solid();
    const DofMap& dm = pb.dofs();
    const MaterialModel& mat = pb.material();
    const auto& tab = ElementTables::get(pb.quad_degree);
    const auto& z = s.grid_points();
    std::vector<Vec2> position(phi_n.begin(), phi_n.end());
    if (!v.empty())
        for (std::size_t i = 0; i < position.size(); ++i) position[i] = phi_n[i] + dt * v[i];
    Eigen::Matrix<double, 12, 12> K;
    for (int j = 0; j < s.num_triangles(); ++j) {
        const auto& gi = s.tri_grid(j);
        K.setZero();
        for (int k = 0; k < tab.size(); ++k) {
            const auto pg = point_geometry(s, z, j, tab, k);
            const Mat2 F = eval_gradient(s, position, j, pg);
            const Mat2 sig = mat.stress(F);
            for (int p = 0; p < 6; ++p)
                for (int c = 0; c < 2; ++c)
                    out.force[dm.solid_dof(gi[p], c)] += sig.row(c).dot(pg.grad[p]) * pg.weight;
            if (!with_tangent) continue;
            for (int p = 0; p < 6; ++p)
                for (int c = 0; c < 2; ++c) {
                    Mat2 H = Mat2::Zero();
                    H.row(c) = pg.grad[p].transpose();
                    for (int q = 0; q < 6; ++q)
                        for (int d = 0; d < 2; ++d) {
                            Mat2 G = Mat2::Zero();
                            G.row(d) = pg.grad[q].transpose();
                            K(2 * p + c, 2 * q + d) += dt * mat.linearization(F, G, H) * pg.weight;
                        }
                }
        }
        if (!with_tangent) continue;
        for (int r = 0; r < 12; ++r)
            for (int c = 0; c < 12; ++c)
                out.tangent.emplace_back(dm.solid_dof(gi[r / 2], r % 2), dm.solid_dof(gi[c / 2], c % 2),
                                         K(r, c));
    }
    return out;
}

struct Constraints {
    std::vector<int> dofs;
    std::vector<double> values;
};

/// Sigma1 data u_b(x, t) on fluid points, v = 0 on Sigma3, pressure pin.
inline Constraints dirichlet_constraints(const FsiProblem& pb, double t) {
    const DofMap& dm = pb.dofs();
    std::vector<double> value(dm.size(), 0.0);
    std::vector<char> fixed(dm.size(), 0);
    const auto& x = pb.fluid().grid_points();
    const auto& ub = pb.forcing().inflow;
    for (int i : dm.fluid_dirichlet_points()) {
        const Vec2 u = ub ? ub(x[i], t) : Vec2::Zero();
        for (int c = 0; c < 2; ++c) {
            fixed[dm.fluid_dof(i, c)] = 1;
            value[dm.fluid_dof(i, c)] = u[c];
        }
    }
    for (int i : dm.solid_dirichlet_points())
        for (int c = 0; c < 2; ++c) {
            const int d = dm.solid_dof(i, c);
            if (fixed[d] && std::abs(value[d]) > 1e-12)
                throw InputError("inconsistent Dirichlet data where Sigma1 meets Sigma3");
            fixed[d] = 1;
            value[d] = 0.0;
        }
    if (dm.pressure_pinned()) fixed[dm.pressure_dof(0)] = 1;
    Constraints cs;
    for (int d = 0; d < dm.size(); ++d)
        if (fixed[d]) {
            cs.dofs.push_back(d);
            cs.values.push_back(value[d]);
        }
    return cs;
}

/// Symmetric elimination: constrained columns move to the right-hand side,
/// constrained rows and columns keep only a unit diagonal.
inline SpMat eliminate_dirichlet(const Triplets& A, Eigen::VectorXd& b, const Constraints& cs,
                                 int n) {
    std::vector<char> fixed(n, 0);
    std::vector<double> g(n, 0.0);
    for (std::size_t k = 0; k < cs.dofs.size(); ++k) {
        fixed[cs.dofs[k]] = 1;
        g[cs.dofs[k]] = cs.values[k];
    }
    Triplets kept;
    kept.reserve(A.size() + cs.dofs.size());
    for (const auto& t : A) {
        if (fixed[t.row()]) continue;
        if (fixed[t.col()]) {
            b[t.row()] -= t.value() * g[t.col()];
            continue;
        }
        kept.push_back(t);
    }
    for (int d : cs.dofs) {
        kept.emplace_back(d, d, 1.0);
        b[d] = g[d];
    }
    SpMat M(n, n);
    M.setFromTriplets(kept.begin(), kept.end());
    return M;
}

/// Sparse direct solver; the symbolic analysis is reused while the pattern
/// stays the same.
class LinearSolver {
public:
    Eigen::VectorXd solve(const SpMat& A, const Eigen::VectorXd& b) {
        if (A.rows() != A.cols() || A.rows() != b.size())
            throw InputError("solve_linear: dimension mismatch");
        if (b.size() == 0) return b;
        if (!same_pattern(A)) {
            lu_.analyzePattern(A);
            pattern_outer_.assign(A.outerIndexPtr(), A.outerIndexPtr() + A.outerSize() + 1);
            pattern_inner_.assign(A.innerIndexPtr(), A.innerIndexPtr() + A.nonZeros());
        }
        lu_.factorize(A);
        if (lu_.info() != Eigen::Success) {
            std::ostringstream os;
            os << "sparse LU factorization failed (n = " << A.rows() << ", nnz = " << A.nonZeros()
               << ")";
#ifdef FSI_HAVE_UMFPACK
            os << ": umfpack status " << lu_.umfpackFactorizeReturncode();
#else
            os << ": " << lu_.lastErrorMessage();
#endif
            throw SolverError(os.str());
        }
        Eigen::VectorXd x = lu_.solve(b);
        const double bn = b.norm();
        last_residual_ = (A * x - b).norm();
        if (!x.allFinite() || last_residual_ > 1e-10 * std::max(bn, 1e-300))
            if (bn > 0.0 || !x.allFinite())
                throw SolverError("linear solve residual " + std::to_string(last_residual_) +
                                  " exceeds 1e-10 |b| = " + std::to_string(1e-10 * bn) +
                                  " (matrix singular or ill-conditioned)");
        last_relative_ = bn > 0.0 ? last_residual_ / bn : 0.0;
        return x;
    }

    double last_residual() const { return last_residual_; }
    double last_relative_residual() const { return last_relative_; }

private:
    bool same_pattern(const SpMat& A) const {
        if (pattern_outer_.size() != static_cast<std::size_t>(A.outerSize() + 1)) return false;
        if (pattern_inner_.size() != static_cast<std::size_t>(A.nonZeros())) return false;
        return std::equal(pattern_outer_.begin(), pattern_outer_.end(), A.outerIndexPtr()) &&
               std::equal(pattern_inner_.begin(), pattern_inner_.end(), A.innerIndexPtr());
    }

#ifdef FSI_HAVE_UMFPACK
    Eigen::UmfPackLU<SpMat> lu_;
#else
    Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu_;
#endif
    std::vector<int> pattern_outer_, pattern_inner_;
    double last_residual_ = 0.0;
    double last_relative_ = 0.0;
};

inline Eigen::VectorXd solve_linear(const SpMat& A, const Eigen::VectorXd& b) {
    LinearSolver s;
    return s.solve(A, b);
}

/// The terms of one step that do not depend on the solid stress.
struct LinearPart {
    Triplets A;
    Eigen::VectorXd b;
    Constraints bc;
    int n = 0;
};

inline LinearPart assemble_linear_part(const FsiProblem& pb, const SystemState& prev,
                                       const AleFrame& frame, double t_new) {
    detail::check_finite(prev.X, "previous state");
    detail::check_finite(frame.new_points(), "frame");
    LinearPart lp;
    lp.n = pb.dofs().size();
    lp.b = Eigen::VectorXd::Zero(lp.n);
    assemble_fluid(pb, prev, frame, t_new, lp.A, lp.b);
    add_fluid_traction(pb, frame.new_points(), t_new, pb.forcing().fluid_traction, lp.b);
    assemble_solid_linear(pb, prev, frame.dt(), t_new, lp.A, lp.b);
    lp.bc = dirichlet_constraints(pb, t_new);
    return lp;
}

/// Semi-implicit step system with Dirichlet conditions eliminated.
struct StepSystem {
    SpMat A;
    Eigen::VectorXd b;
};

inline StepSystem assemble_step(const FsiProblem& pb, const SystemState& prev,
                                const AleFrame& frame, std::span<const Vec2> phi_n, double t_new) {
    LinearPart lp = assemble_linear_part(pb, prev, frame, t_new);
    StepSystem sys;
    sys.b = lp.b;
    if (pb.has_solid()) {
        detail::check_finite(phi_n, "solid positions");
        SolidStress st = solid_stress(pb, phi_n, {}, frame.dt());
        sys.b -= st.force;
        lp.A.insert(lp.A.end(), st.tangent.begin(), st.tangent.end());
    }
    sys.A = eliminate_dirichlet(lp.A, sys.b, lp.bc, lp.n);
    return sys;
}

struct NewtonResult {
    Eigen::VectorXd X;
    int iterations = 0;
    double residual = 0.0;
};

/// Implicit solid update sigma(phi^n + dt v^n) by Newton's method with
/// backtracking, started from v = 0 so the first full step is the
/// semi-implicit solution. Stops when the residual, relative to the first
/// one, drops below tol.
inline NewtonResult newton_solid_step(const FsiProblem& pb, const SystemState& prev,
                                      const AleFrame& frame, std::span<const Vec2> phi_n,
                                      double t_new, double tol, LinearSolver& solver,
                                      int max_iter = 25) {
    LinearPart lp = assemble_linear_part(pb, prev, frame, t_new);
    SpMat Alin(lp.n, lp.n);
    Alin.setFromTriplets(lp.A.begin(), lp.A.end());
    std::vector<char> fixed(lp.n, 0);
    for (int d : lp.bc.dofs) fixed[d] = 1;
    const Constraints zero{lp.bc.dofs, std::vector<double>(lp.bc.dofs.size(), 0.0)};
    auto residual = [&](const Eigen::VectorXd& X) {
        Eigen::VectorXd r =
            lp.b - Alin * X - solid_stress(pb, phi_n, pb.solid_velocity(X), frame.dt(), false).force;
        for (int d = 0; d < lp.n; ++d)
            if (fixed[d]) r[d] = 0.0;
        return r;
    };

    NewtonResult res;
    res.X = Eigen::VectorXd::Zero(lp.n);
    for (std::size_t k = 0; k < lp.bc.dofs.size(); ++k) res.X[lp.bc.dofs[k]] = lp.bc.values[k];
    Eigen::VectorXd r = residual(res.X);
    const double r0 = std::max(r.norm(), 1e-300);
    const double floor = 1e-14 * std::max(1.0, lp.b.norm());
    res.residual = r.norm();
    if (res.residual <= floor) return res;
    for (int it = 1; it <= max_iter; ++it) {
        SolidStress st = solid_stress(pb, phi_n, pb.solid_velocity(res.X), frame.dt());
        Triplets J = lp.A;
        J.insert(J.end(), st.tangent.begin(), st.tangent.end());
        Eigen::VectorXd rhs = r;
        const SpMat Jm = eliminate_dirichlet(J, rhs, zero, lp.n);
        const Eigen::VectorXd dx = solver.solve(Jm, rhs);
        double alpha = 1.0;
        Eigen::VectorXd Xt, rt;
        for (int ls = 0; ls < 12; ++ls, alpha *= 0.5) {
            Xt = res.X + alpha * dx;
            rt = residual(Xt);
            if (rt.allFinite() && rt.norm() < (1.0 - 1e-4 * alpha) * r.norm()) break;
        }
        res.X = std::move(Xt);
        r = std::move(rt);
        res.iterations = it;
        res.residual = r.norm();
        if (res.residual <= tol * r0 || res.residual <= floor) return res;
        // corrections at roundoff level: the residual cannot drop further
        if (alpha * dx.norm() <= 1e-13 * std::max(1.0, res.X.norm())) return res;
    }
    throw SolverError("Newton solid step did not converge in " + std::to_string(max_iter) +
                      " iterations (residual " + std::to_string(res.residual) + ")");
}

/// max_q |<div u, q>| on the fluid mesh with the given points.
inline double divergence_defect(const FsiProblem& pb, std::span<const Vec2> points,
                                const Eigen::VectorXd& X) {
    const Mesh& m = pb.fluid();
    const auto& tab = ElementTables::get(pb.quad_degree);
    const auto u = pb.fluid_velocity(X);
    std::vector<double> r(m.num_vertices(), 0.0);
    for (int j = 0; j < m.num_triangles(); ++j)
        for (int k = 0; k < tab.size(); ++k) {
            const auto pg = point_geometry(m, points, j, tab, k);
            const double div = eval_gradient(m, u, j, pg).trace();
            for (int a = 0; a < 3; ++a) r[m.triangles()[j][a]] += tab.psi[k][a] * div * pg.weight;
        }
    double mx = 0.0;
    for (double v : r) mx = std::max(mx, std::abs(v));
    return mx;
}

}  // namespace fsi
