#pragma once

/// @file problem.hpp
/// @brief Degrees of freedom, system state and the coupled problem definition.
///
/// Velocity unknowns live on "nodes": every fluid grid point is a node, every
/// solid grid point is a node, except that a solid interface point reuses the
/// node of its fluid partner. Pressure unknowns follow on the fluid vertices.

#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "fsi/ale.hpp"
#include "fsi/error.hpp"
#include "fsi/materials.hpp"
#include "fsi/mesh.hpp"

namespace fsi {

using VectorField = std::function<Vec2(const Vec2& x, double t)>;
using TractionField = std::function<Vec2(const Vec2& x, const Vec2& normal, double t)>;

struct FluidParams {
    double rho = 1.0;
    double nu = 1.0;
    bool convection = true;
};

struct Forcing {
    Vec2 g_fluid = Vec2::Zero();
    Vec2 g_solid = Vec2::Zero();
    VectorField inflow;             // u_b on Sigma1; empty means zero
    TractionField fluid_traction;   // on Sigma2 at the current configuration
    TractionField solid_traction;   // on Sigma4 in the reference configuration
};

/// sigma_b = -p_g n with p_g(x) = rho g . x, so grad p_g = rho g.
inline TractionField outflow_traction(double rho, const Vec2& g) {
    return [rho, g](const Vec2& x, const Vec2& n, double) -> Vec2 { return -(rho * g.dot(x)) * n; };
}

enum class SolidUpdate { SemiImplicit, Implicit };

class DofMap {
public:
    DofMap() = default;

    DofMap(const Mesh& fluid, const Mesh* solid, std::span<const std::pair<int, int>> pairs) {
        const int gf = fluid.num_grid_points();
        const int gs = solid ? solid->num_grid_points() : 0;
        fluid_node_.resize(gf);
        for (int i = 0; i < gf; ++i) fluid_node_[i] = i;
        int next = gf;

        const auto fi = fluid.grid_points_with_marker(Marker::Interface);
        const std::set<int> f_iface(fi.begin(), fi.end());
        std::set<int> s_iface;
        if (solid) {
            const auto si = solid->grid_points_with_marker(Marker::Interface);
            s_iface.insert(si.begin(), si.end());
        }
        solid_node_.assign(gs, -1);
        std::set<int> seen_f;
        for (const auto& [f, s] : pairs) {
            if (!solid) throw InputError("dof map: interface pairs given without a solid mesh");
            if (f < 0 || f >= gf || s < 0 || s >= gs)
                throw InputError("dof map: interface pair out of range");
            if (!f_iface.count(f) || !s_iface.count(s))
                throw InputError("dof map: paired point is not on an Interface edge");
            if (!seen_f.insert(f).second || solid_node_[s] != -1)
                throw InputError("dof map: grid point claimed by two interface pairs");
            solid_node_[s] = fluid_node_[f];
            iface_fluid_.push_back(f);
            iface_solid_.push_back(s);
        }
        for (int f : f_iface)
            if (!seen_f.count(f)) throw InputError("dof map: unmatched fluid interface point");
        for (int s : s_iface)
            if (solid_node_[s] == -1) throw InputError("dof map: unmatched solid interface point");
        for (int s = 0; s < gs; ++s)
            if (solid_node_[s] == -1) solid_node_[s] = next++;
        nodes_ = next;
        npressure_ = fluid.num_vertices();

        fluid_dirichlet_ = fluid.grid_points_with_marker(Marker::Sigma1);
        if (solid) solid_dirichlet_ = solid->grid_points_with_marker(Marker::Sigma3);
        const bool has_outflow = fluid.has_marker(Marker::Sigma2);
        // without traction boundary and without a solid the pressure is only
        // defined up to a constant
        pin_pressure_ = !has_outflow && pairs.empty();
    }

    int num_nodes() const { return nodes_; }
    int num_velocity_dofs() const { return 2 * nodes_; }
    int num_pressure_dofs() const { return npressure_; }
    int size() const { return 2 * nodes_ + npressure_; }

    int fluid_node(int gp) const { return fluid_node_[gp]; }
    int solid_node(int gp) const { return solid_node_[gp]; }
    int velocity_dof(int node, int c) const { return 2 * node + c; }
    int fluid_dof(int gp, int c) const { return 2 * fluid_node_[gp] + c; }
    int solid_dof(int gp, int c) const { return 2 * solid_node_[gp] + c; }
    int pressure_dof(int vertex) const { return 2 * nodes_ + vertex; }

    const std::vector<int>& interface_fluid_points() const { return iface_fluid_; }
    const std::vector<int>& interface_solid_points() const { return iface_solid_; }
    const std::vector<int>& fluid_dirichlet_points() const { return fluid_dirichlet_; }
    const std::vector<int>& solid_dirichlet_points() const { return solid_dirichlet_; }
    bool pressure_pinned() const { return pin_pressure_; }

private:
    std::vector<int> fluid_node_, solid_node_;
    std::vector<int> iface_fluid_, iface_solid_;
    std::vector<int> fluid_dirichlet_, solid_dirichlet_;
    int nodes_ = 0;
    int npressure_ = 0;
    bool pin_pressure_ = false;
};

inline DofMap build_dof_map(const Mesh& fluid, const Mesh* solid,
                            std::span<const std::pair<int, int>> pairs) {
    return DofMap(fluid, solid, pairs);
}

/// Solution at one time level.
struct SystemState {
    int step = 0;
    double t = 0.0;
    Eigen::VectorXd X;               // merged velocities, then pressure
    std::vector<Vec2> fluid_points;  // fluid grid points at this level
    std::vector<Vec2> phi;           // solid positions per solid grid point
};

/// The coupled problem: meshes, dofs, parameters and the mesh-motion operator.
class FsiProblem {
public:
    FsiProblem(Mesh fluid, std::optional<Mesh> solid, std::vector<std::pair<int, int>> pairs,
               FluidParams fluid_params, std::optional<MaterialModel> material, Forcing forcing)
        : fluid_(std::make_unique<Mesh>(std::move(fluid))),
          solid_(solid ? std::make_unique<Mesh>(std::move(*solid)) : nullptr),
          pairs_(std::move(pairs)),
          fluid_params_(fluid_params),
          material_(std::move(material)),
          forcing_(std::move(forcing)) {
        if (!(fluid_params_.rho > 0.0) || !(fluid_params_.nu > 0.0))
            throw InputError("fluid density and viscosity must be positive");
        if (solid_ && !material_) throw InputError("solid mesh given without a material");
        dofs_ = DofMap(*fluid_, solid_.get(), pairs_);
        motion_ = std::make_unique<MeshMotionOperator>(*fluid_);
    }

    FsiProblem(const FsiProblem&) = delete;
    FsiProblem& operator=(const FsiProblem&) = delete;
    FsiProblem(FsiProblem&&) = default;
    FsiProblem& operator=(FsiProblem&&) = default;

    const Mesh& fluid() const { return *fluid_; }
    bool has_solid() const { return solid_ != nullptr; }
    const Mesh& solid() const {
        if (!solid_) throw Error("problem has no solid");
        return *solid_;
    }
    const std::vector<std::pair<int, int>>& interface_pairs() const { return pairs_; }
    const DofMap& dofs() const { return dofs_; }
    const FluidParams& fluid_params() const { return fluid_params_; }
    const MaterialModel& material() const {
        if (!material_) throw Error("problem has no material");
        return *material_;
    }
    const Forcing& forcing() const { return forcing_; }
    Forcing& forcing() { return forcing_; }
    const MeshMotionOperator& motion() const { return *motion_; }

    SolidUpdate solid_update = SolidUpdate::SemiImplicit;
    int quad_degree = default_quad_degree(2);
    int edge_points = 3;
    double newton_tol = 1e-10;
    int newton_max_iter = 25;

    /// Zero velocity and pressure on the initial configuration.
    SystemState initial_state() const {
        SystemState s;
        s.X = Eigen::VectorXd::Zero(dofs_.size());
        s.fluid_points = fluid_->grid_points();
        if (solid_) s.phi = solid_->grid_points();
        return s;
    }

    std::vector<Vec2> fluid_velocity(const Eigen::VectorXd& X) const {
        std::vector<Vec2> u(fluid_->num_grid_points());
        for (int i = 0; i < fluid_->num_grid_points(); ++i)
            u[i] = Vec2(X[dofs_.fluid_dof(i, 0)], X[dofs_.fluid_dof(i, 1)]);
        return u;
    }

    std::vector<Vec2> solid_velocity(const Eigen::VectorXd& X) const {
        if (!solid_) return {};
        std::vector<Vec2> v(solid_->num_grid_points());
        for (int i = 0; i < solid_->num_grid_points(); ++i)
            v[i] = Vec2(X[dofs_.solid_dof(i, 0)], X[dofs_.solid_dof(i, 1)]);
        return v;
    }

    std::vector<double> pressure(const Eigen::VectorXd& X) const {
        std::vector<double> p(fluid_->num_vertices());
        for (int i = 0; i < fluid_->num_vertices(); ++i) p[i] = X[dofs_.pressure_dof(i)];
        return p;
    }

    /// Sigma2 is present (traction outflow).
    bool has_outflow() const { return fluid_->has_marker(Marker::Sigma2); }

private:
    std::unique_ptr<Mesh> fluid_;
    std::unique_ptr<Mesh> solid_;
    std::vector<std::pair<int, int>> pairs_;
    FluidParams fluid_params_;
    std::optional<MaterialModel> material_;
    Forcing forcing_;
    DofMap dofs_;
    std::unique_ptr<MeshMotionOperator> motion_;
};

}  // namespace fsi
