#pragma once

/// @file stepper.hpp
/// @brief One step of the scheme, the energy ledger, the run loop and the
/// temporal convergence study.

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

#include "fsi/assembly.hpp"
#include "fsi/observables.hpp"

namespace fsi {

/// (1 - cos(pi t / 2)) / 2 for t <= 2, then 1.
inline double inflow_ramp(double t) {
    if (t <= 0.0) return 0.0;
    if (t >= 2.0) return 1.0;
    return 0.5 * (1.0 - std::cos(M_PI * t / 2.0));
}

struct StepReport {
    int step = 0;
    double t = 0.0;
    double dt = 0.0;
    double stab_residual = 0.0;
    bool monitored = false;   // stability hypotheses hold
    bool violation = false;   // monitored and residual above slack
    double min_jacobian_new = 0.0;
    double min_jacobian_half = 0.0;
    double max_mesh_velocity = 0.0;
    double solver_residual = 0.0;  // relative linear residual of the last solve
    int newton_iterations = 0;
    bool interface_exact = false;      // fluid points equal phi^n, u = v on shared nodes
    bool mesh_velocity_exact = false;  // w = u^{n-1} on the interface
    double wall_seconds = 0.0;
};

struct EnergyEntry {
    int step = 0;
    double t = 0.0;
    double kin_f = 0.0;
    double kin_s = 0.0;
    double strain = 0.0;
    double dissipation = 0.0;  // times dt
    double power = 0.0;        // times dt
    double stab_residual = 0.0;

    double total() const { return kin_f + kin_s + strain; }
};

class EnergyLedger {
public:
    void push(const EnergyEntry& e) { entries_.push_back(e); }
    const std::vector<EnergyEntry>& entries() const { return entries_; }
    const EnergyEntry& operator[](std::size_t n) const { return entries_.at(n); }
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }

    /// Largest total energy up to step n.
    double energy_scale(std::size_t n) const {
        double s = 0.0;
        for (std::size_t k = 0; k <= n && k < entries_.size(); ++k) s = std::max(s, entries_[k].total());
        return s;
    }

private:
    std::vector<EnergyEntry> entries_;
};

/// Energy terms of a state; dt enters the strain argument phi + dt v and
/// scales dissipation and power.
inline EnergyEntry compute_energy(const FsiProblem& pb, const SystemState& s, double dt) {
    EnergyEntry e;
    e.step = s.step;
    e.t = s.t;
    const auto& tab = ElementTables::get(pb.quad_degree);
    const Mesh& m = pb.fluid();
    const double rho = pb.fluid_params().rho, nu = pb.fluid_params().nu;
    const auto u = pb.fluid_velocity(s.X);
    const Vec2 gf = pb.forcing().g_fluid;
    for (int j = 0; j < m.num_triangles(); ++j)
        for (int k = 0; k < tab.size(); ++k) {
            const auto pg = point_geometry(m, s.fluid_points, j, tab, k);
            const Vec2 uk = eval_vector(m, u, j, tab, k);
            const Mat2 G = eval_gradient(m, u, j, pg);
            e.kin_f += 0.5 * rho * uk.squaredNorm() * pg.weight;
            e.dissipation += 0.5 * rho * nu * (G + G.transpose()).squaredNorm() * pg.weight;
            e.power += rho * gf.dot(uk) * pg.weight;
        }
    if (pb.has_solid()) {
        const Mesh& sm = pb.solid();
        const auto& z = sm.grid_points();
        const auto v = pb.solid_velocity(s.X);
        std::vector<Vec2> pos(s.phi.size());
        for (std::size_t i = 0; i < pos.size(); ++i) pos[i] = s.phi[i] + dt * v[i];
        const MaterialModel& mat = pb.material();
        const Vec2 gs = pb.forcing().g_solid;
        for (int j = 0; j < sm.num_triangles(); ++j)
            for (int k = 0; k < tab.size(); ++k) {
                const auto pg = point_geometry(sm, z, j, tab, k);
                const Vec2 vk = eval_vector(sm, v, j, tab, k);
                e.kin_s += 0.5 * mat.rho() * vk.squaredNorm() * pg.weight;
                e.strain += mat.strain_energy(eval_gradient(sm, pos, j, pg)) * pg.weight;
                e.power += mat.rho() * gs.dot(vk) * pg.weight;
            }
        if (const auto& tr = pb.forcing().solid_traction) {
            const EdgeRule rule(pb.edge_points);
            for (const auto& be : sm.boundary_edges()) {
                if (be.marker != Marker::Sigma4) continue;
                for (const auto& ep : edge_points(sm, z, be.triangle, be.local_edge, rule)) {
                    double phi[6];
                    p2_basis().values(ep.xh, phi);
                    Vec2 vk = Vec2::Zero();
                    for (int p = 0; p < 6; ++p) vk += phi[p] * v[sm.tri_grid(be.triangle)[p]];
                    e.power += tr(ep.x, ep.normal, s.t).dot(vk) * ep.ds;
                }
            }
        }
    }
    e.dissipation *= dt;
    e.power *= dt;
    return e;
}

/// Conditions under which the discrete energy inequality is guaranteed.
struct StabilityHypotheses {
    bool zero_inflow = false;
    bool no_traction_boundary = false;
    bool fixed_solid_boundary = true;  // v = 0 is imposed on Sigma3
    bool convex_material = false;

    bool all() const { return zero_inflow && no_traction_boundary && fixed_solid_boundary && convex_material; }

    std::string missing() const {
        std::string s;
        auto add = [&](bool ok, const char* what) {
            if (!ok) s += (s.empty() ? "" : ", ") + std::string(what);
        };
        add(zero_inflow, "inflow data must vanish");
        add(no_traction_boundary, "no traction boundary allowed");
        add(fixed_solid_boundary, "solid boundary must be fixed");
        add(convex_material, "strain energy must be convex");
        return s;
    }
};

inline StabilityHypotheses stability_hypotheses(const FsiProblem& pb) {
    StabilityHypotheses h;
    h.zero_inflow = !pb.forcing().inflow;
    h.no_traction_boundary = !pb.has_outflow();
    h.convex_material = !pb.has_solid() || pb.material().convex();
    return h;
}

namespace detail {

inline double stability_residual(const EnergyLedger& ledger, std::size_t n) {
    if (n == 0 || n >= ledger.size()) throw InputError("stability residual needs steps n-1 and n");
    const auto& a = ledger[n - 1];
    const auto& b = ledger[n];
    return (b.total() - a.total()) + b.dissipation - b.power;
}

}  // namespace detail

/// Left minus right side of the energy inequality between steps n-1 and n.
inline double check_stability(const EnergyLedger& ledger, std::size_t n, const StabilityHypotheses& h) {
    if (!h.all())
        throw InputError("stability check refused: hypotheses not satisfied (" + h.missing() + ")");
    return detail::stability_residual(ledger, n);
}

struct StepResult {
    SystemState state;
    StepReport report;
};

/// advance phi -> move mesh -> frame -> assemble -> solve.
inline StepResult step(const FsiProblem& pb, const SystemState& prev, double dt, LinearSolver& solver) {
    const auto t0 = std::chrono::steady_clock::now();
    if (!(dt > 0.0)) throw InputError("time step must be positive");
    const Mesh& m = pb.fluid();
    const DofMap& dm = pb.dofs();
    StepResult out;
    auto& r = out.report;
    r.step = prev.step + 1;
    r.dt = dt;
    r.t = r.step * dt;

    const auto v_prev = pb.solid_velocity(prev.X);
    const auto u_prev = pb.fluid_velocity(prev.X);
    std::vector<Vec2> phi_n = pb.has_solid() ? advance_interface(prev.phi, v_prev, dt) : std::vector<Vec2>{};

    const auto& fids = dm.interface_fluid_points();
    const auto& sids = dm.interface_solid_points();
    std::vector<Vec2> targets(fids.size()), w_iface(fids.size());
    for (std::size_t k = 0; k < fids.size(); ++k) {
        targets[k] = phi_n[sids[k]];
        w_iface[k] = u_prev[fids[k]];
    }
    auto new_pts = move_fluid_mesh(pb.motion(), fids, targets);
    const AleFrame frame(prev.fluid_points, std::move(new_pts), dt, fids, w_iface);
    const auto half = frame.half_points();
    const auto jn = min_jacobian(m, frame.new_points());
    const auto jh = min_jacobian(m, half);
    if (!(jn.first > 0.0))
        throw TanglingError("fluid mesh tangled at step " + std::to_string(r.step), jn.second);
    if (!(jh.first > 0.0))
        throw TanglingError("half-step fluid mesh tangled at step " + std::to_string(r.step), jh.second);
    r.min_jacobian_new = jn.first;
    r.min_jacobian_half = jh.first;
    for (const auto& w : frame.velocity()) r.max_mesh_velocity = std::max(r.max_mesh_velocity, w.norm());

    Eigen::VectorXd X;
    if (pb.has_solid() && pb.solid_update == SolidUpdate::Implicit) {
        const auto nr = newton_solid_step(pb, prev, frame, phi_n, r.t, pb.newton_tol, solver,
                                          pb.newton_max_iter);
        X = nr.X;
        r.newton_iterations = nr.iterations;
    } else {
        const auto sys = assemble_step(pb, prev, frame, phi_n, r.t);
        X = solver.solve(sys.A, sys.b);
    }
    r.solver_residual = solver.last_relative_residual();

    r.interface_exact = true;
    r.mesh_velocity_exact = true;
    for (std::size_t k = 0; k < fids.size(); ++k) {
        const int f = fids[k], s = sids[k];
        if (frame.new_points()[f] != phi_n[s]) r.interface_exact = false;
        for (int c = 0; c < 2; ++c)
            if (X[dm.fluid_dof(f, c)] != X[dm.solid_dof(s, c)]) r.interface_exact = false;
        if (frame.velocity()[f] != u_prev[f]) r.mesh_velocity_exact = false;
    }

    out.state.step = r.step;
    out.state.t = r.t;
    out.state.X = std::move(X);
    out.state.fluid_points = frame.new_points();
    out.state.phi = std::move(phi_n);
    r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

struct MonitorSettings {
    bool enabled = true;
    bool abort_on_violation = false;
    double slack_factor = 1e-8;
};

/// Time loop state: current solution, energy ledger and monitor.
class TimeStepper {
public:
    TimeStepper(const FsiProblem& pb, double dt, SystemState initial, MonitorSettings mon = {})
        : pb_(&pb), dt_(dt), state_(std::move(initial)), mon_(mon), hyp_(stability_hypotheses(pb)) {
        if (!(dt > 0.0) || !std::isfinite(dt)) throw InputError("time step must be positive");
        if (state_.X.size() != pb.dofs().size()) throw InputError("initial state does not match the problem");
        ledger_.push(compute_energy(pb, state_, dt_));
    }

    const StepReport& advance() {
        auto res = step(*pb_, state_, dt_, solver_);
        auto& r = res.report;
        if (!r.interface_exact || !r.mesh_velocity_exact)
            throw Error("interface coupling lost at step " + std::to_string(r.step));
        EnergyEntry e = compute_energy(*pb_, res.state, dt_);
        const EnergyEntry& last = ledger_[ledger_.size() - 1];
        e.stab_residual = (e.total() - last.total()) + e.dissipation - e.power;
        r.stab_residual = e.stab_residual;
        ledger_.push(e);
        const std::size_t n = ledger_.size() - 1;
        r.monitored = mon_.enabled && hyp_.all();
        if (r.monitored) {
            const double slack = mon_.slack_factor * ledger_.energy_scale(n);
            if (r.stab_residual > slack) {
                r.violation = true;
                std::cerr << "warning: energy inequality violated at step " << r.step << ": residual "
                          << r.stab_residual << " > slack " << slack << "\n";
                if (mon_.abort_on_violation)
                    throw Error("energy inequality violated at step " + std::to_string(r.step));
            }
        }
        state_ = std::move(res.state);
        reports_.push_back(r);
        return reports_.back();
    }

    const SystemState& state() const { return state_; }
    const EnergyLedger& ledger() const { return ledger_; }
    const std::vector<StepReport>& reports() const { return reports_; }
    const StabilityHypotheses& hypotheses() const { return hyp_; }
    double dt() const { return dt_; }

private:
    const FsiProblem* pb_;
    double dt_;
    SystemState state_;
    MonitorSettings mon_;
    StabilityHypotheses hyp_;
    LinearSolver solver_;
    EnergyLedger ledger_;
    std::vector<StepReport> reports_;
};

/// Number of steps of size dt reaching T.
inline int num_steps(double T, double dt) {
    if (!(T >= 0.0) || !std::isfinite(T)) throw InputError("final time must be non-negative");
    if (!(dt > 0.0)) throw InputError("time step must be positive");
    const double n = std::round(T / dt);
    if (std::abs(n * dt - T) > 1e-9 * std::max(T, dt))
        throw InputError("final time " + std::to_string(T) + " is not a multiple of dt " + std::to_string(dt));
    return static_cast<int>(n);
}

struct RunOptions {
    double dt = 0.1;
    double T = 1.0;
    MonitorSettings monitor;
    /// Called with the initial state (report null) and after every step.
    std::function<void(const SystemState&, const StepReport*, const EnergyEntry&)> observer;
};

struct RunResult {
    SystemState final_state;
    std::vector<StepReport> reports;
    EnergyLedger ledger;
};

inline RunResult run(const FsiProblem& pb, const RunOptions& opt, SystemState initial) {
    const int n = num_steps(opt.T, opt.dt);
    TimeStepper ts(pb, opt.dt, std::move(initial), opt.monitor);
    if (opt.observer) opt.observer(ts.state(), nullptr, ts.ledger()[0]);
    for (int k = 0; k < n; ++k) {
        const auto& r = ts.advance();
        if (opt.observer) opt.observer(ts.state(), &r, ts.ledger()[ts.ledger().size() - 1]);
    }
    return {ts.state(), ts.reports(), ts.ledger()};
}

inline RunResult run(const FsiProblem& pb, const RunOptions& opt) {
    return run(pb, opt, pb.initial_state());
}

struct ConvergenceRow {
    double dt = 0.0;
    bool ok = false;
    std::string error;
    std::array<NormSet, 2> norms;  // phi_1, phi_2 against the reference
};

struct ConvergenceStudy {
    double dt_ref = 0.0;
    std::vector<ConvergenceRow> rows;
    /// orders[k] between rows k and k+1; NaN where undefined
    std::vector<std::array<NormSet, 2>> orders;
};

inline double observed_order(double e0, double e1, double dt0, double dt1) {
    if (!(e0 > 0.0) || !(e1 > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    return std::log10(e0 / e1) / std::log10(dt0 / dt1);
}

/// Runs to T for every dt and compares solid positions with a dt_ref run.
inline ConvergenceStudy convergence_study(const FsiProblem& pb, const SystemState& initial, double T,
                                          const std::vector<double>& dts, double dt_ref,
                                          MonitorSettings mon = {false, false, 1e-8}) {
    if (!pb.has_solid()) throw InputError("convergence study needs a solid");
    if (dts.empty()) throw InputError("convergence study needs at least one time step");
    ConvergenceStudy cs;
    cs.dt_ref = dt_ref;
    RunOptions ro;
    ro.T = T;
    ro.monitor = mon;
    ro.dt = dt_ref;
    const auto ref = run(pb, ro, initial).final_state.phi;
    for (double dt : dts) {
        ConvergenceRow row;
        row.dt = dt;
        try {
            ro.dt = dt;
            const auto phi = run(pb, ro, initial).final_state.phi;
            const auto fn = field_norms(pb.solid(), phi, ref, pb.quad_degree);
            row.norms = fn.component;
            row.ok = true;
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        cs.rows.push_back(row);
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t k = 0; k + 1 < cs.rows.size(); ++k) {
        std::array<NormSet, 2> o;
        const auto& a = cs.rows[k];
        const auto& b = cs.rows[k + 1];
        for (int c = 0; c < 2; ++c) {
            if (!a.ok || !b.ok) {
                o[c] = {nan, nan, nan, nan};
                continue;
            }
            o[c].l2 = observed_order(a.norms[c].l2, b.norms[c].l2, a.dt, b.dt);
            o[c].linf = observed_order(a.norms[c].linf, b.norms[c].linf, a.dt, b.dt);
            o[c].grad_l2 = observed_order(a.norms[c].grad_l2, b.norms[c].grad_l2, a.dt, b.dt);
            o[c].grad_linf = observed_order(a.norms[c].grad_linf, b.norms[c].grad_linf, a.dt, b.dt);
        }
        cs.orders.push_back(o);
    }
    return cs;
}

}  // namespace fsi
