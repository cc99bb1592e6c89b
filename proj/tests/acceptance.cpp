// Acceptance checks; one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "fsi/config.hpp"
#include "fsi/mesh_gen.hpp"
#include "fsi/stepper.hpp"

using namespace fsi;

namespace {

struct Outcome {
    enum Status { Pass, Fail, Skip } status = Fail;
    std::string detail;
};

Outcome pass(std::string d) { return {Outcome::Pass, std::move(d)}; }
Outcome fail(std::string d) { return {Outcome::Fail, std::move(d)}; }
Outcome verdict(bool ok, std::string d) { return {ok ? Outcome::Pass : Outcome::Fail, std::move(d)}; }

std::string sci(double x) {
    char b[32];
    std::snprintf(b, sizeof b, "%.3e", x);
    return b;
}

std::string fix(double x) {
    char b[32];
    std::snprintf(b, sizeof b, "%.3f", x);
    return b;
}

// interface coupling flags gathered from every run below
int g_steps_checked = 0;
int g_steps_inexact = 0;

void record(const std::vector<StepReport>& rs) {
    for (const auto& r : rs) {
        ++g_steps_checked;
        if (!r.interface_exact || !r.mesh_velocity_exact) ++g_steps_inexact;
    }
}

std::vector<Vec2> perturb_interior(const Mesh& m, double amp, std::mt19937& rng) {
    std::uniform_real_distribution<double> u(-amp, amp);
    std::vector<char> bnd(m.num_vertices(), 0);
    for (const auto& be : m.boundary_edges()) {
        const auto& t = m.triangles()[be.triangle];
        bnd[t[be.local_edge]] = bnd[t[(be.local_edge + 1) % 3]] = 1;
    }
    std::vector<Vec2> p = m.grid_points();
    for (int i = 0; i < m.num_vertices(); ++i)
        if (!bnd[i]) p[i] += Vec2(u(rng), u(rng));
    for (int e = 0; e < m.num_edges(); ++e)
        if (m.edge_triangles(e)[1] >= 0) {
            const auto [a, b] = m.edge_vertices(e);
            p[m.edge_grid_point(e)] = 0.5 * (p[a] + p[b]);
        }
    return p;
}

Outcome gcl_exactness() {
    std::mt19937 rng(2024);
    std::uniform_real_distribution<double> u(-1, 1);
    const std::vector<std::pair<Rect, double>> meshes{
        {{0, 1, 0, 1}, 0.125}, {{0, 2, 0, 1}, 0.1}, {{-1, 0.5, 0, 3}, 0.25}};
    double worst = 0.0;
    int frames = 0;
    for (const auto& [r, h] : meshes) {
        const Mesh m = generate_rectangle_mesh(r, h);
        const double area = r.area();
        for (int k = 0; k < 40; ++k) {
            const auto a = perturb_interior(m, 0.15 * h, rng);
            const auto b = perturb_interior(m, 0.15 * h, rng);
            const AleFrame fr = build_frame(m, a, b, 0.005 + 0.2 * std::abs(u(rng)));
            std::vector<double> f(m.num_grid_points());
            std::vector<Vec2> v(m.num_grid_points());
            for (int i = 0; i < m.num_grid_points(); ++i) {
                f[i] = u(rng);
                v[i] = Vec2(u(rng), u(rng));
            }
            worst = std::max(worst, gcl_residual(m, fr, f) / area);
            worst = std::max(worst, gcl_residual_squared(m, fr, v) / area);
            ++frames;
        }
    }
    return verdict(worst <= 1e-12, std::to_string(frames) + " frames, max residual/area " + sci(worst) +
                                       " (tol 1e-12)");
}

Outcome material_derivatives() {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(-1, 1);
    const double eps = 1e-5;
    double worst = 0.0;
    for (const auto& mat : {MaterialModel(MaterialKind::LinearElastic, 50, 500, 1),
                            MaterialModel(MaterialKind::SaintVenantKirchhoff, 2000, 8000, 1)}) {
        for (int k = 0; k < 20; ++k) {
            Mat2 F;
            F << 1 + 0.3 * u(rng), 0.3 * u(rng), 0.3 * u(rng), 1 + 0.3 * u(rng);
            const Mat2 S = mat.stress(F);
            Mat2 fd;
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j) {
                    Mat2 E = Mat2::Zero();
                    E(i, j) = eps;
                    fd(i, j) = (mat.strain_energy(F + E) - mat.strain_energy(F - E)) / (2 * eps);
                }
            worst = std::max(worst, (fd - S).norm() / S.norm());
            // A_s against the derivative of the stress, all 16 entries
            Eigen::Matrix4d A, Afd;
            for (int a = 0; a < 4; ++a)
                for (int b = 0; b < 4; ++b) {
                    Mat2 G = Mat2::Zero(), H = Mat2::Zero();
                    G(a / 2, a % 2) = 1.0;
                    H(b / 2, b % 2) = 1.0;
                    A(a, b) = mat.linearization(F, G, H);
                    Afd(a, b) = ddot(mat.stress(F + eps * G) - mat.stress(F - eps * G), H) / (2 * eps);
                }
            worst = std::max(worst, (A - Afd).norm() / A.norm());
        }
    }
    return verdict(worst <= 1e-6, "40 inputs, max relative error " + sci(worst) + " (tol 1e-6)");
}

Outcome convexity() {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(-1, 1);
    const MaterialModel svk(MaterialKind::SaintVenantKirchhoff, 2000, 8000, 1);
    const MaterialModel lin(MaterialKind::LinearElastic, 50, 500, 1);
    std::optional<double> witness;
    for (int k = 0; k < 10000 && !witness; ++k) {
        Mat2 F, G;
        F << 1 + 0.9 * u(rng), 0.9 * u(rng), 0.9 * u(rng), 1 + 0.9 * u(rng);
        G << u(rng), u(rng), u(rng), u(rng);
        const double a = svk.linearization(F, G, G);
        if (a < 0.0) witness = a;
    }
    double min_lin = std::numeric_limits<double>::infinity();
    double min_gap = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 1000; ++k) {
        Mat2 F, G;
        F << 1 + u(rng), u(rng), u(rng), 1 + u(rng);
        G << u(rng), u(rng), u(rng), u(rng);
        min_lin = std::min(min_lin, lin.linearization(F, G, G) / G.squaredNorm());
        // midpoint convexity of the energy itself
        Mat2 F2;
        F2 << 1 + u(rng), u(rng), u(rng), 1 + u(rng);
        const double gap = 0.5 * (lin.strain_energy(F) + lin.strain_energy(F2)) -
                           lin.strain_energy(0.5 * (F + F2));
        min_gap = std::min(min_gap, gap);
    }
    const bool ok = witness && min_lin >= 0.0 && min_gap >= -1e-10;
    return verdict(ok, std::string("svk witness ") + (witness ? sci(*witness) : "none") +
                           ", linear min second variation " + sci(min_lin) + " over 1000 directions, min midpoint gap " +
                           sci(min_gap));
}

RunConfig free_vibration_config() {
    RunConfig c = preset(CaseId::I);
    c.inflow = false;
    c.outflow = "wall";
    c.v0 = 0.5;
    c.dt = 0.05;
    return c;
}

Outcome energy_inequality() {
    const RunConfig c = free_vibration_config();
    auto cs = build_case(c);
    const auto hyp = stability_hypotheses(cs.problem);
    if (!hyp.all()) return fail("hypotheses missing: " + hyp.missing());
    TimeStepper ts(cs.problem, c.dt, cs.initial, {true, false, 1e-8});
    const double e0 = ts.ledger()[0].total();
    const double slack = 1e-8 * e0;
    double worst = -std::numeric_limits<double>::infinity(), rise = -std::numeric_limits<double>::infinity();
    double wmax = 0.0;
    int bad = 0;
    for (int k = 0; k < 200; ++k) {
        const auto& r = ts.advance();
        const std::size_t n = ts.ledger().size() - 1;
        const double res = check_stability(ts.ledger(), n, hyp);
        const double d = ts.ledger()[n].total() - ts.ledger()[n - 1].total();
        worst = std::max(worst, res);
        rise = std::max(rise, d);
        wmax = std::max(wmax, r.max_mesh_velocity);
        if (res > slack || d > slack) ++bad;
    }
    record(ts.reports());
    const double e_end = ts.ledger()[ts.ledger().size() - 1].total();
    return verdict(bad == 0 && wmax > 0.0 && e0 > 0.0,
                   "200 steps, E0 " + sci(e0) + ", E200 " + sci(e_end) + ", max residual " + sci(worst) +
                       ", max energy rise " + sci(rise) + " (slack " + sci(slack) + "), max|w| " + sci(wmax));
}

Outcome temporal_convergence() {
    RunConfig c = preset(CaseId::I);
    c.h = 0.1;
    auto cs = build_case(c);
    const std::vector<double> dts{0.1, 0.05, 0.025};
    const auto st = convergence_study(cs.problem, cs.initial, 1.0, dts, 0.025 / 16);
    for (const auto& r : st.rows)
        if (!r.ok) return fail("run with dt " + fix(r.dt) + " failed: " + r.error);
    double lo = 1e9, hi = -1e9;
    std::ostringstream os;
    os << "alpha L2/Linf of phi1, phi2:";
    for (const auto& o : st.orders)
        for (int comp = 0; comp < 2; ++comp)
            for (double a : {o[comp].l2, o[comp].linf}) {
                if (std::isnan(a)) return fail("undefined order");
                lo = std::min(lo, a);
                hi = std::max(hi, a);
                os << ' ' << fix(a);
            }
    return verdict(lo >= 0.8 && hi <= 1.25, os.str() + " (band [0.8, 1.25])");
}

Outcome stokes_patch() {
    const double rho = 1.0, nu = 1.0;
    double worst = 0.0;
    for (const double h : {0.5, 0.25, 0.125}) {
        const Mesh m = generate_rectangle_mesh({0, 1, 0, 1}, h);
        auto exact_u = [](const Vec2& x) { return Vec2(x.y() * (1 - x.y()), 0.0); };
        auto exact_p = [&](const Vec2& x) { return -2.0 * rho * nu * (x.x() - 1.0); };
        Forcing f;
        f.inflow = [&](const Vec2& x, double) { return exact_u(x); };
        f.fluid_traction = [&](const Vec2& x, const Vec2&, double) {
            return Vec2(0.0, rho * nu * (1 - 2 * x.y()));
        };
        FsiProblem pb(m, std::nullopt, {}, {rho, nu, true}, std::nullopt, f);
        auto s = pb.initial_state();
        for (int i = 0; i < m.num_grid_points(); ++i)
            for (int c = 0; c < 2; ++c) s.X[pb.dofs().fluid_dof(i, c)] = exact_u(m.grid_points()[i])[c];
        LinearSolver ls;
        const auto res = step(pb, s, 0.1, ls);
        const auto u = pb.fluid_velocity(res.state.X);
        const auto p = pb.pressure(res.state.X);
        for (int i = 0; i < m.num_grid_points(); ++i)
            worst = std::max(worst, (u[i] - exact_u(m.grid_points()[i])).norm());
        for (int v = 0; v < m.num_vertices(); ++v)
            worst = std::max(worst, std::abs(p[v] - exact_p(m.vertices()[v])));
    }
    return verdict(worst <= 1e-10, "max nodal error in u, p over 3 meshes " + sci(worst) + " (tol 1e-10)");
}

Outcome zero_data() {
    RunConfig c = preset(CaseId::I);
    c.inflow = false;
    auto cs = build_case(c);
    double worst = 0.0;
    for (auto mode : {SolidUpdate::SemiImplicit, SolidUpdate::Implicit}) {
        cs.problem.solid_update = mode;
        RunOptions ro;
        ro.dt = 0.1;
        ro.T = 0.5;
        const auto r = run(cs.problem, ro, cs.initial);
        record(r.reports);
        worst = std::max(worst, r.final_state.X.norm());
    }
    return verdict(worst <= 1e-10, "solved state norm after 5 steps " + sci(worst) + " (tol 1e-10)");
}

Outcome robustness_large_step(std::vector<StepReport>& reports) {
    RunConfig c = preset(CaseId::I);
    auto cs = build_case(c);
    TimeStepper ts(cs.problem, 1.0, cs.initial);
    try {
        for (int k = 0; k < 10; ++k) ts.advance();
    } catch (const std::exception& e) {
        return fail(std::string("step failed: ") + e.what());
    }
    reports = ts.reports();
    record(reports);
    const Vec2 d = cs.tail->displacement(ts.state().phi);
    double minj = std::numeric_limits<double>::infinity();
    for (const auto& r : reports) minj = std::min(minj, r.min_jacobian_new);
    return verdict(d.x() > 0.0, "10 steps at dt 1, tail displacement (" + sci(d.x()) + ", " + sci(d.y()) +
                                    "), min Jacobian " + sci(minj));
}

Outcome interface_coupling() {
    // a driven run with moving interface on top of the runs recorded above
    RunConfig c = preset(CaseId::I);
    c.h = 0.1;
    auto cs = build_case(c);
    RunOptions ro;
    ro.dt = 0.1;
    ro.T = 2.0;
    const auto r = run(cs.problem, ro, cs.initial);
    record(r.reports);
    double wmax = 0.0;
    for (const auto& s : r.reports) wmax = std::max(wmax, s.max_mesh_velocity);
    return verdict(g_steps_inexact == 0 && g_steps_checked > 0 && wmax > 0.0,
                   std::to_string(g_steps_checked) + " steps checked bitwise, " + std::to_string(g_steps_inexact) +
                       " inexact");
}

Outcome long_case_two() {
    const char* env = std::getenv("FSI_ACCEPT_LONG");
    if (!env || std::string(env) != "1")
        return {Outcome::Skip, "optional long run, set FSI_ACCEPT_LONG=1 (or use tools/run_case2.sh)"};
    RunConfig c = preset(CaseId::II);
    c.T = 8.0;
    c.dt = 0.01;
    auto cs = build_case(c);
    TimeStepper ts(cs.problem, c.dt, cs.initial, {false, false, 1e-8});
    const int n = num_steps(c.T, c.dt);
    std::vector<double> tail_y, drag;
    for (int k = 0; k < n; ++k) {
        ts.advance();
        if (ts.state().t > c.T / 2) {
            tail_y.push_back(cs.tail->displacement(ts.state().phi).y());
            drag.push_back(lift_drag(cs.problem, ts.state(), *cs.probe).drag);
        }
    }
    record(ts.reports());
    double mean_y = 0.0, mean_drag = 0.0;
    for (std::size_t k = 0; k < tail_y.size(); ++k) {
        mean_y += tail_y[k] / tail_y.size();
        mean_drag += drag[k] / drag.size();
    }
    int crossings = 0;
    for (std::size_t k = 1; k < tail_y.size(); ++k)
        if ((tail_y[k - 1] - mean_y) * (tail_y[k] - mean_y) < 0.0) ++crossings;
    const bool ok = crossings >= 6 && mean_drag > 30.0 && mean_drag < 3000.0;
    return verdict(ok, "mean crossings of tail y in second half " + std::to_string(crossings) + ", mean drag " +
                           fix(mean_drag));
}

}  // namespace

int main() {
    std::vector<StepReport> large;
    const std::vector<std::pair<std::string, std::function<Outcome()>>> checks{
        {"gcl exactness on random straight frames", gcl_exactness},
        {"material stress and tangent derivatives", material_derivatives},
        {"svk non-convexity witness, linear convexity", convexity},
        {"discrete energy inequality, free vibration", energy_inequality},
        {"first-order temporal convergence, case I", temporal_convergence},
        {"stokes patch test, Poiseuille", stokes_patch},
        {"zero data gives zero solution", zero_data},
        {"interface coupling bitwise", [] { return Outcome{}; }},
        {"case I robustness at dt = 1", [&] { return robustness_large_step(large); }},
        {"case II long run (qualitative)", long_case_two},
    };
    std::vector<Outcome> results(checks.size());
    // the coupling check aggregates all runs, so it goes last
    for (std::size_t k = 0; k < checks.size(); ++k) {
        if (k == 7) continue;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            results[k] = checks[k].second();
        } catch (const std::exception& e) {
            results[k] = fail(std::string("exception: ") + e.what());
        }
        const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        results[k].detail += " [" + fix(s) + " s]";
    }
    try {
        results[7] = interface_coupling();
    } catch (const std::exception& e) {
        results[7] = fail(std::string("exception: ") + e.what());
    }
    int failures = 0;
    for (std::size_t k = 0; k < checks.size(); ++k) {
        const auto& r = results[k];
        const char* tag = r.status == Outcome::Pass ? "PASS" : r.status == Outcome::Skip ? "SKIP" : "FAIL";
        failures += r.status == Outcome::Fail;
        std::cout << "criterion " << (k + 1) << " " << tag << ": " << checks[k].first << ": " << r.detail << std::endl;
    }
    std::cout << (failures ? "ACCEPTANCE FAILED" : "ACCEPTANCE PASSED") << std::endl;
    return failures ? 1 : 0;
}
