#include <gtest/gtest.h>

#include "fsi/assembly.hpp"
#include "fsi/mesh_gen.hpp"

using namespace fsi;

namespace {

CarvedMeshes case1_meshes(double h = 0.1) {
    CarveSpec spec;
    spec.xs = uniform_lines(0, 3, h);
    spec.ys = uniform_lines(-0.5, 1.0, h);
    spec.circle = {Vec2(1.5, -0.5), 0.5};
    spec.disk = DiskRole::Solid;
    return carve_meshes(spec);
}

FsiProblem case1_problem(MaterialKind kind = MaterialKind::LinearElastic, Forcing f = {}) {
    auto cm = case1_meshes();
    return FsiProblem(std::move(cm.fluid), std::move(cm.solid), cm.interface_pairs,
                      FluidParams{1.0, 1.0, true}, MaterialModel(kind, 50.0, 500.0, 1.0),
                      std::move(f));
}

SpMat to_matrix(const Triplets& t, int n) {
    SpMat m(n, n);
    m.setFromTriplets(t.begin(), t.end());
    return m;
}

}  // namespace

TEST(LinearSolver, SmallSystems) {
    SpMat I(3, 3);
    I.setIdentity();
    Eigen::VectorXd b(3);
    b << 1, -2, 3;
    EXPECT_LT((solve_linear(I, b) - b).norm(), 1e-15);

    Triplets t{{0, 0, 2.0}, {0, 1, 1.0}, {1, 0, 1.0}, {1, 1, 2.0}};
    const SpMat A = to_matrix(t, 2);
    const Eigen::VectorXd x = solve_linear(A, Eigen::Vector2d(1, 1));
    EXPECT_NEAR(x[0], 1.0 / 3.0, 1e-15);
    EXPECT_NEAR(x[1], 1.0 / 3.0, 1e-15);
}

TEST(LinearSolver, SingularThrows) {
    Triplets t{{0, 0, 1.0}, {0, 1, 1.0}, {1, 0, 1.0}, {1, 1, 1.0}};
    EXPECT_THROW(solve_linear(to_matrix(t, 2), Eigen::Vector2d(1, 0)), SolverError);
    EXPECT_THROW(solve_linear(to_matrix(t, 2), Eigen::Vector3d(1, 0, 0)), InputError);
}

TEST(LinearSolver, ReusesPattern) {
    LinearSolver s;
    Triplets t{{0, 0, 2.0}, {0, 1, 1.0}, {1, 0, 1.0}, {1, 1, 2.0}};
    SpMat A = to_matrix(t, 2);
    s.solve(A, Eigen::Vector2d(1, 1));
    A.coeffRef(0, 0) = 4.0;
    const Eigen::VectorXd x = s.solve(A, Eigen::Vector2d(1, 1));
    EXPECT_LT((A * x - Eigen::Vector2d(1, 1)).norm(), 1e-14);
}

TEST(DofMap, CountsAndSharing) {
    const auto cm = case1_meshes();
    const DofMap dm(cm.fluid, &*cm.solid, cm.interface_pairs);
    const int gf = cm.fluid.num_grid_points(), gs = cm.solid->num_grid_points();
    const int np = static_cast<int>(cm.interface_pairs.size());
    EXPECT_EQ(dm.num_nodes(), gf + gs - np);
    EXPECT_EQ(dm.size(), 2 * (gf + gs - np) + cm.fluid.num_vertices());
    for (const auto& [f, s] : cm.interface_pairs) EXPECT_EQ(dm.fluid_dof(f, 1), dm.solid_dof(s, 1));
    EXPECT_FALSE(dm.pressure_pinned());
    const Mesh box = generate_rectangle_mesh({0, 1, 0, 1}, 0.5, {Marker::Sigma1, Marker::Sigma1,
                                                                 Marker::Sigma1, Marker::Sigma1});
    EXPECT_TRUE(DofMap(box, nullptr, {}).pressure_pinned());
}

TEST(DofMap, RejectsBadPairs) {
    const auto cm = case1_meshes();
    auto pairs = cm.interface_pairs;
    pairs.pop_back();
    EXPECT_THROW(DofMap(cm.fluid, &*cm.solid, pairs), InputError);
    pairs = cm.interface_pairs;
    pairs.push_back(pairs.front());
    EXPECT_THROW(DofMap(cm.fluid, &*cm.solid, pairs), InputError);
    pairs = cm.interface_pairs;
    pairs[0].first = cm.fluid.num_grid_points();
    EXPECT_THROW(DofMap(cm.fluid, &*cm.solid, pairs), InputError);
}

TEST(Assembly, PressureCouplingKillsConstantsOnInteriorDofs) {
    const Mesh m = generate_rectangle_mesh({0, 1, 0, 1}, 0.25);
    FsiProblem pb(m, std::nullopt, {}, {}, std::nullopt, {});
    const auto s = pb.initial_state();
    Triplets A;
    Eigen::VectorXd b = Eigen::VectorXd::Zero(pb.dofs().size());
    assemble_fluid(pb, s, AleFrame(s.fluid_points, s.fluid_points, 0.1), 0.1, A, b);
    const SpMat M = to_matrix(A, pb.dofs().size());
    Eigen::VectorXd ones = Eigen::VectorXd::Zero(pb.dofs().size());
    for (int v = 0; v < m.num_vertices(); ++v) ones[pb.dofs().pressure_dof(v)] = 1.0;
    const Eigen::VectorXd r = M * ones;
    std::vector<char> bnd(m.num_grid_points(), 0);
    for (const auto& be : m.boundary_edges())
        for (int l : Mesh::local_edge_nodes(be.local_edge)) bnd[m.tri_grid(be.triangle)[l]] = 1;
    for (int i = 0; i < m.num_grid_points(); ++i)
        if (!bnd[i])
            for (int c = 0; c < 2; ++c) EXPECT_NEAR(r[pb.dofs().fluid_dof(i, c)], 0.0, 1e-13);
}

TEST(Assembly, PoiseuillePatch) {
    const double rho = 1.3, nu = 0.7;
    const Mesh m = generate_rectangle_mesh({0, 1, 0, 1}, 0.25);
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
    const double dt = 0.1;
    const AleFrame fr(s.fluid_points, s.fluid_points, dt);
    const auto sys = assemble_step(pb, s, fr, s.phi, dt);
    const Eigen::VectorXd X = solve_linear(sys.A, sys.b);
    const auto u = pb.fluid_velocity(X);
    const auto p = pb.pressure(X);
    for (int i = 0; i < m.num_grid_points(); ++i)
        EXPECT_LT((u[i] - exact_u(m.grid_points()[i])).norm(), 1e-10);
    for (int v = 0; v < m.num_vertices(); ++v) EXPECT_NEAR(p[v], exact_p(m.vertices()[v]), 1e-10);
    EXPECT_LT(divergence_defect(pb, s.fluid_points, X), 1e-12);
}

TEST(Assembly, HydrostaticOutflow) {
    const Vec2 g(0.0, -2.0);
    const double rho = 2.0;
    const Mesh m = generate_rectangle_mesh({0, 2, 0, 1}, 0.25);
    Forcing f;
    f.g_fluid = g;
    f.fluid_traction = outflow_traction(rho, g);
    FsiProblem pb(m, std::nullopt, {}, {rho, 0.1, true}, std::nullopt, f);
    const auto s = pb.initial_state();
    const auto sys = assemble_step(pb, s, AleFrame(s.fluid_points, s.fluid_points, 0.05), s.phi, 0.05);
    const Eigen::VectorXd X = solve_linear(sys.A, sys.b);
    for (const auto& u : pb.fluid_velocity(X)) EXPECT_LT(u.norm(), 1e-10);
    const auto p = pb.pressure(X);
    for (int v = 0; v < m.num_vertices(); ++v)
        EXPECT_NEAR(p[v], rho * g.dot(m.vertices()[v]), 1e-10);
}

TEST(Assembly, ZeroDataGivesZero) {
    auto pb = case1_problem();
    const auto s = pb.initial_state();
    const auto sys = assemble_step(pb, s, AleFrame(s.fluid_points, s.fluid_points, 0.1), s.phi, 0.1);
    EXPECT_LT(sys.b.norm(), 1e-10);  // grad of the identity map is I up to roundoff
    EXPECT_LT(solve_linear(sys.A, sys.b).norm(), 1e-10);
}

TEST(Assembly, SolidTangentSymmetric) {
    for (auto kind : {MaterialKind::LinearElastic, MaterialKind::SaintVenantKirchhoff}) {
        auto pb = case1_problem(kind);
        auto phi = pb.solid().grid_points();
        for (auto& x : phi) x += Vec2(0.02 * x.y(), -0.01 * x.x() * x.y());
        const auto st = solid_stress(pb, phi, {}, 0.1);
        const SpMat K = to_matrix(st.tangent, pb.dofs().size());
        const SpMat Kt = K.transpose();
        EXPECT_LT((K - Kt).norm(), 1e-10 * K.norm());
        // tangent matches a finite difference of the force
        std::vector<Vec2> v(phi.size(), Vec2::Zero());
        Eigen::VectorXd dv = Eigen::VectorXd::Zero(pb.dofs().size());
        for (std::size_t i = 0; i < v.size(); ++i) {
            v[i] = 1e-6 * Vec2(std::sin(3.0 * i), std::cos(5.0 * i));
            for (int c = 0; c < 2; ++c) dv[pb.dofs().solid_dof(i, c)] = v[i][c];
        }
        const auto st1 = solid_stress(pb, phi, v, 0.1, false);
        const Eigen::VectorXd fd = st1.force - st.force;
        EXPECT_LT((fd - K * dv).norm(), 1e-4 * fd.norm());
    }
}

TEST(Assembly, NewtonMatchesSemiImplicitForLinearMaterial) {
    Forcing f;
    f.g_solid = Vec2(0.3, -1.0);
    f.g_fluid = Vec2(0.0, -0.5);
    auto pb = case1_problem(MaterialKind::LinearElastic, f);
    auto s = pb.initial_state();
    // deformation vanishes on the interface so the fluid mesh stays consistent
    for (std::size_t i = 0; i < s.phi.size(); ++i) {
        const Vec2 z = pb.solid().grid_points()[i];
        s.phi[i] = z + 0.01 * (z.y() + 0.5) * (0.25 - (z - Vec2(1.5, -0.5)).squaredNorm()) * Vec2(1, 0);
    }
    const double dt = 0.05;
    const AleFrame fr(s.fluid_points, s.fluid_points, dt);
    const auto sys = assemble_step(pb, s, fr, s.phi, dt);
    const Eigen::VectorXd X0 = solve_linear(sys.A, sys.b);
    LinearSolver ls;
    const auto nr = newton_solid_step(pb, s, fr, s.phi, dt, 1e-10, ls);
    EXPECT_EQ(nr.iterations, 1);
    EXPECT_LT((nr.X - X0).norm(), 1e-9 * X0.norm());
    EXPECT_GT(X0.norm(), 0.0);
}

TEST(Assembly, NewtonConvergesForSvk) {
    Forcing f;
    f.g_solid = Vec2(0.0, -20.0);
    auto pb = case1_problem(MaterialKind::SaintVenantKirchhoff, f);
    const auto s = pb.initial_state();
    LinearSolver ls;
    const auto nr =
        newton_solid_step(pb, s, AleFrame(s.fluid_points, s.fluid_points, 0.1), s.phi, 0.1, 1e-10, ls);
    EXPECT_GE(nr.iterations, 2);
    EXPECT_LE(nr.iterations, 8);
}

TEST(Assembly, InconsistentCornerDataThrows) {
    // solid Sigma3 meeting a Sigma1 point with nonzero inflow
    auto cm = case1_meshes();
    Forcing f;
    f.inflow = [](const Vec2&, double) { return Vec2(1.0, 0.0); };
    FsiProblem pb(std::move(cm.fluid), std::move(cm.solid), cm.interface_pairs, {},
                  MaterialModel(MaterialKind::LinearElastic, 1, 1, 1), f);
    EXPECT_THROW(dirichlet_constraints(pb, 1.0), InputError);
}
