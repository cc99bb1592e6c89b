#pragma once

/// @file config.hpp
/// @brief Key-value run configuration, benchmark presets and case setup.
///
/// Format: one `key = value` per line, `#` starts a comment. Vectors are
/// written `x, y`. The `case` key selects a preset; other keys override it.

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fsi/mesh_gen.hpp"
#include "fsi/observables.hpp"
#include "fsi/problem.hpp"
#include "fsi/stepper.hpp"

namespace fsi {

enum class CaseId { I, II, Custom };

inline std::string to_string(CaseId c) {
    switch (c) {
        case CaseId::I: return "I";
        case CaseId::II: return "II";
        case CaseId::Custom: return "custom";
    }
    return "?";
}

inline CaseId parse_case(const std::string& s) {
    if (s == "I" || s == "1") return CaseId::I;
    if (s == "II" || s == "2") return CaseId::II;
    if (s == "custom") return CaseId::Custom;
    throw InputError("unknown case '" + s + "' (expected I, II or custom)");
}

inline std::string to_string(SolidUpdate s) {
    return s == SolidUpdate::Implicit ? "implicit" : "semi_implicit";
}

inline SolidUpdate parse_solid_update(const std::string& s) {
    if (s == "semi_implicit") return SolidUpdate::SemiImplicit;
    if (s == "implicit") return SolidUpdate::Implicit;
    throw InputError("unknown solid_update '" + s + "' (expected semi_implicit or implicit)");
}

struct RunConfig {
    CaseId case_id = CaseId::I;
    int m = 2;
    double dt = 0.1;
    double T = 1.0;
    double rho_f = 1.0, nu_f = 1.0;
    double rho_s = 1.0, mu_s = 50.0, lambda_s = 500.0;
    MaterialKind material = MaterialKind::LinearElastic;
    Vec2 g_f = Vec2::Zero(), g_s = Vec2::Zero();
    bool inflow = true;
    bool ramp = true;
    std::string outflow = "traction";  // traction | wall
    bool convection = true;
    double h = 0.1;
    double h_far = 0.0;  // 0: preset grading
    std::string mesh;        // fluid mesh override
    std::string solid_mesh;  // solid mesh override
    std::string output_dir = "out";
    bool monitor = true;
    bool monitor_abort = false;
    double monitor_slack = 1e-8;
    int quad_degree = 8;
    SolidUpdate solid_update = SolidUpdate::SemiImplicit;
    double v0 = 0.0;  // initial solid velocity amplitude v = v0 (z_y - y_min, 0)
    std::optional<Vec2> probe_point;
    int snapshot_every = 0;
    double newton_tol = 1e-10;
    int newton_max_iter = 25;

    void validate() const {
        auto pos = [](double x, const char* k) {
            if (!(x > 0.0) || !std::isfinite(x)) throw InputError(std::string(k) + " must be positive");
        };
        if (m != 2) throw InputError("unsupported order m = " + std::to_string(m) + " (only m = 2)");
        pos(dt, "dt");
        if (!(T >= 0.0) || !std::isfinite(T)) throw InputError("T must be non-negative");
        pos(rho_f, "rho_f");
        pos(nu_f, "nu_f");
        pos(rho_s, "rho_s");
        pos(mu_s, "mu_s");
        if (!(lambda_s >= 0.0)) throw InputError("lambda_s must be non-negative");
        pos(h, "h");
        if (h_far < 0.0) throw InputError("h_far must be non-negative");
        if (outflow != "traction" && outflow != "wall")
            throw InputError("outflow must be traction or wall");
        if (quad_degree < 1 || quad_degree > 12) throw InputError("quad_degree must be in 1..12");
        if (snapshot_every < 0) throw InputError("snapshot_every must be non-negative");
        pos(monitor_slack, "monitor_slack");
        pos(newton_tol, "newton_tol");
        if (newton_max_iter < 1) throw InputError("newton_max_iter must be at least 1");
        if (case_id == CaseId::Custom && mesh.empty()) throw InputError("custom case needs a mesh file");
        if (!solid_mesh.empty() && mesh.empty()) throw InputError("solid_mesh given without mesh");
    }
};

inline RunConfig preset(CaseId c) {
    RunConfig r;
    r.case_id = c;
    if (c == CaseId::II) {
        r.material = MaterialKind::SaintVenantKirchhoff;
        r.rho_f = r.rho_s = 1.0;
        r.nu_f = 0.001;
        r.mu_s = 2000.0;
        r.lambda_s = 8000.0;
        r.g_f = r.g_s = Vec2(0.0, -2.0);
        r.h = 0.01;
        r.dt = 0.01;
        r.T = 8.0;
        r.probe_point = Vec2(0.6, 0.2);
    } else if (c == CaseId::I) {
        r.h = 0.07;
        r.probe_point = Vec2(1.5, 0.0);
    } else {
        r.inflow = false;
    }
    return r;
}

namespace detail {

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

inline double to_double(const std::string& k, const std::string& v) {
    try {
        std::size_t n = 0;
        const double x = std::stod(v, &n);
        if (trim(v.substr(n)).empty()) return x;
    } catch (const std::exception&) {
    }
    throw InputError("config key '" + k + "': expected a number, got '" + v + "'");
}

inline int to_int(const std::string& k, const std::string& v) {
    const double x = to_double(k, v);
    if (x != std::floor(x)) throw InputError("config key '" + k + "': expected an integer");
    return static_cast<int>(x);
}

inline bool to_bool(const std::string& k, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw InputError("config key '" + k + "': expected a boolean, got '" + v + "'");
}

inline Vec2 to_vec2(const std::string& k, const std::string& v) {
    std::string s = v;
    for (char& c : s)
        if (c == ',') c = ' ';
    std::istringstream in(s);
    double a, b;
    std::string rest;
    if (!(in >> a >> b) || (in >> rest)) throw InputError("config key '" + k + "': expected 'x, y'");
    return Vec2(a, b);
}

inline std::string fmt(double x) {
    std::ostringstream os;
    os << std::setprecision(17) << x;
    return os.str();
}

}  // namespace detail

inline void set_key(RunConfig& c, const std::string& k, const std::string& v) {
    using namespace detail;
    if (k == "case") c.case_id = parse_case(v);
    else if (k == "m") c.m = to_int(k, v);
    else if (k == "dt") c.dt = to_double(k, v);
    else if (k == "T") c.T = to_double(k, v);
    else if (k == "rho_f") c.rho_f = to_double(k, v);
    else if (k == "nu_f") c.nu_f = to_double(k, v);
    else if (k == "rho_s") c.rho_s = to_double(k, v);
    else if (k == "mu_s") c.mu_s = to_double(k, v);
    else if (k == "lambda_s") c.lambda_s = to_double(k, v);
    else if (k == "material") c.material = parse_material_kind(v);
    else if (k == "g_f") c.g_f = to_vec2(k, v);
    else if (k == "g_s") c.g_s = to_vec2(k, v);
    else if (k == "inflow") c.inflow = to_bool(k, v);
    else if (k == "ramp") c.ramp = to_bool(k, v);
    else if (k == "outflow") c.outflow = v;
    else if (k == "convection") c.convection = to_bool(k, v);
    else if (k == "h") c.h = to_double(k, v);
    else if (k == "h_far") c.h_far = to_double(k, v);
    else if (k == "mesh") c.mesh = v;
    else if (k == "solid_mesh") c.solid_mesh = v;
    else if (k == "output_dir") c.output_dir = v;
    else if (k == "monitor") c.monitor = to_bool(k, v);
    else if (k == "monitor_abort") c.monitor_abort = to_bool(k, v);
    else if (k == "monitor_slack") c.monitor_slack = to_double(k, v);
    else if (k == "quad_degree") c.quad_degree = to_int(k, v);
    else if (k == "solid_update") c.solid_update = parse_solid_update(v);
    else if (k == "v0") c.v0 = to_double(k, v);
    else if (k == "probe_point") {
        if (v == "none") c.probe_point.reset();
        else c.probe_point = to_vec2(k, v);
    }
    else if (k == "snapshot_every") c.snapshot_every = to_int(k, v);
    else if (k == "newton_tol") c.newton_tol = to_double(k, v);
    else if (k == "newton_max_iter") c.newton_max_iter = to_int(k, v);
    else throw InputError("unknown config key '" + k + "'");
}

/// Parses key-value text; the case preset is applied first.
inline RunConfig parse_config(std::istream& in) {
    std::vector<std::pair<std::string, std::string>> kv;
    std::string line;
    int lineno = 0;
    std::optional<CaseId> cid;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw InputError("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string k = detail::trim(line.substr(0, eq));
        const std::string v = detail::trim(line.substr(eq + 1));
        if (k.empty() || v.empty())
            throw InputError("config line " + std::to_string(lineno) + ": empty key or value");
        if (k == "case") cid = parse_case(v);
        kv.emplace_back(k, v);
    }
    RunConfig c = preset(cid.value_or(CaseId::I));
    for (const auto& [k, v] : kv) set_key(c, k, v);
    c.validate();
    return c;
}

inline RunConfig parse_config(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
}

/// Reads a config file; FSI_OUTPUT_DIR overrides output_dir.
inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open config " + path);
    RunConfig c = parse_config(in);
    if (const char* env = std::getenv("FSI_OUTPUT_DIR"); env && *env) c.output_dir = env;
    return c;
}

/// Fully resolved config; parse_config(serialize(c)) reproduces c.
inline std::string serialize(const RunConfig& c) {
    using detail::fmt;
    auto b = [](bool x) { return x ? "true" : "false"; };
    auto v2 = [](const Vec2& x) { return fmt(x.x()) + ", " + fmt(x.y()); };
    std::ostringstream os;
    os << "case = " << to_string(c.case_id) << "\n"
       << "m = " << c.m << "\n"
       << "dt = " << fmt(c.dt) << "\n"
       << "T = " << fmt(c.T) << "\n"
       << "rho_f = " << fmt(c.rho_f) << "\n"
       << "nu_f = " << fmt(c.nu_f) << "\n"
       << "rho_s = " << fmt(c.rho_s) << "\n"
       << "mu_s = " << fmt(c.mu_s) << "\n"
       << "lambda_s = " << fmt(c.lambda_s) << "\n"
       << "material = " << to_string(c.material) << "\n"
       << "g_f = " << v2(c.g_f) << "\n"
       << "g_s = " << v2(c.g_s) << "\n"
       << "inflow = " << b(c.inflow) << "\n"
       << "ramp = " << b(c.ramp) << "\n"
       << "outflow = " << c.outflow << "\n"
       << "convection = " << b(c.convection) << "\n"
       << "h = " << fmt(c.h) << "\n"
       << "h_far = " << fmt(c.h_far) << "\n";
    if (!c.mesh.empty()) os << "mesh = " << c.mesh << "\n";
    if (!c.solid_mesh.empty()) os << "solid_mesh = " << c.solid_mesh << "\n";
    os << "output_dir = " << c.output_dir << "\n"
       << "monitor = " << b(c.monitor) << "\n"
       << "monitor_abort = " << b(c.monitor_abort) << "\n"
       << "monitor_slack = " << fmt(c.monitor_slack) << "\n"
       << "quad_degree = " << c.quad_degree << "\n"
       << "solid_update = " << to_string(c.solid_update) << "\n"
       << "v0 = " << fmt(c.v0) << "\n"
       << "probe_point = " << (c.probe_point ? v2(*c.probe_point) : std::string("none")) << "\n"
       << "snapshot_every = " << c.snapshot_every << "\n"
       << "newton_tol = " << fmt(c.newton_tol) << "\n"
       << "newton_max_iter = " << c.newton_max_iter << "\n";
    return os.str();
}

inline bool operator==(const RunConfig& a, const RunConfig& b) { return serialize(a) == serialize(b); }

/// A ready-to-run case.
struct CaseSetup {
    FsiProblem problem;
    SystemState initial;
    std::optional<TractionProbe> probe;
    std::optional<MaterialPoint> tail;
    double inflow_x = 0.0;
};

namespace detail {

/// Interface pairs of two independently read meshes: bitwise-equal points.
inline std::vector<std::pair<int, int>> match_interface(const Mesh& f, const Mesh& s) {
    std::map<std::pair<double, double>, int> fl;
    for (int i : f.grid_points_with_marker(Marker::Interface))
        fl[{f.grid_points()[i].x(), f.grid_points()[i].y()}] = i;
    std::vector<std::pair<int, int>> out;
    for (int i : s.grid_points_with_marker(Marker::Interface)) {
        const auto it = fl.find({s.grid_points()[i].x(), s.grid_points()[i].y()});
        if (it == fl.end())
            throw InputError("solid interface point without a matching fluid point");
        out.emplace_back(it->second, i);
    }
    return out;
}

inline std::vector<std::pair<int, int>> body_edges_of(const Mesh& f) {
    std::vector<std::pair<int, int>> e;
    for (const auto& be : f.boundary_edges())
        if (be.marker == Marker::Interface) e.emplace_back(be.triangle, be.local_edge);
    return e;
}

}  // namespace detail

/// Carve grids of the two benchmark channels.
inline CarveSpec case_carve_spec(const RunConfig& c) {
    CarveSpec spec;
    const double h = c.h;
    spec.sides.right = c.outflow == "wall" ? Marker::Sigma1 : Marker::Sigma2;
    if (c.case_id == CaseId::I) {
        const double hf = c.h_far > 0.0 ? c.h_far : 3.0 * h;
        spec.xs = graded_lines(0.0, 6.5, h, hf, 0.9, 2.1, 1.0, {1.0, 1.5, 2.0});
        spec.ys = graded_lines(-0.5, 1.0, h, hf, -0.5, 0.1, 0.5, {0.0});
        spec.circle = {Vec2(1.5, -0.5), 0.5};
        spec.disk = DiskRole::Solid;
    } else {
        const double hx = c.h_far > 0.0 ? c.h_far : 5.0 * h;
        const double hy = c.h_far > 0.0 ? c.h_far : 4.0 * h;
        spec.xs = graded_lines(0.0, 2.5, h, hx, 0.1, 0.7, 0.3, {0.2, 0.6});
        spec.ys = graded_lines(0.0, 0.41, h, hy, 0.12, 0.28, 0.1, {0.19, 0.2, 0.21});
        spec.circle = {Vec2(0.2, 0.2), 0.05};
        spec.disk = DiskRole::Void;
        spec.bar = Rect{0.2, 0.6, 0.19, 0.21};
    }
    return spec;
}

inline VectorField case_inflow(const RunConfig& c, double x_in) {
    if (!c.inflow) return {};
    const bool ramp = c.ramp;
    auto g = [ramp](double t) { return ramp ? inflow_ramp(t) : 1.0; };
    // only the inflow side carries data; other Sigma1 points are walls
    if (c.case_id == CaseId::II)
        return [g, x_in](const Vec2& x, double t) -> Vec2 {
            if (x.x() != x_in) return Vec2::Zero();
            return Vec2(g(t) * (12.0 / 0.1681) * x.y() * (0.41 - x.y()), 0.0);
        };
    return [g, x_in](const Vec2& x, double t) -> Vec2 {
        if (x.x() != x_in) return Vec2::Zero();
        return Vec2(g(t) * (1.0 + 2.0 * x.y()) * (1.0 - x.y()), 0.0);
    };
}

inline CaseSetup build_case(const RunConfig& c) {
    c.validate();
    std::optional<Mesh> fluid, solid;
    std::vector<std::pair<int, int>> pairs, body;
    if (!c.mesh.empty()) {
        fluid = read_mesh(c.mesh);
        if (!c.solid_mesh.empty()) {
            solid = read_mesh(c.solid_mesh);
            pairs = detail::match_interface(*fluid, *solid);
        }
        body = detail::body_edges_of(*fluid);
    } else if (c.case_id != CaseId::Custom) {
        auto cm = carve_meshes(case_carve_spec(c));
        fluid = std::move(cm.fluid);
        solid = std::move(cm.solid);
        pairs = std::move(cm.interface_pairs);
        body = std::move(cm.body_edges);
    }
    double x_in = std::numeric_limits<double>::infinity();
    for (const auto& x : fluid->vertices()) x_in = std::min(x_in, x.x());

    Forcing f;
    f.g_fluid = c.g_f;
    f.g_solid = c.g_s;
    f.inflow = c.case_id == CaseId::Custom ? VectorField{} : case_inflow(c, x_in);
    if (fluid->has_marker(Marker::Sigma2)) f.fluid_traction = outflow_traction(c.rho_f, c.g_f);
    std::optional<MaterialModel> mat;
    if (solid) mat = MaterialModel(c.material, c.mu_s, c.lambda_s, c.rho_s);
    FsiProblem pb(std::move(*fluid), std::move(solid), std::move(pairs),
                  FluidParams{c.rho_f, c.nu_f, c.convection}, mat, std::move(f));
    pb.quad_degree = c.quad_degree;
    pb.solid_update = c.solid_update;
    pb.newton_tol = c.newton_tol;
    pb.newton_max_iter = c.newton_max_iter;

    SystemState s0 = pb.initial_state();
    if (c.v0 != 0.0 && pb.has_solid()) {
        const auto& z = pb.solid().grid_points();
        double ymin = std::numeric_limits<double>::infinity();
        for (const auto& x : z) ymin = std::min(ymin, x.y());
        for (int i = 0; i < pb.solid().num_grid_points(); ++i)
            s0.X[pb.dofs().solid_dof(i, 0)] = c.v0 * (z[i].y() - ymin);
        for (int i : pb.dofs().solid_dirichlet_points())
            for (int d = 0; d < 2; ++d) s0.X[pb.dofs().solid_dof(i, d)] = 0.0;
    }
    std::optional<TractionProbe> probe;
    if (!body.empty()) probe = TractionProbe{body, 1000.0};
    std::optional<MaterialPoint> tail;
    if (c.probe_point && pb.has_solid()) tail.emplace(pb.solid(), *c.probe_point);
    return CaseSetup{std::move(pb), std::move(s0), std::move(probe), std::move(tail), x_in};
}

}  // namespace fsi
