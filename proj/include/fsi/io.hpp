#pragma once

/// @file io.hpp
/// @brief CSV time series, legacy VTK snapshots and the run manifest.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <string>
#include <vector>

#include "fsi/config.hpp"
#include "fsi/problem.hpp"
#include "fsi/stepper.hpp"

namespace fsi {

inline const char* kLedgerHeader = "step,t,E_kin_f,E_kin_s,E_strain,D_visc,power,stab_residual";
inline const char* kForcesHeader = "t,drag,lift,ux_tail,uy_tail";

/// Line-buffered CSV file: every row is flushed so partial runs stay readable.
class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::string& header) : out_(path) {
        if (!out_) throw Error("cannot write " + path.string());
        out_ << header << '\n' << std::flush;
        out_ << std::setprecision(17);
    }

    void row(std::initializer_list<double> values) {
        bool first = true;
        for (double v : values) {
            if (!first) out_ << ',';
            out_ << v;
            first = false;
        }
        out_ << '\n' << std::flush;
    }

private:
    std::ofstream out_;
};

inline void write_ledger_row(CsvWriter& w, const EnergyEntry& e) {
    w.row({static_cast<double>(e.step), e.t, e.kin_f, e.kin_s, e.strain, e.dissipation, e.power,
           e.stab_residual});
}

namespace detail {

/// Four linear sub-triangles of a P2 triangle in local grid order.
inline constexpr int kSubTriangles[4][3] = {{0, 3, 5}, {3, 1, 4}, {5, 4, 2}, {3, 4, 5}};

inline void vtk_header(std::ostream& os, const std::string& title, std::span<const Vec2> pts) {
    os << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
    os << "POINTS " << pts.size() << " double\n";
    for (const auto& x : pts) os << x.x() << ' ' << x.y() << " 0\n";
}

inline void vtk_cells(std::ostream& os, const Mesh& m) {
    const int nc = 4 * m.num_triangles();
    os << "CELLS " << nc << ' ' << 4 * nc << '\n';
    for (int j = 0; j < m.num_triangles(); ++j)
        for (const auto& s : kSubTriangles)
            os << "3 " << m.tri_grid(j)[s[0]] << ' ' << m.tri_grid(j)[s[1]] << ' ' << m.tri_grid(j)[s[2]] << '\n';
    os << "CELL_TYPES " << nc << '\n';
    for (int c = 0; c < nc; ++c) os << "5\n";
}

inline void vtk_vectors(std::ostream& os, const std::string& name, std::span<const Vec2> v) {
    os << "VECTORS " << name << " double\n";
    for (const auto& x : v) os << x.x() << ' ' << x.y() << " 0\n";
}

}  // namespace detail

/// Fluid snapshot on the current mesh: u and p (p linear, so mid-edge values
/// are edge averages).
inline void write_fluid_vtk(const std::filesystem::path& path, const FsiProblem& pb, const SystemState& s) {
    std::ofstream os(path);
    if (!os) throw Error("cannot write " + path.string());
    os << std::setprecision(12);
    const Mesh& m = pb.fluid();
    detail::vtk_header(os, "fluid t=" + std::to_string(s.t), s.fluid_points);
    detail::vtk_cells(os, m);
    os << "POINT_DATA " << m.num_grid_points() << '\n';
    detail::vtk_vectors(os, "u", pb.fluid_velocity(s.X));
    const auto p = pb.pressure(s.X);
    std::vector<double> pg(m.num_grid_points());
    for (int v = 0; v < m.num_vertices(); ++v) pg[v] = p[v];
    for (int e = 0; e < m.num_edges(); ++e) {
        const auto [a, b] = m.edge_vertices(e);
        pg[m.edge_grid_point(e)] = 0.5 * (p[a] + p[b]);
    }
    os << "SCALARS p double 1\nLOOKUP_TABLE default\n";
    for (double x : pg) os << x << '\n';
}

/// Solid snapshot on the deformed configuration phi with v and displacement.
inline void write_solid_vtk(const std::filesystem::path& path, const FsiProblem& pb, const SystemState& s) {
    std::ofstream os(path);
    if (!os) throw Error("cannot write " + path.string());
    os << std::setprecision(12);
    const Mesh& m = pb.solid();
    detail::vtk_header(os, "solid t=" + std::to_string(s.t), s.phi);
    detail::vtk_cells(os, m);
    os << "POINT_DATA " << m.num_grid_points() << '\n';
    detail::vtk_vectors(os, "v", pb.solid_velocity(s.X));
    std::vector<Vec2> d(m.num_grid_points());
    for (int i = 0; i < m.num_grid_points(); ++i) d[i] = s.phi[i] - m.grid_points()[i];
    detail::vtk_vectors(os, "displacement", d);
}

/// Resolved config as a loadable file, with a comment header.
inline void write_manifest(const std::filesystem::path& path, const RunConfig& c,
                           const std::vector<std::string>& notes = {}) {
    std::ofstream os(path);
    if (!os) throw Error("cannot write " + path.string());
    os << "# fsi_bench run manifest\n";
    for (const auto& n : notes) os << "# " << n << '\n';
    os << serialize(c);
}

/// Runs a configured case and writes ledger.csv, forces.csv, snapshots and
/// manifest.cfg into the output directory.
struct RunOutputs {
    RunResult result;
    std::filesystem::path dir;
    std::vector<std::string> files;
};

inline RunOutputs run_case(const RunConfig& c, std::ostream* log = nullptr) {
    namespace fs = std::filesystem;
    CaseSetup cs = build_case(c);
    RunOutputs out;
    out.dir = c.output_dir;
    fs::create_directories(out.dir);
    const auto& pb = cs.problem;
    std::vector<std::string> notes{
        "fluid triangles " + std::to_string(pb.fluid().num_triangles()),
        "solid triangles " + std::to_string(pb.has_solid() ? pb.solid().num_triangles() : 0),
        "unknowns " + std::to_string(pb.dofs().size())};
    write_manifest(out.dir / "manifest.cfg", c, notes);
    out.files.push_back("manifest.cfg");
    CsvWriter ledger(out.dir / "ledger.csv", kLedgerHeader);
    out.files.push_back("ledger.csv");
    std::optional<CsvWriter> forces;
    if (cs.probe || cs.tail) {
        forces.emplace(out.dir / "forces.csv", kForcesHeader);
        out.files.push_back("forces.csv");
    }
    auto snapshot = [&](const SystemState& s) {
        char name[64];
        std::snprintf(name, sizeof name, "fluid_%06d.vtk", s.step);
        write_fluid_vtk(out.dir / name, pb, s);
        out.files.push_back(name);
        if (pb.has_solid()) {
            std::snprintf(name, sizeof name, "solid_%06d.vtk", s.step);
            write_solid_vtk(out.dir / name, pb, s);
            out.files.push_back(name);
        }
    };
    const int nsteps = num_steps(c.T, c.dt);
    RunOptions ro;
    ro.dt = c.dt;
    ro.T = c.T;
    ro.monitor = {c.monitor, c.monitor_abort, c.monitor_slack};
    ro.observer = [&](const SystemState& s, const StepReport* r, const EnergyEntry& e) {
        write_ledger_row(ledger, e);
        if (forces) {
            const Force f = cs.probe ? lift_drag(pb, s, *cs.probe) : Force{};
            const Vec2 d = cs.tail ? cs.tail->displacement(s.phi) : Vec2::Zero();
            forces->row({s.t, f.drag, f.lift, d.x(), d.y()});
        }
        const bool snap = r == nullptr || s.step == nsteps ||
                          (c.snapshot_every > 0 && s.step % c.snapshot_every == 0);
        if (snap) snapshot(s);
        if (log && r)
            *log << "step " << r->step << " t=" << r->t << " stab=" << r->stab_residual
                 << " minJ=" << r->min_jacobian_new << " |w|max=" << r->max_mesh_velocity
                 << " solver=" << r->solver_residual << (r->violation ? " VIOLATION" : "") << '\n';
    };
    out.result = run(pb, ro, cs.initial);
    return out;
}

}  // namespace fsi
