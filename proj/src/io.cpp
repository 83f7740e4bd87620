#include "solidfv/io.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <utility>

#include "solidfv/errors.hpp"
#include "solidfv/laws.hpp"

namespace solidfv {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_ws(const std::string& s) {
    std::istringstream in(s);
    std::vector<std::string> out;
    for (std::string tok; in >> tok;) out.push_back(tok);
    return out;
}

double parse_double(const std::string& tok, int line) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(tok, &used);
    } catch (const std::exception&) {
        throw ConfigError(line, "expected a number, got '" + tok + "'");
    }
    if (used != tok.size()) throw ConfigError(line, "trailing characters in number '" + tok + "'");
    return v;
}

long long parse_integer(const std::string& tok, int line) {
    std::size_t used = 0;
    long long v = 0;
    try {
        v = std::stoll(tok, &used);
    } catch (const std::exception&) {
        throw ConfigError(line, "expected an integer, got '" + tok + "'");
    }
    if (used != tok.size()) throw ConfigError(line, "trailing characters in integer '" + tok + "'");
    return v;
}

bool parse_bool(const std::string& tok, int line) {
    if (tok == "true" || tok == "on" || tok == "1") return true;
    if (tok == "false" || tok == "off" || tok == "0") return false;
    throw ConfigError(line, "expected a boolean (true/false/on/off), got '" + tok + "'");
}

std::vector<double> parse_numbers(const std::string& value, std::size_t count, int line,
                                  const std::string& key) {
    const std::vector<std::string> toks = split_ws(value);
    if (toks.size() != count)
        throw ConfigError(line, key + " expects " + std::to_string(count) + " numbers");
    std::vector<double> out;
    for (const std::string& t : toks) out.push_back(parse_double(t, line));
    return out;
}

PatchKind parse_patch_kind(const std::string& tok, int line) {
    if (tok == "displacement") return PatchKind::displacement;
    if (tok == "traction") return PatchKind::traction;
    if (tok == "symmetry") return PatchKind::symmetry;
    throw ConfigError(line, "unknown boundary kind '" + tok + "'");
}

void apply_entry(CaseConfig& cfg, const std::string& key, const std::string& value, int line) {
    const std::vector<std::string> toks = split_ws(value);

    if (key.rfind("bcs.", 0) == 0) {
        BcSpec bc;
        bc.patch = key.substr(4);
        if (bc.patch.empty()) throw ConfigError(line, "bcs entry is missing a patch name");
        if (toks.empty()) throw ConfigError(line, "empty boundary specification");
        bc.kind = parse_patch_kind(toks[0], line);
        std::size_t i = 1;
        if (bc.kind != PatchKind::symmetry) {
            if (toks.size() < 4)
                throw ConfigError(line, "boundary '" + bc.patch + "' needs a 3-component value");
            bc.value = {parse_double(toks[1], line), parse_double(toks[2], line),
                        parse_double(toks[3], line)};
            i = 4;
        }
        if (i < toks.size() && toks[i] == "ramp") {
            bc.ramp = true;
            ++i;
        }
        if (i != toks.size()) throw ConfigError(line, "trailing tokens in boundary specification");
        cfg.bcs.push_back(bc);
        return;
    }

    try {
        if (key == "mesh.generator") cfg.generator = value;
        else if (key == "mesh.extents") {
            const auto v = parse_numbers(value, 3, line, key);
            cfg.extents = {v[0], v[1], v[2]};
        } else if (key == "mesh.divisions") {
            if (toks.size() != 3) throw ConfigError(line, "mesh.divisions expects 3 integers");
            for (int i = 0; i < 3; ++i)
                cfg.divisions[i] = static_cast<int>(parse_integer(toks[i], line));
        } else if (key == "mesh.refinement") cfg.refinement = static_cast<int>(parse_integer(value, line));
        else if (key == "mesh.file") cfg.mesh_file = value;
        else if (key == "mesh.distort_factor") cfg.distort_factor = parse_double(value, line);
        else if (key == "mesh.distort_seed")
            cfg.distort_seed = static_cast<std::uint64_t>(parse_integer(value, line));
        else if (key == "material.law") cfg.law = value;
        else if (key == "material.E") cfg.E = parse_double(value, line);
        else if (key == "material.nu") cfg.nu = parse_double(value, line);
        else if (key == "material.density") cfg.density = parse_double(value, line);
        else if (key == "material.yield") cfg.yield_stress = parse_double(value, line);
        else if (key == "material.hardening") {
            const auto v = parse_numbers(value, 4, line, key);
            std::copy(v.begin(), v.end(), cfg.hardening.begin());
            cfg.has_hardening = true;
        } else if (key == "material.guccione") {
            const auto v = parse_numbers(value, 5, line, key);
            std::copy(v.begin(), v.end(), cfg.guccione.begin());
        } else if (key == "material.fibre") {
            const auto v = parse_numbers(value, 3, line, key);
            cfg.fibre = {v[0], v[1], v[2]};
        } else if (key == "material.finite_strain") cfg.finite_strain = parse_bool(value, line) ? 1 : 0;
        else if (key == "solver.algorithm") cfg.solver.algorithm = algorithm_from_string(value);
        else if (key == "solver.preconditioner")
            cfg.solver.preconditioner = preconditioner_from_string(value);
        else if (key == "solver.alpha") cfg.alpha = parse_double(value, line);
        else if (key == "solver.a_tol") cfg.solver.a_tol = parse_double(value, line);
        else if (key == "solver.r_tol") cfg.solver.r_tol = parse_double(value, line);
        else if (key == "solver.s_tol") cfg.solver.s_tol = parse_double(value, line);
        else if (key == "solver.max_outer") cfg.solver.max_outer = static_cast<int>(parse_integer(value, line));
        else if (key == "solver.inner_reduction") cfg.solver.inner_reduction = parse_double(value, line);
        else if (key == "solver.restart") cfg.solver.restart = static_cast<int>(parse_integer(value, line));
        else if (key == "solver.max_krylov") cfg.solver.max_krylov = static_cast<int>(parse_integer(value, line));
        else if (key == "solver.line_search") cfg.solver.line_search = parse_bool(value, line);
        else if (key == "solver.relaxation") cfg.solver.relaxation = parse_double(value, line);
        else if (key == "solver.right_preconditioned")
            cfg.solver.right_preconditioned = parse_bool(value, line);
        else if (key == "time.dt") cfg.dt = parse_double(value, line);
        else if (key == "time.steps") cfg.steps = static_cast<int>(parse_integer(value, line));
        else if (key == "time.increments") cfg.increments = static_cast<int>(parse_integer(value, line));
        else if (key == "output.directory") cfg.output_dir = value;
        else if (key == "output.write_interval")
            cfg.write_interval = static_cast<int>(parse_integer(value, line));
        else throw ConfigError(line, "unknown key '" + key + "'");
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        // Name-to-enum helpers throw InvalidArgument; attach the line number.
        throw ConfigError(line, e.what());
    }
}

}  // namespace

CaseConfig parse_config(std::istream& in) {
    CaseConfig cfg;
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        std::string s = raw.substr(0, raw.find('#'));
        s = trim(s);
        if (s.empty()) continue;
        const auto eq = s.find('=');
        if (eq == std::string::npos)
            throw ConfigError(line, "expected 'section.key = value'");
        const std::string key = trim(s.substr(0, eq));
        const std::string value = trim(s.substr(eq + 1));
        if (key.empty()) throw ConfigError(line, "missing key before '='");
        if (key.find('.') == std::string::npos)
            throw ConfigError(line, "key '" + key + "' is missing its section prefix");
        if (value.empty()) throw ConfigError(line, "empty value for '" + key + "'");
        apply_entry(cfg, key, value, line);
    }
    return cfg;
}

CaseConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config file '" + path + "'");
    return parse_config(in);
}

namespace {

std::shared_ptr<MechanicalLaw> build_law(const CaseConfig& cfg) {
    const bool needs_enu = cfg.law != "guccione";
    if (needs_enu) {
        if (cfg.E <= 0.0) throw InvalidArgument("material.E must be positive");
        if (cfg.nu <= -1.0 || cfg.nu >= 0.5)
            throw InvalidArgument("material.nu must lie in (-1, 0.5)");
    }
    const double mu = mu_from(cfg.E, cfg.nu);
    if (cfg.law == "hooke") return std::make_shared<HookeLaw>(mu, lambda_from(cfg.E, cfg.nu));
    if (cfg.law == "stvk")
        return std::make_shared<StVenantKirchhoffLaw>(mu, lambda_from(cfg.E, cfg.nu));
    if (cfg.law == "neo-hookean")
        return std::make_shared<NeoHookeanLaw>(mu, kappa_from(cfg.E, cfg.nu));
    if (cfg.law == "j2") {
        HardeningCurve curve;
        if (cfg.has_hardening)
            curve = HardeningCurve::saturation(cfg.hardening[0], cfg.hardening[1],
                                               cfg.hardening[2], cfg.hardening[3]);
        else if (cfg.yield_stress > 0.0)
            curve = HardeningCurve::perfect(cfg.yield_stress);
        else
            throw InvalidArgument("j2 law needs material.hardening or material.yield");
        return std::make_shared<J2PlasticLaw>(mu, kappa_from(cfg.E, cfg.nu), curve);
    }
    if (cfg.law == "guccione") {
        GuccioneParams p;
        p.C = cfg.guccione[0];
        p.c_f = cfg.guccione[1];
        p.c_t = cfg.guccione[2];
        p.c_fs = cfg.guccione[3];
        p.kappa = cfg.guccione[4];
        if (p.C <= 0.0) throw InvalidArgument("material.guccione C must be positive");
        const double fn = norm(cfg.fibre);
        if (fn <= 0.0) throw InvalidArgument("material.fibre must be nonzero");
        p.f0 = cfg.fibre / fn;
        return std::make_shared<GuccioneLaw>(p);
    }
    throw InvalidArgument("unknown material.law '" + cfg.law + "'");
}

}  // namespace

Simulation build_simulation(const CaseConfig& cfg) {
    Simulation sim;
    if (cfg.generator == "box") {
        BoxPatchSpec spec;
        spec.fill(PatchKind::traction);
        const char* names[6] = {"xmin", "xmax", "ymin", "ymax", "zmin", "zmax"};
        for (const BcSpec& bc : cfg.bcs) {
            const auto it = std::find(std::begin(names), std::end(names), bc.patch);
            if (it == std::end(names))
                throw InvalidArgument("bcs: no box patch named '" + bc.patch + "'");
            spec[it - std::begin(names)] = bc.kind;
        }
        sim.def.mesh = generate_box_hex(cfg.extents, cfg.divisions, spec);
        if (cfg.distort_factor > 0.0)
            sim.def.mesh = distort_mesh(sim.def.mesh, cfg.distort_factor, cfg.distort_seed);
    } else if (cfg.generator == "cook") {
        sim.def.mesh = generate_cook_quad(cfg.refinement);
    } else if (cfg.generator == "file") {
        if (cfg.mesh_file.empty())
            throw InvalidArgument("mesh.file is required with mesh.generator = file");
        sim.def.mesh = read_mesh(cfg.mesh_file);
    } else {
        throw InvalidArgument("mesh.generator must be box, cook, or file");
    }
    sim.def.geometry = compute_geometry(sim.def.mesh);
    sim.def.name = cfg.generator;
    sim.def.law = build_law(cfg);

    for (const Patch& patch : sim.def.mesh.patches) {
        const BcSpec* spec = nullptr;
        for (const BcSpec& bc : cfg.bcs)
            if (bc.patch == patch.name) spec = &bc;
        if (!spec)
            throw InvalidArgument("bcs: patch '" + patch.name + "' has no boundary condition");
        if (spec->kind != patch.kind)
            throw InvalidArgument("bcs: patch '" + patch.name +
                                  "' kind does not match the mesh definition");
        const Vec3 v = spec->value;
        const bool ramp = spec->ramp;
        sim.def.bcs.push_back(
            {spec->kind, [v, ramp](const Vec3&, double t) { return ramp ? v * t : v; }});
    }
    validate_boundary_conditions(sim.def.mesh, sim.def.bcs);

    sim.def.disc.alpha = cfg.alpha;
    sim.alpha = cfg.alpha;
    sim.def.disc.total_lagrangian =
        cfg.finite_strain < 0 ? sim.def.law->finite_strain() : cfg.finite_strain == 1;
    if (cfg.dt > 0.0) {
        if (cfg.steps < 1) throw InvalidArgument("time.steps must be positive when time.dt is set");
        if (cfg.density <= 0.0)
            throw InvalidArgument("material.density must be positive for a transient run");
        sim.def.disc.transient = true;
        sim.def.disc.dt = cfg.dt;
        sim.def.disc.rho = cfg.density;
        sim.def.n_steps = cfg.steps;
    } else {
        if (cfg.increments < 1) throw InvalidArgument("time.increments must be at least 1");
        sim.def.n_steps = cfg.increments;
    }
    sim.solver = cfg.solver;
    sim.solver.validate();
    sim.output_dir = cfg.output_dir;
    sim.write_interval = cfg.write_interval;
    return sim;
}

namespace {

// VTK CELLS entry: leading integer count followed by the connectivity stream.
struct VtkCell {
    int type = 0;
    std::vector<int> stream;
};

// Chains 2-point edges into a counter-clockwise polygon loop; empty on failure.
std::vector<int> chain_polygon(const Mesh& mesh, const std::vector<int>& faces) {
    std::vector<std::array<int, 2>> edges;
    for (int f : faces) {
        if (mesh.faces[f].size() != 2) return {};
        edges.push_back({mesh.faces[f][0], mesh.faces[f][1]});
    }
    std::vector<bool> used(edges.size(), false);
    std::vector<int> loop{edges[0][0], edges[0][1]};
    used[0] = true;
    while (loop.size() < edges.size()) {
        const int tail = loop.back();
        bool advanced = false;
        for (std::size_t e = 0; e < edges.size(); ++e) {
            if (used[e]) continue;
            if (edges[e][0] == tail || edges[e][1] == tail) {
                loop.push_back(edges[e][0] == tail ? edges[e][1] : edges[e][0]);
                used[e] = true;
                advanced = true;
                break;
            }
        }
        if (!advanced) return {};
    }
    double area2 = 0.0;  // shoelace; loop is closed implicitly
    for (std::size_t i = 0; i < loop.size(); ++i) {
        const Vec3& a = mesh.points[loop[i]];
        const Vec3& b = mesh.points[loop[(i + 1) % loop.size()]];
        area2 += a.x * b.y - b.x * a.y;
    }
    if (area2 < 0.0) std::reverse(loop.begin(), loop.end());
    return loop;
}

// Reconstructs the VTK hexahedron corner order (bottom loop with inward normal,
// then the vertically adjacent top corners); empty when the cell is not a hex.
std::vector<int> hex_corners(const Mesh& mesh, int c) {
    const std::vector<int>& fs = mesh.cell_faces[c];
    if (fs.size() != 6) return {};
    std::set<int> unique_pts;
    std::set<std::pair<int, int>> edges;
    for (int f : fs) {
        const std::vector<int>& pts = mesh.faces[f];
        if (pts.size() != 4) return {};
        for (std::size_t i = 0; i < 4; ++i) {
            unique_pts.insert(pts[i]);
            const int a = pts[i], b = pts[(i + 1) % 4];
            edges.insert({std::min(a, b), std::max(a, b)});
        }
    }
    if (unique_pts.size() != 8 || edges.size() != 12) return {};

    std::vector<int> bottom = mesh.faces[fs[0]];
    if (mesh.owner[fs[0]] == c) std::reverse(bottom.begin(), bottom.end());

    std::vector<int> corners = bottom;
    for (int b : bottom) {
        int partner = -1;
        for (int q : unique_pts) {
            if (std::find(bottom.begin(), bottom.end(), q) != bottom.end()) continue;
            if (edges.count({std::min(b, q), std::max(b, q)})) {
                if (partner != -1) return {};
                partner = q;
            }
        }
        if (partner == -1) return {};
        corners.push_back(partner);
    }
    return corners;
}

VtkCell vtk_cell(const Mesh& mesh, int c) {
    if (mesh.dim == 2) {
        const std::vector<int> loop = chain_polygon(mesh, mesh.cell_faces[c]);
        if (loop.size() == 4) return {9, loop};  // VTK_QUAD
        if (loop.size() > 4) return {7, loop};   // VTK_POLYGON
    } else {
        const std::vector<int> corners = hex_corners(mesh, c);
        if (!corners.empty()) return {12, corners};  // VTK_HEXAHEDRON
    }
    // VTK_POLYHEDRON face stream: nFaces, then (npts, ids...) per face.
    VtkCell cell;
    cell.type = 42;
    cell.stream.push_back(static_cast<int>(mesh.cell_faces[c].size()));
    for (int f : mesh.cell_faces[c]) {
        cell.stream.push_back(static_cast<int>(mesh.faces[f].size()));
        for (int p : mesh.faces[f]) cell.stream.push_back(p);
    }
    return cell;
}

}  // namespace

void write_vtk(const Mesh& mesh, const std::string& path, const std::vector<Vec3>& displacement,
               const std::vector<Vec3>* velocity, const std::vector<Mat3>* stress) {
    if (static_cast<int>(displacement.size()) != mesh.n_cells)
        throw InvalidArgument("write_vtk: displacement field size does not match the mesh");
    if (velocity && static_cast<int>(velocity->size()) != mesh.n_cells)
        throw InvalidArgument("write_vtk: velocity field size does not match the mesh");
    if (stress && static_cast<int>(stress->size()) != mesh.n_cells)
        throw InvalidArgument("write_vtk: stress field size does not match the mesh");

    std::ofstream out(path);
    if (!out) throw Error("write_vtk: cannot open '" + path + "'");
    out.precision(12);

    out << "# vtk DataFile Version 3.0\n";
    out << "cell-centred solid mechanics fields\n";
    out << "ASCII\nDATASET UNSTRUCTURED_GRID\n";
    out << "POINTS " << mesh.points.size() << " double\n";
    for (const Vec3& p : mesh.points) out << p.x << ' ' << p.y << ' ' << p.z << '\n';

    std::vector<VtkCell> cells;
    std::size_t total = 0;
    for (int c = 0; c < mesh.n_cells; ++c) {
        cells.push_back(vtk_cell(mesh, c));
        total += cells.back().stream.size() + 1;
    }
    out << "CELLS " << mesh.n_cells << ' ' << total << '\n';
    for (const VtkCell& cell : cells) {
        out << cell.stream.size();
        for (int v : cell.stream) out << ' ' << v;
        out << '\n';
    }
    out << "CELL_TYPES " << mesh.n_cells << '\n';
    for (const VtkCell& cell : cells) out << cell.type << '\n';

    out << "CELL_DATA " << mesh.n_cells << '\n';
    out << "VECTORS displacement double\n";
    for (const Vec3& u : displacement) out << u.x << ' ' << u.y << ' ' << u.z << '\n';
    if (velocity) {
        out << "VECTORS velocity double\n";
        for (const Vec3& v : *velocity) out << v.x << ' ' << v.y << ' ' << v.z << '\n';
    }
    if (stress) {
        out << "TENSORS stress double\n";
        for (const Mat3& s : *stress) {
            for (int i = 0; i < 3; ++i)
                out << s(i, 0) << ' ' << s(i, 1) << ' ' << s(i, 2) << '\n';
        }
    }
    if (!out) throw Error("write_vtk: write to '" + path + "' failed");
}

void write_metrics_csv(const SteppingResult& result, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("write_metrics_csv: cannot open '" + path + "'");
    out.precision(12);
    out << "step,status,outer_iters,krylov_iters,initial_residual,final_residual,"
           "wall_seconds,detail\n";
    long long outer = 0, krylov = 0;
    double wall = 0.0;
    for (const SolveReport& r : result.steps) {
        out << r.step << ',' << to_string(r.status) << ',' << r.outer_iters << ','
            << r.krylov_iters << ',' << r.initial_residual << ',' << r.final_residual << ','
            << r.wall_seconds << ',' << r.detail << '\n';
        outer += r.outer_iters;
        krylov += r.krylov_iters;
        wall += r.wall_seconds;
    }
    out << "total,," << outer << ',' << krylov << ",,," << wall << ",\n";
    if (!out) throw Error("write_metrics_csv: write to '" + path + "' failed");
}

void write_iterations_csv(const SteppingResult& result, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("write_iterations_csv: cannot open '" + path + "'");
    out.precision(12);
    out << "step,iter,r_norm,krylov_iters,s\n";
    for (const SolveReport& r : result.steps)
        for (const IterationRecord& it : r.iterations)
            out << it.step << ',' << it.iter << ',' << it.r_norm << ',' << it.krylov_iters << ','
                << it.s << '\n';
    if (!out) throw Error("write_iterations_csv: write to '" + path + "' failed");
}

int thread_cap() {
    const char* env = std::getenv("SOLIDFV_THREADS");
    if (!env) return 1;
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1) return 1;
    return static_cast<int>(v);
}

}  // namespace solidfv
