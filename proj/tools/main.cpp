// Command-line driver: runs configured simulations, mesh-refinement studies, the
// cavity analytical probe, and mesh export. Exit codes: 0 complete/converged,
// 2 solver divergence (reports still written), 1 usage or configuration errors.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "solidfv/cases.hpp"
#include "solidfv/errors.hpp"
#include "solidfv/io.hpp"
#include "solidfv/laws.hpp"

namespace {

using namespace solidfv;

struct SharedFlags {
    std::string algorithm;
    std::string preconditioner;
    double alpha = -1.0;
    std::int64_t seed = -1;
};

void add_solver_flags(CLI::App* cmd, SharedFlags& flags) {
    cmd->add_option("--algorithm", flags.algorithm, "segregated | jfnk");
    cmd->add_option("--preconditioner", flags.preconditioner,
                    "automatic | none | ilu0 | ilu1 | ilu2 | lu");
}

std::vector<Mat3> cell_stresses(const ResidualEvaluator& eval, const std::vector<Vec3>& u) {
    const std::vector<Mat3> grads = eval.gradients(u);
    std::vector<Mat3> sigma(grads.size());
    for (std::size_t c = 0; c < grads.size(); ++c)
        sigma[c] = eval.law().stress(static_cast<int>(c), grads[c]);
    return sigma;
}

int cmd_run(const std::string& config_path, const SharedFlags& flags) {
    CaseConfig cfg = parse_config_file(config_path);
    if (!flags.algorithm.empty()) cfg.solver.algorithm = algorithm_from_string(flags.algorithm);
    if (!flags.preconditioner.empty())
        cfg.solver.preconditioner = preconditioner_from_string(flags.preconditioner);
    if (flags.alpha >= 0.0) cfg.alpha = flags.alpha;
    if (flags.seed >= 0) cfg.distort_seed = static_cast<std::uint64_t>(flags.seed);

    Simulation sim = build_simulation(cfg);
    std::filesystem::create_directories(sim.output_dir);
    const auto out = [&sim](const std::string& name) {
        return (std::filesystem::path(sim.output_dir) / name).string();
    };

    ResidualEvaluator eval = sim.def.make_evaluator();
    VectorField field(sim.def.mesh.n_cells);

    StepCallback on_step;
    if (sim.write_interval > 0) {
        on_step = [&](int step, const VectorField& f) {
            if (step % sim.write_interval != 0) return;
            char name[32];
            std::snprintf(name, sizeof(name), "step_%06d.vtk", step);
            write_vtk(sim.def.mesh, out(name), f.u,
                      sim.def.disc.transient ? &f.v_old : nullptr, nullptr);
        };
    }

    const SteppingResult result = run_steps(eval, field, sim.solver, sim.def.n_steps, on_step);

    write_metrics_csv(result, out("metrics.csv"));
    write_iterations_csv(result, out("iterations.csv"));
    try {
        const std::vector<Mat3> sigma = cell_stresses(eval, field.u);
        write_vtk(sim.def.mesh, out("fields.vtk"), field.u,
                  sim.def.disc.transient ? &field.v_old : nullptr, &sigma);
    } catch (const Error& e) {
        std::cerr << "warning: field output failed: " << e.what() << "\n";
    }

    long long outer = 0, krylov = 0;
    for (const SolveReport& r : result.steps) {
        outer += r.outer_iters;
        krylov += r.krylov_iters;
    }
    std::cout << "status: " << to_string(result.status) << "  steps: " << result.steps.size()
              << "/" << sim.def.n_steps << "  outer: " << outer << "  krylov: " << krylov
              << "  wall: " << result.wall_seconds << " s\n";
    std::cout << "wrote " << out("fields.vtk") << ", " << out("metrics.csv") << ", "
              << out("iterations.csv") << "\n";
    return result.status == SolveStatus::converged ? 0 : 2;
}

int cmd_study(const std::string& case_name, int levels, const std::string& output,
              const SharedFlags& flags) {
    SolverConfig solver;
    if (!flags.algorithm.empty()) solver.algorithm = algorithm_from_string(flags.algorithm);
    if (!flags.preconditioner.empty())
        solver.preconditioner = preconditioner_from_string(flags.preconditioner);
    const std::uint64_t seed = flags.seed >= 0 ? static_cast<std::uint64_t>(flags.seed) : 42;

    const std::vector<StudyRow> rows = run_order_study(case_name, levels, solver, seed);
    const std::string path = output.empty() ? case_name + "-study.csv" : output;
    write_study_csv(rows, path);

    std::cout << "h\tcells\tL2_u\torder\tLinf_sig\tstatus\n";
    bool all_converged = true;
    for (const StudyRow& r : rows) {
        std::cout << r.h << '\t' << r.cells << '\t' << r.l2_u << '\t' << r.order_l2_u << '\t'
                  << r.linf_sig << '\t' << r.status << '\n';
        all_converged = all_converged && r.status == to_string(SolveStatus::converged);
    }
    std::cout << "wrote " << path << "\n";
    return all_converged ? 0 : 2;
}

int cmd_probe_cavity(int samples, std::int64_t seed_flag) {
    const double a = 0.2, T = 1.0e6, nu = 0.3, E = 200.0e9;
    const std::uint64_t seed = seed_flag >= 0 ? static_cast<std::uint64_t>(seed_flag) : 42;
    bool ok = true;

    // Stress concentration at the cavity equator.
    const double szz = cavity_exact({a, 0.0, 0.0}, a, T, nu, E).sigma(2, 2) / T;
    const double expected = 45.0 / 22.0;
    const bool equator_ok = std::abs(szz - expected) <= 1e-10;
    std::cout << (equator_ok ? "PASS" : "FAIL") << " equator sigma_zz/T = " << szz
              << " (expected " << expected << ")\n";
    ok = ok && equator_ok;

    // Far-field recovery of the remote uniaxial state.
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    double far_worst = 0.0;
    for (int i = 0; i < 20; ++i) {
        Vec3 dir{gauss(rng), gauss(rng), gauss(rng)};
        dir = dir / norm(dir);
        Mat3 sigma = cavity_exact(dir * (100.0 * a), a, T, nu, E).sigma;
        sigma(2, 2) -= T;
        far_worst = std::max(far_worst, frobenius_norm(sigma) / T);
    }
    const bool far_ok = far_worst <= 1e-3;
    std::cout << (far_ok ? "PASS" : "FAIL") << " far-field deviation at R=100a: " << far_worst
              << " T (tolerance 1e-3)\n";
    ok = ok && far_ok;

    // Traction-free cavity surface.
    double surf_worst = 0.0;
    for (int i = 0; i < 20; ++i) {
        Vec3 n{gauss(rng), gauss(rng), gauss(rng)};
        n = n / norm(n);
        const Mat3 sigma = cavity_exact(n * a, a, T, nu, E).sigma;
        surf_worst = std::max(surf_worst, norm(sigma * n) / T);
    }
    const bool surf_ok = surf_worst <= 1e-8;
    std::cout << (surf_ok ? "PASS" : "FAIL") << " cavity-surface traction: " << surf_worst
              << " T (tolerance 1e-8)\n";
    ok = ok && surf_ok;

    // Pointwise equilibrium via fourth-order central differences.
    std::uniform_real_distribution<double> radius(1.05 * a, 5.0 * a);
    const double h = 1e-3 * a;
    double div_worst = 0.0;
    for (int i = 0; i < samples; ++i) {
        Vec3 dir{gauss(rng), gauss(rng), gauss(rng)};
        const Vec3 x = dir / norm(dir) * radius(rng);
        Vec3 div;
        for (int axis = 0; axis < 3; ++axis) {
            Vec3 e;
            e[axis] = 1.0;
            const Mat3 sp2 = cavity_exact(x + e * (2.0 * h), a, T, nu, E).sigma;
            const Mat3 sp1 = cavity_exact(x + e * h, a, T, nu, E).sigma;
            const Mat3 sm1 = cavity_exact(x - e * h, a, T, nu, E).sigma;
            const Mat3 sm2 = cavity_exact(x - e * (2.0 * h), a, T, nu, E).sigma;
            for (int j = 0; j < 3; ++j)
                div[j] += (-sp2(axis, j) + 8.0 * sp1(axis, j) - 8.0 * sm1(axis, j) +
                           sm2(axis, j)) /
                          (12.0 * h);
        }
        div_worst = std::max(div_worst, norm(div) / (T / a));
    }
    const bool div_ok = div_worst <= 1e-5;
    std::cout << (div_ok ? "PASS" : "FAIL") << " equilibrium |div sigma| at " << samples
              << " exterior points: " << div_worst << " T/a (tolerance 1e-5)\n";
    ok = ok && div_ok;

    return ok ? 0 : 2;
}

int cmd_export_mesh(const std::string& case_name, const std::string& output,
                    const std::string& format) {
    const CaseDefinition def = build_case(case_name);
    std::string path = output;
    if (format == "native") {
        if (path.empty()) path = case_name + ".msh";
        write_mesh(def.mesh, path);
    } else if (format == "vtk") {
        if (path.empty()) path = case_name + ".vtk";
        write_vtk(def.mesh, path, std::vector<Vec3>(def.mesh.n_cells));
    } else {
        std::cerr << "error: unknown format '" << format << "' (use native or vtk)\n";
        return 1;
    }
    std::cout << "wrote " << path << " (" << def.mesh.n_cells << " cells)\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cell-centred finite-volume solid mechanics solver"};
    app.require_subcommand(1);

    SharedFlags run_flags, study_flags;

    std::string config_path;
    CLI::App* run = app.add_subcommand("run", "Run a configured simulation");
    run->add_option("config", config_path, "configuration file")->required();
    add_solver_flags(run, run_flags);
    run->add_option("--alpha", run_flags.alpha, "stabilisation scaling");
    run->add_option("--seed", run_flags.seed, "mesh distortion seed");

    std::string study_case;
    int levels = 3;
    std::string study_output;
    CLI::App* study = app.add_subcommand("study", "Mesh refinement study (mms | mms-distorted)");
    study->add_option("case", study_case, "case with an exact solution")->required();
    study->add_option("--levels", levels, "number of 2x refinements");
    study->add_option("--output", study_output, "CSV path");
    add_solver_flags(study, study_flags);
    study->add_option("--seed", study_flags.seed, "mesh distortion seed");

    int samples = 50;
    std::int64_t probe_seed = -1;
    CLI::App* probe = app.add_subcommand("probe-cavity", "Check the cavity analytical solution");
    probe->add_option("--samples", samples, "number of equilibrium sample points");
    probe->add_option("--seed", probe_seed, "sample-point seed");

    std::string export_case, export_output, export_format = "native";
    CLI::App* exprt = app.add_subcommand("export-mesh", "Write a built-in case mesh to disk");
    exprt->add_option("case", export_case, "built-in case name")->required();
    exprt->add_option("--output", export_output, "output path");
    exprt->add_option("--format", export_format, "native | vtk");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (run->parsed()) return cmd_run(config_path, run_flags);
        if (study->parsed()) return cmd_study(study_case, levels, study_output, study_flags);
        if (probe->parsed()) return cmd_probe_cavity(samples, probe_seed);
        if (exprt->parsed()) return cmd_export_mesh(export_case, export_output, export_format);
    } catch (const ConfigError& e) {
        std::cerr << "error: line " << e.line << ": " << e.what() << "\n";
        return 1;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
