#pragma once

// Case configuration parsing (line-oriented `section.key = value` text), simulation
// assembly, legacy-VTK field output, and solver metrics export.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "solidfv/cases.hpp"

namespace solidfv {

struct BcSpec {
    std::string patch;
    PatchKind kind = PatchKind::traction;
    Vec3 value;         // metres for displacement, Pa for traction
    bool ramp = false;  // scale by the load fraction / leave constant in time
};

// Parsed configuration. SI units throughout: Pa, m, s, kg/m^3.
struct CaseConfig {
    // [mesh]
    std::string generator = "box";  // box | cook | file
    std::array<double, 3> extents{1.0, 1.0, 1.0};
    std::array<int, 3> divisions{1, 1, 1};
    int refinement = 1;  // cook generator level
    std::string mesh_file;
    double distort_factor = 0.0;
    std::uint64_t distort_seed = 42;

    // [material]
    std::string law = "hooke";  // hooke | stvk | neo-hookean | guccione | j2
    double E = 0.0, nu = 0.0;
    double density = 0.0;
    double yield_stress = 0.0;                    // j2 perfect plasticity
    std::array<double, 4> hardening{};            // j2 saturation a, b, c, d
    bool has_hardening = false;
    std::array<double, 5> guccione{};             // C, c_f, c_t, c_fs, kappa
    Vec3 fibre{1.0, 0.0, 0.0};
    int finite_strain = -1;  // -1 = follow the law's default

    // [bcs]
    std::vector<BcSpec> bcs;

    // [solver]
    SolverConfig solver;
    double alpha = 1.0;

    // [time]
    double dt = 0.0;     // > 0 selects the transient mode
    int steps = 0;       // transient step count
    int increments = 1;  // static load increments

    // [output]
    std::string output_dir = ".";
    int write_interval = 0;  // VTK every N steps; 0 = final state only
};

// Throws ConfigError with a 1-based line number on any malformed or unknown entry.
CaseConfig parse_config(std::istream& in);
CaseConfig parse_config_file(const std::string& path);

struct Simulation {
    CaseDefinition def;
    SolverConfig solver;
    double alpha = 1.0;  // mirrored into def.disc
    std::string output_dir = ".";
    int write_interval = 0;
};

// Materialises the mesh, law, and boundary conditions; semantic problems (missing
// material constants, unmatched patch names) throw InvalidArgument.
Simulation build_simulation(const CaseConfig& cfg);

// Legacy VTK ASCII unstructured grid with per-cell displacement/velocity vectors and
// stress tensors. Hexahedra and quads are reconstructed from the face description;
// anything else is emitted as a polyhedron cell.
void write_vtk(const Mesh& mesh, const std::string& path, const std::vector<Vec3>& displacement,
               const std::vector<Vec3>* velocity = nullptr,
               const std::vector<Mat3>* stress = nullptr);

// Per-step convergence rows plus a totals row (outer iterations, Krylov iterations,
// wall seconds are column sums).
void write_metrics_csv(const SteppingResult& result, const std::string& path);

// Full residual history: one row per outer iteration of every step.
void write_iterations_csv(const SteppingResult& result, const std::string& path);

// SOLIDFV_THREADS cap; unset or invalid values mean 1. The solver is single-threaded,
// so this is an upper bound acknowledged, not a promise of parallel speedup.
int thread_cap();

}  // namespace solidfv
