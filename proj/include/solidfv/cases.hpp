#pragma once

// Built-in verification cases: manufactured-solution fields, the spherical-cavity
// analytical solution, error norms, order-of-accuracy studies, and fully
// parameterised case definitions for the desk-scale benchmarks.

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "solidfv/discretisation.hpp"
#include "solidfv/nonlinear.hpp"

namespace solidfv {

// A runnable problem. The evaluator binds references to mesh/geometry, so the
// definition must stay alive (and unmoved) while the evaluator is in use.
struct CaseDefinition {
    std::string name;
    Mesh mesh;
    MeshGeometry geometry;
    BoundaryConditions bcs;
    std::shared_ptr<MechanicalLaw> law;
    DiscretisationConfig disc;
    int n_steps = 1;

    std::function<Vec3(const Vec3&)> exact_u;       // null when no exact solution
    std::function<Mat3(const Vec3&)> exact_stress;  // likewise

    ResidualEvaluator make_evaluator() const {
        return ResidualEvaluator(mesh, geometry, bcs, law, disc);
    }
};

// Manufactured trigonometric displacement on the cube [0, 0.2]^3 m, amplitudes
// (2, 4, 6) micrometre, and the matching linear elastic body force -div(sigma).
Vec3 mms_exact_displacement(const Vec3& x);
Mat3 mms_exact_gradient(const Vec3& x);
Mat3 mms_exact_stress(const Vec3& x, double mu, double lambda);
Vec3 mms_body_force(const Vec3& x, double mu, double lambda);

struct CavityExact {
    Mat3 sigma;
    Vec3 u;
};

// Spherical cavity of radius a in an infinite solid under remote tension T along z.
// Cartesian stress and displacement; throws std::domain_error inside the cavity.
CavityExact cavity_exact(const Vec3& x, double a, double T, double nu, double E);

struct ErrorNorms {
    double l2 = 0.0;   // volume-weighted root mean square
    double linf = 0.0;
};

ErrorNorms error_norms(const MeshGeometry& geom, const std::vector<double>& cell_error);

struct StudyRow {
    double h = 0.0;
    int cells = 0;
    int dof = 0;
    double l2_u = 0.0, linf_u = 0.0, l2_sig = 0.0, linf_sig = 0.0;
    double order_l2_u = 0.0, order_linf_u = 0.0;  // NaN on the coarsest level
    std::string status;
};

// Successively 2x-refined solves of a case with an exact solution ("mms" or
// "mms-distorted"); solver divergence yields a partial table with status set.
std::vector<StudyRow> run_order_study(const std::string& case_name, int levels,
                                      const SolverConfig& solver, std::uint64_t seed = 42);
void write_study_csv(const std::vector<StudyRow>& rows, const std::string& path);

// name: mms | cavity-probe | cook-i | cook-ii | cook-iii | cantilever.
CaseDefinition build_case(const std::string& name);

CaseDefinition build_mms_case(int divisions, bool distorted = false, std::uint64_t seed = 42);
CaseDefinition build_cavity_probe_case(int divisions);
CaseDefinition build_cook_case(int variant, int n);  // variant 1..3, (3*2^(n-1))^2 cells
CaseDefinition build_cantilever_case(double traction_scale = 1.0);

}  // namespace solidfv
