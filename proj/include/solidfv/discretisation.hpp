#pragma once

// Nonlinear residual assembly: least-squares gradients, interpolated stress surface
// integral, Rhie-Chow stabilisation (direct and jump forms), BDF2 inertia, body force,
// and the compact-stencil approximate Jacobian the preconditioner is built from.

#include <functional>
#include <memory>
#include <vector>

#include "solidfv/fields.hpp"
#include "solidfv/laws.hpp"
#include "solidfv/linalg.hpp"
#include "solidfv/mesh.hpp"

namespace solidfv {

struct DiscretisationConfig {
    double alpha = 1.0;             // global scaling of the stabilisation in the residual
    bool total_lagrangian = false;  // transform face areas by J F^-T (deformed-area flux)
    bool transient = false;
    double dt = 0.0;   // s, transient only
    double rho = 0.0;  // kg/m^3, transient only
    std::function<Vec3(const Vec3& x)> body_force;  // volumetric force density N/m^3, optional
};

// Weighted least-squares gradients from internal-face and symmetry-face differences.
// Throws GradientFailure for a cell whose stencil tensor is singular.
std::vector<Mat3> cell_gradients(const Mesh& mesh, const MeshGeometry& geom,
                                 const std::vector<Vec3>& u);

// Stabilisation force on the cell whose outward geometry (delta, d) is passed in.
// u_other is the neighbour value, the prescribed face displacement, or the mirror value.
Vec3 rhie_chow_face(const Vec3& u_p, const Vec3& u_other, const Mat3& grad_face,
                    const Vec3& delta, double d_mag, double area_mag, double alpha, double kbar);

// Internal-face jump form built from the states u*_P, u*_N extrapolated with the cell
// gradients; identical to rhie_chow_face with the 1/2-average face gradient.
Vec3 rhie_chow_jump_face(const Vec3& u_p, const Vec3& u_n, const Mat3& grad_p, const Mat3& grad_n,
                         const Vec3& d, const Vec3& normal, double area_mag, double alpha,
                         double kbar);

Vec3 bdf2_velocity(const Vec3& u_new, const Vec3& u_t, const Vec3& u_tm1, double dt);
Vec3 bdf2_acceleration(const Vec3& u_new, const Vec3& u_t, const Vec3& u_tm1, const Vec3& v_t,
                       const Vec3& v_tm1, double dt);

// R(u) as a pure function of the candidate displacement. Holds references to the mesh
// and geometry; both must outlive the evaluator.
class ResidualEvaluator {
public:
    ResidualEvaluator(const Mesh& mesh, const MeshGeometry& geom, BoundaryConditions bcs,
                      std::shared_ptr<MechanicalLaw> law, DiscretisationConfig config);

    // Cell force residual, N. Throws law errors / ResidualNan with a cell index.
    std::vector<Vec3> residual(const std::vector<Vec3>& u) const;
    // Rhie-Chow terms alone.
    std::vector<Vec3> stabilisation(const std::vector<Vec3>& u) const;
    std::vector<Mat3> gradients(const std::vector<Vec3>& u) const;

    void set_time(double t) { time_ = t; }
    double time() const { return time_; }

    // History snapshot behind the inertia term; never mutated by residual().
    void set_history(const VectorField& field);
    // Re-evaluates stress at the converged u and promotes trial internal state.
    void commit(const std::vector<Vec3>& u);

    const Mesh& mesh() const { return mesh_; }
    const MeshGeometry& geometry() const { return geom_; }
    const DiscretisationConfig& config() const { return cfg_; }
    const BoundaryConditions& boundary_conditions() const { return bcs_; }
    MechanicalLaw& law() const { return *law_; }
    double kbar() const { return law_->stabilisation_modulus(); }
    int n_cells() const { return mesh_.n_cells; }
    int dim() const { return mesh_.dim; }

    // Prescribed boundary value at a face centroid and the current time.
    Vec3 bc_value(int face) const;

private:
    void add_stabilisation(const std::vector<Vec3>& u, const std::vector<Mat3>& grad,
                           std::vector<Vec3>& r) const;

    const Mesh& mesh_;
    const MeshGeometry& geom_;
    BoundaryConditions bcs_;
    std::shared_ptr<MechanicalLaw> law_;
    DiscretisationConfig cfg_;
    double time_ = 0.0;
    std::vector<Vec3> u_old_, u_old_old_, v_old_, v_old_old_;
};

// Compact-stencil approximate Jacobian: two-point stabilisation coefficients on
// internal and displacement faces, the normal dyad on symmetry faces, and the BDF2
// inertia diagonal in transient mode. alpha is fixed at one here regardless of the
// residual-side scaling. Symmetric negative definite whenever a displacement or
// symmetry face is present.
BlockSparseMatrix assemble_approximate_jacobian(const Mesh& mesh, const MeshGeometry& geom,
                                                double kbar, const DiscretisationConfig& config);

}  // namespace solidfv
