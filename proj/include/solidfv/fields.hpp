#pragma once

// Cell-centred vector fields with the two history levels BDF2 needs, boundary
// conditions as (position, time) functions, and face-value reconstruction helpers.

#include <functional>
#include <vector>

#include "solidfv/mesh.hpp"
#include "solidfv/types.hpp"

namespace solidfv {

// Prescribed boundary data for one patch. The function supplies the displacement
// (displacement patches) or traction (traction patches); symmetry patches need none.
struct BoundaryCondition {
    PatchKind kind = PatchKind::traction;
    std::function<Vec3(const Vec3& x, double t)> value;
};

// One condition per patch, index-aligned with Mesh::patches.
using BoundaryConditions = std::vector<BoundaryCondition>;

// Checks kind agreement and that value functions exist where required.
void validate_boundary_conditions(const Mesh& mesh, const BoundaryConditions& bcs);

// Cell displacement plus the history the time scheme needs: u and v at the two
// previous time levels. Static runs only use `u`.
struct VectorField {
    std::vector<Vec3> u;
    std::vector<Vec3> u_old;      // u^[t]
    std::vector<Vec3> u_old_old;  // u^[t-1]
    std::vector<Vec3> v_old;      // v^[t]
    std::vector<Vec3> v_old_old;  // v^[t-1]
    std::vector<Vec3> a_old;      // acceleration at t, kept for the step predictor

    explicit VectorField(int n_cells = 0)
        : u(n_cells), u_old(n_cells), u_old_old(n_cells), v_old(n_cells), v_old_old(n_cells),
          a_old(n_cells) {}

    int size() const { return static_cast<int>(u.size()); }
};

// Flat interleaved view used by the linear algebra: length dim * n_cells.
std::vector<double> flatten(const std::vector<Vec3>& cells, int dim);
std::vector<Vec3> unflatten(const std::vector<double>& flat, int dim);

template <typename T>
T face_interpolate(const T& value_p, const T& value_n, double w) {
    return w * value_p + (1.0 - w) * value_n;
}

// First-order extrapolation from the cell centre to a traction face.
inline Vec3 traction_face_displacement(const Vec3& u_p, const Mat3& grad_u_p, const Vec3& d_t) {
    return u_p + dot_left(d_t, grad_u_p);
}

// In-plane projection (I - n(x)n) . u_P.
inline Vec3 symmetry_face_value(const Vec3& u_p, const Vec3& n_s) {
    return u_p - dot(u_p, n_s) * n_s;
}

}  // namespace solidfv
