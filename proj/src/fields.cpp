#include "solidfv/fields.hpp"

#include "solidfv/errors.hpp"

namespace solidfv {

void validate_boundary_conditions(const Mesh& mesh, const BoundaryConditions& bcs) {
    if (bcs.size() != mesh.patches.size())
        throw InvalidArgument("boundary conditions: expected one condition per patch");
    for (std::size_t p = 0; p < bcs.size(); ++p) {
        if (bcs[p].kind != mesh.patches[p].kind)
            throw InvalidArgument("boundary conditions: kind mismatch on patch '" +
                                  mesh.patches[p].name + "'");
        if (bcs[p].kind != PatchKind::symmetry && !bcs[p].value)
            throw InvalidArgument("boundary conditions: missing value function on patch '" +
                                  mesh.patches[p].name + "'");
    }
}

std::vector<double> flatten(const std::vector<Vec3>& cells, int dim) {
    std::vector<double> flat(cells.size() * dim);
    for (std::size_t c = 0; c < cells.size(); ++c)
        for (int k = 0; k < dim; ++k) flat[c * dim + k] = cells[c][k];
    return flat;
}

std::vector<Vec3> unflatten(const std::vector<double>& flat, int dim) {
    std::vector<Vec3> cells(flat.size() / dim);
    for (std::size_t c = 0; c < cells.size(); ++c)
        for (int k = 0; k < dim; ++k) cells[c][k] = flat[c * dim + k];
    return cells;
}

}  // namespace solidfv
