#pragma once

// Mesh topology, generators for the built-in cases, random distortion, and the
// one-time precomputation of every geometric quantity the discretisation needs.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "solidfv/types.hpp"

namespace solidfv {

enum class PatchKind { displacement, traction, symmetry };

std::string to_string(PatchKind k);
PatchKind patch_kind_from_string(const std::string& s);

struct Patch {
    std::string name;
    PatchKind kind = PatchKind::traction;
    int start = 0;  // first face index of the contiguous range
    int count = 0;
};

// Face-addressed unstructured mesh. Faces are ordered point-index lists whose
// right-hand-rule area vector points out of the owner cell; internal faces come
// first, boundary faces are grouped into contiguous patch ranges.
struct Mesh {
    int dim = 3;  // 2 => per-unit-thickness quads, 3 => polyhedra
    std::vector<Vec3> points;
    std::vector<std::vector<int>> faces;
    std::vector<int> owner;
    std::vector<int> neighbour;  // -1 on boundary faces
    std::vector<Patch> patches;
    int n_cells = 0;
    int n_internal = 0;

    // Derived adjacency, filled by finalise().
    std::vector<std::vector<int>> cell_faces;
    std::vector<int> face_patch;  // patch index, -1 for internal

    void finalise();  // builds derived adjacency and checks structural invariants

    int n_faces() const { return static_cast<int>(faces.size()); }
    bool is_internal(int f) const { return f < n_internal; }
    PatchKind kind(int f) const { return patches[face_patch[f]].kind; }
};

// Everything per-face/per-cell the residual needs, computed once.
struct MeshGeometry {
    // per cell
    std::vector<double> volume;
    std::vector<Vec3> centroid;
    std::vector<Mat3> g_inv;       // inverse least-squares tensor (2-D: z row/col zero)
    std::vector<char> g_singular;  // 1 => gradient stencil unusable for this cell

    // per face
    std::vector<Vec3> face_centroid;
    std::vector<Vec3> area;  // Gamma, outward from owner
    std::vector<double> area_mag;
    std::vector<Vec3> normal;
    std::vector<Vec3> d;  // owner->neighbour | owner->face centroid | owner->mirror image
    std::vector<double> d_mag;
    std::vector<double> w;      // interpolation weight (1/2 on symmetry, 1 on other boundaries)
    std::vector<Vec3> delta;    // over-relaxed orthogonal vector d/(d.n)
    std::vector<double> delta_mag;
    std::vector<Mat3> reflect;  // mirror tensor I - 2n(x)n on symmetry faces, identity elsewhere

    // per cell, aligned with Mesh::cell_faces; zero vectors on excluded (traction/displacement) faces
    std::vector<std::vector<Vec3>> ls_vec;
};

using BoxPatchSpec = std::array<PatchKind, 6>;  // xmin, xmax, ymin, ymax, zmin, zmax

Mesh generate_box_hex(const std::array<double, 3>& extents, const std::array<int, 3>& divisions,
                      const BoxPatchSpec& patch_spec = {PatchKind::traction, PatchKind::traction,
                                                        PatchKind::traction, PatchKind::traction,
                                                        PatchKind::traction, PatchKind::traction});

// Cook's-membrane trapezoid, (3*2^(n-1))^2 quads via transfinite interpolation.
// Patches: left (displacement), right/top/bottom (traction). Coordinates in metres.
Mesh generate_cook_quad(int n);

// Random point perturbation < factor * local minimum incident edge length.
// Boundary points move only within their boundary plane; domain edge/corner points stay put.
// Deterministic per seed.
Mesh distort_mesh(const Mesh& mesh, double factor, std::uint64_t seed);

MeshGeometry compute_geometry(const Mesh& mesh);

// ASCII mesh file, versioned header "FVMESH 1".
void write_mesh(const Mesh& mesh, const std::string& path);
Mesh read_mesh(const std::string& path);

}  // namespace solidfv
