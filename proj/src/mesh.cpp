#include "solidfv/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "solidfv/errors.hpp"

namespace solidfv {

std::string to_string(PatchKind k) {
    switch (k) {
        case PatchKind::displacement: return "displacement";
        case PatchKind::traction: return "traction";
        case PatchKind::symmetry: return "symmetry";
    }
    return "?";
}

PatchKind patch_kind_from_string(const std::string& s) {
    if (s == "displacement") return PatchKind::displacement;
    if (s == "traction") return PatchKind::traction;
    if (s == "symmetry") return PatchKind::symmetry;
    throw InvalidArgument("unknown patch kind '" + s + "'");
}

void Mesh::finalise() {
    const int nf = n_faces();
    if (static_cast<int>(owner.size()) != nf || static_cast<int>(neighbour.size()) != nf)
        throw InvalidArgument("mesh: owner/neighbour size mismatch");

    face_patch.assign(nf, -1);
    for (int p = 0; p < static_cast<int>(patches.size()); ++p) {
        const Patch& pa = patches[p];
        if (pa.start < n_internal || pa.start + pa.count > nf)
            throw InvalidArgument("mesh: patch '" + pa.name + "' range outside boundary faces");
        for (int f = pa.start; f < pa.start + pa.count; ++f) {
            if (face_patch[f] != -1)
                throw InvalidArgument("mesh: face in two patches");
            face_patch[f] = p;
        }
    }
    for (int f = 0; f < nf; ++f) {
        const bool boundary = neighbour[f] < 0;
        if (boundary != (f >= n_internal))
            throw InvalidArgument("mesh: internal faces must precede boundary faces");
        if (boundary && face_patch[f] == -1)
            throw InvalidArgument("mesh: boundary face " + std::to_string(f) + " not in any patch");
        if (owner[f] < 0 || owner[f] >= n_cells || neighbour[f] >= n_cells)
            throw InvalidArgument("mesh: face cell index out of range");
    }

    cell_faces.assign(n_cells, {});
    for (int f = 0; f < nf; ++f) {
        cell_faces[owner[f]].push_back(f);
        if (neighbour[f] >= 0) cell_faces[neighbour[f]].push_back(f);
    }
    for (int c = 0; c < n_cells; ++c)
        if (cell_faces[c].empty()) throw InvalidArgument("mesh: cell without faces");
}

namespace {

// -------- box generator --------

struct BoxIndex {
    int nx, ny, nz;
    int pid(int i, int j, int k) const { return i + (nx + 1) * (j + (ny + 1) * k); }
    int cid(int i, int j, int k) const { return i + nx * (j + ny * k); }
};

}  // namespace

Mesh generate_box_hex(const std::array<double, 3>& extents, const std::array<int, 3>& divisions,
                      const BoxPatchSpec& patch_spec) {
    for (int a = 0; a < 3; ++a) {
        if (divisions[a] < 1) throw InvalidArgument("generate_box_hex: divisions must be >= 1");
        if (!(extents[a] > 0.0)) throw InvalidArgument("generate_box_hex: extents must be > 0");
    }
    const int nx = divisions[0], ny = divisions[1], nz = divisions[2];
    const BoxIndex ix{nx, ny, nz};

    Mesh m;
    m.dim = 3;
    m.n_cells = nx * ny * nz;
    m.points.reserve((nx + 1) * (ny + 1) * (nz + 1));
    for (int k = 0; k <= nz; ++k)
        for (int j = 0; j <= ny; ++j)
            for (int i = 0; i <= nx; ++i)
                m.points.push_back({extents[0] * i / nx, extents[1] * j / ny, extents[2] * k / nz});

    auto add_face = [&m](std::vector<int> pts, int own, int nei) {
        m.faces.push_back(std::move(pts));
        m.owner.push_back(own);
        m.neighbour.push_back(nei);
    };

    // Internal faces, owner is the lower cell index so area vectors point +x/+y/+z.
    for (int k = 0; k < nz; ++k)
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i + 1 < nx; ++i)
                add_face({ix.pid(i + 1, j, k), ix.pid(i + 1, j + 1, k), ix.pid(i + 1, j + 1, k + 1),
                          ix.pid(i + 1, j, k + 1)},
                         ix.cid(i, j, k), ix.cid(i + 1, j, k));
    for (int k = 0; k < nz; ++k)
        for (int j = 0; j + 1 < ny; ++j)
            for (int i = 0; i < nx; ++i)
                add_face({ix.pid(i, j + 1, k), ix.pid(i, j + 1, k + 1), ix.pid(i + 1, j + 1, k + 1),
                          ix.pid(i + 1, j + 1, k)},
                         ix.cid(i, j, k), ix.cid(i, j + 1, k));
    for (int k = 0; k + 1 < nz; ++k)
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i)
                add_face({ix.pid(i, j, k + 1), ix.pid(i + 1, j, k + 1), ix.pid(i + 1, j + 1, k + 1),
                          ix.pid(i, j + 1, k + 1)},
                         ix.cid(i, j, k), ix.cid(i, j, k + 1));
    m.n_internal = m.n_faces();

    const char* names[6] = {"xmin", "xmax", "ymin", "ymax", "zmin", "zmax"};
    auto begin_patch = [&](int side) {
        m.patches.push_back({names[side], patch_spec[side], m.n_faces(), 0});
    };
    auto end_patch = [&] { m.patches.back().count = m.n_faces() - m.patches.back().start; };

    begin_patch(0);  // xmin, outward -x
    for (int k = 0; k < nz; ++k)
        for (int j = 0; j < ny; ++j)
            add_face({ix.pid(0, j, k), ix.pid(0, j, k + 1), ix.pid(0, j + 1, k + 1), ix.pid(0, j + 1, k)},
                     ix.cid(0, j, k), -1);
    end_patch();
    begin_patch(1);  // xmax, outward +x
    for (int k = 0; k < nz; ++k)
        for (int j = 0; j < ny; ++j)
            add_face({ix.pid(nx, j, k), ix.pid(nx, j + 1, k), ix.pid(nx, j + 1, k + 1), ix.pid(nx, j, k + 1)},
                     ix.cid(nx - 1, j, k), -1);
    end_patch();
    begin_patch(2);  // ymin, outward -y
    for (int k = 0; k < nz; ++k)
        for (int i = 0; i < nx; ++i)
            add_face({ix.pid(i, 0, k), ix.pid(i + 1, 0, k), ix.pid(i + 1, 0, k + 1), ix.pid(i, 0, k + 1)},
                     ix.cid(i, 0, k), -1);
    end_patch();
    begin_patch(3);  // ymax, outward +y
    for (int k = 0; k < nz; ++k)
        for (int i = 0; i < nx; ++i)
            add_face({ix.pid(i, ny, k), ix.pid(i, ny, k + 1), ix.pid(i + 1, ny, k + 1), ix.pid(i + 1, ny, k)},
                     ix.cid(i, ny - 1, k), -1);
    end_patch();
    begin_patch(4);  // zmin, outward -z
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i)
            add_face({ix.pid(i, j, 0), ix.pid(i, j + 1, 0), ix.pid(i + 1, j + 1, 0), ix.pid(i + 1, j, 0)},
                     ix.cid(i, j, 0), -1);
    end_patch();
    begin_patch(5);  // zmax, outward +z
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i)
            add_face({ix.pid(i, j, nz), ix.pid(i + 1, j, nz), ix.pid(i + 1, j + 1, nz), ix.pid(i, j + 1, nz)},
                     ix.cid(i, j, nz - 1), -1);
    end_patch();

    m.finalise();
    return m;
}

Mesh generate_cook_quad(int n) {
    if (n < 1) throw InvalidArgument("generate_cook_quad: n must be >= 1");
    const int N = 3 << (n - 1);  // cells per side

    // Trapezoid corners in metres (input mm).
    const Vec3 A{0.0, 0.0, 0.0}, B{0.048, 0.044, 0.0}, C{0.048, 0.060, 0.0}, D{0.0, 0.044, 0.0};

    Mesh m;
    m.dim = 2;
    m.n_cells = N * N;
    const auto pid = [N](int i, int j) { return i + (N + 1) * j; };
    const auto cid = [N](int i, int j) { return i + N * j; };

    for (int j = 0; j <= N; ++j)
        for (int i = 0; i <= N; ++i) {
            const double xi = double(i) / N, eta = double(j) / N;
            m.points.push_back((1 - xi) * (1 - eta) * A + xi * (1 - eta) * B + xi * eta * C +
                               (1 - xi) * eta * D);
        }

    auto add_face = [&m](int p0, int p1, int own, int nei) {
        m.faces.push_back({p0, p1});
        m.owner.push_back(own);
        m.neighbour.push_back(nei);
    };

    // Edge orientation: area vector (dy, -dx) must leave the owner.
    for (int j = 0; j < N; ++j)
        for (int i = 0; i + 1 < N; ++i)
            add_face(pid(i + 1, j), pid(i + 1, j + 1), cid(i, j), cid(i + 1, j));
    for (int j = 0; j + 1 < N; ++j)
        for (int i = 0; i < N; ++i)
            add_face(pid(i + 1, j + 1), pid(i, j + 1), cid(i, j), cid(i, j + 1));
    m.n_internal = m.n_faces();

    m.patches.push_back({"left", PatchKind::displacement, m.n_faces(), N});
    for (int j = 0; j < N; ++j) add_face(pid(0, j + 1), pid(0, j), cid(0, j), -1);
    m.patches.push_back({"right", PatchKind::traction, m.n_faces(), N});
    for (int j = 0; j < N; ++j) add_face(pid(N, j), pid(N, j + 1), cid(N - 1, j), -1);
    m.patches.push_back({"bottom", PatchKind::traction, m.n_faces(), N});
    for (int i = 0; i < N; ++i) add_face(pid(i, 0), pid(i + 1, 0), cid(i, 0), -1);
    m.patches.push_back({"top", PatchKind::traction, m.n_faces(), N});
    for (int i = 0; i < N; ++i) add_face(pid(i + 1, N), pid(i, N), cid(i, N - 1), -1);

    m.finalise();
    return m;
}

namespace {

// Counter-based generator: the determinism contract is per (seed, point), independent
// of evaluation order.
struct SplitMix64 {
    std::uint64_t state;
    std::uint64_t next() {
        std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
    double uniform01() { return (next() >> 11) * 0x1.0p-53; }  // [0,1)
};

Vec3 raw_face_area(const Mesh& mesh, const std::vector<int>& pts) {
    if (mesh.dim == 2) {
        const Vec3 e = mesh.points[pts[1]] - mesh.points[pts[0]];
        return {e.y, -e.x, 0.0};
    }
    Vec3 centre{};
    for (int p : pts) centre += mesh.points[p];
    centre = centre / double(pts.size());
    Vec3 a{};
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const Vec3& p0 = mesh.points[pts[i]];
        const Vec3& p1 = mesh.points[pts[(i + 1) % pts.size()]];
        a += 0.5 * cross(p0 - centre, p1 - centre);
    }
    return a;
}

// Signed cell volumes only, for the post-distortion validity check.
std::vector<double> cell_volumes(const Mesh& mesh) {
    std::vector<Vec3> cell_pt_sum(mesh.n_cells, Vec3{});
    std::vector<int> cell_pt_count(mesh.n_cells, 0);
    for (int f = 0; f < mesh.n_faces(); ++f)
        for (int p : mesh.faces[f]) {
            cell_pt_sum[mesh.owner[f]] += mesh.points[p];
            ++cell_pt_count[mesh.owner[f]];
            if (mesh.neighbour[f] >= 0) {
                cell_pt_sum[mesh.neighbour[f]] += mesh.points[p];
                ++cell_pt_count[mesh.neighbour[f]];
            }
        }
    std::vector<double> vol(mesh.n_cells, 0.0);
    for (int f = 0; f < mesh.n_faces(); ++f) {
        const auto& pts = mesh.faces[f];
        for (int side = 0; side < 2; ++side) {
            const int c = side == 0 ? mesh.owner[f] : mesh.neighbour[f];
            if (c < 0) continue;
            const double sign = side == 0 ? 1.0 : -1.0;
            const Vec3 apex = cell_pt_sum[c] / double(cell_pt_count[c]);
            if (mesh.dim == 2) {
                const Vec3 a = mesh.points[pts[0]] - apex, b = mesh.points[pts[1]] - apex;
                vol[c] += sign * 0.5 * (a.x * b.y - a.y * b.x);
            } else {
                Vec3 fc{};
                for (int p : pts) fc += mesh.points[p];
                fc = fc / double(pts.size());
                for (std::size_t i = 0; i < pts.size(); ++i) {
                    const Vec3 q0 = fc - apex;
                    const Vec3 q1 = mesh.points[pts[i]] - apex;
                    const Vec3 q2 = mesh.points[pts[(i + 1) % pts.size()]] - apex;
                    vol[c] += sign * dot(q0, cross(q1, q2)) / 6.0;
                }
            }
        }
    }
    return vol;
}

}  // namespace

Mesh distort_mesh(const Mesh& mesh, double factor, std::uint64_t seed) {
    if (factor < 0.0 || factor >= 0.5) throw InvalidArgument("distort_mesh: factor must be in [0, 0.5)");
    Mesh out = mesh;
    if (factor == 0.0) return out;

    const int np = static_cast<int>(mesh.points.size());

    // Local minimum incident edge length per point.
    std::vector<double> min_edge(np, std::numeric_limits<double>::max());
    for (const auto& pts : mesh.faces) {
        const std::size_t n = pts.size();
        for (std::size_t i = 0; i < n; ++i) {
            const int a = pts[i], b = pts[(i + 1) % n];
            if (n == 2 && i == 1) break;
            const double len = norm(mesh.points[a] - mesh.points[b]);
            min_edge[a] = std::min(min_edge[a], len);
            min_edge[b] = std::min(min_edge[b], len);
        }
    }

    // Distinct boundary plane normals per point: none => interior, one => slide in-plane,
    // several => domain edge/corner, frozen.
    std::vector<std::vector<Vec3>> planes(np);
    for (int f = mesh.n_internal; f < mesh.n_faces(); ++f) {
        Vec3 n = raw_face_area(mesh, mesh.faces[f]);
        const double mag = norm(n);
        if (mag == 0.0) throw GeometryFailure("distort_mesh: zero-area boundary face");
        n = n / mag;
        for (int p : mesh.faces[f]) {
            bool known = false;
            for (const Vec3& q : planes[p])
                if (std::abs(dot(q, n)) > 1.0 - 1e-8) known = true;
            if (!known) planes[p].push_back(n);
        }
    }

    for (int p = 0; p < np; ++p) {
        if (static_cast<int>(planes[p].size()) >= 2) continue;  // domain edge/corner point, frozen
        SplitMix64 rng{seed * 0x9E3779B97F4A7C15ULL ^ (std::uint64_t(p) + 1) * 0xD1B54A32D192ED03ULL};
        Vec3 v{2.0 * rng.uniform01() - 1.0, 2.0 * rng.uniform01() - 1.0,
               mesh.dim == 3 ? 2.0 * rng.uniform01() - 1.0 : 0.0};
        const double mag_draw = rng.uniform01();
        if (!planes[p].empty()) {
            const Vec3& n = planes[p][0];
            v -= dot(v, n) * n;
        }
        const double vn = norm(v);
        if (vn < 1e-12) continue;
        out.points[p] += (factor * min_edge[p] * mag_draw / vn) * v;
    }

    for (double vol : cell_volumes(out))
        if (!(vol > 0.0))
            throw DistortionFailure("distort_mesh: negative cell volume, retry with smaller factor");
    return out;
}

MeshGeometry compute_geometry(const Mesh& mesh) {
    const int nf = mesh.n_faces(), nc = mesh.n_cells;
    MeshGeometry g;
    g.face_centroid.resize(nf);
    g.area.resize(nf);
    g.area_mag.resize(nf);
    g.normal.resize(nf);
    g.d.resize(nf);
    g.d_mag.resize(nf);
    g.w.assign(nf, 1.0);
    g.delta.resize(nf);
    g.delta_mag.resize(nf);
    g.reflect.assign(nf, Mat3::identity());

    // Pass 1: face centroids and area vectors (fan decomposition about the vertex average).
    for (int f = 0; f < nf; ++f) {
        const auto& pts = mesh.faces[f];
        if (mesh.dim == 2) {
            g.face_centroid[f] = 0.5 * (mesh.points[pts[0]] + mesh.points[pts[1]]);
            g.area[f] = raw_face_area(mesh, pts);
        } else {
            Vec3 centre{};
            for (int p : pts) centre += mesh.points[p];
            centre = centre / double(pts.size());
            Vec3 area{};
            Vec3 centroid_acc{};
            double area_acc = 0.0;
            for (std::size_t i = 0; i < pts.size(); ++i) {
                const Vec3& p0 = mesh.points[pts[i]];
                const Vec3& p1 = mesh.points[pts[(i + 1) % pts.size()]];
                const Vec3 tri = 0.5 * cross(p0 - centre, p1 - centre);
                const double tmag = norm(tri);
                area += tri;
                centroid_acc += tmag * ((centre + p0 + p1) / 3.0);
                area_acc += tmag;
            }
            g.area[f] = area;
            g.face_centroid[f] = area_acc > 0.0 ? centroid_acc / area_acc : centre;
        }
        g.area_mag[f] = norm(g.area[f]);
        if (g.area_mag[f] <= 0.0)
            throw GeometryFailure("compute_geometry: zero-area face " + std::to_string(f));
        g.normal[f] = g.area[f] / g.area_mag[f];
    }

    // Pass 2: cell volumes and centroids (pyramid decomposition about the vertex average).
    std::vector<Vec3> apex(nc, Vec3{});
    {
        std::vector<int> cnt(nc, 0);
        for (int f = 0; f < nf; ++f)
            for (int p : mesh.faces[f])
                for (int side = 0; side < 2; ++side) {
                    const int c = side == 0 ? mesh.owner[f] : mesh.neighbour[f];
                    if (c < 0) continue;
                    apex[c] += mesh.points[p];
                    ++cnt[c];
                }
        for (int c = 0; c < nc; ++c) apex[c] = apex[c] / double(cnt[c]);
    }
    g.volume.assign(nc, 0.0);
    g.centroid.assign(nc, Vec3{});
    for (int f = 0; f < nf; ++f) {
        const auto& pts = mesh.faces[f];
        for (int side = 0; side < 2; ++side) {
            const int c = side == 0 ? mesh.owner[f] : mesh.neighbour[f];
            if (c < 0) continue;
            const double sign = side == 0 ? 1.0 : -1.0;
            if (mesh.dim == 2) {
                const Vec3 a = mesh.points[pts[0]] - apex[c], b = mesh.points[pts[1]] - apex[c];
                const double v = sign * 0.5 * (a.x * b.y - a.y * b.x);
                g.volume[c] += v;
                g.centroid[c] += v * ((apex[c] + mesh.points[pts[0]] + mesh.points[pts[1]]) / 3.0);
            } else {
                for (std::size_t i = 0; i < pts.size(); ++i) {
                    const Vec3& p0 = mesh.points[pts[i]];
                    const Vec3& p1 = mesh.points[pts[(i + 1) % pts.size()]];
                    const Vec3 fc = g.face_centroid[f];
                    const double v = sign * dot(fc - apex[c], cross(p0 - apex[c], p1 - apex[c])) / 6.0;
                    g.volume[c] += v;
                    g.centroid[c] += v * 0.25 * (apex[c] + fc + p0 + p1);
                }
            }
        }
    }
    for (int c = 0; c < nc; ++c) {
        if (!(g.volume[c] > 0.0))
            throw GeometryFailure("compute_geometry: non-positive volume in cell " + std::to_string(c));
        g.centroid[c] = g.centroid[c] / g.volume[c];
    }

    // Pass 3: inter-centroid vectors, weights, over-relaxed orthogonal vectors.
    for (int f = 0; f < nf; ++f) {
        const Vec3& n = g.normal[f];
        const Vec3& xp = g.centroid[mesh.owner[f]];
        if (mesh.is_internal(f)) {
            const Vec3& xn = g.centroid[mesh.neighbour[f]];
            g.d[f] = xn - xp;
            const double denom = dot(n, xn - xp);
            if (!(denom > 0.0))
                throw GeometryFailure("compute_geometry: face " + std::to_string(f) +
                                      " area vector does not leave the owner");
            g.w[f] = dot(n, xn - g.face_centroid[f]) / denom;
        } else if (mesh.kind(f) == PatchKind::symmetry) {
            g.reflect[f] = reflection(n);
            g.d[f] = -2.0 * dot(xp - g.face_centroid[f], n) * n;  // owner -> mirror image
            g.w[f] = 0.5;
        } else {
            g.d[f] = g.face_centroid[f] - xp;
        }
        g.d_mag[f] = norm(g.d[f]);
        const double dn = dot(g.d[f], n);
        if (!(dn > 0.0))
            throw GeometryFailure("compute_geometry: degenerate centroid geometry at face " +
                                  std::to_string(f));
        g.delta[f] = g.d[f] / dn;
        g.delta_mag[f] = norm(g.delta[f]);
    }

    // Pass 4: least-squares gradient tensors over internal + symmetry faces, same weight w|Gamma|
    // in the tensor and in the cached vectors so linear fields are reconstructed exactly.
    g.g_inv.assign(nc, Mat3::zero());
    g.g_singular.assign(nc, 0);
    std::vector<Mat3> gt(nc, Mat3::zero());
    auto include_in_gradient = [&](int f) {
        return mesh.is_internal(f) || mesh.kind(f) == PatchKind::symmetry;
    };
    for (int f = 0; f < nf; ++f) {
        if (!include_in_gradient(f)) continue;
        const Mat3 dd = (g.area_mag[f] / dot(g.d[f], g.d[f])) * outer(g.d[f], g.d[f]);
        gt[mesh.owner[f]] += g.w[f] * dd;
        // Seen from the neighbour the weight is the complement; d(x)d is even under d -> -d.
        if (mesh.is_internal(f)) gt[mesh.neighbour[f]] += (1.0 - g.w[f]) * dd;
    }
    for (int c = 0; c < nc; ++c) {
        Mat3 G = gt[c];
        if (mesh.dim == 2) G(2, 2) = 1.0;  // keep the unused plane-strain direction invertible
        double scale = 0.0;
        for (int i = 0; i < mesh.dim; ++i) scale = std::max(scale, std::abs(G(i, i)));
        if (scale <= 0.0 || std::abs(det(G)) < 1e-10 * scale * scale * scale) {
            g.g_singular[c] = 1;
            continue;
        }
        g.g_inv[c] = inverse(G);
        if (mesh.dim == 2) g.g_inv[c](2, 2) = 0.0;
    }

    g.ls_vec.assign(nc, {});
    for (int c = 0; c < nc; ++c) {
        g.ls_vec[c].assign(mesh.cell_faces[c].size(), Vec3{});
        if (g.g_singular[c]) continue;
        for (std::size_t i = 0; i < mesh.cell_faces[c].size(); ++i) {
            const int f = mesh.cell_faces[c][i];
            if (!include_in_gradient(f)) continue;
            Vec3 d = g.d[f];
            double w = g.w[f];
            if (mesh.is_internal(f) && mesh.neighbour[f] == c) {
                d = -d;
                w = 1.0 - w;
            }
            g.ls_vec[c][i] = (w * g.area_mag[f] / dot(d, d)) * (g.g_inv[c] * d);
        }
    }
    return g;
}

void write_mesh(const Mesh& mesh, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw MeshIoError("write_mesh: cannot open " + path);
    out.precision(17);
    out << "FVMESH 1\n";
    out << "DIM " << mesh.dim << "\n";
    out << "POINTS " << mesh.points.size() << "\n";
    for (std::size_t i = 0; i < mesh.points.size(); ++i)
        out << i << " " << mesh.points[i].x << " " << mesh.points[i].y << " " << mesh.points[i].z
            << "\n";
    out << "FACES " << mesh.faces.size() << "\n";
    for (std::size_t i = 0; i < mesh.faces.size(); ++i) {
        out << i << ":";
        for (int p : mesh.faces[i]) out << " " << p;
        out << "\n";
    }
    out << "OWNER " << mesh.owner.size() << "\n";
    for (int o : mesh.owner) out << o << "\n";
    out << "NEIGHBOUR " << mesh.neighbour.size() << "\n";
    for (int n : mesh.neighbour) out << n << "\n";
    out << "PATCHES " << mesh.patches.size() << "\n";
    for (const Patch& p : mesh.patches)
        out << p.name << " " << to_string(p.kind) << " " << p.start << " " << p.count << "\n";
    if (!out) throw MeshIoError("write_mesh: write failed for " + path);
}

namespace {

std::string next_content_line(std::istream& in) {
    std::string line;
    while (std::getline(in, line)) {
        const auto pos = line.find_first_not_of(" \t\r");
        if (pos == std::string::npos) continue;
        return line;
    }
    throw MeshIoError("read_mesh: unexpected end of file");
}

}  // namespace

Mesh read_mesh(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MeshIoError("read_mesh: cannot open " + path);

    const std::string header = next_content_line(in);
    if (header.substr(0, 8) != "FVMESH 1") throw MeshIoError("read_mesh: bad header '" + header + "'");

    Mesh m;
    auto expect_section = [&](const char* key) -> std::size_t {
        std::istringstream ss(next_content_line(in));
        std::string k;
        std::size_t n;
        if (!(ss >> k >> n) || k != key)
            throw MeshIoError(std::string("read_mesh: expected section ") + key);
        return n;
    };

    {
        std::istringstream ss(next_content_line(in));
        std::string k;
        if (!(ss >> k >> m.dim) || k != "DIM" || (m.dim != 2 && m.dim != 3))
            throw MeshIoError("read_mesh: bad DIM line");
    }
    const std::size_t np = expect_section("POINTS");
    m.points.resize(np);
    for (std::size_t i = 0; i < np; ++i) {
        std::istringstream ss(next_content_line(in));
        std::size_t idx;
        Vec3 p;
        if (!(ss >> idx >> p.x >> p.y >> p.z) || idx != i)
            throw MeshIoError("read_mesh: bad point line " + std::to_string(i));
        m.points[i] = p;
    }
    const std::size_t nfaces = expect_section("FACES");
    m.faces.resize(nfaces);
    for (std::size_t i = 0; i < nfaces; ++i) {
        std::string line = next_content_line(in);
        const auto colon = line.find(':');
        if (colon == std::string::npos) throw MeshIoError("read_mesh: bad face line " + std::to_string(i));
        if (std::stoul(line.substr(0, colon)) != i)
            throw MeshIoError("read_mesh: face index mismatch at " + std::to_string(i));
        std::istringstream ss(line.substr(colon + 1));
        int p;
        while (ss >> p) {
            if (p < 0 || p >= static_cast<int>(np))
                throw MeshIoError("read_mesh: face point out of range");
            m.faces[i].push_back(p);
        }
        if (m.faces[i].size() < (m.dim == 2 ? 2u : 3u))
            throw MeshIoError("read_mesh: face with too few points");
    }
    const std::size_t nown = expect_section("OWNER");
    if (nown != nfaces) throw MeshIoError("read_mesh: OWNER count mismatch");
    m.owner.resize(nfaces);
    for (std::size_t i = 0; i < nfaces; ++i) {
        std::istringstream ss(next_content_line(in));
        if (!(ss >> m.owner[i])) throw MeshIoError("read_mesh: bad owner line");
    }
    const std::size_t nnei = expect_section("NEIGHBOUR");
    if (nnei != nfaces) throw MeshIoError("read_mesh: NEIGHBOUR count mismatch");
    m.neighbour.resize(nfaces);
    int max_cell = -1;
    for (std::size_t i = 0; i < nfaces; ++i) {
        std::istringstream ss(next_content_line(in));
        if (!(ss >> m.neighbour[i])) throw MeshIoError("read_mesh: bad neighbour line");
    }
    for (std::size_t i = 0; i < nfaces; ++i)
        max_cell = std::max({max_cell, m.owner[i], m.neighbour[i]});
    m.n_cells = max_cell + 1;
    m.n_internal = 0;
    while (m.n_internal < static_cast<int>(nfaces) && m.neighbour[m.n_internal] >= 0) ++m.n_internal;

    const std::size_t npatch = expect_section("PATCHES");
    for (std::size_t i = 0; i < npatch; ++i) {
        std::istringstream ss(next_content_line(in));
        Patch p;
        std::string kind;
        if (!(ss >> p.name >> kind >> p.start >> p.count))
            throw MeshIoError("read_mesh: bad patch line");
        p.kind = patch_kind_from_string(kind);
        m.patches.push_back(p);
    }
    m.finalise();
    return m;
}

}  // namespace solidfv
