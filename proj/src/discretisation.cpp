#include "solidfv/discretisation.hpp"

#include <algorithm>
#include <cmath>

#include "solidfv/errors.hpp"

namespace solidfv {

std::vector<Mat3> cell_gradients(const Mesh& mesh, const MeshGeometry& geom,
                                 const std::vector<Vec3>& u) {
    std::vector<Mat3> grad(mesh.n_cells, Mat3::zero());
    for (int c = 0; c < mesh.n_cells; ++c) {
        if (geom.g_singular[c])
            throw GradientFailure(c, "cell_gradients: singular least-squares stencil");
        for (std::size_t i = 0; i < mesh.cell_faces[c].size(); ++i) {
            const int f = mesh.cell_faces[c][i];
            Vec3 du;
            if (mesh.is_internal(f)) {
                const int other = mesh.owner[f] == c ? mesh.neighbour[f] : mesh.owner[f];
                du = u[other] - u[c];
            } else if (mesh.kind(f) == PatchKind::symmetry) {
                du = geom.reflect[f] * u[c] - u[c];
            } else {
                continue;  // traction and displacement faces excluded
            }
            grad[c] += outer(geom.ls_vec[c][i], du);
        }
    }
    return grad;
}

Vec3 rhie_chow_face(const Vec3& u_p, const Vec3& u_other, const Mat3& grad_face,
                    const Vec3& delta, double d_mag, double area_mag, double alpha, double kbar) {
    const Vec3 compact = (norm(delta) / d_mag) * (u_other - u_p);
    return (alpha * kbar * area_mag) * (compact - dot_left(delta, grad_face));
}

Vec3 rhie_chow_jump_face(const Vec3& u_p, const Vec3& u_n, const Mat3& grad_p, const Mat3& grad_n,
                         const Vec3& d, const Vec3& normal, double area_mag, double alpha,
                         double kbar) {
    const Vec3 half_d = 0.5 * d;
    const Vec3 star_p = u_p + dot_left(half_d, grad_p);
    const Vec3 star_n = u_n - dot_left(half_d, grad_n);
    return (alpha * kbar * area_mag / dot(d, normal)) * (star_n - star_p);
}

Vec3 bdf2_velocity(const Vec3& u_new, const Vec3& u_t, const Vec3& u_tm1, double dt) {
    if (!(dt > 0.0)) throw InvalidArgument("bdf2: non-positive time step");
    return (3.0 * u_new - 4.0 * u_t + u_tm1) / (2.0 * dt);
}

Vec3 bdf2_acceleration(const Vec3& u_new, const Vec3& u_t, const Vec3& u_tm1, const Vec3& v_t,
                       const Vec3& v_tm1, double dt) {
    const Vec3 v_new = bdf2_velocity(u_new, u_t, u_tm1, dt);
    return (3.0 * v_new - 4.0 * v_t + v_tm1) / (2.0 * dt);
}

ResidualEvaluator::ResidualEvaluator(const Mesh& mesh, const MeshGeometry& geom,
                                     BoundaryConditions bcs, std::shared_ptr<MechanicalLaw> law,
                                     DiscretisationConfig config)
    : mesh_(mesh), geom_(geom), bcs_(std::move(bcs)), law_(std::move(law)),
      cfg_(std::move(config)) {
    validate_boundary_conditions(mesh_, bcs_);
    if (!(cfg_.alpha > 0.0)) throw InvalidArgument("discretisation: alpha must be positive");
    if (cfg_.transient && !(cfg_.dt > 0.0))
        throw InvalidArgument("discretisation: transient mode needs dt > 0");
    law_->resize(mesh_.n_cells);
    u_old_.assign(mesh_.n_cells, Vec3{});
    u_old_old_.assign(mesh_.n_cells, Vec3{});
    v_old_.assign(mesh_.n_cells, Vec3{});
    v_old_old_.assign(mesh_.n_cells, Vec3{});
}

void ResidualEvaluator::set_history(const VectorField& field) {
    u_old_ = field.u_old;
    u_old_old_ = field.u_old_old;
    v_old_ = field.v_old;
    v_old_old_ = field.v_old_old;
}

Vec3 ResidualEvaluator::bc_value(int face) const {
    const BoundaryCondition& bc = bcs_[mesh_.face_patch[face]];
    return bc.value(geom_.face_centroid[face], time_);
}

std::vector<Mat3> ResidualEvaluator::gradients(const std::vector<Vec3>& u) const {
    return cell_gradients(mesh_, geom_, u);
}

void ResidualEvaluator::commit(const std::vector<Vec3>& u) {
    const std::vector<Mat3> grad = gradients(u);
    for (int c = 0; c < mesh_.n_cells; ++c) law_->stress(c, grad[c]);
    law_->commit();
}

namespace {

// Deformed-configuration area vector J F^-T . Gamma from a face value of F.
Vec3 transform_area(const Vec3& gamma, const Mat3& f_face, int cell) {
    const double j = det(f_face);
    if (!(j > 0.0)) throw InvertedElement(cell, "face deformation gradient is not invertible");
    return j * dot_left(gamma, inverse(f_face));  // Gamma . F^-1 = F^-T . Gamma componentwise
}

}  // namespace

std::vector<Vec3> ResidualEvaluator::residual(const std::vector<Vec3>& u) const {
    const int nc = mesh_.n_cells;
    const std::vector<Mat3> grad = gradients(u);

    std::vector<Mat3> sigma(nc);
    for (int c = 0; c < nc; ++c) sigma[c] = law_->stress(c, grad[c]);

    std::vector<Mat3> f_def;
    if (cfg_.total_lagrangian) {
        f_def.resize(nc);
        for (int c = 0; c < nc; ++c) f_def[c] = Mat3::identity() + transpose(grad[c]);
    }

    std::vector<Vec3> r(nc, Vec3{});
    for (int f = 0; f < mesh_.n_faces(); ++f) {
        const int p = mesh_.owner[f];
        if (mesh_.is_internal(f)) {
            const int n = mesh_.neighbour[f];
            const double w = geom_.w[f];
            Vec3 gamma = geom_.area[f];
            if (cfg_.total_lagrangian)
                gamma = transform_area(gamma, face_interpolate(f_def[p], f_def[n], w), p);
            const Vec3 flux = dot_left(gamma, face_interpolate(sigma[p], sigma[n], w));
            r[p] += flux;
            r[n] -= flux;
            continue;
        }
        switch (mesh_.kind(f)) {
            case PatchKind::displacement: {
                Vec3 gamma = geom_.area[f];
                if (cfg_.total_lagrangian) gamma = transform_area(gamma, f_def[p], p);
                r[p] += dot_left(gamma, sigma[p]);
                break;
            }
            case PatchKind::symmetry: {
                const Mat3& refl = geom_.reflect[f];
                const Mat3 sig_s = 0.5 * (sigma[p] + refl * sigma[p] * refl);
                Vec3 gamma = geom_.area[f];
                if (cfg_.total_lagrangian)
                    gamma = transform_area(gamma, 0.5 * (f_def[p] + refl * f_def[p] * refl), p);
                r[p] += dot_left(gamma, sig_s);
                break;
            }
            case PatchKind::traction:
                // Applied load is nominal: per unit reference area.
                r[p] += geom_.area_mag[f] * bc_value(f);
                break;
        }
    }

    add_stabilisation(u, grad, r);

    if (cfg_.body_force)
        for (int c = 0; c < nc; ++c) r[c] += geom_.volume[c] * cfg_.body_force(geom_.centroid[c]);

    if (cfg_.transient) {
        for (int c = 0; c < nc; ++c) {
            const Vec3 a =
                bdf2_acceleration(u[c], u_old_[c], u_old_old_[c], v_old_[c], v_old_old_[c], cfg_.dt);
            r[c] -= (cfg_.rho * geom_.volume[c]) * a;
        }
    }

    for (int c = 0; c < nc; ++c)
        if (!finite(r[c])) throw ResidualNan(c, "residual: non-finite entry");
    return r;
}

void ResidualEvaluator::add_stabilisation(const std::vector<Vec3>& u,
                                          const std::vector<Mat3>& grad,
                                          std::vector<Vec3>& r) const {
    const double kb = kbar();
    for (int f = 0; f < mesh_.n_faces(); ++f) {
        const int p = mesh_.owner[f];
        if (mesh_.is_internal(f)) {
            const int n = mesh_.neighbour[f];
            const Mat3 grad_f = face_interpolate(grad[p], grad[n], geom_.w[f]);
            const Vec3 dp = rhie_chow_face(u[p], u[n], grad_f, geom_.delta[f], geom_.d_mag[f],
                                           geom_.area_mag[f], cfg_.alpha, kb);
            r[p] += dp;
            r[n] -= dp;  // the neighbour sees the face with d, delta and the jump negated
            continue;
        }
        switch (mesh_.kind(f)) {
            case PatchKind::displacement:
                r[p] += rhie_chow_face(u[p], bc_value(f), grad[p], geom_.delta[f], geom_.d_mag[f],
                                       geom_.area_mag[f], cfg_.alpha, kb);
                break;
            case PatchKind::symmetry: {
                const Mat3& refl = geom_.reflect[f];
                const Vec3 u_mirror = refl * u[p];
                const Mat3 grad_s = 0.5 * (grad[p] + refl * grad[p] * refl);
                r[p] += rhie_chow_face(u[p], u_mirror, grad_s, geom_.delta[f], geom_.d_mag[f],
                                       geom_.area_mag[f], cfg_.alpha, kb);
                break;
            }
            case PatchKind::traction:
                break;  // no stabilisation across traction faces
        }
    }
}

std::vector<Vec3> ResidualEvaluator::stabilisation(const std::vector<Vec3>& u) const {
    std::vector<Vec3> r(mesh_.n_cells, Vec3{});
    add_stabilisation(u, gradients(u), r);
    return r;
}

BlockSparseMatrix assemble_approximate_jacobian(const Mesh& mesh, const MeshGeometry& geom,
                                                double kbar, const DiscretisationConfig& config) {
    const int nc = mesh.n_cells;
    BlockSparseMatrix m;
    m.dim = mesh.dim;
    m.n_cells = nc;

    // Pattern: diagonal plus one entry per internal face side, columns sorted.
    std::vector<std::vector<int>> cols(nc);
    for (int c = 0; c < nc; ++c) cols[c].push_back(c);
    for (int f = 0; f < mesh.n_internal; ++f) {
        cols[mesh.owner[f]].push_back(mesh.neighbour[f]);
        cols[mesh.neighbour[f]].push_back(mesh.owner[f]);
    }
    m.row_ptr.assign(nc + 1, 0);
    for (int c = 0; c < nc; ++c) {
        std::sort(cols[c].begin(), cols[c].end());
        m.row_ptr[c + 1] = m.row_ptr[c] + static_cast<int>(cols[c].size());
        m.col.insert(m.col.end(), cols[c].begin(), cols[c].end());
    }
    m.blocks.assign(m.col.size(), Mat3::zero());

    for (int f = 0; f < mesh.n_faces(); ++f) {
        // alpha is unity in the matrix even when the residual scales its stabilisation.
        const double coeff = kbar * geom.delta_mag[f] / geom.d_mag[f] * geom.area_mag[f];
        const int p = mesh.owner[f];
        if (mesh.is_internal(f)) {
            const int n = mesh.neighbour[f];
            *m.find(p, n) += coeff * Mat3::identity();
            *m.find(n, p) += coeff * Mat3::identity();
            *m.find(p, p) += -coeff * Mat3::identity();
            *m.find(n, n) += -coeff * Mat3::identity();
        } else if (mesh.kind(f) == PatchKind::displacement) {
            *m.find(p, p) += -coeff * Mat3::identity();
        } else if (mesh.kind(f) == PatchKind::symmetry) {
            *m.find(p, p) += -coeff * outer(geom.normal[f], geom.normal[f]);
        }
    }

    if (config.transient) {
        if (!(config.dt > 0.0)) throw InvalidArgument("approximate jacobian: dt must be positive");
        for (int c = 0; c < nc; ++c)
            *m.find(c, c) +=
                (-2.25 * config.rho * geom.volume[c] / (config.dt * config.dt)) * Mat3::identity();
    }
    return m;
}

}  // namespace solidfv
