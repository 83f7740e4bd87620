#include "solidfv/cases.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "solidfv/errors.hpp"
#include "solidfv/laws.hpp"

namespace solidfv {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Manufactured-solution parameters: cube edge 0.2 m, micron-scale amplitudes so
// the linear elastic law is exact for the field it manufactures.
constexpr double kMmsAx = 2.0e-6;
constexpr double kMmsAy = 4.0e-6;
constexpr double kMmsAz = 6.0e-6;
constexpr double kMmsEdge = 0.2;
constexpr double kMmsE = 200.0e9;
constexpr double kMmsNu = 0.3;

}  // namespace

Vec3 mms_exact_displacement(const Vec3& x) {
    const double s = std::sin(4.0 * kPi * x.x) * std::sin(2.0 * kPi * x.y) * std::sin(kPi * x.z);
    return {kMmsAx * s, kMmsAy * s, kMmsAz * s};
}

Mat3 mms_exact_gradient(const Vec3& x) {
    const double sx = std::sin(4.0 * kPi * x.x), cx = std::cos(4.0 * kPi * x.x);
    const double sy = std::sin(2.0 * kPi * x.y), cy = std::cos(2.0 * kPi * x.y);
    const double sz = std::sin(kPi * x.z), cz = std::cos(kPi * x.z);
    const Vec3 ds{4.0 * kPi * cx * sy * sz, 2.0 * kPi * sx * cy * sz, kPi * sx * sy * cz};
    return outer(ds, Vec3{kMmsAx, kMmsAy, kMmsAz});  // G(i,j) = d_i u_j
}

Mat3 mms_exact_stress(const Vec3& x, double mu, double lambda) {
    return hooke_stress(mms_exact_gradient(x), mu, lambda);
}

Vec3 mms_body_force(const Vec3& x, double mu, double lambda) {
    const double sx = std::sin(4.0 * kPi * x.x), cx = std::cos(4.0 * kPi * x.x);
    const double sy = std::sin(2.0 * kPi * x.y), cy = std::cos(2.0 * kPi * x.y);
    const double sz = std::sin(kPi * x.z), cz = std::cos(kPi * x.z);
    const double s = sx * sy * sz;
    const double cxy = cx * cy * sz;  // mixed second derivatives of the sine product
    const double cxz = cx * sy * cz;
    const double cyz = sx * cy * cz;
    const double ml = mu + lambda;
    const double p2 = kPi * kPi;
    return {p2 * ((37.0 * mu + 16.0 * lambda) * kMmsAx * s - 8.0 * ml * kMmsAy * cxy -
                  4.0 * ml * kMmsAz * cxz),
            p2 * ((25.0 * mu + 4.0 * lambda) * kMmsAy * s - 8.0 * ml * kMmsAx * cxy -
                  2.0 * ml * kMmsAz * cyz),
            p2 * ((22.0 * mu + lambda) * kMmsAz * s - 4.0 * ml * kMmsAx * cxz -
                  2.0 * ml * kMmsAy * cyz)};
}

CavityExact cavity_exact(const Vec3& x, double a, double T, double nu, double E) {
    const double r2 = x.x * x.x + x.y * x.y;  // cylindrical radius squared
    const double R2 = r2 + x.z * x.z;         // spherical radius squared
    const double R = std::sqrt(R2);
    if (R < a * (1.0 - 1e-12))
        throw std::domain_error("cavity_exact: point inside the cavity");

    const double a2 = a * a, a3 = a2 * a;
    const double aR3 = a3 / (R2 * R);
    const double a2R2 = a2 / R2;
    const double rR2 = r2 / R2;
    const double denom = 14.0 - 10.0 * nu;

    // Stress in the cylindrical frame aligned with the remote z tension.
    const double srr =
        T / denom * aR3 *
        (9.0 - 15.0 * nu - 12.0 * a2R2 - rR2 * (72.0 - 15.0 * nu - 105.0 * a2R2) +
         15.0 * rR2 * rR2 * (5.0 - 7.0 * a2R2));
    const double stt = T / denom * aR3 *
                       (9.0 - 15.0 * nu - 12.0 * a2R2 - 15.0 * rR2 * (1.0 - 2.0 * nu - a2R2));
    const double szz =
        T * (1.0 - aR3 / denom *
                       (38.0 - 10.0 * nu - 24.0 * a2R2 - rR2 * (117.0 - 15.0 * nu - 120.0 * a2R2) +
                        15.0 * rR2 * rR2 * (5.0 - 7.0 * a2R2)));
    const double szr = T / denom * (a3 * x.z * std::sqrt(r2) / (R2 * R2 * R)) *
                       (-3.0 * (19.0 - 5.0 * nu) + 60.0 * a2R2 + 15.0 * rR2 * (5.0 - 7.0 * a2R2));

    const double theta = std::atan2(x.y, x.x);
    const double c = std::cos(theta), sn = std::sin(theta);
    Mat3 sigma = Mat3::zero();
    sigma(0, 0) = srr * c * c + stt * sn * sn;
    sigma(1, 1) = srr * sn * sn + stt * c * c;
    sigma(2, 2) = szz;
    sigma(0, 1) = sigma(1, 0) = (srr - stt) * sn * c;
    sigma(0, 2) = sigma(2, 0) = szr * c;
    sigma(1, 2) = sigma(2, 1) = szr * sn;

    // Displacement: spherical components about the cavity centre plus the uniform
    // remote uniaxial contribution.
    const double mu = mu_from(E, nu);
    const double A = -T * a3 * (13.0 - 10.0 * nu) / (8.0 * mu * (7.0 - 5.0 * nu));
    const double B = T * a3 * a2 / (8.0 * mu * (7.0 - 5.0 * nu));
    const double C = 5.0 * T * a3 * (1.0 - 2.0 * nu) / (8.0 * mu * (7.0 - 5.0 * nu));

    const double tp = std::atan2(std::sqrt(r2), x.z);  // polar angle from +z
    const double c2 = std::cos(2.0 * tp), s2 = std::sin(2.0 * tp);
    const double R4 = R2 * R2;
    const double uR = -A / R2 - 3.0 * B / R4 +
                      ((5.0 - 4.0 * nu) / (1.0 - 2.0 * nu) * C / R2 - 9.0 * B / R4) * c2;
    const double ut = -(2.0 * C / R2 + 6.0 * B / R4) * s2;

    const double st = std::sin(tp), ct = std::cos(tp);
    Vec3 u{uR * st * c + ut * ct * c, uR * st * sn + ut * ct * sn, uR * ct - ut * st};
    u += Vec3{-nu * T * x.x / E, -nu * T * x.y / E, T * x.z / E};
    return {sigma, u};
}

ErrorNorms error_norms(const MeshGeometry& geom, const std::vector<double>& cell_error) {
    if (cell_error.size() != geom.volume.size())
        throw InvalidArgument("error_norms: cell_error size does not match the mesh");
    double sum = 0.0, vol = 0.0, worst = 0.0;
    for (std::size_t c = 0; c < cell_error.size(); ++c) {
        sum += geom.volume[c] * cell_error[c] * cell_error[c];
        vol += geom.volume[c];
        worst = std::max(worst, std::abs(cell_error[c]));
    }
    return {std::sqrt(sum / vol), worst};
}

CaseDefinition build_mms_case(int divisions, bool distorted, std::uint64_t seed) {
    if (divisions < 2) throw InvalidArgument("build_mms_case: divisions must be at least 2");
    CaseDefinition def;
    def.name = distorted ? "mms-distorted" : "mms";
    BoxPatchSpec spec;
    spec.fill(PatchKind::displacement);
    def.mesh = generate_box_hex({kMmsEdge, kMmsEdge, kMmsEdge}, {divisions, divisions, divisions},
                                spec);
    if (distorted) def.mesh = distort_mesh(def.mesh, 0.3, seed);
    def.geometry = compute_geometry(def.mesh);

    const double mu = mu_from(kMmsE, kMmsNu);
    const double lambda = lambda_from(kMmsE, kMmsNu);
    def.law = std::make_shared<HookeLaw>(mu, lambda);
    for (std::size_t p = 0; p < def.mesh.patches.size(); ++p)
        def.bcs.push_back({PatchKind::displacement,
                           [](const Vec3& x, double) { return mms_exact_displacement(x); }});
    def.disc.body_force = [mu, lambda](const Vec3& x) { return mms_body_force(x, mu, lambda); };
    def.exact_u = mms_exact_displacement;
    def.exact_stress = [mu, lambda](const Vec3& x) { return mms_exact_stress(x, mu, lambda); };
    def.n_steps = 1;
    return def;
}

CaseDefinition build_cavity_probe_case(int divisions) {
    if (divisions < 2) throw InvalidArgument("build_cavity_probe_case: divisions must be at least 2");
    // A cube sitting diagonally off the cavity (radius 0.2 m, centred at the origin)
    // so every point is exterior; the exact field drives all-displacement boundaries.
    const double a = 0.2, T = 1.0e6, nu = 0.3, E = 200.0e9;
    const Vec3 shift{0.25, 0.25, 0.25};
    CaseDefinition def;
    def.name = "cavity-probe";
    BoxPatchSpec spec;
    spec.fill(PatchKind::displacement);
    def.mesh = generate_box_hex({0.3, 0.3, 0.3}, {divisions, divisions, divisions}, spec);
    for (auto& p : def.mesh.points) p += shift;
    def.geometry = compute_geometry(def.mesh);

    def.law = std::make_shared<HookeLaw>(mu_from(E, nu), lambda_from(E, nu));
    for (std::size_t p = 0; p < def.mesh.patches.size(); ++p)
        def.bcs.push_back({PatchKind::displacement, [=](const Vec3& x, double) {
                               return cavity_exact(x, a, T, nu, E).u;
                           }});
    def.exact_u = [=](const Vec3& x) { return cavity_exact(x, a, T, nu, E).u; };
    def.exact_stress = [=](const Vec3& x) { return cavity_exact(x, a, T, nu, E).sigma; };
    def.n_steps = 1;
    return def;
}

CaseDefinition build_cook_case(int variant, int n) {
    if (variant < 1 || variant > 3) throw InvalidArgument("build_cook_case: variant must be 1..3");
    if (n < 1) throw InvalidArgument("build_cook_case: refinement index must be at least 1");
    CaseDefinition def;
    def.name = variant == 1 ? "cook-i" : variant == 2 ? "cook-ii" : "cook-iii";
    def.mesh = generate_cook_quad(n);
    def.geometry = compute_geometry(def.mesh);

    double tau = 0.0;
    switch (variant) {
        case 1:
            def.law = std::make_shared<HookeLaw>(mu_from(70.0e6, 1.0 / 3.0),
                                                 lambda_from(70.0e6, 1.0 / 3.0));
            tau = 6.25e3;
            def.n_steps = 1;
            break;
        case 2:
            def.law = std::make_shared<NeoHookeanLaw>(mu_from(1.0985e6, 0.3),
                                                      kappa_from(1.0985e6, 0.3));
            tau = 62.5e3;
            def.n_steps = 30;
            def.disc.total_lagrangian = true;
            break;
        case 3: {
            // Saturation hardening, MPa coefficients; yield starts at 0.45 MPa.
            HardeningCurve curve = HardeningCurve::saturation(0.45e6, 0.12924e6, 0.715e6, 16.93);
            auto law = std::make_shared<J2PlasticLaw>(mu_from(206.9e6, 0.29),
                                                      kappa_from(206.9e6, 0.29), curve);
            law->resize(def.mesh.n_cells);
            def.law = law;
            tau = 312.5e3;
            def.n_steps = 30;
            def.disc.total_lagrangian = true;
            break;
        }
    }

    // Patches: left (clamped), right (sheared), bottom, top. Time is the load fraction.
    def.bcs.push_back({PatchKind::displacement, [](const Vec3&, double) { return Vec3{}; }});
    def.bcs.push_back(
        {PatchKind::traction, [tau](const Vec3&, double t) { return Vec3{0.0, tau * t, 0.0}; }});
    def.bcs.push_back({PatchKind::traction, [](const Vec3&, double) { return Vec3{}; }});
    def.bcs.push_back({PatchKind::traction, [](const Vec3&, double) { return Vec3{}; }});
    return def;
}

CaseDefinition build_cantilever_case(double traction_scale) {
    // 2 m column clamped at x = 0; a suddenly applied constant traction on the upper
    // surface rings the beam at its 1 Hz small-strain natural frequency.
    CaseDefinition def;
    def.name = "cantilever";
    BoxPatchSpec spec;
    spec.fill(PatchKind::traction);
    spec[0] = PatchKind::displacement;  // xmin
    def.mesh = generate_box_hex({2.0, 0.2, 0.2}, {30, 3, 3}, spec);
    def.geometry = compute_geometry(def.mesh);

    def.law = std::make_shared<NeoHookeanLaw>(mu_from(15.293e6, 0.3), kappa_from(15.293e6, 0.3));
    const Vec3 load = Vec3{50.0e3, 50.0e3, 0.0} * traction_scale;
    for (std::size_t p = 0; p < def.mesh.patches.size(); ++p) {
        if (def.mesh.patches[p].name == "xmin")
            def.bcs.push_back({PatchKind::displacement, [](const Vec3&, double) { return Vec3{}; }});
        else if (def.mesh.patches[p].name == "zmax")
            def.bcs.push_back({PatchKind::traction, [load](const Vec3&, double) { return load; }});
        else
            def.bcs.push_back({PatchKind::traction, [](const Vec3&, double) { return Vec3{}; }});
    }
    def.disc.total_lagrangian = true;
    def.disc.transient = true;
    def.disc.dt = 1.0e-3;
    def.disc.rho = 1000.0;
    def.n_steps = 1000;
    return def;
}

CaseDefinition build_case(const std::string& name) {
    if (name == "mms") return build_mms_case(10);
    if (name == "mms-distorted") return build_mms_case(10, true);
    if (name == "cavity-probe") return build_cavity_probe_case(6);
    if (name == "cook-i") return build_cook_case(1, 3);
    if (name == "cook-ii") return build_cook_case(2, 3);
    if (name == "cook-iii") return build_cook_case(3, 3);
    if (name == "cantilever") return build_cantilever_case();
    throw InvalidArgument("build_case: unknown case name '" + name + "'");
}

std::vector<StudyRow> run_order_study(const std::string& case_name, int levels,
                                      const SolverConfig& solver, std::uint64_t seed) {
    if (levels < 1) throw InvalidArgument("run_order_study: levels must be at least 1");
    const bool distorted = case_name == "mms-distorted";
    if (!distorted && case_name != "mms")
        throw InvalidArgument("run_order_study: no exact solution for case '" + case_name + "'");

    std::vector<StudyRow> rows;
    for (int level = 0; level < levels; ++level) {
        const int divisions = 5 << level;
        CaseDefinition def = build_mms_case(divisions, distorted, seed);
        ResidualEvaluator eval = def.make_evaluator();
        VectorField field(def.mesh.n_cells);
        SteppingResult result = run_steps(eval, field, solver, def.n_steps);

        StudyRow row;
        row.h = kMmsEdge / divisions;
        row.cells = def.mesh.n_cells;
        row.dof = def.mesh.dim * def.mesh.n_cells;
        row.status = to_string(result.status);

        std::vector<double> err_u(def.mesh.n_cells), err_sig(def.mesh.n_cells);
        try {
            const std::vector<Mat3> grads = eval.gradients(field.u);
            for (int c = 0; c < def.mesh.n_cells; ++c) {
                const Vec3& xc = def.geometry.centroid[c];
                err_u[c] = norm(field.u[c] - def.exact_u(xc));
                err_sig[c] = frobenius_norm(def.law->stress(c, grads[c]) - def.exact_stress(xc));
            }
            const ErrorNorms nu_ = error_norms(def.geometry, err_u);
            const ErrorNorms ns = error_norms(def.geometry, err_sig);
            row.l2_u = nu_.l2;
            row.linf_u = nu_.linf;
            row.l2_sig = ns.l2;
            row.linf_sig = ns.linf;
        } catch (const Error&) {
            row.l2_u = row.linf_u = row.l2_sig = row.linf_sig =
                std::numeric_limits<double>::quiet_NaN();
        }

        if (rows.empty()) {
            row.order_l2_u = std::numeric_limits<double>::quiet_NaN();
            row.order_linf_u = std::numeric_limits<double>::quiet_NaN();
        } else {
            row.order_l2_u = std::log2(rows.back().l2_u / row.l2_u);
            row.order_linf_u = std::log2(rows.back().linf_u / row.linf_u);
        }
        rows.push_back(row);
        if (result.status != SolveStatus::converged) break;  // partial table
    }
    return rows;
}

void write_study_csv(const std::vector<StudyRow>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("write_study_csv: cannot open '" + path + "'");
    out << "h,cells,dof,L2_u,Linf_u,L2_sig,Linf_sig,order_L2_u,order_Linf_u,status\n";
    out.precision(12);
    for (const StudyRow& r : rows) {
        out << r.h << ',' << r.cells << ',' << r.dof << ',' << r.l2_u << ',' << r.linf_u << ','
            << r.l2_sig << ',' << r.linf_sig << ',' << r.order_l2_u << ',' << r.order_linf_u << ','
            << r.status << '\n';
    }
    if (!out) throw Error("write_study_csv: write to '" + path + "' failed");
}

}  // namespace solidfv
