#include "solidfv/nonlinear.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "solidfv/errors.hpp"

namespace solidfv {

namespace {

double vec_norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double e : v) s += e * e;
    return std::sqrt(s);
}

double field_norm(const std::vector<Vec3>& v, int dim) {
    double s = 0.0;
    for (const Vec3& e : v)
        for (int c = 0; c < dim; ++c) s += e[c] * e[c];
    return std::sqrt(s);
}

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

}  // namespace

std::string to_string(Algorithm a) { return a == Algorithm::segregated ? "segregated" : "jfnk"; }

std::string to_string(PreconditionerKind k) {
    switch (k) {
        case PreconditionerKind::automatic: return "auto";
        case PreconditionerKind::none: return "none";
        case PreconditionerKind::ilu0: return "ilu0";
        case PreconditionerKind::ilu1: return "ilu1";
        case PreconditionerKind::ilu2: return "ilu2";
        case PreconditionerKind::lu: return "lu";
    }
    return "?";
}

std::string to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::converged: return "converged";
        case SolveStatus::diverged: return "diverged";
        case SolveStatus::max_iters: return "max-iters";
    }
    return "?";
}

Algorithm algorithm_from_string(const std::string& s) {
    if (s == "segregated") return Algorithm::segregated;
    if (s == "jfnk") return Algorithm::jfnk;
    throw InvalidArgument("unknown algorithm '" + s + "'");
}

PreconditionerKind preconditioner_from_string(const std::string& s) {
    if (s == "auto") return PreconditionerKind::automatic;
    if (s == "none") return PreconditionerKind::none;
    if (s == "ilu0") return PreconditionerKind::ilu0;
    if (s == "ilu1") return PreconditionerKind::ilu1;
    if (s == "ilu2") return PreconditionerKind::ilu2;
    if (s == "lu") return PreconditionerKind::lu;
    throw InvalidArgument("unknown preconditioner '" + s + "'");
}

void SolverConfig::validate() const {
    if (a_tol < 0.0 || r_tol < 0.0 || s_tol < 0.0)
        throw InvalidArgument("solver: tolerances must be non-negative");
    if (r_tol >= 1.0) throw InvalidArgument("solver: r_tol must be below 1");
    if (max_outer < 0 || restart < 1 || max_krylov < 1)
        throw InvalidArgument("solver: bad iteration limits");
    if (!(relaxation > 0.0) || relaxation > 1.0)
        throw InvalidArgument("solver: relaxation must be in (0, 1]");
}

int SolverConfig::resolved_max_outer() const {
    if (max_outer > 0) return max_outer;
    return algorithm == Algorithm::segregated ? 2000 : 50;
}

double SolverConfig::resolved_inner_reduction() const {
    if (inner_reduction > 0.0) return inner_reduction;
    return algorithm == Algorithm::segregated ? 0.9 : 1e-3;
}

Convergence check_convergence(double r_norm, double r_norm0, double du_norm, double u_norm,
                              const SolverConfig& cfg) {
    if (r_norm <= cfg.a_tol) return Convergence::absolute;
    if (r_norm <= cfg.r_tol * r_norm0) return Convergence::relative;
    if (cfg.s_tol > 0.0 && du_norm <= cfg.s_tol * u_norm) return Convergence::step;
    return Convergence::none;
}

std::vector<double> jacobian_vector_product(const ResidualEvaluator& eval,
                                            const std::vector<Vec3>& u,
                                            const std::vector<double>& r_u_flat,
                                            const std::vector<double>& v) {
    const double v_norm = vec_norm(v);
    if (v_norm == 0.0) return std::vector<double>(v.size(), 0.0);

    const int dim = eval.dim();
    const double u_norm = field_norm(u, dim);
    const double eps =
        std::sqrt(std::numeric_limits<double>::epsilon()) * std::sqrt(1.0 + u_norm) / v_norm;

    std::vector<Vec3> u_pert = u;
    for (std::size_t c = 0; c < u_pert.size(); ++c)
        for (int a = 0; a < dim; ++a) u_pert[c][a] += eps * v[c * dim + a];

    std::vector<Vec3> r_pert;
    try {
        r_pert = eval.residual(u_pert);
    } catch (const ResidualNan& e) {
        throw JvpNan(std::string("jvp: ") + e.what());
    } catch (const InvertedElement& e) {
        throw JvpNan(std::string("jvp: ") + e.what());
    } catch (const LawOverflow& e) {
        throw JvpNan(std::string("jvp: ") + e.what());
    }

    std::vector<double> out = flatten(r_pert, dim);
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = (out[i] - r_u_flat[i]) / eps;
        if (!std::isfinite(out[i])) throw JvpNan("jvp: non-finite difference quotient");
    }
    return out;
}

LineSearchResult line_search(const ResidualEvaluator& eval, const std::vector<Vec3>& u,
                             const std::vector<Vec3>& du, double r_norm0) {
    LineSearchResult out;
    double s = 1.0;
    for (int attempt = 0; attempt < 6; ++attempt, s *= 0.5) {
        std::vector<Vec3> candidate = u;
        for (std::size_t c = 0; c < u.size(); ++c) candidate[c] += s * du[c];
        std::vector<Vec3> r;
        try {
            r = eval.residual(candidate);
        } catch (const Error&) {
            continue;  // invalid trial state rejects this step length
        }
        const double r_norm = field_norm(r, eval.dim());
        if (r_norm < r_norm0) {
            out.success = true;
            out.s = s;
            out.r_norm = r_norm;
            out.residual = std::move(r);
            return out;
        }
    }
    return out;
}

std::vector<Vec3> predict_step_start(const VectorField& field, double dt, bool transient) {
    if (!transient) return field.u;
    std::vector<Vec3> u0(field.size());
    for (int c = 0; c < field.size(); ++c)
        u0[c] = field.u_old[c] + dt * field.v_old[c] + (0.5 * dt * dt) * field.a_old[c];
    return u0;
}

SolveReport jfnk_solve(const ResidualEvaluator& eval, std::vector<Vec3>& u,
                       const SolverConfig& cfg, const Preconditioner* precond) {
    cfg.validate();
    const Stopwatch clock;
    const int dim = eval.dim();
    const int max_outer = cfg.resolved_max_outer();
    const double inner_reduction = cfg.resolved_inner_reduction();

    SolveReport report;
    std::vector<Vec3> r = eval.residual(u);
    double r_norm = field_norm(r, dim);
    const double r_norm0 = r_norm;
    report.initial_residual = r_norm0;
    report.final_residual = r_norm;
    report.iterations.push_back({0, 0, r_norm, 0, 0.0});

    if (check_convergence(r_norm, r_norm0, 0.0, 0.0, cfg) != Convergence::none) {
        report.status = SolveStatus::converged;
        report.wall_seconds = clock.seconds();
        return report;
    }

    int consecutive_stagnations = 0;
    for (int k = 0; k < max_outer; ++k) {
        const std::vector<double> r_flat = flatten(r, dim);
        std::vector<double> rhs(r_flat.size());
        for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] = -r_flat[i];

        GmresResult gm;
        try {
            const LinearOperator op = [&](const std::vector<double>& v) {
                return jacobian_vector_product(eval, u, r_flat, v);
            };
            gm = gmres_solve(op, rhs, std::vector<double>(rhs.size(), 0.0), precond, cfg.restart,
                             inner_reduction, cfg.max_krylov, cfg.right_preconditioned);
        } catch (const JvpNan& e) {
            report.status = SolveStatus::diverged;
            report.detail = e.what();
            break;
        }
        report.krylov_iters += gm.iters;

        if (gm.status == GmresStatus::stagnated) {
            if (++consecutive_stagnations >= 2) {
                report.status = SolveStatus::diverged;
                report.detail = "gmres stagnated on two consecutive outer iterations";
                break;
            }
        } else {
            consecutive_stagnations = 0;
        }

        const std::vector<Vec3> du = unflatten(gm.x, dim);
        double s = 1.0;
        if (cfg.line_search) {
            LineSearchResult ls = line_search(eval, u, du, r_norm);
            if (!ls.success) {
                report.status = SolveStatus::diverged;
                report.detail = "line search found no residual decrease";
                break;
            }
            s = ls.s;
            r = std::move(ls.residual);
            r_norm = ls.r_norm;
            for (std::size_t c = 0; c < u.size(); ++c) u[c] += s * du[c];
        } else {
            for (std::size_t c = 0; c < u.size(); ++c) u[c] += du[c];
            try {
                r = eval.residual(u);
            } catch (const Error& e) {
                report.status = SolveStatus::diverged;
                report.detail = e.what();
                report.outer_iters = k + 1;
                break;
            }
            r_norm = field_norm(r, dim);
        }

        report.outer_iters = k + 1;
        report.iterations.push_back({0, k + 1, r_norm, gm.iters, s});
        report.final_residual = r_norm;

        const double du_norm = s * field_norm(du, dim);
        if (check_convergence(r_norm, r_norm0, du_norm, field_norm(u, dim), cfg) !=
            Convergence::none) {
            report.status = SolveStatus::converged;
            break;
        }
    }
    if (report.status == SolveStatus::max_iters && report.outer_iters == max_outer)
        report.detail = "outer iteration limit reached";
    report.wall_seconds = clock.seconds();
    return report;
}

SolveReport segregated_solve(const ResidualEvaluator& eval, std::vector<Vec3>& u,
                             const SolverConfig& cfg,
                             const std::vector<ScalarCsrMatrix>& jac_components) {
    cfg.validate();
    const Stopwatch clock;
    const int dim = eval.dim();
    const int nc = eval.n_cells();
    const int max_outer = cfg.resolved_max_outer();
    const double inner_reduction = cfg.resolved_inner_reduction();

    // CG wants SPD: solve with A = -J (the approximate Jacobian is negative definite).
    std::vector<ScalarCsrMatrix> a(jac_components);
    for (ScalarCsrMatrix& m : a)
        for (double& v : m.val) v = -v;

    SolveReport report;
    std::vector<Vec3> r = eval.residual(u);
    double r_norm = field_norm(r, dim);
    const double r_norm0 = r_norm;
    report.initial_residual = r_norm0;
    report.final_residual = r_norm;
    report.iterations.push_back({0, 0, r_norm, 0, 0.0});

    if (check_convergence(r_norm, r_norm0, 0.0, 0.0, cfg) != Convergence::none) {
        report.status = SolveStatus::converged;
        report.wall_seconds = clock.seconds();
        return report;
    }

    for (int k = 0; k < max_outer; ++k) {
        int krylov = 0;
        std::vector<Vec3> u_next(nc);
        for (int c = 0; c < dim; ++c) {
            // A u_next = A u_k + R_c(u_k), the total-displacement form of J du = -R.
            std::vector<double> uc(nc), rc(nc);
            for (int i = 0; i < nc; ++i) {
                uc[i] = u[i][c];
                rc[i] = r[i][c];
            }
            std::vector<double> b = a[c].apply(uc);
            for (int i = 0; i < nc; ++i) b[i] += rc[i];
            const CgResult cg = cg_solve(a[c], b, uc, inner_reduction, std::max(nc, 50));
            krylov += cg.iters;
            report.cg_diag_fallback = report.cg_diag_fallback || cg.diag_fallback;
            for (int i = 0; i < nc; ++i) u_next[i][c] = cg.x[i];
        }
        report.krylov_iters += krylov;

        double du_norm = 0.0;
        for (int i = 0; i < nc; ++i) {
            const Vec3 du = cfg.relaxation * (u_next[i] - u[i]);
            for (int c = 0; c < dim; ++c) du_norm += du[c] * du[c];
            u[i] += du;
        }
        du_norm = std::sqrt(du_norm);

        try {
            r = eval.residual(u);
        } catch (const Error& e) {
            report.status = SolveStatus::diverged;
            report.detail = e.what();
            report.outer_iters = k + 1;
            break;
        }
        r_norm = field_norm(r, dim);
        report.outer_iters = k + 1;
        report.iterations.push_back({0, k + 1, r_norm, krylov, 1.0});
        report.final_residual = r_norm;

        if (!std::isfinite(r_norm)) {
            report.status = SolveStatus::diverged;
            report.detail = "residual norm overflow";
            break;
        }
        if (check_convergence(r_norm, r_norm0, du_norm, field_norm(u, dim), cfg) !=
            Convergence::none) {
            report.status = SolveStatus::converged;
            break;
        }
    }
    if (report.status == SolveStatus::max_iters) report.detail = "outer iteration limit reached";
    report.wall_seconds = clock.seconds();
    return report;
}

std::unique_ptr<Preconditioner> make_preconditioner(const ScalarCsrMatrix& a,
                                                    PreconditionerKind kind) {
    if (kind == PreconditionerKind::automatic)
        kind = a.n <= 30000 ? PreconditionerKind::lu : PreconditionerKind::ilu1;
    auto ilu_with_shift = [&](int level) {
        try {
            return ilu_factor(a, level);
        } catch (const IluBreakdown&) {
            double diag_norm = 0.0;
            for (int i = 0; i < a.n; ++i)
                if (const double* d = a.find(i, i)) diag_norm += *d * *d;
            diag_norm = std::sqrt(diag_norm);
            ScalarCsrMatrix shifted = a;
            for (int i = 0; i < a.n; ++i)
                if (double* d = shifted.find(i, i)) *d += 1e-12 * diag_norm;
            return ilu_factor(shifted, level);  // second breakdown propagates
        }
    };
    switch (kind) {
        case PreconditionerKind::none: return nullptr;
        case PreconditionerKind::ilu0: return ilu_with_shift(0);
        case PreconditionerKind::ilu1: return ilu_with_shift(1);
        case PreconditionerKind::ilu2: return ilu_with_shift(2);
        case PreconditionerKind::lu: return lu_factor(a);
        case PreconditionerKind::automatic: break;
    }
    throw InvalidArgument("make_preconditioner: unresolved kind");
}

SteppingResult run_steps(ResidualEvaluator& eval, VectorField& field, const SolverConfig& cfg,
                         int n_steps, const StepCallback& on_step) {
    cfg.validate();
    if (n_steps < 1) throw InvalidArgument("run_steps: need at least one step");
    const Stopwatch clock;
    const bool transient = eval.config().transient;
    const double dt = eval.config().dt;

    const BlockSparseMatrix jac =
        assemble_approximate_jacobian(eval.mesh(), eval.geometry(), eval.kbar(), eval.config());

    // The approximate Jacobian depends only on geometry, K-bar and dt, so one
    // factorisation serves every step and every Newton iteration.
    std::unique_ptr<Preconditioner> precond;
    std::vector<ScalarCsrMatrix> components;
    if (cfg.algorithm == Algorithm::jfnk)
        precond = make_preconditioner(jac.expand_scalar(), cfg.preconditioner);
    else
        components = scalar_component_matrices(jac);

    SteppingResult out;
    for (int step = 1; step <= n_steps; ++step) {
        eval.set_time(transient ? step * dt : static_cast<double>(step) / n_steps);
        if (transient) eval.set_history(field);
        std::vector<Vec3> u = predict_step_start(field, dt, transient);

        SolveReport report;
        try {
            report = cfg.algorithm == Algorithm::jfnk
                         ? jfnk_solve(eval, u, cfg, precond.get())
                         : segregated_solve(eval, u, cfg, components);
        } catch (const Error& e) {
            report.status = SolveStatus::diverged;
            report.detail = e.what();
        }
        report.step = step;
        for (IterationRecord& it : report.iterations) it.step = step;
        out.steps.push_back(report);

        if (report.status != SolveStatus::converged) {
            out.status = report.status;
            break;
        }

        eval.commit(u);
        if (transient) {
            for (int c = 0; c < field.size(); ++c) {
                const Vec3 v_new = bdf2_velocity(u[c], field.u_old[c], field.u_old_old[c], dt);
                const Vec3 a_new = bdf2_acceleration(u[c], field.u_old[c], field.u_old_old[c],
                                                     field.v_old[c], field.v_old_old[c], dt);
                field.u_old_old[c] = field.u_old[c];
                field.u_old[c] = u[c];
                field.v_old_old[c] = field.v_old[c];
                field.v_old[c] = v_new;
                field.a_old[c] = a_new;
            }
        } else {
            field.u_old = u;
        }
        field.u = u;
        if (on_step) on_step(step, field);
    }
    out.wall_seconds = clock.seconds();
    return out;
}

}  // namespace solidfv
