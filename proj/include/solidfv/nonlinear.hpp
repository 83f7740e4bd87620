#pragma once

// The two outer solution algorithms (segregated quasi-Newton, Jacobian-free
// Newton-Krylov), the shared convergence rules, backtracking line search, the
// finite-difference Jacobian action, and the time/load stepping driver.

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "solidfv/discretisation.hpp"
#include "solidfv/linalg.hpp"

namespace solidfv {

enum class Algorithm { segregated, jfnk };
enum class PreconditionerKind { automatic, none, ilu0, ilu1, ilu2, lu };
enum class SolveStatus { converged, diverged, max_iters };

std::string to_string(Algorithm a);
std::string to_string(PreconditionerKind k);
std::string to_string(SolveStatus s);
Algorithm algorithm_from_string(const std::string& s);
PreconditionerKind preconditioner_from_string(const std::string& s);

struct SolverConfig {
    Algorithm algorithm = Algorithm::jfnk;
    double a_tol = 1e-50;
    double r_tol = 1e-6;
    double s_tol = 0.0;              // inert at zero
    int max_outer = 0;               // 0 => 2000 segregated, 50 jfnk
    double inner_reduction = 0.0;    // 0 => 0.9 segregated, 1e-3 jfnk
    int restart = 30;
    int max_krylov = 300;            // per linear solve
    PreconditionerKind preconditioner = PreconditionerKind::automatic;
    bool right_preconditioned = false;
    bool line_search = true;
    double relaxation = 1.0;         // segregated update under-relaxation

    void validate() const;
    int resolved_max_outer() const;
    double resolved_inner_reduction() const;
};

struct IterationRecord {
    int step = 0;
    int iter = 0;
    double r_norm = 0.0;
    int krylov_iters = 0;  // linear iterations spent producing this iterate
    double s = 0.0;        // accepted line-search factor (1 when disabled)
};

struct SolveReport {
    SolveStatus status = SolveStatus::max_iters;
    std::string detail;  // divergence reason, fallback notes
    int step = 0;        // stamped by the stepping driver
    int outer_iters = 0;
    int krylov_iters = 0;
    double initial_residual = 0.0;
    double final_residual = 0.0;
    bool cg_diag_fallback = false;
    double wall_seconds = 0.0;
    std::vector<IterationRecord> iterations;  // full residual-norm sequence, iter 0 included
};

enum class Convergence { none, absolute, relative, step };

Convergence check_convergence(double r_norm, double r_norm0, double du_norm, double u_norm,
                              const SolverConfig& cfg);

// (R(u + eps v) - R_u) / eps with eps = sqrt(machine eps) sqrt(1 + |u|) / |v|; zero v
// returns zero. Evaluator failures at the perturbed state surface as JvpNan.
std::vector<double> jacobian_vector_product(const ResidualEvaluator& eval,
                                            const std::vector<Vec3>& u,
                                            const std::vector<double>& r_u_flat,
                                            const std::vector<double>& v);

struct LineSearchResult {
    bool success = false;
    double s = 0.0;
    double r_norm = 0.0;
    std::vector<Vec3> residual;  // residual at the accepted iterate
};

// Backtracking over s in {1, 1/2, ..., 1/32}; accepts the first strict decrease from
// r_norm0. Residual evaluation failures reject the candidate instead of propagating.
LineSearchResult line_search(const ResidualEvaluator& eval, const std::vector<Vec3>& u,
                             const std::vector<Vec3>& du, double r_norm0);

// Second-order Taylor predictor for a new transient step; previous solution when static.
std::vector<Vec3> predict_step_start(const VectorField& field, double dt, bool transient);

// One nonlinear solve at the evaluator's current time. u is the initial guess in and
// the final iterate out. The preconditioner may be null (identity).
SolveReport jfnk_solve(const ResidualEvaluator& eval, std::vector<Vec3>& u,
                       const SolverConfig& cfg, const Preconditioner* precond);

// Total-displacement segregated solve; components takes the per-component approximate
// Jacobian (negative definite, as assembled).
SolveReport segregated_solve(const ResidualEvaluator& eval, std::vector<Vec3>& u,
                             const SolverConfig& cfg,
                             const std::vector<ScalarCsrMatrix>& jac_components);

struct SteppingResult {
    SolveStatus status = SolveStatus::converged;  // first non-converged step wins
    std::vector<SolveReport> steps;
    double wall_seconds = 0.0;
};

// Invoked after each converged step with the step index and the updated field.
using StepCallback = std::function<void(int, const VectorField&)>;

// Runs n_steps load increments (static; time = step fraction in (0,1]) or time steps
// (transient; time = step * dt), with predictor, preconditioner reuse, commit, and
// history rotation. Stops at the first non-converged step; failures become statuses.
SteppingResult run_steps(ResidualEvaluator& eval, VectorField& field, const SolverConfig& cfg,
                         int n_steps, const StepCallback& on_step = {});

// Factorisation policy: LU for small systems and 2-D, ILU(1) for large 3-D when
// automatic; ILU breakdown retried once with a diagonal shift of 1e-12 |diag|.
std::unique_ptr<Preconditioner> make_preconditioner(const ScalarCsrMatrix& a,
                                                    PreconditionerKind kind);

}  // namespace solidfv
