#pragma once

// Compressed-row sparse matrices over the cell adjacency, Krylov solvers, and the
// preconditioner factorisations shared by both solution algorithms.

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "solidfv/types.hpp"

namespace solidfv {

struct ScalarCsrMatrix {
    int n = 0;
    std::vector<int> row_ptr;  // size n+1
    std::vector<int> col;      // sorted within each row
    std::vector<double> val;

    static ScalarCsrMatrix from_triplets(int n, std::vector<std::array<int, 2>> idx,
                                         std::vector<double> values);

    std::vector<double> apply(const std::vector<double>& x) const;
    double* find(int i, int j);  // nullptr when (i,j) is outside the sparsity
    const double* find(int i, int j) const;

    // Debug dump, one "row col value" line per entry.
    void dump(const std::string& path) const;
};

// Block matrix over cell adjacency with dense dim x dim blocks, applied to
// interleaved vectors of length dim * n_cells.
struct BlockSparseMatrix {
    int dim = 3;
    int n_cells = 0;
    std::vector<int> row_ptr;
    std::vector<int> col;
    std::vector<Mat3> blocks;

    int rows() const { return dim * n_cells; }
    std::vector<double> apply(const std::vector<double>& x) const;
    Mat3* find(int i, int j);

    // Per-component scalar matrix; requires every block to be diagonal.
    ScalarCsrMatrix scalar_component(int c) const;
    // Scalar expansion with per-cell interleaving, dim*n_cells square.
    ScalarCsrMatrix expand_scalar() const;
};

std::vector<ScalarCsrMatrix> scalar_component_matrices(const BlockSparseMatrix& a);

using LinearOperator = std::function<std::vector<double>(const std::vector<double>&)>;

class Preconditioner {
public:
    virtual ~Preconditioner() = default;
    virtual std::vector<double> solve(const std::vector<double>& r) const = 0;
};

std::unique_ptr<Preconditioner> identity_preconditioner();

// Incomplete Cholesky with zero fill; throws IluBreakdown on a non-positive pivot.
std::unique_ptr<Preconditioner> ic0_factor(const ScalarCsrMatrix& a);

// Level-based ILU(k); throws IluBreakdown on a zero pivot.
std::unique_ptr<Preconditioner> ilu_factor(const ScalarCsrMatrix& a, int k);

// Direct sparse LU with partial pivoting; throws LuSingular.
std::unique_ptr<Preconditioner> lu_factor(const ScalarCsrMatrix& a);

struct CgResult {
    std::vector<double> x;
    int iters = 0;
    bool converged = false;
    bool diag_fallback = false;  // IC(0) broke down, diagonal preconditioning used
};

// IC(0)-preconditioned conjugate gradient on an SPD matrix.
CgResult cg_solve(const ScalarCsrMatrix& a, const std::vector<double>& b,
                  const std::vector<double>& x0, double relative_reduction, int max_iters);

enum class GmresStatus { converged, max_iters, stagnated };

struct GmresResult {
    std::vector<double> x;
    int iters = 0;
    GmresStatus status = GmresStatus::max_iters;
    double rel_residual = 1.0;                // preconditioned-norm reduction achieved
    std::vector<double> residual_history;     // per-iteration preconditioned residual estimates
};

// Restarted GMRES, left-preconditioned by default (right behind the flag).
GmresResult gmres_solve(const LinearOperator& op, const std::vector<double>& b,
                        const std::vector<double>& x0, const Preconditioner* precond,
                        int restart, double relative_reduction, int max_iters,
                        bool right_preconditioned = false);

}  // namespace solidfv
