#include "solidfv/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "solidfv/errors.hpp"

namespace solidfv {

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

double norm(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

void axpy(double alpha, const std::vector<double>& x, std::vector<double>& y) {
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += alpha * x[i];
}

}  // namespace

ScalarCsrMatrix ScalarCsrMatrix::from_triplets(int n, std::vector<std::array<int, 2>> idx,
                                               std::vector<double> values) {
    if (idx.size() != values.size()) throw InvalidArgument("from_triplets: size mismatch");
    std::vector<std::size_t> order(idx.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return idx[a] < idx[b]; });

    ScalarCsrMatrix m;
    m.n = n;
    std::vector<int> rows;
    for (std::size_t p : order) {
        int i = idx[p][0], j = idx[p][1];
        if (i < 0 || i >= n || j < 0 || j >= n) throw InvalidArgument("from_triplets: index out of range");
        if (!rows.empty() && rows.back() == i && m.col.back() == j) {
            m.val.back() += values[p];  // duplicates accumulate
            continue;
        }
        rows.push_back(i);
        m.col.push_back(j);
        m.val.push_back(values[p]);
    }
    m.row_ptr.assign(n + 1, 0);
    for (int i : rows) ++m.row_ptr[i + 1];
    for (int r = 0; r < n; ++r) m.row_ptr[r + 1] += m.row_ptr[r];
    return m;
}

std::vector<double> ScalarCsrMatrix::apply(const std::vector<double>& x) const {
    if (static_cast<int>(x.size()) != n) throw InvalidArgument("csr apply: size mismatch");
    std::vector<double> y(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int p = row_ptr[i]; p < row_ptr[i + 1]; ++p) s += val[p] * x[col[p]];
        y[i] = s;
    }
    return y;
}

double* ScalarCsrMatrix::find(int i, int j) {
    auto first = col.begin() + row_ptr[i], last = col.begin() + row_ptr[i + 1];
    auto it = std::lower_bound(first, last, j);
    if (it == last || *it != j) return nullptr;
    return &val[it - col.begin()];
}

const double* ScalarCsrMatrix::find(int i, int j) const {
    return const_cast<ScalarCsrMatrix*>(this)->find(i, j);
}

void ScalarCsrMatrix::dump(const std::string& path) const {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw InvalidArgument("cannot open " + path);
    std::fprintf(f, "%d %d %d\n", n, n, static_cast<int>(val.size()));
    for (int i = 0; i < n; ++i)
        for (int p = row_ptr[i]; p < row_ptr[i + 1]; ++p)
            std::fprintf(f, "%d %d %.17g\n", i, col[p], val[p]);
    std::fclose(f);
}

std::vector<double> BlockSparseMatrix::apply(const std::vector<double>& x) const {
    if (static_cast<int>(x.size()) != rows()) throw InvalidArgument("block apply: size mismatch");
    std::vector<double> y(rows(), 0.0);
    for (int i = 0; i < n_cells; ++i) {
        for (int p = row_ptr[i]; p < row_ptr[i + 1]; ++p) {
            const Mat3& b = blocks[p];
            const int jc = col[p] * dim;
            for (int a = 0; a < dim; ++a) {
                double s = 0.0;
                for (int c = 0; c < dim; ++c) s += b(a, c) * x[jc + c];
                y[i * dim + a] += s;
            }
        }
    }
    return y;
}

Mat3* BlockSparseMatrix::find(int i, int j) {
    auto first = col.begin() + row_ptr[i], last = col.begin() + row_ptr[i + 1];
    auto it = std::lower_bound(first, last, j);
    if (it == last || *it != j) return nullptr;
    return &blocks[it - col.begin()];
}

ScalarCsrMatrix BlockSparseMatrix::scalar_component(int c) const {
    if (c < 0 || c >= dim) throw InvalidArgument("scalar_component: bad component");
    double scale = 0.0;
    for (const Mat3& b : blocks)
        for (int a = 0; a < dim; ++a)
            for (int bb = 0; bb < dim; ++bb) scale = std::max(scale, std::abs(b(a, bb)));
    ScalarCsrMatrix m;
    m.n = n_cells;
    m.row_ptr = row_ptr;
    m.col = col;
    m.val.resize(blocks.size());
    for (std::size_t p = 0; p < blocks.size(); ++p) {
        for (int a = 0; a < dim; ++a)
            for (int bb = 0; bb < dim; ++bb)
                if (a != bb && std::abs(blocks[p](a, bb)) > 1e-12 * scale)
                    throw InvalidArgument("scalar_component: blocks are not diagonal");
        m.val[p] = blocks[p](c, c);
    }
    return m;
}

ScalarCsrMatrix BlockSparseMatrix::expand_scalar() const {
    ScalarCsrMatrix m;
    m.n = rows();
    m.row_ptr.assign(m.n + 1, 0);
    for (int i = 0; i < n_cells; ++i) {
        int row_nnz = (row_ptr[i + 1] - row_ptr[i]) * dim;
        for (int a = 0; a < dim; ++a) m.row_ptr[i * dim + a + 1] = row_nnz;
    }
    for (int r = 0; r < m.n; ++r) m.row_ptr[r + 1] += m.row_ptr[r];
    m.col.resize(m.row_ptr[m.n]);
    m.val.resize(m.row_ptr[m.n]);
    for (int i = 0; i < n_cells; ++i) {
        for (int a = 0; a < dim; ++a) {
            int q = m.row_ptr[i * dim + a];
            for (int p = row_ptr[i]; p < row_ptr[i + 1]; ++p) {
                for (int b = 0; b < dim; ++b, ++q) {
                    m.col[q] = col[p] * dim + b;
                    m.val[q] = blocks[p](a, b);
                }
            }
        }
    }
    return m;
}

std::vector<ScalarCsrMatrix> scalar_component_matrices(const BlockSparseMatrix& a) {
    std::vector<ScalarCsrMatrix> out;
    out.reserve(a.dim);
    for (int c = 0; c < a.dim; ++c) out.push_back(a.scalar_component(c));
    return out;
}

namespace {

class IdentityPrecond final : public Preconditioner {
public:
    std::vector<double> solve(const std::vector<double>& r) const override { return r; }
};

// IC(0): L on the lower-triangular pattern of A, A ~= L L^T.
class Ic0Precond final : public Preconditioner {
public:
    explicit Ic0Precond(const ScalarCsrMatrix& a) : n_(a.n) {
        row_ptr_.assign(n_ + 1, 0);
        for (int i = 0; i < n_; ++i) {
            for (int p = a.row_ptr[i]; p < a.row_ptr[i + 1]; ++p)
                if (a.col[p] <= i) {
                    col_.push_back(a.col[p]);
                    val_.push_back(a.val[p]);
                }
            row_ptr_[i + 1] = static_cast<int>(col_.size());
        }
        // Row-oriented factorisation; rows j < i are final when row i is processed.
        for (int i = 0; i < n_; ++i) {
            int diag_p = row_ptr_[i + 1] - 1;
            if (diag_p < row_ptr_[i] || col_[diag_p] != i)
                throw IluBreakdown("ic0: missing diagonal in row " + std::to_string(i));
            for (int p = row_ptr_[i]; p < diag_p; ++p) {
                int j = col_[p];
                double s = val_[p];
                // s -= sum_k L_ik L_jk over shared columns k < j
                int pi = row_ptr_[i], pj = row_ptr_[j];
                while (pi < p && pj < row_ptr_[j + 1] - 1) {
                    if (col_[pi] == col_[pj]) s -= val_[pi++] * val_[pj++];
                    else if (col_[pi] < col_[pj]) ++pi;
                    else ++pj;
                }
                val_[p] = s / val_[row_ptr_[j + 1] - 1];
            }
            double s = val_[diag_p];
            for (int p = row_ptr_[i]; p < diag_p; ++p) s -= val_[p] * val_[p];
            if (!(s > 0.0)) throw IluBreakdown("ic0: non-positive pivot in row " + std::to_string(i));
            val_[diag_p] = std::sqrt(s);
        }
    }

    std::vector<double> solve(const std::vector<double>& r) const override {
        std::vector<double> z = r;
        for (int i = 0; i < n_; ++i) {  // forward L y = r
            for (int p = row_ptr_[i]; p < row_ptr_[i + 1] - 1; ++p) z[i] -= val_[p] * z[col_[p]];
            z[i] /= val_[row_ptr_[i + 1] - 1];
        }
        for (int j = n_ - 1; j >= 0; --j) {  // backward L^T z = y, saxpy form
            z[j] /= val_[row_ptr_[j + 1] - 1];
            for (int p = row_ptr_[j]; p < row_ptr_[j + 1] - 1; ++p) z[col_[p]] -= val_[p] * z[j];
        }
        return z;
    }

private:
    int n_;
    std::vector<int> row_ptr_, col_;
    std::vector<double> val_;
};

class DiagPrecond final : public Preconditioner {
public:
    explicit DiagPrecond(const ScalarCsrMatrix& a) : inv_diag_(a.n, 1.0) {
        for (int i = 0; i < a.n; ++i) {
            const double* d = a.find(i, i);
            if (d && *d != 0.0) inv_diag_[i] = 1.0 / *d;
        }
    }
    std::vector<double> solve(const std::vector<double>& r) const override {
        std::vector<double> z(r.size());
        for (std::size_t i = 0; i < r.size(); ++i) z[i] = inv_diag_[i] * r[i];
        return z;
    }

private:
    std::vector<double> inv_diag_;
};

// ILU(k): combined LU in one CSR pattern, unit lower diagonal held implicitly.
class IlukPrecond final : public Preconditioner {
public:
    IlukPrecond(const ScalarCsrMatrix& a, int fill_level) : n_(a.n) {
        // Symbolic phase: fill levels via the row-merge rule
        // lev(i,j) = min over k of lev(i,k) + lev(k,j) + 1, entries of A at level 0.
        std::vector<std::map<int, int>> levels(n_);
        for (int i = 0; i < n_; ++i) {
            for (int p = a.row_ptr[i]; p < a.row_ptr[i + 1]; ++p) levels[i][a.col[p]] = 0;
            levels[i].try_emplace(i, 0);
            for (auto it = levels[i].begin(); it != levels[i].end() && it->first < i; ++it) {
                int k = it->first, lev_ik = it->second;
                if (lev_ik >= fill_level) continue;
                for (const auto& [j, lev_kj] : levels[k]) {
                    if (j <= k) continue;
                    int lev = lev_ik + lev_kj + 1;
                    if (lev > fill_level) continue;
                    auto [jt, inserted] = levels[i].try_emplace(j, lev);
                    if (!inserted && jt->second > lev) jt->second = lev;
                }
            }
        }

        row_ptr_.assign(n_ + 1, 0);
        for (int i = 0; i < n_; ++i) {
            for (const auto& [j, lev] : levels[i]) {
                col_.push_back(j);
                val_.push_back(0.0);
            }
            row_ptr_[i + 1] = static_cast<int>(col_.size());
        }
        for (int i = 0; i < n_; ++i)
            for (int p = a.row_ptr[i]; p < a.row_ptr[i + 1]; ++p)
                *entry(i, a.col[p]) = a.val[p];

        // Numeric phase, IKJ ordering on the fixed pattern.
        for (int i = 0; i < n_; ++i) {
            for (int p = row_ptr_[i]; p < row_ptr_[i + 1] && col_[p] < i; ++p) {
                int k = col_[p];
                double pivot = *entry(k, k);
                if (pivot == 0.0 || !std::isfinite(pivot))
                    throw IluBreakdown("ilu: zero pivot in row " + std::to_string(k));
                double lik = (val_[p] /= pivot);
                for (int q = row_ptr_[k]; q < row_ptr_[k + 1]; ++q) {
                    if (col_[q] <= k) continue;
                    if (double* e = entry_or_null(i, col_[q])) *e -= lik * val_[q];
                }
            }
            double d = *entry(i, i);
            if (d == 0.0 || !std::isfinite(d))
                throw IluBreakdown("ilu: zero pivot in row " + std::to_string(i));
        }
    }

    std::vector<double> solve(const std::vector<double>& r) const override {
        std::vector<double> z = r;
        for (int i = 0; i < n_; ++i)  // forward, unit lower
            for (int p = row_ptr_[i]; p < row_ptr_[i + 1] && col_[p] < i; ++p)
                z[i] -= val_[p] * z[col_[p]];
        for (int i = n_ - 1; i >= 0; --i) {  // backward with U
            double diag = 0.0;
            for (int p = row_ptr_[i + 1] - 1; p >= row_ptr_[i] && col_[p] >= i; --p) {
                if (col_[p] == i) diag = val_[p];
                else z[i] -= val_[p] * z[col_[p]];
            }
            z[i] /= diag;
        }
        return z;
    }

private:
    double* entry(int i, int j) {
        double* e = entry_or_null(i, j);
        if (!e) throw InvalidArgument("ilu: entry lookup outside pattern");
        return e;
    }
    double* entry_or_null(int i, int j) {
        auto first = col_.begin() + row_ptr_[i], last = col_.begin() + row_ptr_[i + 1];
        auto it = std::lower_bound(first, last, j);
        if (it == last || *it != j) return nullptr;
        return &val_[it - col_.begin()];
    }

    int n_;
    std::vector<int> row_ptr_, col_;
    std::vector<double> val_;
};

class SparseLuPrecond final : public Preconditioner {
public:
    explicit SparseLuPrecond(const ScalarCsrMatrix& a) {
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(a.val.size());
        for (int i = 0; i < a.n; ++i)
            for (int p = a.row_ptr[i]; p < a.row_ptr[i + 1]; ++p)
                trip.emplace_back(i, a.col[p], a.val[p]);
        Eigen::SparseMatrix<double> m(a.n, a.n);
        m.setFromTriplets(trip.begin(), trip.end());
        m.makeCompressed();
        lu_.compute(m);
        if (lu_.info() != Eigen::Success) throw LuSingular("lu: factorisation failed");
    }

    std::vector<double> solve(const std::vector<double>& r) const override {
        Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(r.data(), r.size());
        Eigen::VectorXd x = lu_.solve(b);
        return std::vector<double>(x.data(), x.data() + x.size());
    }

private:
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu_;
};

}  // namespace

std::unique_ptr<Preconditioner> identity_preconditioner() {
    return std::make_unique<IdentityPrecond>();
}

std::unique_ptr<Preconditioner> ic0_factor(const ScalarCsrMatrix& a) {
    return std::make_unique<Ic0Precond>(a);
}

std::unique_ptr<Preconditioner> ilu_factor(const ScalarCsrMatrix& a, int k) {
    if (k < 0) throw InvalidArgument("ilu: negative fill level");
    return std::make_unique<IlukPrecond>(a, k);
}

std::unique_ptr<Preconditioner> lu_factor(const ScalarCsrMatrix& a) {
    return std::make_unique<SparseLuPrecond>(a);
}

CgResult cg_solve(const ScalarCsrMatrix& a, const std::vector<double>& b,
                  const std::vector<double>& x0, double relative_reduction, int max_iters) {
    CgResult out;
    out.x = x0;
    std::unique_ptr<Preconditioner> precond;
    try {
        precond = ic0_factor(a);
    } catch (const IluBreakdown&) {
        precond = std::make_unique<DiagPrecond>(a);
        out.diag_fallback = true;
    }

    std::vector<double> r = a.apply(out.x);
    for (int i = 0; i < a.n; ++i) r[i] = b[i] - r[i];
    const double r0_norm = norm(r);
    if (r0_norm == 0.0) {
        out.converged = true;
        return out;
    }
    std::vector<double> z = precond->solve(r);
    std::vector<double> p = z;
    double rz = dot(r, z);
    for (int it = 0; it < max_iters; ++it) {
        std::vector<double> ap = a.apply(p);
        double pap = dot(p, ap);
        if (!(pap > 0.0)) break;  // loss of positive definiteness
        double alpha = rz / pap;
        axpy(alpha, p, out.x);
        axpy(-alpha, ap, r);
        out.iters = it + 1;
        if (norm(r) <= relative_reduction * r0_norm) {
            out.converged = true;
            return out;
        }
        z = precond->solve(r);
        double rz_new = dot(r, z);
        double beta = rz_new / rz;
        rz = rz_new;
        for (int i = 0; i < a.n; ++i) p[i] = z[i] + beta * p[i];
    }
    return out;
}

GmresResult gmres_solve(const LinearOperator& op, const std::vector<double>& b,
                        const std::vector<double>& x0, const Preconditioner* precond,
                        int restart, double relative_reduction, int max_iters,
                        bool right_preconditioned) {
    const int n = static_cast<int>(b.size());
    IdentityPrecond identity;
    const Preconditioner& prec = precond ? *precond : static_cast<const Preconditioner&>(identity);

    GmresResult out;
    out.x = x0;

    auto residual = [&](const std::vector<double>& x) {
        std::vector<double> r = op(x);
        for (int i = 0; i < n; ++i) r[i] = b[i] - r[i];
        if (!right_preconditioned) r = prec.solve(r);
        return r;
    };

    std::vector<double> r = residual(out.x);
    const double r0_norm = norm(r);
    out.residual_history.push_back(r0_norm);
    if (r0_norm == 0.0) {
        out.status = GmresStatus::converged;
        out.rel_residual = 0.0;
        return out;
    }
    const double target = relative_reduction * r0_norm;

    int total_iters = 0;
    double beta = r0_norm;
    while (total_iters < max_iters) {
        const double cycle_start = beta;
        std::vector<std::vector<double>> v;
        v.push_back(r);
        for (double& e : v[0]) e /= beta;

        // Hessenberg columns after Givens rotations, plus the rotations themselves.
        std::vector<std::vector<double>> h;
        std::vector<double> cs, sn;
        std::vector<double> g{beta};
        int j = 0;
        bool happy = false;
        while (j < restart && total_iters < max_iters) {
            std::vector<double> w =
                right_preconditioned ? op(prec.solve(v[j])) : prec.solve(op(v[j]));
            std::vector<double> hj(j + 2, 0.0);
            for (int i = 0; i <= j; ++i) {  // modified Gram-Schmidt
                hj[i] = dot(w, v[i]);
                axpy(-hj[i], v[i], w);
            }
            hj[j + 1] = norm(w);
            for (int i = 0; i < j; ++i) {  // apply stored rotations
                double t = cs[i] * hj[i] + sn[i] * hj[i + 1];
                hj[i + 1] = -sn[i] * hj[i] + cs[i] * hj[i + 1];
                hj[i] = t;
            }
            double denom = std::hypot(hj[j], hj[j + 1]);
            double c = denom == 0.0 ? 1.0 : hj[j] / denom;
            double s = denom == 0.0 ? 0.0 : hj[j + 1] / denom;
            cs.push_back(c);
            sn.push_back(s);
            g.push_back(-s * g[j]);
            g[j] = c * g[j];
            hj[j] = denom;
            double subdiag = hj[j + 1];
            hj[j + 1] = 0.0;
            h.push_back(std::move(hj));

            ++total_iters;
            ++j;
            out.residual_history.push_back(std::abs(g[j]));
            if (subdiag <= 1e-14 * std::max(denom, 1e-300)) {  // happy breakdown
                happy = true;
                break;
            }
            if (std::abs(g[j]) <= target) break;
            if (j < restart) {
                v.push_back(w);
                for (double& e : v.back()) e /= subdiag;
            }
        }

        //  Back substitution for y, then the correction V y.
        std::vector<double> y(j, 0.0);
        for (int i = j - 1; i >= 0; --i) {
            double s = g[i];
            for (int k = i + 1; k < j; ++k) s -= h[k][i] * y[k];
            y[i] = s / h[i][i];
        }
        std::vector<double> dx(n, 0.0);
        for (int i = 0; i < j; ++i) axpy(y[i], v[i], dx);
        if (right_preconditioned) dx = prec.solve(dx);
        axpy(1.0, dx, out.x);
        out.iters = total_iters;

        r = residual(out.x);
        beta = norm(r);
        out.rel_residual = beta / r0_norm;
        if (beta <= target || (happy && std::abs(g[j]) <= target)) {
            out.status = GmresStatus::converged;
            return out;
        }
        if (happy) {
            // Invariant subspace reached without meeting the target: no further
            // progress is possible from this operator and right-hand side.
            out.status = GmresStatus::stagnated;
            return out;
        }
        if (beta >= cycle_start * (1.0 - 1e-12)) {
            out.status = GmresStatus::stagnated;
            return out;
        }
    }
    out.status = GmresStatus::max_iters;
    return out;
}

}  // namespace solidfv
