#include "ijflow/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace ijflow {

namespace {

void require_symmetric(const Matrix& s, const char* who) {
    if (s.rows != s.cols) throw std::invalid_argument(std::string(who) + ": matrix not square");
    const double tol = 1e-12 * std::max(1.0, max_abs(s));
    for (int i = 0; i < s.rows; ++i)
        for (int j = i + 1; j < s.cols; ++j)
            if (std::fabs(s(i, j) - s(j, i)) > tol)
                throw std::invalid_argument(std::string(who) + ": matrix not symmetric");
}

// One-sided Jacobi on the columns of g (m x n, m >= n), accumulating the
// right rotations into v. Columns whose norm is negligible relative to the
// matrix scale are left out of the rotation set.
void one_sided_jacobi(Matrix& g, Matrix& v) {
    const int n = g.cols;
    const int m = g.rows;
    const double norm_a = frobenius_norm(g);
    if (norm_a == 0.0) return;
    const double dead = 1e-15 * norm_a;
    const double tol = 1e-15;
    const int max_sweeps = 60;

    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double worst = 0.0;
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                double alpha = 0.0, beta = 0.0, gamma = 0.0;
                for (int i = 0; i < m; ++i) {
                    const double gp = g(i, p), gq = g(i, q);
                    alpha += gp * gp;
                    beta += gq * gq;
                    gamma += gp * gq;
                }
                const double na = std::sqrt(alpha), nb = std::sqrt(beta);
                if (na <= dead || nb <= dead) continue;
                const double ratio = std::fabs(gamma) / (na * nb);
                worst = std::max(worst, ratio);
                if (ratio <= tol) continue;

                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                                 (std::fabs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double sn = c * t;
                for (int i = 0; i < m; ++i) {
                    const double gp = g(i, p), gq = g(i, q);
                    g(i, p) = c * gp - sn * gq;
                    g(i, q) = sn * gp + c * gq;
                }
                for (int i = 0; i < n; ++i) {
                    const double vp = v(i, p), vq = v(i, q);
                    v(i, p) = c * vp - sn * vq;
                    v(i, q) = sn * vp + c * vq;
                }
            }
        }
        if (worst <= tol) return;
    }
    throw std::runtime_error("svd: one-sided Jacobi failed to converge");
}

} // namespace

SvdResult svd(const Matrix& a) {
    if (!a.all_finite()) throw std::invalid_argument("svd: non-finite input");
    if (a.rows < a.cols) {
        SvdResult r = svd(transpose(a));
        std::swap(r.u, r.v);
        return r;
    }
    const int m = a.rows, n = a.cols;
    Matrix g = a;
    Matrix v = Matrix::identity(n);
    one_sided_jacobi(g, v);

    std::vector<double> s(n);
    for (int j = 0; j < n; ++j) {
        double acc = 0.0;
        for (int i = 0; i < m; ++i) acc += g(i, j) * g(i, j);
        s[j] = std::sqrt(acc);
    }

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int i, int j) { return s[i] > s[j]; });

    SvdResult r;
    r.u = Matrix(m, n);
    r.v = Matrix(n, n);
    r.s.resize(n);
    const double dead = 1e-15 * std::max(1.0, frobenius_norm(a));
    int n_dead = 0;
    for (int jj = 0; jj < n; ++jj) {
        const int src = order[jj];
        r.s[jj] = s[src];
        for (int i = 0; i < n; ++i) r.v(i, jj) = v(i, src);
        if (s[src] > dead) {
            for (int i = 0; i < m; ++i) r.u(i, jj) = g(i, src) / s[src];
        } else {
            ++n_dead;
        }
    }
    // Orthonormal completion of U for numerically-zero singular values.
    if (n_dead > 0) {
        for (int jj = 0; jj < n; ++jj) {
            if (r.s[jj] > dead) continue;
            for (int cand = 0; cand < m; ++cand) {
                std::vector<double> u(m, 0.0);
                u[cand] = 1.0;
                for (int k = 0; k < n; ++k) {
                    if (k == jj || (r.s[k] <= dead && k > jj)) continue;
                    double proj = 0.0;
                    for (int i = 0; i < m; ++i) proj += u[i] * r.u(i, k);
                    for (int i = 0; i < m; ++i) u[i] -= proj * r.u(i, k);
                }
                const double nrm = std::sqrt(sqnorm(u));
                if (nrm > 0.5) {
                    for (int i = 0; i < m; ++i) r.u(i, jj) = u[i] / nrm;
                    break;
                }
            }
        }
    }
    return r;
}

CholeskyResult cholesky_psd(const Matrix& s) {
    require_symmetric(s, "cholesky_psd");
    const int n = s.rows;
    // zero-trace PSD inputs (all-zero covariance) still get a positive shift
    double base = 1e-9 * trace(s) / std::max(1, n);
    if (base <= 0.0) base = std::numeric_limits<double>::min();

    double jitter = 0.0;
    for (int attempt = 0; attempt <= 9; ++attempt) {
        Matrix l(n, n);
        int bad_pivot = -1;
        for (int i = 0; i < n && bad_pivot < 0; ++i) {
            for (int j = 0; j <= i; ++j) {
                double acc = s(i, j);
                if (i == j) acc += jitter;
                for (int k = 0; k < j; ++k) acc -= l(i, k) * l(j, k);
                if (i == j) {
                    if (acc <= 0.0) {
                        bad_pivot = i;
                        break;
                    }
                    l(i, j) = std::sqrt(acc);
                } else {
                    l(i, j) = acc / l(j, j);
                }
            }
        }
        if (bad_pivot < 0) return {std::move(l), jitter};
        if (attempt == 9)
            throw std::runtime_error("cholesky_psd: not positive definite at pivot " +
                                     std::to_string(bad_pivot) + " after max jitter " +
                                     std::to_string(jitter));
        jitter = (jitter == 0.0) ? base : 2.0 * jitter;
    }
    throw std::runtime_error("cholesky_psd: unreachable");
}

SymEigResult sym_eig(const Matrix& s_in) {
    require_symmetric(s_in, "sym_eig");
    if (!s_in.all_finite()) throw std::invalid_argument("sym_eig: non-finite input");
    const int n = s_in.rows;
    Matrix b = s_in;
    // exact symmetrization so rotations keep the invariant
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const double avg = 0.5 * (b(i, j) + b(j, i));
            b(i, j) = avg;
            b(j, i) = avg;
        }
    Matrix v = Matrix::identity(n);
    const double scale = std::max(frobenius_norm(b), 1e-300);
    const int max_sweeps = 100;

    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += b(p, q) * b(p, q);
        if (std::sqrt(off) <= 1e-13 * scale) break;
        if (sweep == max_sweeps - 1)
            throw std::runtime_error("sym_eig: Jacobi failed to converge");

        const double skip = 1e-300;
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double bpq = b(p, q);
                if (std::fabs(bpq) <= skip) continue;
                const double tau = (b(q, q) - b(p, p)) / (2.0 * bpq);
                const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                                 (std::fabs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double sn = c * t;

                const double bpp = b(p, p), bqq = b(q, q);
                b(p, p) = bpp - t * bpq;
                b(q, q) = bqq + t * bpq;
                b(p, q) = 0.0;
                b(q, p) = 0.0;
                for (int k = 0; k < n; ++k) {
                    if (k == p || k == q) continue;
                    const double bkp = b(k, p), bkq = b(k, q);
                    const double np = c * bkp - sn * bkq;
                    const double nq = sn * bkp + c * bkq;
                    b(k, p) = np;
                    b(p, k) = np;
                    b(k, q) = nq;
                    b(q, k) = nq;
                }
                for (int k = 0; k < n; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - sn * vkq;
                    v(k, q) = sn * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int i, int j) { return b(i, i) > b(j, j); });

    SymEigResult r;
    r.eigenvalues.resize(n);
    r.eigenvectors = Matrix(n, n);
    for (int jj = 0; jj < n; ++jj) {
        r.eigenvalues[jj] = b(order[jj], order[jj]);
        for (int i = 0; i < n; ++i) r.eigenvectors(i, jj) = v(i, order[jj]);
    }
    return r;
}

Matrix sqrtm_psd(const Matrix& s) {
    SymEigResult eig = sym_eig(s); // symmetry check happens here
    const int n = s.rows;
    std::vector<double> root(n);
    for (int i = 0; i < n; ++i) root[i] = std::sqrt(std::max(eig.eigenvalues[i], 0.0));
    // R = V diag(root) V^T
    Matrix scaled = eig.eigenvectors;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) scaled(i, j) *= root[j];
    Matrix r = matmul(scaled, transpose(eig.eigenvectors));
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const double avg = 0.5 * (r(i, j) + r(j, i));
            r(i, j) = avg;
            r(j, i) = avg;
        }
    return r;
}

double det(const Matrix& a) {
    if (a.rows != a.cols) throw std::invalid_argument("det: matrix not square");
    const int n = a.rows;
    Matrix lu = a;
    double d = 1.0;
    for (int col = 0; col < n; ++col) {
        int pivot = col;
        for (int i = col + 1; i < n; ++i)
            if (std::fabs(lu(i, col)) > std::fabs(lu(pivot, col))) pivot = i;
        if (lu(pivot, col) == 0.0) return 0.0;
        if (pivot != col) {
            for (int j = 0; j < n; ++j) std::swap(lu(pivot, j), lu(col, j));
            d = -d;
        }
        d *= lu(col, col);
        for (int i = col + 1; i < n; ++i) {
            const double f = lu(i, col) / lu(col, col);
            for (int j = col; j < n; ++j) lu(i, j) -= f * lu(col, j);
        }
    }
    return d;
}

std::vector<double> solve_lower(const Matrix& l, const std::vector<double>& b) {
    const int n = l.rows;
    if (l.cols != n || static_cast<int>(b.size()) != n)
        throw std::invalid_argument("solve_lower: dim mismatch");
    std::vector<double> y(n);
    for (int i = 0; i < n; ++i) {
        double acc = b[i];
        for (int j = 0; j < i; ++j) acc -= l(i, j) * y[j];
        y[i] = acc / l(i, i);
    }
    return y;
}

} // namespace ijflow
