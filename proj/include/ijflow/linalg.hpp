#pragma once

#include "ijflow/matrix.hpp"

namespace ijflow {

struct SvdResult {
    Matrix u;                       // m x r, orthonormal columns
    std::vector<double> s;          // r singular values, descending
    Matrix v;                       // n x r, orthonormal columns
};

// Thin SVD via one-sided Jacobi. A = U diag(s) V^T; s >= 0 descending.
// Throws std::runtime_error if the sweep cap is hit before convergence.
SvdResult svd(const Matrix& a);

struct CholeskyResult {
    Matrix l;             // lower triangular, L L^T = S + jitter*I
    double jitter = 0.0;  // diagonal shift that was needed (0 if none)
};

// Cholesky of a symmetric PSD matrix. On pivot failure retries with a
// diagonal jitter of 1e-9*trace(S)/dim, doubled up to 8 times.
CholeskyResult cholesky_psd(const Matrix& s);

struct SymEigResult {
    std::vector<double> eigenvalues; // descending
    Matrix eigenvectors;             // columns match eigenvalue order
};

// Symmetric eigensolve via cyclic Jacobi rotations.
SymEigResult sym_eig(const Matrix& s);

// Symmetric PSD square root: R = V diag(sqrt(max(lambda,0))) V^T.
Matrix sqrtm_psd(const Matrix& s);

// Determinant via LU with partial pivoting.
double det(const Matrix& a);

// Solve L y = b for lower-triangular L.
std::vector<double> solve_lower(const Matrix& l, const std::vector<double>& b);

} // namespace ijflow
