#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "ijflow/linalg.hpp"
#include "ijflow/rng.hpp"

#include <cmath>

using namespace ijflow;

namespace {

Matrix random_matrix(RngState& rng, int r, int c) {
    Matrix m(r, c);
    for (double& v : m.data) v = rng.gauss();
    return m;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    double m = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i)
        m = std::max(m, std::fabs(a.data[i] - b.data[i]));
    return m;
}

Matrix reassemble_svd(const SvdResult& r) {
    Matrix us = r.u;
    for (int i = 0; i < us.rows; ++i)
        for (int j = 0; j < us.cols; ++j) us(i, j) *= r.s[j];
    return matmul(us, transpose(r.v));
}

double orthonormality_defect(const Matrix& q) {
    const Matrix g = matmul(transpose(q), q);
    return max_abs_diff(g, Matrix::identity(q.cols));
}

} // namespace

TEST_CASE("gauss_sample: identical seeds give identical draws") {
    RngState a(42), b(42);
    CHECK(gauss_sample(a, 2) == gauss_sample(b, 2));
    RngState c(42);
    const auto first = gauss_sample(c, 1000);
    RngState d(42);
    CHECK(first == gauss_sample(d, 1000));
}

TEST_CASE("gauss_sample: moments over 1e6 draws") {
    RngState rng(7);
    const int n = 1000000;
    const auto xs = gauss_sample(rng, n);
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= n;
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var /= n;
    CHECK(std::fabs(mean) < 4.0 / std::sqrt(static_cast<double>(n)));
    CHECK(std::fabs(var - 1.0) < 0.01);
}

TEST_CASE("gauss_sample: split streams are distinct") {
    RngState root(9);
    RngState a = root.split(0);
    RngState b = root.split(1);
    const auto xa = gauss_sample(a, 100);
    const auto xb = gauss_sample(b, 100);
    int differing = 0;
    for (int i = 0; i < 100; ++i)
        if (xa[i] != xb[i]) ++differing;
    CHECK(differing >= 1);
}

TEST_CASE("gauss_sample rejects n < 1") {
    RngState rng(1);
    CHECK_THROWS_AS(gauss_sample(rng, 0), std::invalid_argument);
}

TEST_CASE("svd: diagonal case") {
    const SvdResult r = svd(Matrix::diag({3.0, 1.0}));
    REQUIRE(r.s.size() == 2);
    CHECK(r.s[0] == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(r.s[1] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("svd: scaled orthonormal embedding has equal singular values") {
    const double c = 2.5;
    const int D = 6, d = 3;
    Matrix a(D, d);
    for (int j = 0; j < d; ++j) a(j, j) = c;
    const SvdResult r = svd(a);
    for (int j = 0; j < d; ++j) CHECK(r.s[j] == doctest::Approx(c).epsilon(1e-13));
}

TEST_CASE("svd: singular values squared match eigenvalues of A^T A") {
    RngState rng(11);
    const Matrix a = random_matrix(rng, 5, 3);
    const SvdResult r = svd(a);
    const SymEigResult e = sym_eig(matmul(transpose(a), a));
    for (int j = 0; j < 3; ++j)
        CHECK(std::fabs(r.s[j] * r.s[j] - e.eigenvalues[j]) < 1e-9);
}

TEST_CASE("svd: reconstruction, ordering, orthonormality on 1000 random shapes") {
    RngState rng(13);
    for (int trial = 0; trial < 1000; ++trial) {
        const int m = 1 + static_cast<int>(rng.uniform_below(32));
        const int n = 1 + static_cast<int>(rng.uniform_below(16));
        const Matrix a = random_matrix(rng, m, n);
        const SvdResult r = svd(a);
        const double tol = 1e-10 * std::max(frobenius_norm(a), 1.0);
        CHECK(max_abs_diff(reassemble_svd(r), a) < tol);
        for (size_t j = 0; j + 1 < r.s.size(); ++j) CHECK(r.s[j] >= r.s[j + 1]);
        CHECK(r.s.back() >= 0.0);
        CHECK(orthonormality_defect(r.u) < 1e-10);
        CHECK(orthonormality_defect(r.v) < 1e-10);
    }
}

TEST_CASE("svd: product of singular values equals |det| for square matrices") {
    RngState rng(17);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 2 + static_cast<int>(rng.uniform_below(5));
        const Matrix a = random_matrix(rng, n, n);
        const SvdResult r = svd(a);
        double prod = 1.0;
        for (double s : r.s) prod *= s;
        const double ad = std::fabs(det(a));
        CHECK(std::fabs(prod - ad) < 1e-9 * std::max(1.0, ad));
    }
}

TEST_CASE("svd rejects non-finite input") {
    Matrix a(2, 2);
    a(0, 0) = std::nan("");
    CHECK_THROWS_AS(svd(a), std::invalid_argument);
}

TEST_CASE("cholesky_psd: identity passes without jitter") {
    const CholeskyResult r = cholesky_psd(Matrix::identity(3));
    CHECK(r.jitter == 0.0);
    CHECK(max_abs_diff(r.l, Matrix::identity(3)) < 1e-15);
}

TEST_CASE("cholesky_psd: hand-eliminated 2x2") {
    const Matrix s = Matrix::from_rows({{4.0, 2.0}, {2.0, 3.0}});
    const CholeskyResult r = cholesky_psd(s);
    CHECK(r.l(0, 0) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(r.l(1, 0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(r.l(0, 1) == 0.0);
    CHECK(r.l(1, 1) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
}

TEST_CASE("cholesky_psd: singular matrix succeeds via jitter") {
    const Matrix s = Matrix::from_rows({{1.0, 1.0}, {1.0, 1.0}});
    const CholeskyResult r = cholesky_psd(s);
    CHECK(r.jitter > 0.0);
    const Matrix rec = matmul(r.l, transpose(r.l));
    CHECK(max_abs_diff(rec, s) < 1e-6);
}

TEST_CASE("cholesky_psd: round-trips a random lower-triangular factor") {
    RngState rng(19);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 1 + static_cast<int>(rng.uniform_below(6));
        Matrix l(n, n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < i; ++j) l(i, j) = rng.gauss();
            l(i, i) = 0.5 + rng.uniform01();
        }
        const Matrix s = matmul(l, transpose(l));
        const CholeskyResult r = cholesky_psd(s);
        CHECK(max_abs_diff(r.l, l) < 1e-8 * std::max(1.0, max_abs(l)));
    }
}

TEST_CASE("cholesky_psd: indefinite matrix fails naming the pivot") {
    const Matrix s = Matrix::from_rows({{1.0, 0.0}, {0.0, -5.0}});
    CHECK_THROWS_WITH_AS(cholesky_psd(s), doctest::Contains("pivot 1"), std::runtime_error);
}

TEST_CASE("cholesky_psd: asymmetric input rejected") {
    const Matrix s = Matrix::from_rows({{1.0, 0.5}, {0.0, 1.0}});
    CHECK_THROWS_AS(cholesky_psd(s), std::invalid_argument);
}

TEST_CASE("sym_eig: identity") {
    const SymEigResult r = sym_eig(Matrix::identity(4));
    for (double ev : r.eigenvalues) CHECK(ev == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("sym_eig: characteristic polynomial of [[2,1],[1,2]]") {
    const SymEigResult r = sym_eig(Matrix::from_rows({{2.0, 1.0}, {1.0, 2.0}}));
    CHECK(r.eigenvalues[0] == doctest::Approx(3.0).epsilon(1e-13));
    CHECK(r.eigenvalues[1] == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("sym_eig: reconstruction on random symmetric matrices") {
    RngState rng(23);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 2 + static_cast<int>(rng.uniform_below(4));
        Matrix s(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j <= i; ++j) {
                const double v = rng.gauss();
                s(i, j) = v;
                s(j, i) = v;
            }
        const SymEigResult r = sym_eig(s);
        const Matrix sv = matmul(s, r.eigenvectors);
        Matrix vl = r.eigenvectors;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) vl(i, j) *= r.eigenvalues[j];
        CHECK(max_abs_diff(sv, vl) < 1e-9 * std::max(1.0, frobenius_norm(s)));
        CHECK(orthonormality_defect(r.eigenvectors) < 1e-10);
    }
}

TEST_CASE("sqrtm_psd: identity and diagonal roots") {
    CHECK(max_abs_diff(sqrtm_psd(Matrix::identity(3)), Matrix::identity(3)) < 1e-12);
    const Matrix r = sqrtm_psd(Matrix::diag({4.0, 9.0}));
    CHECK(r(0, 0) == doctest::Approx(2.0).epsilon(1e-13));
    CHECK(r(1, 1) == doctest::Approx(3.0).epsilon(1e-13));
    CHECK(std::fabs(r(0, 1)) < 1e-13);
}

TEST_CASE("sqrtm_psd: square reassembles random PSD matrices") {
    RngState rng(29);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 2 + static_cast<int>(rng.uniform_below(5));
        const Matrix a = random_matrix(rng, n + 1, n);
        const Matrix s = matmul(transpose(a), a);
        const Matrix r = sqrtm_psd(s);
        CHECK(max_abs_diff(matmul(r, r), s) < 1e-8 * std::max(1.0, frobenius_norm(s)));
    }
}

TEST_CASE("det: reference values") {
    CHECK(det(Matrix::identity(3)) == doctest::Approx(1.0));
    CHECK(det(Matrix::from_rows({{1.0, 2.0}, {3.0, 4.0}})) == doctest::Approx(-2.0));
    CHECK(det(Matrix::from_rows({{1.0, 2.0}, {2.0, 4.0}})) == doctest::Approx(0.0));
}
