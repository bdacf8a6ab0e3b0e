#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "ijflow/linalg.hpp"
#include "ijflow/prior_fit.hpp"

#include <cmath>

using namespace ijflow;

namespace {

Matrix two_cluster_data(RngState& rng, int n, int d, double sep, double std) {
    Matrix z(n, d);
    for (int i = 0; i < n; ++i) {
        const double center = (i % 2 == 0) ? sep : -sep;
        z(i, 0) = center + std * rng.gauss();
        for (int j = 1; j < d; ++j) z(i, j) = std * rng.gauss();
    }
    return z;
}

} // namespace

TEST_CASE("fit_gaussian_full: symmetric pair has zero mean") {
    const Matrix z = Matrix::from_rows({{1.5, -2.0}, {-1.5, 2.0}});
    const GaussianStats g = fit_gaussian_full(z);
    CHECK(g.mean[0] == doctest::Approx(0.0));
    CHECK(g.mean[1] == doctest::Approx(0.0));
}

TEST_CASE("fit_gaussian_full: hand-computed square") {
    const Matrix z = Matrix::from_rows({{0, 0}, {2, 0}, {0, 2}, {2, 2}});
    const GaussianStats g = fit_gaussian_full(z);
    CHECK(g.mean[0] == doctest::Approx(1.0));
    CHECK(g.mean[1] == doctest::Approx(1.0));
    CHECK(g.covariance(0, 0) == doctest::Approx(1.0));
    CHECK(g.covariance(1, 1) == doctest::Approx(1.0));
    CHECK(g.covariance(0, 1) == doctest::Approx(0.0));
}

TEST_CASE("fit_gaussian_full: rank-deficient cloud succeeds via jitter") {
    const Matrix z = Matrix::from_rows({{1, 1}, {2, 2}, {3, 3}, {4, 4}});
    const GaussianStats g = fit_gaussian_full(z); // covariance is singular
    CHECK(g.chol.rows == 2);
    const Matrix rec = matmul(g.chol, transpose(g.chol));
    CHECK(std::fabs(rec(0, 0) - g.covariance(0, 0)) < 1e-6);
}

TEST_CASE("fit_gaussian_full: rejects singleton input") {
    CHECK_THROWS_AS(fit_gaussian_full(Matrix(1, 3)), std::invalid_argument);
}

TEST_CASE("fit_gmm_em: K=1 equals the direct Gaussian fit") {
    RngState data_rng(151);
    Matrix z(40, 3);
    for (double& v : z.data) v = data_rng.gauss();
    const GaussianStats direct = fit_gaussian_full(z);
    RngState em_rng(153);
    const GmmModel m = fit_gmm_em(z, 1, em_rng);
    CHECK(m.weights[0] == doctest::Approx(1.0).epsilon(1e-12));
    for (int j = 0; j < 3; ++j)
        CHECK(std::fabs(m.components[0].mean[j] - direct.mean[j]) < 1e-10);
    for (size_t i = 0; i < direct.covariance.data.size(); ++i)
        CHECK(std::fabs(m.components[0].covariance.data[i] - direct.covariance.data[i]) < 1e-10);
}

TEST_CASE("fit_gmm_em: recovers two synthetic clusters") {
    RngState data_rng(155);
    const Matrix z = two_cluster_data(data_rng, 2000, 2, 5.0, std::sqrt(0.1));
    RngState em_rng(157);
    const GmmModel m = fit_gmm_em(z, 2, em_rng);
    REQUIRE(m.k == 2);
    const int pos = m.components[0].mean[0] > 0 ? 0 : 1;
    const int neg = 1 - pos;
    CHECK(std::fabs(m.components[pos].mean[0] - 5.0) < 0.1);
    CHECK(std::fabs(m.components[pos].mean[1]) < 0.1);
    CHECK(std::fabs(m.components[neg].mean[0] + 5.0) < 0.1);
    CHECK(std::fabs(m.components[neg].mean[1]) < 0.1);
    CHECK(std::fabs(m.weights[0] - 0.5) < 0.05);
}

TEST_CASE("fit_gmm_em: log-likelihood sequence is nondecreasing") {
    RngState data_rng(159);
    const Matrix z = two_cluster_data(data_rng, 300, 3, 2.0, 0.8);
    RngState em_rng(161);
    std::vector<double> history;
    fit_gmm_em(z, 3, em_rng, 80, 1e-9, &history);
    REQUIRE(history.size() >= 2);
    for (size_t i = 1; i < history.size(); ++i)
        CHECK(history[i] >= history[i - 1] - 1e-8 * (std::fabs(history[i - 1]) + 1.0));
}

TEST_CASE("fit_gmm_em: EM monotonicity across 50 random datasets") {
    RngState rng(163);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 50 + static_cast<int>(rng.uniform_below(451));
        const int d = 1 + static_cast<int>(rng.uniform_below(8));
        const int k = 1 + static_cast<int>(rng.uniform_below(5));
        Matrix z(n, d);
        const int modes = 1 + static_cast<int>(rng.uniform_below(3));
        Matrix centers(modes, d);
        for (double& v : centers.data) v = 4.0 * rng.gauss();
        for (int i = 0; i < n; ++i) {
            const int mode = static_cast<int>(rng.uniform_below(modes));
            for (int j = 0; j < d; ++j) z(i, j) = centers(mode, j) + rng.gauss();
        }
        std::vector<double> history;
        fit_gmm_em(z, k, rng, 60, 1e-10, &history);
        for (size_t i = 1; i < history.size(); ++i)
            CHECK(history[i] >= history[i - 1] - 1e-8 * (std::fabs(history[i - 1]) + 1.0));
    }
}

TEST_CASE("fit_gmm_em: rejects n < K") {
    RngState rng(165);
    CHECK_THROWS_AS(fit_gmm_em(Matrix(3, 2), 4, rng), std::invalid_argument);
}

TEST_CASE("gmm_log_likelihood: single component at its mean") {
    RngState data_rng(167);
    Matrix z(30, 2);
    for (double& v : z.data) v = data_rng.gauss();
    RngState em_rng(169);
    const GmmModel m = fit_gmm_em(z, 1, em_rng);

    Matrix at_mean(1, 2);
    at_mean(0, 0) = m.components[0].mean[0];
    at_mean(0, 1) = m.components[0].mean[1];
    const double expected =
        -std::log(2.0 * M_PI) - 0.5 * std::log(det(m.components[0].covariance));
    CHECK(gmm_log_likelihood(m, at_mean) == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("gmm_log_likelihood: additivity and permutation invariance") {
    RngState data_rng(171);
    Matrix z(50, 2);
    for (double& v : z.data) v = data_rng.gauss();
    RngState em_rng(173);
    GmmModel m = fit_gmm_em(z, 2, em_rng, 10);

    Matrix one(1, 2);
    one(0, 0) = 0.3;
    one(0, 1) = -0.9;
    Matrix twice(2, 2);
    for (int i = 0; i < 2; ++i) {
        twice(i, 0) = one(0, 0);
        twice(i, 1) = one(0, 1);
    }
    CHECK(gmm_log_likelihood(m, twice) ==
          doctest::Approx(2.0 * gmm_log_likelihood(m, one)).epsilon(1e-12));

    GmmModel permuted = m;
    std::swap(permuted.weights[0], permuted.weights[1]);
    std::swap(permuted.components[0], permuted.components[1]);
    CHECK(gmm_log_likelihood(permuted, z) ==
          doctest::Approx(gmm_log_likelihood(m, z)).epsilon(1e-12));
}

TEST_CASE("gmm_responsibilities: rows sum to 1") {
    RngState data_rng(175);
    const Matrix z = two_cluster_data(data_rng, 200, 3, 3.0, 1.0);
    RngState em_rng(177);
    const GmmModel m = fit_gmm_em(z, 3, em_rng, 30);
    const Matrix resp = gmm_responsibilities(m, z);
    for (int i = 0; i < resp.rows; ++i) {
        double sum = 0.0;
        for (int c = 0; c < resp.cols; ++c) sum += resp(i, c);
        CHECK(std::fabs(sum - 1.0) < 1e-12);
    }
}

TEST_CASE("sample_prior: zero-covariance limit collapses to the mean") {
    const Matrix z = Matrix::from_rows({{2.0, -1.0}, {2.0, -1.0}, {2.0, -1.0}});
    const GaussianStats g = fit_gaussian_full(z);
    RngState rng(179);
    const Matrix s = sample_prior(g, rng, 10);
    for (int i = 0; i < s.rows; ++i) {
        CHECK(s(i, 0) == doctest::Approx(2.0).epsilon(1e-6));
        CHECK(s(i, 1) == doctest::Approx(-1.0).epsilon(1e-6));
    }
}

TEST_CASE("sample_prior: empirical moments match the model within 3 sigma") {
    GaussianStats g;
    g.mean = {1.0, -2.0};
    g.covariance = Matrix::from_rows({{2.0, 0.6}, {0.6, 1.0}});
    g.chol = cholesky_psd(g.covariance).l;
    RngState rng(181);
    const int n = 100000;
    const Matrix s = sample_prior(g, rng, n);
    for (int j = 0; j < 2; ++j) {
        double mean = 0.0;
        for (int i = 0; i < n; ++i) mean += s(i, j);
        mean /= n;
        CHECK(std::fabs(mean - g.mean[j]) < 3.0 * std::sqrt(g.covariance(j, j) / n));
    }
    const GaussianStats refit = fit_gaussian_full(s);
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
            const double se = std::sqrt((g.covariance(a, a) * g.covariance(b, b) +
                                         g.covariance(a, b) * g.covariance(a, b)) /
                                        n);
            CHECK(std::fabs(refit.covariance(a, b) - g.covariance(a, b)) < 3.0 * se);
        }
}

TEST_CASE("sample_prior: deterministic per seed, for both prior kinds") {
    RngState data_rng(183);
    const Matrix z = two_cluster_data(data_rng, 100, 2, 3.0, 0.5);
    const GaussianStats g = fit_gaussian_full(z);
    RngState em_rng(185);
    const GmmModel m = fit_gmm_em(z, 2, em_rng, 20);

    RngState r1(187), r2(187);
    CHECK(sample_prior(g, r1, 50).data == sample_prior(g, r2, 50).data);
    RngState r3(189), r4(189);
    CHECK(sample_prior(m, r3, 50).data == sample_prior(m, r4, 50).data);
}

TEST_CASE("fit -> sample -> fit round trip within sampling error") {
    RngState data_rng(191);
    Matrix z(500, 2);
    for (int i = 0; i < 500; ++i) {
        z(i, 0) = 0.5 + 1.5 * data_rng.gauss();
        z(i, 1) = -0.3 + 0.5 * z(i, 0) + 0.8 * data_rng.gauss();
    }
    const GaussianStats g = fit_gaussian_full(z);
    RngState rng(193);
    const int n = 100000;
    const Matrix s = sample_prior(g, rng, n);
    const GaussianStats refit = fit_gaussian_full(s);
    for (int j = 0; j < 2; ++j)
        CHECK(std::fabs(refit.mean[j] - g.mean[j]) < 3.0 * std::sqrt(g.covariance(j, j) / n));
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
            const double se = std::sqrt((g.covariance(a, a) * g.covariance(b, b) +
                                         g.covariance(a, b) * g.covariance(a, b)) /
                                        n);
            CHECK(std::fabs(refit.covariance(a, b) - g.covariance(a, b)) < 3.0 * se);
        }
}
