#pragma once

#include "ijflow/matrix.hpp"
#include "ijflow/rng.hpp"

namespace ijflow {

struct GaussianStats {
    std::vector<double> mean;
    Matrix covariance;
    Matrix chol; // lower triangular, chol chol^T ~= covariance (+ jitter)

    int dim() const { return static_cast<int>(mean.size()); }
};

struct GmmModel {
    int k = 0;
    std::vector<double> weights; // simplex
    std::vector<GaussianStats> components;
};

// Sample mean and 1/n covariance with the Cholesky factor attached.
GaussianStats fit_gaussian_full(const Matrix& z);

double gaussian_log_density(const GaussianStats& g, const double* z);

// EM with full covariances, k-means++-style seeding from the data, global
// covariance init. Components whose responsibility mass drops below 1 are
// reseeded once, then frozen. Appends the per-iteration data log-likelihood
// to *loglik_history when given.
GmmModel fit_gmm_em(const Matrix& z, int k, RngState& rng, int max_iters = 200, double tol = 1e-6,
                    std::vector<double>* loglik_history = nullptr);

double gmm_log_likelihood(const GmmModel& model, const Matrix& z);

// Posterior component probabilities, one row per point (rows sum to 1).
Matrix gmm_responsibilities(const GmmModel& model, const Matrix& z);

Matrix sample_prior(const GaussianStats& g, RngState& rng, int n);
Matrix sample_prior(const GmmModel& model, RngState& rng, int n);

} // namespace ijflow
