#pragma once

#include "ijflow/nn.hpp"
#include "ijflow/prior_fit.hpp"

#include <string>

namespace ijflow {

// Rows are h(x_i), evaluated in batches.
Matrix encode_dataset(const MlpNetwork& encoder, const Matrix& x);

// For a stochastic (VAE-style) encoder whose head is [mean | log-variance],
// returns the mean-head view; otherwise returns the encoder unchanged.
MlpNetwork mean_encoder(const MlpNetwork& encoder, int latent_dim);

// Decode draws from a fitted prior (or the isotropic N(0, sigma2 I) model
// prior) through the decoder.
Matrix generate_samples(const MlpNetwork& decoder, const GaussianStats& prior, RngState& rng,
                        int n);
Matrix generate_samples(const MlpNetwork& decoder, const GmmModel& prior, RngState& rng, int n);
Matrix generate_samples_isotropic(const MlpNetwork& decoder, double sigma2, RngState& rng, int n);

// mean over examples of ||x - g(h(x))||^2 / D
double recon_mse(const MlpNetwork& encoder, const MlpNetwork& decoder, const Matrix& x);

// ||mu_a - mu_b||^2 + tr(Sa + Sb - 2 (Sa^(1/2) Sb Sa^(1/2))^(1/2)), clipped at 0.
double frechet_distance(const GaussianStats& a, const GaussianStats& b);

struct LatentNormStats {
    double mean_norm = 0.0;
    double std_norm = 0.0;
    double expected_chi = 0.0; // sqrt(d), the N(0, I_d) typical-set reference
};

LatentNormStats latent_norm_stats(const Matrix& z, int d);

// Largest principal angle (degrees) between the decoder's tangent space at
// z = 0 and the column space of the ground-truth embedding.
double principal_subspace_angle(const MlpNetwork& decoder, const Matrix& ground_truth);

// P5 grid of n samples tiled row-major into a ceil(sqrt(n)) square with
// 1-pixel black separators; values clamped to [0,1] and scaled to 255.
void write_pgm_grid(const std::string& path, const Matrix& samples, int image_rows,
                    int image_cols);

} // namespace ijflow
