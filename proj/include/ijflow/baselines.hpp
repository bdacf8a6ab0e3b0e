#pragma once

#include "ijflow/nn.hpp"

#include <string>

namespace ijflow {

enum class BaselineKind { Ae, AeL2, Cae, BetaVae };

std::string baseline_name(BaselineKind k);
BaselineKind baseline_from_name(const std::string& s);

struct BaselineConfig {
    BaselineKind kind = BaselineKind::Ae;
    double l2_weight = 0.0;
    double cae_weight = 0.0;
    double vae_sigma = 1.0; // decoder observation std; beta = sigma^2

    void validate() const;
};

// ||x - g(h(x))||^2
double loss_ae(const MlpNetwork& enc, const MlpNetwork& dec, const std::vector<double>& x);

// loss_ae + w * sum of squared decoder weights (biases excluded)
double loss_ae_l2(const MlpNetwork& enc, const MlpNetwork& dec, const std::vector<double>& x,
                  double w);

// loss_ae + w * ||J_h(x) u||^2 with u ~ N(0, I_D)
double loss_cae(const MlpNetwork& enc, const MlpNetwork& dec, const std::vector<double>& x,
                double w, RngState& rng);
double loss_cae_example(const MlpNetwork& enc, const MlpNetwork& dec, const std::vector<double>& x,
                        double w, const std::vector<double>& u);

// Per-sample negative ELBO with Gaussian observation model N(0, sigma^2 I):
// ||x - g(mu + sigma_q eps)||^2/(2 sigma^2) + (D/2) ln(2 pi sigma^2) + KL.
// The encoder emits [mean | log-variance]; log-variance is clamped to [-10,10].
double loss_beta_vae(const MlpNetwork& enc, const MlpNetwork& dec, const std::vector<double>& x,
                     double sigma, RngState& rng);
double loss_beta_vae_example(const MlpNetwork& enc, const MlpNetwork& dec,
                             const std::vector<double>& x, double sigma,
                             const std::vector<double>& eps);

// KL(N(mu, diag(exp(logvar))) || N(0, I))
double kl_diag_gaussian(const std::vector<double>& mu, const std::vector<double>& logvar);

struct BaselineBatchResult {
    double total = 0.0;
    double recon = 0.0;   // reconstruction part (VAE: scaled by 1/(2 sigma^2) + const)
    double penalty = 0.0; // L2 / contractive penalty, or the KL term for the VAE
    Gradients enc_grads;
    Gradients dec_grads;
};

// noise: CAE takes one row of N(0, I_D) per example, beta-VAE one row of
// N(0, I_d); ignored for AE and AE+L2 (may be empty).
BaselineBatchResult baseline_batch_loss_grads_with_noise(const MlpNetwork& enc,
                                                         const MlpNetwork& dec, const Matrix& x,
                                                         const BaselineConfig& cfg,
                                                         const Matrix& noise);

BaselineBatchResult baseline_batch_loss_grads(const MlpNetwork& enc, const MlpNetwork& dec,
                                              const Matrix& x, const BaselineConfig& cfg,
                                              RngState& rng);

} // namespace ijflow
