#pragma once

#include "ijflow/nn.hpp"

#include <cmath>
#include <string>

namespace ijflow {

enum class FlowVariant { InjFlowLn, InjFlow };
enum class FrobEstimator { AutodiffJvp, FiniteDiff };

std::string flow_variant_name(FlowVariant v);
FlowVariant flow_variant_from_name(const std::string& s);
std::string estimator_name(FrobEstimator e);
FrobEstimator estimator_from_name(const std::string& s);

// All scalar knobs of the two trainable objectives.
struct FlowObjectiveConfig {
    double w_prior = 1e-3;     // coefficient on ||h(x)||^2, equals 1/(2 sigma^2)
    double lambda_fixed = 1.0; // fixed-lambda variant weight
    double eta = 0.1;          // injectivity threshold on ||Jv||/||v||
    double nu = 1.0;           // penalty schedule exponent
    double mu0 = 1.0;          // initial reconstruction penalty
    double mu_in0 = 1.0;       // initial injectivity penalty
    int mc_samples = 1;
    FrobEstimator estimator = FrobEstimator::AutodiffJvp;
    double fd_epsilon = 0.01;
    FlowVariant variant = FlowVariant::InjFlowLn;

    void validate() const;
    double mu_at(long iter) const { return mu0 + std::pow(static_cast<double>(iter), nu) / 1000.0; }
    double mu_in_at(long iter) const {
        return mu_in0 + std::pow(static_cast<double>(iter), nu) / 1000.0;
    }
};

struct JacobianSpectrum {
    std::vector<double> singular_values; // descending
    double log_det_half = 0.0;           // (1/2) sum ln s_i^2
    double frob_sq = 0.0;                // sum s_i^2

    static JacobianSpectrum from_singular_values(std::vector<double> s);
    static JacobianSpectrum of_decoder(const MlpNetwork& decoder, const std::vector<double>& z);
};

struct LossBreakdown {
    double total = 0.0;
    double prior_term = 0.0;
    double recon_term = 0.0;
    double frob_term = 0.0;
    double inj_term = 0.0;
    double mu = 1.0;
    double mu_in = 1.0;
};

// ln N(z; 0, sigma2 I) - (1/2) ln det(J^T J), computed via the exact Jacobian
// and its SVD. Fails when the smallest singular value vanishes.
double exact_log_density(const MlpNetwork& decoder, const std::vector<double>& z, double sigma2);

// log_pz - frob_sq/(2 lambda) - (d/2) ln lambda + d/2
double bound_fixed_lambda(const JacobianSpectrum& spectrum, double log_pz, double lambda, int d);

// argmax over lambda of the fixed-lambda bound: frob_sq / d
double optimal_lambda(const JacobianSpectrum& spectrum, int d);

// log_pz - (d/2) ln(frob_sq / d)
double bound_optimal_lambda(const JacobianSpectrum& spectrum, double log_pz, int d);

// (1/k) sum ||J v_i||^2 over v_i ~ N(0, I_d)
double hutchinson_frob_estimate(const MlpNetwork& decoder, const std::vector<double>& z,
                                RngState& rng, int k);

// ||g(z + eps v) - g(z)||^2 / eps^2
double finite_diff_jvp_sqnorm(const MlpNetwork& decoder, const std::vector<double>& z,
                              const std::vector<double>& v, double epsilon);

// mu(i) = 1 + i^nu / 1000
double penalty_schedule(long iter, double nu);

LossBreakdown loss_injflow_ln(const MlpNetwork& enc, const MlpNetwork& dec,
                              const std::vector<double>& x, const FlowObjectiveConfig& cfg,
                              long iter, RngState& rng);

LossBreakdown loss_injflow(const MlpNetwork& enc, const MlpNetwork& dec,
                           const std::vector<double>& x, const FlowObjectiveConfig& cfg, long iter,
                           RngState& rng);

// Same loss with the Monte-Carlo direction fixed by the caller; used by the
// gradient checks, which perturb parameters while holding v constant.
LossBreakdown loss_flow_example(const MlpNetwork& enc, const MlpNetwork& dec,
                                const std::vector<double>& x, const FlowObjectiveConfig& cfg,
                                long iter, const std::vector<double>& v);

struct BiasProbeResult {
    double mean_of_log = 0.0;
    double log_of_mean = 0.0;
};

// Diagnostic for the log-of-estimate bias: E ln||Jv||^2 vs ln E||Jv||^2.
BiasProbeResult mc_log_frob_bias_probe(const MlpNetwork& decoder, const std::vector<double>& z,
                                       RngState& rng, int trials);

struct FlowBatchResult {
    LossBreakdown mean;  // batch mean of per-example breakdowns
    Gradients enc_grads;
    Gradients dec_grads;
    long fallback_count = 0;
};

// Loss and parameter gradients for a minibatch; rows of v_fixed carry one
// Monte-Carlo direction per example. The rng wrapper below averages
// mc_samples such passes.
FlowBatchResult flow_batch_loss_grads_with_noise(const MlpNetwork& enc, const MlpNetwork& dec,
                                                 const Matrix& x, const FlowObjectiveConfig& cfg,
                                                 long iter, const Matrix& v_fixed);

FlowBatchResult flow_batch_loss_grads(const MlpNetwork& enc, const MlpNetwork& dec,
                                      const Matrix& x, const FlowObjectiveConfig& cfg, long iter,
                                      RngState& rng);

} // namespace ijflow
