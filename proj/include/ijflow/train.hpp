#pragma once

#include "ijflow/checkpoint.hpp"
#include "ijflow/config.hpp"
#include "ijflow/optimizer.hpp"

namespace ijflow {

// Raised when the loss goes non-finite even after the estimator fallback;
// the CLI maps it to exit code 3. The last logged parameter snapshot and the
// metrics so far are written out before throwing.
struct NumericAbort : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct MetricsRecord {
    long iter = 0;
    LossBreakdown loss;       // baselines map recon/penalty into these fields
    double recon_mse = 0.0;   // batch-level mean ||x - g(h(x))||^2 / D
    long fallbacks = 0;       // cumulative estimator fallbacks
    double wall_ms = 0.0;     // measured; the CSV writes 0 for reproducibility
};

struct TrainResult {
    MlpNetwork encoder;
    MlpNetwork decoder;
    std::vector<MetricsRecord> metrics;
    Dataset dataset;
    long fallback_count = 0;
};

// CSV with header iter,total,prior,recon,frob,inj,mu,mu_in,recon_mse,fallbacks,ms
void write_metrics_csv(const std::string& path, const std::vector<MetricsRecord>& records);

// Runs total_iters minibatch steps of the configured objective with Adam,
// logging every log_every iterations; writes the checkpoint and metrics CSV
// when paths are configured. Bit-deterministic for a fixed seed.
TrainResult train(const TrainConfig& cfg);

// Builds the encoder/decoder pair the way train() would, without training.
std::pair<MlpNetwork, MlpNetwork> build_networks(const TrainConfig& cfg, int data_dim,
                                                 bool is_image);

} // namespace ijflow
