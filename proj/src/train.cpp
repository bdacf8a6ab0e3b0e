#include "ijflow/train.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace ijflow {

namespace {

Activation resolve_decoder_output(const TrainConfig& cfg, bool is_image) {
    if (cfg.decoder_output == "sigmoid") return Activation::Sigmoid;
    if (cfg.decoder_output == "linear") return Activation::Linear;
    return is_image ? Activation::Sigmoid : Activation::Linear;
}

} // namespace

std::pair<MlpNetwork, MlpNetwork> build_networks(const TrainConfig& cfg, int data_dim,
                                                 bool is_image) {
    const int enc_out =
        (cfg.objective == Objective::BetaVae) ? 2 * cfg.latent_dim : cfg.latent_dim;
    std::vector<int> enc_dims{data_dim};
    enc_dims.insert(enc_dims.end(), cfg.encoder_hidden.begin(), cfg.encoder_hidden.end());
    enc_dims.push_back(enc_out);
    std::vector<int> dec_dims{cfg.latent_dim};
    dec_dims.insert(dec_dims.end(), cfg.decoder_hidden.begin(), cfg.decoder_hidden.end());
    dec_dims.push_back(data_dim);

    RngState root(cfg.seed);
    RngState enc_rng = root.split(0);
    RngState dec_rng = root.split(1);
    MlpNetwork enc = make_mlp(enc_dims, Activation::Elu, Activation::Linear, enc_rng);
    MlpNetwork dec = make_mlp(dec_dims, Activation::Elu, resolve_decoder_output(cfg, is_image),
                              dec_rng);
    return {std::move(enc), std::move(dec)};
}

void write_metrics_csv(const std::string& path, const std::vector<MetricsRecord>& records) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("metrics: cannot write " + path);
    out << "iter,total,prior,recon,frob,inj,mu,mu_in,recon_mse,fallbacks,ms\n";
    char buf[512];
    for (const auto& r : records) {
        std::snprintf(buf, sizeof(buf),
                      "%ld,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%ld,0\n", r.iter,
                      r.loss.total, r.loss.prior_term, r.loss.recon_term, r.loss.frob_term,
                      r.loss.inj_term, r.loss.mu, r.loss.mu_in, r.recon_mse, r.fallbacks);
        out << buf;
    }
    if (!out) throw std::runtime_error("metrics: write failed for " + path);
}

TrainResult train(const TrainConfig& cfg) {
    cfg.validate();
    Dataset dataset = build_dataset(cfg.dataset);
    const int data_dim = dataset.dim();

    auto [encoder, decoder] = build_networks(cfg, data_dim, dataset.is_image());

    RngState root(cfg.seed);
    BatchIterator batches(dataset.x, cfg.batch_size, root.split(2));
    RngState noise_rng = root.split(3);

    AdamState enc_adam = AdamState::for_network(encoder);
    AdamState dec_adam = AdamState::for_network(decoder);

    TrainResult result;
    MlpNetwork snap_enc = encoder, snap_dec = decoder;

    auto write_artifacts = [&](const MlpNetwork& e, const MlpNetwork& d) {
        if (!cfg.metrics_path.empty()) write_metrics_csv(cfg.metrics_path, result.metrics);
        if (!cfg.checkpoint_path.empty()) {
            Checkpoint cp;
            cp.encoder = e;
            cp.decoder = d;
            cp.train_config = train_config_to_json(cfg);
            save_checkpoint(cfg.checkpoint_path, cp);
        }
    };

    auto interval_start = std::chrono::steady_clock::now();
    for (long iter = 0; iter < cfg.total_iters; ++iter) {
        const Matrix batch = batches.next();

        LossBreakdown loss;
        double raw_recon = 0.0; // mean ||x - g(h(x))||^2 over the batch
        Gradients enc_grads, dec_grads;
        if (objective_is_flow(cfg.objective)) {
            FlowBatchResult r =
                flow_batch_loss_grads(encoder, decoder, batch, cfg.flow, iter, noise_rng);
            loss = r.mean;
            raw_recon = r.mean.recon_term / r.mean.mu;
            enc_grads = std::move(r.enc_grads);
            dec_grads = std::move(r.dec_grads);
            result.fallback_count += r.fallback_count;
        } else {
            BaselineBatchResult r =
                baseline_batch_loss_grads(encoder, decoder, batch, cfg.baseline, noise_rng);
            loss.total = r.total;
            loss.recon_term = r.recon;
            if (cfg.objective == Objective::BetaVae)
                loss.prior_term = r.penalty; // KL
            else
                loss.frob_term = r.penalty; // L2 / contractive penalty
            if (cfg.objective == Objective::BetaVae) {
                const double s2 = cfg.baseline.vae_sigma * cfg.baseline.vae_sigma;
                raw_recon = (r.recon - 0.5 * data_dim * std::log(2.0 * M_PI * s2)) * 2.0 * s2;
            } else {
                raw_recon = r.recon;
            }
            enc_grads = std::move(r.enc_grads);
            dec_grads = std::move(r.dec_grads);
        }

        if (!std::isfinite(loss.total)) {
            write_artifacts(snap_enc, snap_dec);
            throw NumericAbort("train: non-finite loss at iteration " + std::to_string(iter) +
                               "; last good checkpoint retained");
        }

        if (iter % cfg.log_every == 0) {
            const auto now = std::chrono::steady_clock::now();
            MetricsRecord rec;
            rec.iter = iter;
            rec.loss = loss;
            rec.recon_mse = raw_recon / data_dim;
            rec.fallbacks = result.fallback_count;
            rec.wall_ms =
                std::chrono::duration<double, std::milli>(now - interval_start).count();
            interval_start = now;
            result.metrics.push_back(rec);
            snap_enc = encoder;
            snap_dec = decoder;
        }

        adam_step(encoder, enc_grads, enc_adam, cfg.learning_rate, "encoder");
        adam_step(decoder, dec_grads, dec_adam, cfg.learning_rate, "decoder");
    }

    write_artifacts(encoder, decoder);
    result.encoder = std::move(encoder);
    result.decoder = std::move(decoder);
    result.dataset = std::move(dataset);
    return result;
}

} // namespace ijflow
