#include "ijflow/baselines.hpp"

#include <cmath>
#include <stdexcept>

namespace ijflow {

namespace {
constexpr double kLogVarMin = -10.0;
constexpr double kLogVarMax = 10.0;

double sq_residual(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        const double diff = a[i] - b[i];
        acc += diff * diff;
    }
    return acc;
}

double decoder_weight_sq(const MlpNetwork& dec) {
    double acc = 0.0;
    for (const auto& w : dec.weights)
        for (double v : w.data) acc += v * v;
    return acc;
}
} // namespace

std::string baseline_name(BaselineKind k) {
    switch (k) {
        case BaselineKind::Ae: return "ae";
        case BaselineKind::AeL2: return "ae_l2";
        case BaselineKind::Cae: return "cae";
        case BaselineKind::BetaVae: return "beta_vae";
    }
    return "ae";
}

BaselineKind baseline_from_name(const std::string& s) {
    if (s == "ae") return BaselineKind::Ae;
    if (s == "ae_l2") return BaselineKind::AeL2;
    if (s == "cae") return BaselineKind::Cae;
    if (s == "beta_vae") return BaselineKind::BetaVae;
    throw std::invalid_argument("unknown baseline: " + s);
}

void BaselineConfig::validate() const {
    if (l2_weight < 0.0 || !std::isfinite(l2_weight))
        throw std::invalid_argument("baseline config: l2_weight must be finite and >= 0");
    if (cae_weight < 0.0 || !std::isfinite(cae_weight))
        throw std::invalid_argument("baseline config: cae_weight must be finite and >= 0");
    if (vae_sigma <= 0.0) throw std::invalid_argument("baseline config: vae_sigma must be > 0");
}

double loss_ae(const MlpNetwork& enc, const MlpNetwork& dec, const std::vector<double>& x) {
    return sq_residual(x, forward_vec(dec, forward_vec(enc, x)));
}

double loss_ae_l2(const MlpNetwork& enc, const MlpNetwork& dec, const std::vector<double>& x,
                  double w) {
    if (w < 0.0) throw std::invalid_argument("loss_ae_l2: weight must be >= 0");
    return loss_ae(enc, dec, x) + w * decoder_weight_sq(dec);
}

double loss_cae_example(const MlpNetwork& enc, const MlpNetwork& dec, const std::vector<double>& x,
                        double w, const std::vector<double>& u) {
    if (w < 0.0) throw std::invalid_argument("loss_cae: weight must be >= 0");
    const JvpResult r = jvp(enc, x, u); // r.y = h(x), r.jv = J_h(x) u
    return sq_residual(x, forward_vec(dec, r.y)) + w * sqnorm(r.jv);
}

double loss_cae(const MlpNetwork& enc, const MlpNetwork& dec, const std::vector<double>& x,
                double w, RngState& rng) {
    return loss_cae_example(enc, dec, x, w, gauss_sample(rng, enc.input_dim()));
}

double kl_diag_gaussian(const std::vector<double>& mu, const std::vector<double>& logvar) {
    if (mu.size() != logvar.size()) throw std::invalid_argument("kl: size mismatch");
    double acc = 0.0;
    for (size_t j = 0; j < mu.size(); ++j)
        acc += mu[j] * mu[j] + std::exp(logvar[j]) - 1.0 - logvar[j];
    return 0.5 * acc;
}

double loss_beta_vae_example(const MlpNetwork& enc, const MlpNetwork& dec,
                             const std::vector<double>& x, double sigma,
                             const std::vector<double>& eps) {
    if (sigma <= 0.0) throw std::invalid_argument("loss_beta_vae: sigma must be > 0");
    const int d = dec.input_dim();
    if (enc.output_dim() != 2 * d)
        throw std::invalid_argument("loss_beta_vae: encoder output width must be 2d");
    const std::vector<double> out = forward_vec(enc, x);
    std::vector<double> mu(out.begin(), out.begin() + d);
    std::vector<double> logvar(d);
    for (int j = 0; j < d; ++j) {
        const double raw = out[d + j];
        if (!std::isfinite(raw))
            throw std::runtime_error("loss_beta_vae: non-finite log-variance");
        logvar[j] = std::min(std::max(raw, kLogVarMin), kLogVarMax);
    }
    std::vector<double> z(d);
    for (int j = 0; j < d; ++j) z[j] = mu[j] + std::exp(0.5 * logvar[j]) * eps[j];
    const std::vector<double> y = forward_vec(dec, z);
    const double dd = static_cast<double>(dec.output_dim());
    return sq_residual(x, y) / (2.0 * sigma * sigma) +
           0.5 * dd * std::log(2.0 * M_PI * sigma * sigma) + kl_diag_gaussian(mu, logvar);
}

double loss_beta_vae(const MlpNetwork& enc, const MlpNetwork& dec, const std::vector<double>& x,
                     double sigma, RngState& rng) {
    return loss_beta_vae_example(enc, dec, x, sigma, gauss_sample(rng, dec.input_dim()));
}

namespace {

BaselineBatchResult ae_family_batch(const MlpNetwork& enc, const MlpNetwork& dec, const Matrix& x,
                                    const BaselineConfig& cfg, const Matrix& noise) {
    const int b = x.rows;
    BaselineBatchResult out;

    if (cfg.kind == BaselineKind::Cae) {
        if (noise.rows != b || noise.cols != enc.input_dim())
            throw std::invalid_argument("cae batch: noise must be batch x D");
        JvpForwardResult ef = jvp_forward(enc, x, noise);
        ForwardResult df = forward(dec, ef.y);
        const int dd = df.output.cols;

        double recon_sum = 0.0, pen_sum = 0.0;
        Matrix dy(b, dd);
        for (int i = 0; i < b; ++i) {
            for (int j = 0; j < dd; ++j) {
                const double diff = x(i, j) - df.output(i, j);
                recon_sum += diff * diff;
                dy(i, j) = -2.0 * diff / b;
            }
            double tsq = 0.0;
            for (int j = 0; j < ef.jv.cols; ++j) tsq += ef.jv(i, j) * ef.jv(i, j);
            pen_sum += cfg.cae_weight * tsq;
        }
        BackwardResult dback = backward(dec, df.trace, dy);
        out.dec_grads = std::move(dback.grads);
        Matrix dt(b, ef.jv.cols);
        for (size_t i = 0; i < dt.data.size(); ++i)
            dt.data[i] = 2.0 * cfg.cae_weight * ef.jv.data[i] / b;
        JvpBackwardResult eback = jvp_backward(enc, ef.trace, dback.dx, dt);
        out.enc_grads = std::move(eback.grads);
        out.recon = recon_sum / b;
        out.penalty = pen_sum / b;
        out.total = out.recon + out.penalty;
        return out;
    }

    ForwardResult ef = forward(enc, x);
    ForwardResult df = forward(dec, ef.output);
    const int dd = df.output.cols;
    double recon_sum = 0.0;
    Matrix dy(b, dd);
    for (int i = 0; i < b; ++i)
        for (int j = 0; j < dd; ++j) {
            const double diff = x(i, j) - df.output(i, j);
            recon_sum += diff * diff;
            dy(i, j) = -2.0 * diff / b;
        }
    BackwardResult dback = backward(dec, df.trace, dy);
    BackwardResult eback = backward(enc, ef.trace, dback.dx);
    out.dec_grads = std::move(dback.grads);
    out.enc_grads = std::move(eback.grads);
    out.recon = recon_sum / b;

    if (cfg.kind == BaselineKind::AeL2) {
        out.penalty = cfg.l2_weight * decoder_weight_sq(dec);
        for (size_t l = 0; l < dec.weights.size(); ++l)
            for (size_t i = 0; i < dec.weights[l].data.size(); ++i)
                out.dec_grads.weights[l].data[i] += 2.0 * cfg.l2_weight * dec.weights[l].data[i];
    }
    out.total = out.recon + out.penalty;
    return out;
}

BaselineBatchResult beta_vae_batch(const MlpNetwork& enc, const MlpNetwork& dec, const Matrix& x,
                                   const BaselineConfig& cfg, const Matrix& eps) {
    const int b = x.rows;
    const int d = dec.input_dim();
    if (enc.output_dim() != 2 * d)
        throw std::invalid_argument("beta_vae batch: encoder output width must be 2d");
    if (eps.rows != b || eps.cols != d)
        throw std::invalid_argument("beta_vae batch: noise must be batch x d");
    const double sigma2 = cfg.vae_sigma * cfg.vae_sigma;

    ForwardResult ef = forward(enc, x);
    Matrix z(b, d), sigq(b, d), clamped(b, d);
    std::vector<bool> pass(static_cast<size_t>(b) * d);
    double kl_sum = 0.0;
    for (int i = 0; i < b; ++i) {
        for (int j = 0; j < d; ++j) {
            const double mu = ef.output(i, j);
            const double raw = ef.output(i, d + j);
            if (!std::isfinite(raw))
                throw std::runtime_error("beta_vae batch: non-finite log-variance");
            const double lv = std::min(std::max(raw, kLogVarMin), kLogVarMax);
            clamped(i, j) = lv;
            pass[static_cast<size_t>(i) * d + j] = (raw > kLogVarMin && raw < kLogVarMax);
            sigq(i, j) = std::exp(0.5 * lv);
            z(i, j) = mu + sigq(i, j) * eps(i, j);
            kl_sum += 0.5 * (mu * mu + std::exp(lv) - 1.0 - lv);
        }
    }
    ForwardResult df = forward(dec, z);
    const int dd = df.output.cols;
    double recon_sum = 0.0;
    Matrix dy(b, dd);
    for (int i = 0; i < b; ++i)
        for (int j = 0; j < dd; ++j) {
            const double diff = x(i, j) - df.output(i, j);
            recon_sum += diff * diff;
            dy(i, j) = -diff / (sigma2 * b);
        }
    BackwardResult dback = backward(dec, df.trace, dy);

    Matrix denc(b, 2 * d);
    for (int i = 0; i < b; ++i)
        for (int j = 0; j < d; ++j) {
            const double dz = dback.dx(i, j);
            const double mu = ef.output(i, j);
            denc(i, j) = dz + mu / b; // d(z)/d(mu) = 1, dKL/dmu = mu
            double dc = 0.5 * (std::exp(clamped(i, j)) - 1.0) / b +
                        dz * eps(i, j) * 0.5 * sigq(i, j);
            if (!pass[static_cast<size_t>(i) * d + j]) dc = 0.0;
            denc(i, d + j) = dc;
        }
    BackwardResult eback = backward(enc, ef.trace, denc);

    BaselineBatchResult out;
    out.enc_grads = std::move(eback.grads);
    out.dec_grads = std::move(dback.grads);
    out.recon = recon_sum / (2.0 * sigma2 * b) +
                0.5 * dd * std::log(2.0 * M_PI * sigma2);
    out.penalty = kl_sum / b;
    out.total = out.recon + out.penalty;
    return out;
}

} // namespace

BaselineBatchResult baseline_batch_loss_grads_with_noise(const MlpNetwork& enc,
                                                         const MlpNetwork& dec, const Matrix& x,
                                                         const BaselineConfig& cfg,
                                                         const Matrix& noise) {
    cfg.validate();
    if (x.rows < 1) throw std::invalid_argument("baseline batch: empty batch");
    if (cfg.kind == BaselineKind::BetaVae) return beta_vae_batch(enc, dec, x, cfg, noise);
    return ae_family_batch(enc, dec, x, cfg, noise);
}

BaselineBatchResult baseline_batch_loss_grads(const MlpNetwork& enc, const MlpNetwork& dec,
                                              const Matrix& x, const BaselineConfig& cfg,
                                              RngState& rng) {
    Matrix noise;
    if (cfg.kind == BaselineKind::Cae) {
        noise = Matrix(x.rows, enc.input_dim());
        for (double& v : noise.data) v = rng.gauss();
    } else if (cfg.kind == BaselineKind::BetaVae) {
        noise = Matrix(x.rows, dec.input_dim());
        for (double& v : noise.data) v = rng.gauss();
    }
    return baseline_batch_loss_grads_with_noise(enc, dec, x, cfg, noise);
}

} // namespace ijflow
