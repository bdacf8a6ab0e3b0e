#include "ijflow/flow_objective.hpp"

#include "ijflow/linalg.hpp"

#include <cmath>
#include <stdexcept>

namespace ijflow {

std::string flow_variant_name(FlowVariant v) {
    return v == FlowVariant::InjFlowLn ? "injflow_ln" : "injflow";
}

FlowVariant flow_variant_from_name(const std::string& s) {
    if (s == "injflow_ln") return FlowVariant::InjFlowLn;
    if (s == "injflow") return FlowVariant::InjFlow;
    throw std::invalid_argument("unknown flow variant: " + s);
}

std::string estimator_name(FrobEstimator e) {
    return e == FrobEstimator::AutodiffJvp ? "autodiff_jvp" : "finite_diff";
}

FrobEstimator estimator_from_name(const std::string& s) {
    if (s == "autodiff_jvp") return FrobEstimator::AutodiffJvp;
    if (s == "finite_diff") return FrobEstimator::FiniteDiff;
    throw std::invalid_argument("unknown estimator: " + s);
}

void FlowObjectiveConfig::validate() const {
    if (w_prior < 0.0) throw std::invalid_argument("flow config: w_prior must be >= 0");
    if (lambda_fixed <= 0.0) throw std::invalid_argument("flow config: lambda_fixed must be > 0");
    if (eta <= 0.0) throw std::invalid_argument("flow config: eta must be > 0");
    if (nu <= 0.0) throw std::invalid_argument("flow config: nu must be > 0");
    if (mu0 <= 0.0 || mu_in0 <= 0.0)
        throw std::invalid_argument("flow config: initial penalties must be > 0");
    if (mc_samples < 1) throw std::invalid_argument("flow config: mc_samples must be >= 1");
    if (fd_epsilon <= 0.0) throw std::invalid_argument("flow config: fd_epsilon must be > 0");
}

JacobianSpectrum JacobianSpectrum::from_singular_values(std::vector<double> s) {
    std::sort(s.begin(), s.end(), std::greater<double>());
    JacobianSpectrum spec;
    double ld = 0.0, fr = 0.0;
    for (double si : s) {
        ld += std::log(si);
        fr += si * si;
    }
    spec.singular_values = std::move(s);
    spec.log_det_half = ld; // (1/2) sum ln s^2
    spec.frob_sq = fr;
    return spec;
}

JacobianSpectrum JacobianSpectrum::of_decoder(const MlpNetwork& decoder,
                                              const std::vector<double>& z) {
    return from_singular_values(svd(full_jacobian(decoder, z)).s);
}

double exact_log_density(const MlpNetwork& decoder, const std::vector<double>& z, double sigma2) {
    if (sigma2 <= 0.0) throw std::invalid_argument("exact_log_density: sigma2 must be > 0");
    const int d = decoder.input_dim();
    JacobianSpectrum spec = JacobianSpectrum::of_decoder(decoder, z);
    if (spec.singular_values.back() <= 0.0)
        throw std::runtime_error("exact_log_density: zero singular value, density undefined");
    const double log_pz =
        -0.5 * d * std::log(2.0 * M_PI * sigma2) - sqnorm(z) / (2.0 * sigma2);
    return log_pz - spec.log_det_half;
}

double bound_fixed_lambda(const JacobianSpectrum& spectrum, double log_pz, double lambda, int d) {
    if (lambda <= 0.0) throw std::invalid_argument("bound_fixed_lambda: lambda must be > 0");
    return log_pz - spectrum.frob_sq / (2.0 * lambda) - 0.5 * d * std::log(lambda) + 0.5 * d;
}

double optimal_lambda(const JacobianSpectrum& spectrum, int d) {
    if (spectrum.frob_sq <= 0.0)
        throw std::invalid_argument("optimal_lambda: frob_sq must be > 0");
    return spectrum.frob_sq / d;
}

double bound_optimal_lambda(const JacobianSpectrum& spectrum, double log_pz, int d) {
    if (spectrum.frob_sq <= 0.0)
        throw std::invalid_argument("bound_optimal_lambda: frob_sq must be > 0");
    return log_pz - 0.5 * d * std::log(spectrum.frob_sq / d);
}

double hutchinson_frob_estimate(const MlpNetwork& decoder, const std::vector<double>& z,
                                RngState& rng, int k) {
    if (k < 1) throw std::invalid_argument("hutchinson_frob_estimate: k must be >= 1");
    const int d = decoder.input_dim();
    double acc = 0.0;
    for (int i = 0; i < k; ++i) {
        const std::vector<double> v = gauss_sample(rng, d);
        acc += sqnorm(jvp(decoder, z, v).jv);
    }
    return acc / k;
}

double finite_diff_jvp_sqnorm(const MlpNetwork& decoder, const std::vector<double>& z,
                              const std::vector<double>& v, double epsilon) {
    if (epsilon <= 0.0) throw std::invalid_argument("finite_diff_jvp_sqnorm: epsilon must be > 0");
    std::vector<double> zp = z;
    for (size_t i = 0; i < zp.size(); ++i) zp[i] += epsilon * v[i];
    const std::vector<double> y1 = forward_vec(decoder, zp);
    const std::vector<double> y0 = forward_vec(decoder, z);
    double acc = 0.0;
    for (size_t i = 0; i < y0.size(); ++i) {
        const double diff = y1[i] - y0[i];
        acc += diff * diff;
    }
    if (!std::isfinite(acc))
        throw std::runtime_error("finite_diff_jvp_sqnorm: non-finite decoder output");
    return acc / (epsilon * epsilon);
}

double penalty_schedule(long iter, double nu) {
    if (iter < 0) throw std::invalid_argument("penalty_schedule: iteration must be >= 0");
    return 1.0 + std::pow(static_cast<double>(iter), nu) / 1000.0;
}

namespace {

struct ExampleTerms {
    double frob = 0.0;
    double inj_hinge_sq = 0.0; // [||Jv||/||v|| - eta]_-^2, before the mu_in weight
};

// Frobenius/injectivity terms for one (example, direction) pair given the
// estimated ||Jv||^2.
ExampleTerms frob_inj_terms(double sqn, double vsq, const FlowObjectiveConfig& cfg, int d) {
    ExampleTerms t;
    const double clamp = cfg.eta * cfg.eta * vsq;
    const double m = std::max(sqn, clamp);
    if (cfg.variant == FlowVariant::InjFlowLn)
        t.frob = 0.5 * d * std::log(m);
    else
        t.frob = m / (2.0 * cfg.lambda_fixed);
    const double a = std::sqrt(sqn) / std::sqrt(vsq) - cfg.eta;
    const double hinge = std::min(a, 0.0);
    t.inj_hinge_sq = hinge * hinge;
    return t;
}

// d(frob + inj)/d(sqn). The max clamp passes gradient iff sqn >= eta^2 ||v||^2
// (ties go to the Jv branch); the hinge subgradient is zero at sqn == 0.
double dsqn_coefficient(double sqn, double vsq, double mu_in, const FlowObjectiveConfig& cfg,
                        int d) {
    const double clamp = cfg.eta * cfg.eta * vsq;
    double coef = 0.0;
    if (sqn >= clamp) {
        if (cfg.variant == FlowVariant::InjFlowLn)
            coef += 0.5 * d / std::max(sqn, clamp);
        else
            coef += 1.0 / (2.0 * cfg.lambda_fixed);
    }
    if (sqn > 0.0) {
        const double s = std::sqrt(sqn);
        const double a = s / std::sqrt(vsq) - cfg.eta;
        if (a < 0.0) coef += mu_in * a / (std::sqrt(vsq) * s);
    }
    return coef;
}

Matrix sample_directions(RngState& rng, int n, int d) {
    Matrix v(n, d);
    for (int i = 0; i < n; ++i) {
        double vs = 0.0;
        do {
            for (int j = 0; j < d; ++j) v(i, j) = rng.gauss();
            vs = 0.0;
            for (int j = 0; j < d; ++j) vs += v(i, j) * v(i, j);
        } while (vs == 0.0);
    }
    return v;
}

} // namespace

LossBreakdown loss_flow_example(const MlpNetwork& enc, const MlpNetwork& dec,
                                const std::vector<double>& x, const FlowObjectiveConfig& cfg,
                                long iter, const std::vector<double>& v) {
    cfg.validate();
    const double vsq = sqnorm(v);
    if (vsq == 0.0) throw std::invalid_argument("loss_flow_example: zero direction vector");
    const int d = dec.input_dim();

    const std::vector<double> z = forward_vec(enc, x);
    const std::vector<double> y = forward_vec(dec, z);

    double sqn = 0.0;
    if (cfg.estimator == FrobEstimator::AutodiffJvp) {
        bool ok = true;
        try {
            sqn = sqnorm(jvp(dec, z, v).jv);
        } catch (const std::runtime_error&) {
            ok = false;
        }
        if (!ok || !std::isfinite(sqn)) sqn = finite_diff_jvp_sqnorm(dec, z, v, cfg.fd_epsilon);
    } else {
        sqn = finite_diff_jvp_sqnorm(dec, z, v, cfg.fd_epsilon);
    }

    LossBreakdown out;
    out.mu = cfg.mu_at(iter);
    out.mu_in = cfg.mu_in_at(iter);
    out.prior_term = cfg.w_prior * sqnorm(z);
    double resid = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        const double diff = x[i] - y[i];
        resid += diff * diff;
    }
    out.recon_term = out.mu * resid;
    const ExampleTerms t = frob_inj_terms(sqn, vsq, cfg, d);
    out.frob_term = t.frob;
    out.inj_term = out.mu_in * t.inj_hinge_sq;
    out.total = out.prior_term + out.recon_term + out.frob_term + out.inj_term;
    return out;
}

namespace {

LossBreakdown loss_flow_rng(const MlpNetwork& enc, const MlpNetwork& dec,
                            const std::vector<double>& x, const FlowObjectiveConfig& cfg,
                            long iter, RngState& rng) {
    const int d = dec.input_dim();
    LossBreakdown acc;
    for (int j = 0; j < cfg.mc_samples; ++j) {
        const Matrix v = sample_directions(rng, 1, d);
        const LossBreakdown one = loss_flow_example(enc, dec, x, cfg, iter, v.row(0));
        acc.prior_term = one.prior_term;
        acc.recon_term = one.recon_term;
        acc.frob_term += one.frob_term / cfg.mc_samples;
        acc.inj_term += one.inj_term / cfg.mc_samples;
        acc.mu = one.mu;
        acc.mu_in = one.mu_in;
    }
    acc.total = acc.prior_term + acc.recon_term + acc.frob_term + acc.inj_term;
    return acc;
}

} // namespace

LossBreakdown loss_injflow_ln(const MlpNetwork& enc, const MlpNetwork& dec,
                              const std::vector<double>& x, const FlowObjectiveConfig& cfg,
                              long iter, RngState& rng) {
    if (cfg.variant != FlowVariant::InjFlowLn)
        throw std::invalid_argument("loss_injflow_ln: cfg.variant must be injflow_ln");
    return loss_flow_rng(enc, dec, x, cfg, iter, rng);
}

LossBreakdown loss_injflow(const MlpNetwork& enc, const MlpNetwork& dec,
                           const std::vector<double>& x, const FlowObjectiveConfig& cfg, long iter,
                           RngState& rng) {
    if (cfg.variant != FlowVariant::InjFlow)
        throw std::invalid_argument("loss_injflow: cfg.variant must be injflow");
    return loss_flow_rng(enc, dec, x, cfg, iter, rng);
}

BiasProbeResult mc_log_frob_bias_probe(const MlpNetwork& decoder, const std::vector<double>& z,
                                       RngState& rng, int trials) {
    if (trials < 2) throw std::invalid_argument("mc_log_frob_bias_probe: trials must be >= 2");
    const int d = decoder.input_dim();
    double sum_log = 0.0, sum = 0.0;
    for (int i = 0; i < trials; ++i) {
        const std::vector<double> v = gauss_sample(rng, d);
        const double sqn = sqnorm(jvp(decoder, z, v).jv);
        sum_log += std::log(sqn);
        sum += sqn;
    }
    return {sum_log / trials, std::log(sum / trials)};
}

FlowBatchResult flow_batch_loss_grads_with_noise(const MlpNetwork& enc, const MlpNetwork& dec,
                                                 const Matrix& x, const FlowObjectiveConfig& cfg,
                                                 long iter, const Matrix& v_fixed) {
    cfg.validate();
    const int b = x.rows;
    const int d = dec.input_dim();
    if (b < 1) throw std::invalid_argument("flow batch: empty batch");
    if (v_fixed.rows != b || v_fixed.cols != d)
        throw std::invalid_argument("flow batch: direction matrix shape mismatch");

    const double mu = cfg.mu_at(iter);
    const double mu_in = cfg.mu_in_at(iter);

    FlowBatchResult out;
    out.mean.mu = mu;
    out.mean.mu_in = mu_in;

    ForwardResult enc_fwd = forward(enc, x);
    const Matrix& z = enc_fwd.output;

    std::vector<double> vsq(b);
    for (int i = 0; i < b; ++i) {
        vsq[i] = sqnorm(v_fixed.row(i));
        if (vsq[i] == 0.0) throw std::invalid_argument("flow batch: zero direction vector");
    }

    double prior_sum = 0.0, recon_sum = 0.0, frob_sum = 0.0, inj_sum = 0.0;
    Matrix dz_total(b, d);

    if (cfg.estimator == FrobEstimator::AutodiffJvp) {
        JvpForwardResult dj = jvp_forward(dec, z, v_fixed);
        const Matrix& y = dj.y;
        const int dd = y.cols;

        Matrix dy(b, dd), djv(b, dd);
        std::vector<int> fallback_rows;
        for (int i = 0; i < b; ++i) {
            double sqn = 0.0;
            for (int j = 0; j < dd; ++j) sqn += dj.jv(i, j) * dj.jv(i, j);
            if (!std::isfinite(sqn)) {
                fallback_rows.push_back(i);
                continue;
            }
            const ExampleTerms t = frob_inj_terms(sqn, vsq[i], cfg, d);
            frob_sum += t.frob;
            inj_sum += mu_in * t.inj_hinge_sq;
            const double coef = dsqn_coefficient(sqn, vsq[i], mu_in, cfg, d) / b;
            for (int j = 0; j < dd; ++j) djv(i, j) = 2.0 * coef * dj.jv(i, j);
        }
        for (int i = 0; i < b; ++i) {
            double resid = 0.0;
            for (int j = 0; j < dd; ++j) {
                const double diff = x(i, j) - y(i, j);
                resid += diff * diff;
                dy(i, j) = -2.0 * mu * diff / b;
            }
            recon_sum += mu * resid;
        }
        JvpBackwardResult back = jvp_backward(dec, dj.trace, dy, djv);
        out.dec_grads = std::move(back.grads);
        dz_total = std::move(back.dz);

        // Rows where the tangent pass went non-finite fall back to the
        // finite-difference estimate for both the value and the gradient.
        for (int i : fallback_rows) {
            ++out.fallback_count;
            const std::vector<double> zi = z.row(i);
            const std::vector<double> vi = v_fixed.row(i);
            std::vector<double> zp = zi;
            for (int j = 0; j < d; ++j) zp[j] += cfg.fd_epsilon * vi[j];
            Matrix z0(1, d), z1(1, d);
            z0.set_row(0, zi);
            z1.set_row(0, zp);
            ForwardResult f0 = forward(dec, z0);
            ForwardResult f1 = forward(dec, z1);
            double sqn = 0.0;
            std::vector<double> delta(dd);
            for (int j = 0; j < dd; ++j) {
                delta[j] = (f1.output(0, j) - f0.output(0, j)) / cfg.fd_epsilon;
                sqn += delta[j] * delta[j];
            }
            const ExampleTerms t = frob_inj_terms(sqn, vsq[i], cfg, d);
            frob_sum += t.frob;
            inj_sum += mu_in * t.inj_hinge_sq;
            const double coef = dsqn_coefficient(sqn, vsq[i], mu_in, cfg, d) / b;
            Matrix dy1(1, dd), dy0(1, dd);
            for (int j = 0; j < dd; ++j) {
                dy1(0, j) = coef * 2.0 * delta[j] / cfg.fd_epsilon;
                dy0(0, j) = -coef * 2.0 * delta[j] / cfg.fd_epsilon;
            }
            BackwardResult b1 = backward(dec, f1.trace, dy1);
            BackwardResult b0 = backward(dec, f0.trace, dy0);
            out.dec_grads.accumulate(b1.grads);
            out.dec_grads.accumulate(b0.grads);
            for (int j = 0; j < d; ++j) dz_total(i, j) += b0.dx(0, j) + b1.dx(0, j);
        }
    } else {
        ForwardResult f0 = forward(dec, z);
        Matrix zp = z;
        for (int i = 0; i < b; ++i)
            for (int j = 0; j < d; ++j) zp(i, j) += cfg.fd_epsilon * v_fixed(i, j);
        ForwardResult f1 = forward(dec, zp);
        const Matrix& y = f0.output;
        const int dd = y.cols;

        Matrix dy0(b, dd), dy1(b, dd);
        for (int i = 0; i < b; ++i) {
            double sqn = 0.0;
            std::vector<double> delta(dd);
            for (int j = 0; j < dd; ++j) {
                delta[j] = (f1.output(i, j) - f0.output(i, j)) / cfg.fd_epsilon;
                sqn += delta[j] * delta[j];
            }
            if (!std::isfinite(sqn))
                throw std::runtime_error("flow batch: non-finite finite-difference estimate");
            const ExampleTerms t = frob_inj_terms(sqn, vsq[i], cfg, d);
            frob_sum += t.frob;
            inj_sum += mu_in * t.inj_hinge_sq;
            const double coef = dsqn_coefficient(sqn, vsq[i], mu_in, cfg, d) / b;
            double resid = 0.0;
            for (int j = 0; j < dd; ++j) {
                const double diff = x(i, j) - y(i, j);
                resid += diff * diff;
                dy0(i, j) = -2.0 * mu * diff / b - coef * 2.0 * delta[j] / cfg.fd_epsilon;
                dy1(i, j) = coef * 2.0 * delta[j] / cfg.fd_epsilon;
            }
            recon_sum += mu * resid;
        }
        BackwardResult b0 = backward(dec, f0.trace, dy0);
        BackwardResult b1 = backward(dec, f1.trace, dy1);
        out.dec_grads = std::move(b0.grads);
        out.dec_grads.accumulate(b1.grads);
        dz_total = b0.dx + b1.dx;
    }

    for (int i = 0; i < b; ++i) {
        double zsq = 0.0;
        for (int j = 0; j < d; ++j) {
            zsq += z(i, j) * z(i, j);
            dz_total(i, j) += 2.0 * cfg.w_prior * z(i, j) / b;
        }
        prior_sum += cfg.w_prior * zsq;
    }

    BackwardResult enc_back = backward(enc, enc_fwd.trace, dz_total);
    out.enc_grads = std::move(enc_back.grads);

    out.mean.prior_term = prior_sum / b;
    out.mean.recon_term = recon_sum / b;
    out.mean.frob_term = frob_sum / b;
    out.mean.inj_term = inj_sum / b;
    out.mean.total =
        out.mean.prior_term + out.mean.recon_term + out.mean.frob_term + out.mean.inj_term;
    return out;
}

FlowBatchResult flow_batch_loss_grads(const MlpNetwork& enc, const MlpNetwork& dec,
                                      const Matrix& x, const FlowObjectiveConfig& cfg, long iter,
                                      RngState& rng) {
    cfg.validate();
    const int d = dec.input_dim();
    FlowBatchResult acc;
    for (int pass = 0; pass < cfg.mc_samples; ++pass) {
        const Matrix v = sample_directions(rng, x.rows, d);
        FlowBatchResult one = flow_batch_loss_grads_with_noise(enc, dec, x, cfg, iter, v);
        if (pass == 0) {
            acc = std::move(one);
            if (cfg.mc_samples == 1) return acc;
            acc.enc_grads.scale(1.0 / cfg.mc_samples);
            acc.dec_grads.scale(1.0 / cfg.mc_samples);
            acc.mean.frob_term /= cfg.mc_samples;
            acc.mean.inj_term /= cfg.mc_samples;
        } else {
            acc.enc_grads.accumulate(one.enc_grads, 1.0 / cfg.mc_samples);
            acc.dec_grads.accumulate(one.dec_grads, 1.0 / cfg.mc_samples);
            acc.mean.frob_term += one.mean.frob_term / cfg.mc_samples;
            acc.mean.inj_term += one.mean.inj_term / cfg.mc_samples;
            acc.fallback_count += one.fallback_count;
        }
    }
    acc.mean.total =
        acc.mean.prior_term + acc.mean.recon_term + acc.mean.frob_term + acc.mean.inj_term;
    return acc;
}

} // namespace ijflow
