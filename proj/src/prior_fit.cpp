#include "ijflow/prior_fit.hpp"
#include <limits>

#include "ijflow/linalg.hpp"

#include <cmath>
#include <stdexcept>

namespace ijflow {

namespace {

// Weighted mean and 1/sum(w) covariance; shared by the direct fit and the
// EM M-step so that K=1 reproduces fit_gaussian_full.
GaussianStats weighted_mean_cov(const Matrix& z, const std::vector<double>& w, double wsum) {
    const int n = z.rows, d = z.cols;
    GaussianStats g;
    g.mean.assign(d, 0.0);
    for (int i = 0; i < n; ++i) {
        const double* row = z.row_ptr(i);
        for (int j = 0; j < d; ++j) g.mean[j] += w[i] * row[j];
    }
    for (int j = 0; j < d; ++j) g.mean[j] /= wsum;

    g.covariance = Matrix(d, d);
    std::vector<double> c(d);
    for (int i = 0; i < n; ++i) {
        const double* row = z.row_ptr(i);
        for (int j = 0; j < d; ++j) c[j] = row[j] - g.mean[j];
        for (int a = 0; a < d; ++a) {
            const double wa = w[i] * c[a];
            for (int bcol = 0; bcol <= a; ++bcol) g.covariance(a, bcol) += wa * c[bcol];
        }
    }
    for (int a = 0; a < d; ++a)
        for (int bcol = 0; bcol <= a; ++bcol) {
            g.covariance(a, bcol) /= wsum;
            g.covariance(bcol, a) = g.covariance(a, bcol);
        }
    g.chol = cholesky_psd(g.covariance).l;
    return g;
}

} // namespace

GaussianStats fit_gaussian_full(const Matrix& z) {
    if (z.rows < 2) throw std::invalid_argument("fit_gaussian_full: need at least 2 points");
    std::vector<double> w(z.rows, 1.0);
    return weighted_mean_cov(z, w, static_cast<double>(z.rows));
}

double gaussian_log_density(const GaussianStats& g, const double* z) {
    const int d = g.dim();
    std::vector<double> c(d);
    for (int j = 0; j < d; ++j) c[j] = z[j] - g.mean[j];
    const std::vector<double> y = solve_lower(g.chol, c);
    double logdet_half = 0.0;
    for (int j = 0; j < d; ++j) logdet_half += std::log(g.chol(j, j));
    return -0.5 * d * std::log(2.0 * M_PI) - logdet_half - 0.5 * sqnorm(y);
}

namespace {

std::vector<int> kmeans_pp_seed(const Matrix& z, int k, RngState& rng) {
    const int n = z.rows, d = z.cols;
    std::vector<int> centers;
    centers.push_back(static_cast<int>(rng.uniform_below(n)));
    std::vector<double> dist2(n, 0.0);
    while (static_cast<int>(centers.size()) < k) {
        double total = 0.0;
        for (int i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (int c : centers) {
                double acc = 0.0;
                for (int j = 0; j < d; ++j) {
                    const double diff = z(i, j) - z(c, j);
                    acc += diff * diff;
                }
                best = std::min(best, acc);
            }
            dist2[i] = best;
            total += best;
        }
        int chosen;
        if (total <= 0.0) {
            chosen = static_cast<int>(rng.uniform_below(n));
        } else {
            const double u = rng.uniform01() * total;
            double run = 0.0;
            chosen = n - 1;
            for (int i = 0; i < n; ++i) {
                run += dist2[i];
                if (u < run) {
                    chosen = i;
                    break;
                }
            }
        }
        centers.push_back(chosen);
    }
    return centers;
}

} // namespace

GmmModel fit_gmm_em(const Matrix& z, int k, RngState& rng, int max_iters, double tol,
                    std::vector<double>* loglik_history) {
    const int n = z.rows;
    if (k < 1) throw std::invalid_argument("fit_gmm_em: K must be >= 1");
    if (n < k) throw std::invalid_argument("fit_gmm_em: need n >= K");

    const GaussianStats global = fit_gaussian_full(z);
    const std::vector<int> seeds = kmeans_pp_seed(z, k, rng);

    GmmModel model;
    model.k = k;
    model.weights.assign(k, 1.0 / k);
    for (int c = 0; c < k; ++c) {
        GaussianStats comp;
        comp.mean = z.row(seeds[c]);
        comp.covariance = global.covariance;
        comp.chol = global.chol;
        model.components.push_back(std::move(comp));
    }

    std::vector<bool> reseeded(k, false), frozen(k, false);
    Matrix resp(n, k);
    std::vector<double> logp(k);
    double prev_ll = -std::numeric_limits<double>::infinity();

    for (int it = 0; it < max_iters; ++it) {
        // E-step
        double ll = 0.0;
        for (int i = 0; i < n; ++i) {
            const double* zi = z.row_ptr(i);
            double mx = -std::numeric_limits<double>::infinity();
            for (int c = 0; c < k; ++c) {
                logp[c] = std::log(model.weights[c]) + gaussian_log_density(model.components[c], zi);
                mx = std::max(mx, logp[c]);
            }
            double sum = 0.0;
            for (int c = 0; c < k; ++c) sum += std::exp(logp[c] - mx);
            const double lse = mx + std::log(sum);
            ll += lse;
            for (int c = 0; c < k; ++c) resp(i, c) = std::exp(logp[c] - lse);
        }
        if (loglik_history) loglik_history->push_back(ll);
        if (it > 0 && ll - prev_ll <= tol * (std::fabs(prev_ll) + 1.0)) break;
        prev_ll = ll;

        // M-step
        std::vector<double> mass(k, 0.0);
        for (int c = 0; c < k; ++c)
            for (int i = 0; i < n; ++i) mass[c] += resp(i, c);

        double wsum = 0.0;
        std::vector<double> col(n);
        for (int c = 0; c < k; ++c) {
            if (mass[c] < 1.0) {
                if (!reseeded[c]) {
                    reseeded[c] = true;
                    model.components[c].mean = z.row(static_cast<int>(rng.uniform_below(n)));
                    model.components[c].covariance = global.covariance;
                    model.components[c].chol = global.chol;
                    model.weights[c] = 1.0 / k;
                } else {
                    frozen[c] = true;
                    model.weights[c] = mass[c] / n;
                }
            } else if (!frozen[c]) {
                for (int i = 0; i < n; ++i) col[i] = resp(i, c);
                model.components[c] = weighted_mean_cov(z, col, mass[c]);
                model.weights[c] = mass[c] / n;
            } else {
                model.weights[c] = mass[c] / n;
            }
            wsum += model.weights[c];
        }
        for (int c = 0; c < k; ++c) model.weights[c] /= wsum;
    }
    return model;
}

double gmm_log_likelihood(const GmmModel& model, const Matrix& z) {
    if (model.k < 1 || model.components.empty())
        throw std::invalid_argument("gmm_log_likelihood: empty model");
    if (z.cols != model.components[0].dim())
        throw std::invalid_argument("gmm_log_likelihood: dim mismatch");
    double ll = 0.0;
    std::vector<double> logp(model.k);
    for (int i = 0; i < z.rows; ++i) {
        const double* zi = z.row_ptr(i);
        double mx = -std::numeric_limits<double>::infinity();
        for (int c = 0; c < model.k; ++c) {
            logp[c] = std::log(model.weights[c]) + gaussian_log_density(model.components[c], zi);
            mx = std::max(mx, logp[c]);
        }
        double sum = 0.0;
        for (int c = 0; c < model.k; ++c) sum += std::exp(logp[c] - mx);
        ll += mx + std::log(sum);
    }
    return ll;
}

Matrix gmm_responsibilities(const GmmModel& model, const Matrix& z) {
    if (model.k < 1 || model.components.empty())
        throw std::invalid_argument("gmm_responsibilities: empty model");
    Matrix resp(z.rows, model.k);
    std::vector<double> logp(model.k);
    for (int i = 0; i < z.rows; ++i) {
        const double* zi = z.row_ptr(i);
        double mx = -std::numeric_limits<double>::infinity();
        for (int c = 0; c < model.k; ++c) {
            logp[c] = std::log(model.weights[c]) + gaussian_log_density(model.components[c], zi);
            mx = std::max(mx, logp[c]);
        }
        double sum = 0.0;
        for (int c = 0; c < model.k; ++c) sum += std::exp(logp[c] - mx);
        const double lse = mx + std::log(sum);
        for (int c = 0; c < model.k; ++c) resp(i, c) = std::exp(logp[c] - lse);
    }
    return resp;
}

Matrix sample_prior(const GaussianStats& g, RngState& rng, int n) {
    if (n < 1) throw std::invalid_argument("sample_prior: n must be >= 1");
    const int d = g.dim();
    Matrix out(n, d);
    for (int i = 0; i < n; ++i) {
        const std::vector<double> eps = gauss_sample(rng, d);
        const std::vector<double> le = matvec(g.chol, eps);
        for (int j = 0; j < d; ++j) out(i, j) = g.mean[j] + le[j];
    }
    return out;
}

Matrix sample_prior(const GmmModel& model, RngState& rng, int n) {
    if (n < 1) throw std::invalid_argument("sample_prior: n must be >= 1");
    const int d = model.components.at(0).dim();
    Matrix out(n, d);
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform01();
        double run = 0.0;
        int comp = model.k - 1;
        for (int c = 0; c < model.k; ++c) {
            run += model.weights[c];
            if (u < run) {
                comp = c;
                break;
            }
        }
        const GaussianStats& g = model.components[comp];
        const std::vector<double> eps = gauss_sample(rng, d);
        const std::vector<double> le = matvec(g.chol, eps);
        for (int j = 0; j < d; ++j) out(i, j) = g.mean[j] + le[j];
    }
    return out;
}

} // namespace ijflow
