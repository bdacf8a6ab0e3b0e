#include "ijflow/metrics.hpp"

#include "ijflow/linalg.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace ijflow {

namespace {
constexpr int kEvalBatch = 256;
}

Matrix encode_dataset(const MlpNetwork& encoder, const Matrix& x) {
    Matrix z(x.rows, encoder.output_dim());
    for (int start = 0; start < x.rows; start += kEvalBatch) {
        const int take = std::min(kEvalBatch, x.rows - start);
        Matrix chunk(take, x.cols);
        for (int i = 0; i < take; ++i)
            for (int j = 0; j < x.cols; ++j) chunk(i, j) = x(start + i, j);
        const Matrix out = forward(encoder, chunk).output;
        for (int i = 0; i < take; ++i)
            for (int j = 0; j < z.cols; ++j) z(start + i, j) = out(i, j);
    }
    return z;
}

MlpNetwork mean_encoder(const MlpNetwork& encoder, int latent_dim) {
    if (encoder.output_dim() != 2 * latent_dim) return encoder;
    MlpNetwork out = encoder;
    const size_t last = out.num_layers() - 1;
    Matrix w(latent_dim, out.layers[last].in_dim);
    for (int i = 0; i < latent_dim; ++i)
        for (int j = 0; j < w.cols; ++j) w(i, j) = out.weights[last](i, j);
    out.weights[last] = std::move(w);
    out.biases[last].resize(latent_dim);
    out.layers[last].out_dim = latent_dim;
    return out;
}

namespace {
Matrix decode_batches(const MlpNetwork& decoder, const Matrix& z) {
    Matrix y(z.rows, decoder.output_dim());
    for (int start = 0; start < z.rows; start += kEvalBatch) {
        const int take = std::min(kEvalBatch, z.rows - start);
        Matrix chunk(take, z.cols);
        for (int i = 0; i < take; ++i)
            for (int j = 0; j < z.cols; ++j) chunk(i, j) = z(start + i, j);
        const Matrix out = forward(decoder, chunk).output;
        for (int i = 0; i < take; ++i)
            for (int j = 0; j < y.cols; ++j) y(start + i, j) = out(i, j);
    }
    return y;
}
} // namespace

Matrix generate_samples(const MlpNetwork& decoder, const GaussianStats& prior, RngState& rng,
                        int n) {
    if (prior.dim() != decoder.input_dim())
        throw std::invalid_argument("generate_samples: prior dim mismatch");
    if (n == 0) return Matrix(0, decoder.output_dim());
    return decode_batches(decoder, sample_prior(prior, rng, n));
}

Matrix generate_samples(const MlpNetwork& decoder, const GmmModel& prior, RngState& rng, int n) {
    if (prior.components.empty() || prior.components[0].dim() != decoder.input_dim())
        throw std::invalid_argument("generate_samples: prior dim mismatch");
    if (n == 0) return Matrix(0, decoder.output_dim());
    return decode_batches(decoder, sample_prior(prior, rng, n));
}

Matrix generate_samples_isotropic(const MlpNetwork& decoder, double sigma2, RngState& rng, int n) {
    if (sigma2 <= 0.0) throw std::invalid_argument("generate_samples: sigma2 must be > 0");
    if (n == 0) return Matrix(0, decoder.output_dim());
    const int d = decoder.input_dim();
    const double sd = std::sqrt(sigma2);
    Matrix z(n, d);
    for (double& v : z.data) v = sd * rng.gauss();
    return decode_batches(decoder, z);
}

double recon_mse(const MlpNetwork& encoder, const MlpNetwork& decoder, const Matrix& x) {
    const Matrix y = decode_batches(decoder, encode_dataset(encoder, x));
    double acc = 0.0;
    for (size_t i = 0; i < x.data.size(); ++i) {
        const double diff = x.data[i] - y.data[i];
        acc += diff * diff;
    }
    return acc / (static_cast<double>(x.rows) * x.cols);
}

double frechet_distance(const GaussianStats& a, const GaussianStats& b) {
    if (a.dim() != b.dim()) throw std::invalid_argument("frechet_distance: dim mismatch");
    const int d = a.dim();
    double mean_sq = 0.0;
    for (int j = 0; j < d; ++j) {
        const double diff = a.mean[j] - b.mean[j];
        mean_sq += diff * diff;
    }
    const Matrix ra = sqrtm_psd(a.covariance);
    Matrix cross = matmul(matmul(ra, b.covariance), ra);
    const Matrix root_cross = sqrtm_psd(cross);
    const double val =
        mean_sq + trace(a.covariance) + trace(b.covariance) - 2.0 * trace(root_cross);
    if (val < -1e-8)
        throw std::runtime_error("frechet_distance: strongly negative value " +
                                 std::to_string(val));
    return std::max(val, 0.0);
}

LatentNormStats latent_norm_stats(const Matrix& z, int d) {
    if (z.rows < 1) throw std::invalid_argument("latent_norm_stats: empty matrix");
    LatentNormStats s;
    s.expected_chi = std::sqrt(static_cast<double>(d));
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < z.rows; ++i) {
        const double nrm = std::sqrt(sqnorm(z.row(i)));
        sum += nrm;
        sumsq += nrm * nrm;
    }
    const double n = static_cast<double>(z.rows);
    s.mean_norm = sum / n;
    s.std_norm = std::sqrt(std::max(sumsq / n - s.mean_norm * s.mean_norm, 0.0));
    return s;
}

double principal_subspace_angle(const MlpNetwork& decoder, const Matrix& ground_truth) {
    const int d = decoder.input_dim();
    if (ground_truth.cols != d || ground_truth.rows != decoder.output_dim())
        throw std::invalid_argument("principal_subspace_angle: shape mismatch");
    const std::vector<double> origin(d, 0.0);
    const Matrix j = full_jacobian(decoder, origin);

    // Orthonormal bases via thin SVD, then principal angles from the
    // singular values of Qj^T Qa.
    const SvdResult sj = svd(j);
    const SvdResult sa = svd(ground_truth);
    const double rank_tol_j = 1e-10 * std::max(1.0, sj.s.front());
    const double rank_tol_a = 1e-10 * std::max(1.0, sa.s.front());
    if (sj.s.back() <= rank_tol_j || sa.s.back() <= rank_tol_a)
        throw std::runtime_error("principal_subspace_angle: rank-deficient basis");

    const Matrix prod = matmul(transpose(sj.u), sa.u);
    const SvdResult sp = svd(prod);
    double smin = std::min(1.0, std::max(-1.0, sp.s.back()));
    return std::acos(smin) * 180.0 / M_PI;
}

void write_pgm_grid(const std::string& path, const Matrix& samples, int image_rows,
                    int image_cols) {
    if (samples.cols != image_rows * image_cols)
        throw std::invalid_argument("write_pgm_grid: sample width != rows*cols");
    if (samples.rows < 1) throw std::invalid_argument("write_pgm_grid: no samples");
    const int n = samples.rows;
    int side = 1;
    while (side * side < n) ++side;
    const int width = side * image_cols + (side - 1);
    const int height = side * image_rows + (side - 1);
    std::vector<std::uint8_t> img(static_cast<size_t>(width) * height, 0);

    for (int idx = 0; idx < n; ++idx) {
        const int gr = idx / side, gc = idx % side;
        const int oy = gr * (image_rows + 1), ox = gc * (image_cols + 1);
        for (int r = 0; r < image_rows; ++r)
            for (int c = 0; c < image_cols; ++c) {
                double v = samples(idx, r * image_cols + c);
                v = std::min(1.0, std::max(0.0, v));
                img[static_cast<size_t>(oy + r) * width + ox + c] =
                    static_cast<std::uint8_t>(std::lround(v * 255.0));
            }
    }

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("pgm: cannot write " + path);
    out << "P5\n" << width << " " << height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.data()), static_cast<std::streamsize>(img.size()));
    if (!out) throw std::runtime_error("pgm: write failed for " + path);
}

} // namespace ijflow
