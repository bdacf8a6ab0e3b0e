#pragma once

#include "ijflow/matrix.hpp"
#include "ijflow/rng.hpp"

#include <cstdint>
#include <optional>
#include <string>

namespace ijflow {

struct Dataset {
    Matrix x;          // n x D
    std::string name;
    int image_rows = 0; // > 0 for image data (rows*cols == D)
    int image_cols = 0;
    std::optional<Matrix> ground_truth; // embedding matrix A for linear manifolds
    std::optional<std::vector<std::uint8_t>> labels;

    int n() const { return x.rows; }
    int dim() const { return x.cols; }
    bool is_image() const { return image_rows > 0 && image_cols > 0; }
};

// Parses the big-endian IDX format: magic 0x00000803 (images) /
// 0x00000801 (labels), u32 dims, unsigned byte payload. Pixels are scaled to
// [0,1] by /255 and flattened row-major per image.
Dataset load_mnist_idx(const std::string& images_path,
                       const std::optional<std::string>& labels_path = std::nullopt);

// Writes an image IDX file (u8 payload) bit-exactly.
void save_idx_images(const std::string& path, const std::vector<std::uint8_t>& pixels, int n,
                     int rows, int cols);
void save_idx_labels(const std::string& path, const std::vector<std::uint8_t>& labels);

// x_i = A z_i + noise, A = scale * Q with Q a random orthonormal D x d basis
// (QR of a Gaussian); A is stored as ground truth.
Dataset gen_linear_manifold(RngState& rng, int n, int big_d, int d, double scale,
                            double noise_std);

// Points radius*(cos t, sin t) embedded into R^D by a random rotation.
Dataset gen_circle_manifold(RngState& rng, int n, int big_d, double radius, double noise_std);

struct BatchIterator {
    const Matrix* x = nullptr;
    int batch_size = 0;
    RngState rng;
    std::vector<int> perm;
    size_t pos = 0;

    BatchIterator(const Matrix& data, int bsz, RngState r);
    Matrix next();

private:
    void reshuffle();
};

// CSV with header row x0..x{D-1} and 17-significant-digit decimals.
void save_dataset_csv(const std::string& path, const Matrix& x);
Matrix load_dataset_csv(const std::string& path);

} // namespace ijflow
