#include "ijflow/data.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ijflow {

namespace {

constexpr std::uint32_t kImagesMagic = 2051; // 0x00000803
constexpr std::uint32_t kLabelsMagic = 2049; // 0x00000801

std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("idx: cannot open file " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return bytes;
}

std::uint32_t read_be32(const std::vector<std::uint8_t>& b, size_t offset, const char* what) {
    if (offset + 4 > b.size())
        throw std::runtime_error("idx: truncated " + std::string(what) + " at byte offset " +
                                 std::to_string(offset));
    return (std::uint32_t(b[offset]) << 24) | (std::uint32_t(b[offset + 1]) << 16) |
           (std::uint32_t(b[offset + 2]) << 8) | std::uint32_t(b[offset + 3]);
}

void write_be32(std::ofstream& out, std::uint32_t v) {
    const char bytes[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                           static_cast<char>(v >> 8), static_cast<char>(v)};
    out.write(bytes, 4);
}

} // namespace

Dataset load_mnist_idx(const std::string& images_path,
                       const std::optional<std::string>& labels_path) {
    const std::vector<std::uint8_t> b = read_file(images_path);
    const std::uint32_t magic = read_be32(b, 0, "magic");
    if (magic != kImagesMagic)
        throw std::runtime_error("idx: bad image magic " + std::to_string(magic) +
                                 " at byte offset 0 (expected 2051)");
    const std::uint32_t n = read_be32(b, 4, "image count");
    const std::uint32_t rows = read_be32(b, 8, "row count");
    const std::uint32_t cols = read_be32(b, 12, "column count");
    if (n == 0 || rows == 0 || cols == 0)
        throw std::runtime_error("idx: zero dimension in header at byte offset 4");
    const std::uint64_t payload = std::uint64_t(n) * rows * cols;
    if (rows > 4096 || cols > 4096 || payload > (std::uint64_t(1) << 33))
        throw std::runtime_error("idx: dimension overflow in header at byte offset 4");
    if (b.size() < 16 + payload)
        throw std::runtime_error("idx: truncated payload: need " + std::to_string(payload) +
                                 " bytes from byte offset 16, file has " +
                                 std::to_string(b.size() - 16));

    Dataset ds;
    ds.name = "mnist";
    ds.image_rows = static_cast<int>(rows);
    ds.image_cols = static_cast<int>(cols);
    ds.x = Matrix(static_cast<int>(n), static_cast<int>(rows * cols));
    for (size_t i = 0; i < payload; ++i) ds.x.data[i] = static_cast<double>(b[16 + i]) / 255.0;

    if (labels_path) {
        const std::vector<std::uint8_t> lb = read_file(*labels_path);
        const std::uint32_t lmagic = read_be32(lb, 0, "label magic");
        if (lmagic != kLabelsMagic)
            throw std::runtime_error("idx: bad label magic " + std::to_string(lmagic) +
                                     " at byte offset 0 (expected 2049)");
        const std::uint32_t ln = read_be32(lb, 4, "label count");
        if (ln != n)
            throw std::runtime_error("idx: label count " + std::to_string(ln) +
                                     " does not match image count " + std::to_string(n));
        if (lb.size() < 8 + ln)
            throw std::runtime_error("idx: truncated labels: need " + std::to_string(ln) +
                                     " bytes from byte offset 8, file has " +
                                     std::to_string(lb.size() - 8));
        ds.labels = std::vector<std::uint8_t>(lb.begin() + 8, lb.begin() + 8 + ln);
    }
    return ds;
}

void save_idx_images(const std::string& path, const std::vector<std::uint8_t>& pixels, int n,
                     int rows, int cols) {
    if (pixels.size() != static_cast<size_t>(n) * rows * cols)
        throw std::invalid_argument("save_idx_images: payload size mismatch");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("idx: cannot write " + path);
    write_be32(out, kImagesMagic);
    write_be32(out, static_cast<std::uint32_t>(n));
    write_be32(out, static_cast<std::uint32_t>(rows));
    write_be32(out, static_cast<std::uint32_t>(cols));
    out.write(reinterpret_cast<const char*>(pixels.data()),
              static_cast<std::streamsize>(pixels.size()));
    if (!out) throw std::runtime_error("idx: write failed for " + path);
}

void save_idx_labels(const std::string& path, const std::vector<std::uint8_t>& labels) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("idx: cannot write " + path);
    write_be32(out, kLabelsMagic);
    write_be32(out, static_cast<std::uint32_t>(labels.size()));
    out.write(reinterpret_cast<const char*>(labels.data()),
              static_cast<std::streamsize>(labels.size()));
    if (!out) throw std::runtime_error("idx: write failed for " + path);
}

namespace {

// Orthonormal columns from modified Gram-Schmidt of a Gaussian draw.
Matrix random_orthonormal(RngState& rng, int rows, int cols) {
    Matrix q(rows, cols);
    for (double& v : q.data) v = rng.gauss();
    for (int j = 0; j < cols; ++j) {
        for (int pr = 0; pr < j; ++pr) {
            double proj = 0.0;
            for (int i = 0; i < rows; ++i) proj += q(i, j) * q(i, pr);
            for (int i = 0; i < rows; ++i) q(i, j) -= proj * q(i, pr);
        }
        double nrm = 0.0;
        for (int i = 0; i < rows; ++i) nrm += q(i, j) * q(i, j);
        nrm = std::sqrt(nrm);
        if (nrm < 1e-12) throw std::runtime_error("random_orthonormal: degenerate draw");
        for (int i = 0; i < rows; ++i) q(i, j) /= nrm;
    }
    return q;
}

} // namespace

Dataset gen_linear_manifold(RngState& rng, int n, int big_d, int d, double scale,
                            double noise_std) {
    if (big_d < d || d < 1) throw std::invalid_argument("gen_linear_manifold: need D >= d >= 1");
    if (n < 1) throw std::invalid_argument("gen_linear_manifold: n must be >= 1");
    if (noise_std < 0.0) throw std::invalid_argument("gen_linear_manifold: noise_std must be >= 0");
    Matrix a = random_orthonormal(rng, big_d, d);
    for (double& v : a.data) v *= scale;

    Dataset ds;
    ds.name = "linear";
    ds.ground_truth = a;
    ds.x = Matrix(n, big_d);
    for (int i = 0; i < n; ++i) {
        const std::vector<double> z = gauss_sample(rng, d);
        std::vector<double> xi = matvec(a, z);
        if (noise_std > 0.0)
            for (double& v : xi) v += noise_std * rng.gauss();
        ds.x.set_row(i, xi);
    }
    return ds;
}

Dataset gen_circle_manifold(RngState& rng, int n, int big_d, double radius, double noise_std) {
    if (big_d < 2) throw std::invalid_argument("gen_circle_manifold: need D >= 2");
    if (n < 1) throw std::invalid_argument("gen_circle_manifold: n must be >= 1");
    Matrix rot = random_orthonormal(rng, big_d, big_d);
    Dataset ds;
    ds.name = "circle";
    ds.x = Matrix(n, big_d);
    std::vector<double> planar(big_d, 0.0);
    for (int i = 0; i < n; ++i) {
        const double theta = 2.0 * M_PI * rng.uniform01();
        std::fill(planar.begin(), planar.end(), 0.0);
        planar[0] = radius * std::cos(theta);
        planar[1] = radius * std::sin(theta);
        std::vector<double> xi = matvec(rot, planar);
        if (noise_std > 0.0)
            for (double& v : xi) v += noise_std * rng.gauss();
        ds.x.set_row(i, xi);
    }
    return ds;
}

BatchIterator::BatchIterator(const Matrix& data, int bsz, RngState r)
    : x(&data), batch_size(bsz), rng(r) {
    if (bsz < 1) throw std::invalid_argument("BatchIterator: batch size must be >= 1");
    if (data.rows < 1) throw std::invalid_argument("BatchIterator: empty dataset");
    perm.resize(data.rows);
    reshuffle();
}

void BatchIterator::reshuffle() {
    const int n = x->rows;
    for (int i = 0; i < n; ++i) perm[i] = i;
    for (int i = n - 1; i > 0; --i) {
        const int j = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(i) + 1));
        std::swap(perm[i], perm[j]);
    }
    pos = 0;
}

Matrix BatchIterator::next() {
    const int n = x->rows;
    if (pos >= static_cast<size_t>(n)) reshuffle();
    const int take = std::min<int>(batch_size, n - static_cast<int>(pos));
    Matrix batch(take, x->cols);
    for (int i = 0; i < take; ++i) {
        const double* src = x->row_ptr(perm[pos + i]);
        std::memcpy(batch.row_ptr(i), src, sizeof(double) * x->cols);
    }
    pos += take;
    return batch;
}

void save_dataset_csv(const std::string& path, const Matrix& x) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("csv: cannot write " + path);
    for (int j = 0; j < x.cols; ++j) out << (j ? ",x" : "x") << j;
    out << "\n";
    char buf[64];
    for (int i = 0; i < x.rows; ++i) {
        for (int j = 0; j < x.cols; ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", x(i, j));
            if (j) out << ",";
            out << buf;
        }
        out << "\n";
    }
    if (!out) throw std::runtime_error("csv: write failed for " + path);
}

Matrix load_dataset_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("csv: cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("csv: empty file " + path);
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        if (!rows.empty() && rows[0].size() != row.size())
            throw std::runtime_error("csv: ragged row in " + path);
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::runtime_error("csv: no data rows in " + path);
    return Matrix::from_rows(rows);
}

} // namespace ijflow
