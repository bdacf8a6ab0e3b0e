#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace ijflow {

// Dense row-major matrix of doubles. The universal numeric carrier.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0.0) {
        if (r < 0 || c < 0) throw std::invalid_argument("Matrix: negative dimensions");
    }
    Matrix(int r, int c, std::vector<double> d) : rows(r), cols(c), data(std::move(d)) {
        if (data.size() != static_cast<size_t>(r) * c)
            throw std::invalid_argument("Matrix: data length != rows*cols");
    }

    double& operator()(int i, int j) { return data[static_cast<size_t>(i) * cols + j]; }
    double operator()(int i, int j) const { return data[static_cast<size_t>(i) * cols + j]; }

    double* row_ptr(int i) { return data.data() + static_cast<size_t>(i) * cols; }
    const double* row_ptr(int i) const { return data.data() + static_cast<size_t>(i) * cols; }

    std::vector<double> row(int i) const {
        return std::vector<double>(row_ptr(i), row_ptr(i) + cols);
    }
    void set_row(int i, const std::vector<double>& v) {
        if (static_cast<int>(v.size()) != cols) throw std::invalid_argument("set_row: size mismatch");
        for (int j = 0; j < cols; ++j) (*this)(i, j) = v[j];
    }

    static Matrix zeros(int r, int c) { return Matrix(r, c); }
    static Matrix identity(int n) {
        Matrix m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }
    static Matrix diag(const std::vector<double>& d) {
        Matrix m(static_cast<int>(d.size()), static_cast<int>(d.size()));
        for (size_t i = 0; i < d.size(); ++i) m(static_cast<int>(i), static_cast<int>(i)) = d[i];
        return m;
    }
    static Matrix from_rows(const std::vector<std::vector<double>>& rows_in);

    bool all_finite() const;
};

Matrix transpose(const Matrix& a);

// C = A*B, each C(i,j) accumulated strictly in ascending-k order. Row i of the
// result is bit-identical whether computed in a batch or alone.
Matrix matmul(const Matrix& a, const Matrix& b);

// y = A*x with the same ascending-k accumulation order as matmul.
std::vector<double> matvec(const Matrix& a, const std::vector<double>& x);

// y = A^T*x (ascending row index accumulation).
std::vector<double> matvec_t(const Matrix& a, const std::vector<double>& x);

Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator*(double s, const Matrix& a);

double frobenius_norm(const Matrix& a);
double max_abs(const Matrix& a);
double trace(const Matrix& a);

double dot(const std::vector<double>& a, const std::vector<double>& b);
double sqnorm(const std::vector<double>& v);

} // namespace ijflow
