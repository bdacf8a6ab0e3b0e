#include "ijflow/matrix.hpp"

#include <cmath>
#include <cstring>

namespace ijflow {

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows_in) {
    if (rows_in.empty()) return Matrix();
    Matrix m(static_cast<int>(rows_in.size()), static_cast<int>(rows_in[0].size()));
    for (int i = 0; i < m.rows; ++i) {
        if (static_cast<int>(rows_in[i].size()) != m.cols)
            throw std::invalid_argument("from_rows: ragged rows");
        m.set_row(i, rows_in[i]);
    }
    return m;
}

bool Matrix::all_finite() const {
    for (double v : data)
        if (!std::isfinite(v)) return false;
    return true;
}

Matrix transpose(const Matrix& a) {
    Matrix t(a.cols, a.rows);
    for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < a.cols; ++j) t(j, i) = a(i, j);
    return t;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows) throw std::invalid_argument("matmul: inner dims mismatch");
    Matrix c(a.rows, b.cols);
    const int m = a.rows, k = a.cols, n = b.cols;
    for (int i = 0; i < m; ++i) {
        const double* ar = a.row_ptr(i);
        double* cr = c.row_ptr(i);
        for (int p = 0; p < k; ++p) {
            const double av = ar[p];
            const double* br = b.row_ptr(p);
            for (int j = 0; j < n; ++j) cr[j] += av * br[j];
        }
    }
    return c;
}

std::vector<double> matvec(const Matrix& a, const std::vector<double>& x) {
    if (a.cols != static_cast<int>(x.size())) throw std::invalid_argument("matvec: dim mismatch");
    std::vector<double> y(a.rows, 0.0);
    for (int i = 0; i < a.rows; ++i) {
        const double* ar = a.row_ptr(i);
        double acc = 0.0;
        for (int p = 0; p < a.cols; ++p) acc += ar[p] * x[p];
        y[i] = acc;
    }
    return y;
}

std::vector<double> matvec_t(const Matrix& a, const std::vector<double>& x) {
    if (a.rows != static_cast<int>(x.size())) throw std::invalid_argument("matvec_t: dim mismatch");
    std::vector<double> y(a.cols, 0.0);
    for (int i = 0; i < a.rows; ++i) {
        const double* ar = a.row_ptr(i);
        const double xv = x[i];
        for (int j = 0; j < a.cols; ++j) y[j] += xv * ar[j];
    }
    return y;
}

Matrix operator+(const Matrix& a, const Matrix& b) {
    if (a.rows != b.rows || a.cols != b.cols) throw std::invalid_argument("matrix +: shape mismatch");
    Matrix c = a;
    for (size_t i = 0; i < c.data.size(); ++i) c.data[i] += b.data[i];
    return c;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
    if (a.rows != b.rows || a.cols != b.cols) throw std::invalid_argument("matrix -: shape mismatch");
    Matrix c = a;
    for (size_t i = 0; i < c.data.size(); ++i) c.data[i] -= b.data[i];
    return c;
}

Matrix operator*(double s, const Matrix& a) {
    Matrix c = a;
    for (double& v : c.data) v *= s;
    return c;
}

double frobenius_norm(const Matrix& a) {
    double acc = 0.0;
    for (double v : a.data) acc += v * v;
    return std::sqrt(acc);
}

double max_abs(const Matrix& a) {
    double m = 0.0;
    for (double v : a.data) m = std::max(m, std::fabs(v));
    return m;
}

double trace(const Matrix& a) {
    const int n = std::min(a.rows, a.cols);
    double t = 0.0;
    for (int i = 0; i < n; ++i) t += a(i, i);
    return t;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("dot: size mismatch");
    double acc = 0.0;
    for (size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

double sqnorm(const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) acc += x * x;
    return acc;
}

} // namespace ijflow
