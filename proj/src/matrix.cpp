#include "ser/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ser {

namespace {

void require_valid_dims(int r, int c) {
    if (r < 1 || c < 1) {
        std::ostringstream os;
        os << "matrix dimensions must be >= 1, got (" << r << ", " << c << ")";
        throw ShapeError(os.str());
    }
}

} // namespace

Matrix::Matrix(int r, int c) : rows(r), cols(c) {
    require_valid_dims(r, c);
    data.assign(static_cast<std::size_t>(r) * c, 0.0);
}

Matrix::Matrix(int r, int c, std::vector<double> values) : rows(r), cols(c), data(std::move(values)) {
    require_valid_dims(r, c);
    if (data.size() != static_cast<std::size_t>(r) * c) {
        std::ostringstream os;
        os << "matrix data length " << data.size() << " does not match shape ("
           << r << ", " << c << ")";
        throw ShapeError(os.str());
    }
}

Matrix Matrix::identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    int r = static_cast<int>(rows.size());
    int c = r > 0 ? static_cast<int>(rows.begin()->size()) : 0;
    Matrix m(r, c);
    int i = 0;
    for (const auto& row : rows) {
        if (static_cast<int>(row.size()) != c)
            throw ShapeError("from_rows: ragged initializer");
        std::copy(row.begin(), row.end(), m.data.begin() + static_cast<std::size_t>(i) * c);
        ++i;
    }
    return m;
}

void Matrix::fill(double v) {
    std::fill(data.begin(), data.end(), v);
}

std::string shape_str(const Matrix& m) {
    std::ostringstream os;
    os << "(" << m.rows << ", " << m.cols << ")";
    return os.str();
}

namespace {

void require_multiplicable(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows) {
        throw ShapeError("matmul: inner dimensions differ, " + shape_str(a) + " x " +
                         shape_str(b));
    }
}

void require_same_shape(const char* op, const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) {
        throw ShapeError(std::string(op) + ": shapes differ, " + shape_str(a) + " vs " +
                         shape_str(b));
    }
}

inline void matmul_row(const Matrix& a, const Matrix& b, Matrix& out, int i) {
    const double* arow = a.data.data() + static_cast<std::size_t>(i) * a.cols;
    double* orow = out.data.data() + static_cast<std::size_t>(i) * b.cols;
    for (int j = 0; j < b.cols; ++j) {
        double acc = 0.0;
        for (int k = 0; k < a.cols; ++k)
            acc += arow[k] * b.data[static_cast<std::size_t>(k) * b.cols + j];
        orow[j] = acc;
    }
}

} // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
    require_multiplicable(a, b);
    Matrix out(a.rows, b.cols);
#ifdef _OPENMP
    // Each output element is one fixed-order dot product, so splitting rows
    // across threads cannot change any result bit.
    const std::size_t work =
        static_cast<std::size_t>(a.rows) * b.cols * a.cols;
    if (work >= 65536) {
#pragma omp parallel for schedule(static)
        for (int i = 0; i < a.rows; ++i) matmul_row(a, b, out, i);
        return out;
    }
#endif
    for (int i = 0; i < a.rows; ++i) matmul_row(a, b, out, i);
    return out;
}

Matrix matmul_serial(const Matrix& a, const Matrix& b) {
    require_multiplicable(a, b);
    Matrix out(a.rows, b.cols);
    for (int i = 0; i < a.rows; ++i) matmul_row(a, b, out, i);
    return out;
}

Matrix add(const Matrix& a, const Matrix& b) {
    require_same_shape("add", a, b);
    Matrix out = a;
    for (std::size_t n = 0; n < out.data.size(); ++n) out.data[n] += b.data[n];
    return out;
}

Matrix sub(const Matrix& a, const Matrix& b) {
    require_same_shape("sub", a, b);
    Matrix out = a;
    for (std::size_t n = 0; n < out.data.size(); ++n) out.data[n] -= b.data[n];
    return out;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
    require_same_shape("hadamard", a, b);
    Matrix out = a;
    for (std::size_t n = 0; n < out.data.size(); ++n) out.data[n] *= b.data[n];
    return out;
}

Matrix transpose(const Matrix& a) {
    Matrix out(a.cols, a.rows);
    for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < a.cols; ++j) out(j, i) = a(i, j);
    return out;
}

Matrix scale(const Matrix& a, double k) {
    Matrix out = a;
    for (double& v : out.data) v *= k;
    return out;
}

void add_row_inplace(Matrix& m, std::span<const double> bias) {
    if (static_cast<int>(bias.size()) != m.cols) {
        std::ostringstream os;
        os << "add_row_inplace: bias length " << bias.size() << " vs matrix " << shape_str(m);
        throw ShapeError(os.str());
    }
    for (int i = 0; i < m.rows; ++i) {
        double* row = m.data.data() + static_cast<std::size_t>(i) * m.cols;
        for (int j = 0; j < m.cols; ++j) row[j] += bias[j];
    }
}

double sigmoid_scalar(double x) {
    // Split on the sign so exp never overflows.
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    double e = std::exp(x);
    return e / (1.0 + e);
}

Matrix sigmoid(const Matrix& x) {
    Matrix out = x;
    for (double& v : out.data) v = sigmoid_scalar(v);
    return out;
}

Matrix tanh_act(const Matrix& x) {
    Matrix out = x;
    for (double& v : out.data) v = std::tanh(v);
    return out;
}

Matrix softmax(const Matrix& logits) {
    Matrix out = logits;
    for (int i = 0; i < out.rows; ++i) {
        double* row = out.data.data() + static_cast<std::size_t>(i) * out.cols;
        double mx = row[0];
        for (int j = 1; j < out.cols; ++j) mx = std::max(mx, row[j]);
        double sum = 0.0;
        for (int j = 0; j < out.cols; ++j) {
            row[j] = std::exp(row[j] - mx);
            sum += row[j];
        }
        for (int j = 0; j < out.cols; ++j) row[j] /= sum;
    }
    return out;
}

void affine(const Matrix& w, std::span<const double> x, std::span<const double> b,
            std::span<double> out) {
    if (static_cast<int>(x.size()) != w.cols || static_cast<int>(b.size()) != w.rows ||
        static_cast<int>(out.size()) != w.rows) {
        std::ostringstream os;
        os << "affine: W " << shape_str(w) << " with x[" << x.size() << "], b[" << b.size()
           << "], out[" << out.size() << "]";
        throw ShapeError(os.str());
    }
    for (int i = 0; i < w.rows; ++i) {
        const double* wrow = w.data.data() + static_cast<std::size_t>(i) * w.cols;
        double acc = b[i];
        for (int j = 0; j < w.cols; ++j) acc += wrow[j] * x[j];
        out[i] = acc;
    }
}

void affine_transposed_accum(const Matrix& w, std::span<const double> dy,
                             std::span<double> dx) {
    if (static_cast<int>(dy.size()) != w.rows || static_cast<int>(dx.size()) != w.cols) {
        std::ostringstream os;
        os << "affine_transposed_accum: W " << shape_str(w) << " with dy[" << dy.size()
           << "], dx[" << dx.size() << "]";
        throw ShapeError(os.str());
    }
    for (int i = 0; i < w.rows; ++i) {
        const double* wrow = w.data.data() + static_cast<std::size_t>(i) * w.cols;
        const double g = dy[i];
        for (int j = 0; j < w.cols; ++j) dx[j] += wrow[j] * g;
    }
}

bool all_finite(std::span<const double> v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

bool all_finite(const Matrix& m) {
    return all_finite(std::span<const double>(m.data));
}

} // namespace ser
