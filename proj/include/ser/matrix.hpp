#ifndef SER_MATRIX_HPP
#define SER_MATRIX_HPP

#include <span>
#include <string>
#include <vector>

#include "ser/error.hpp"

namespace ser {

// Dense row-major matrix of doubles. The shape is carried explicitly and
// vectors are represented as 1xN or Nx1 matrices. All training math is done
// in double precision; see the gradient-check tolerances in the tests.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data; // row-major, rows * cols entries

    Matrix() = default;
    Matrix(int r, int c);                       // zero-initialized
    Matrix(int r, int c, std::vector<double> values);

    static Matrix zeros(int r, int c) { return Matrix(r, c); }
    static Matrix identity(int n);
    static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

    double& operator()(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
    double operator()(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }

    std::span<double> row(int r) {
        return {data.data() + static_cast<std::size_t>(r) * cols, static_cast<std::size_t>(cols)};
    }
    std::span<const double> row(int r) const {
        return {data.data() + static_cast<std::size_t>(r) * cols, static_cast<std::size_t>(cols)};
    }

    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
    std::size_t size() const { return data.size(); }
    void fill(double v);
};

std::string shape_str(const Matrix& m);

// Standard matrix product. Parallelized over output rows when the operand
// sizes justify it; the per-element inner summation order is fixed, so the
// result is bitwise identical to matmul_serial at any thread count.
Matrix matmul(const Matrix& a, const Matrix& b);

// Plain triple-loop reference kernel, kept serial for tests and benchmarks.
Matrix matmul_serial(const Matrix& a, const Matrix& b);

Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);
Matrix scale(const Matrix& a, double k);

// Explicit row-wise bias add: adds `bias` (length m.cols) to every row.
// There is no implicit broadcasting anywhere in this library.
void add_row_inplace(Matrix& m, std::span<const double> bias);

double sigmoid_scalar(double x);

// Elementwise logistic sigmoid; outputs lie in (0, 1) and saturate smoothly.
Matrix sigmoid(const Matrix& x);

// Elementwise tanh.
Matrix tanh_act(const Matrix& x);

// Row-wise softmax with max-subtraction, so arbitrarily large logits do not
// overflow. Each output row is nonnegative and sums to 1.
Matrix softmax(const Matrix& logits);

// out = W * x + b with W of shape (n, m), x of length m, b and out of
// length n. The inner loop runs in index order; this is the fused kernel the
// LSTM gates and the dense head are built on.
void affine(const Matrix& w, std::span<const double> x, std::span<const double> b,
            std::span<double> out);

// dx[j] += sum_i W(i, j) * dy[i]; the transposed counterpart of affine,
// used by backpropagation. Accumulates into dx.
void affine_transposed_accum(const Matrix& w, std::span<const double> dy,
                             std::span<double> dx);

bool all_finite(const Matrix& m);
bool all_finite(std::span<const double> v);

} // namespace ser

#endif
