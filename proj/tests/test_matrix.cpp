#include <cmath>
#include <cstring>

#include <doctest.h>

#include "ser/matrix.hpp"
#include "ser/rng.hpp"

using namespace ser;

namespace {

Matrix random_matrix(int r, int c, XorShift64& rng, double lo = -1.0, double hi = 1.0) {
    Matrix m(r, c);
    for (double& v : m.data) v = rng.uniform(lo, hi);
    return m;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i)
        worst = std::max(worst, std::abs(a.data[i] - b.data[i]));
    return worst;
}

} // namespace

TEST_CASE("matmul identity") {
    Matrix a = Matrix::from_rows({{1, 2}, {3, 4}});
    Matrix out = matmul(Matrix::identity(2), a);
    CHECK(max_abs_diff(out, a) == 0.0);
}

TEST_CASE("matmul column selection") {
    Matrix a = Matrix::from_rows({{1, 2}, {3, 4}});
    Matrix e1 = Matrix::from_rows({{0}, {1}});
    Matrix out = matmul(a, e1);
    CHECK(out.rows == 2);
    CHECK(out.cols == 1);
    CHECK(out(0, 0) == 2.0);
    CHECK(out(1, 0) == 4.0);
}

TEST_CASE("matmul diagonal scaling") {
    Matrix d = Matrix::from_rows({{2, 0}, {0, 3}});
    Matrix ones = Matrix::from_rows({{1, 1}, {1, 1}});
    Matrix out = matmul(d, ones);
    CHECK(out(0, 0) == 2.0);
    CHECK(out(0, 1) == 2.0);
    CHECK(out(1, 0) == 3.0);
    CHECK(out(1, 1) == 3.0);
}

TEST_CASE("matmul shape mismatch names both shapes") {
    Matrix a(2, 3);
    Matrix b(2, 3);
    try {
        matmul(a, b);
        FAIL("expected ShapeError");
    } catch (const ShapeError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("(2, 3)") != std::string::npos);
    }
}

TEST_CASE("matmul associativity on random matrices") {
    XorShift64 rng(123);
    for (int trial = 0; trial < 20; ++trial) {
        Matrix a = random_matrix(4, 6, rng);
        Matrix b = random_matrix(6, 3, rng);
        Matrix c = random_matrix(3, 5, rng);
        Matrix left = matmul(matmul(a, b), c);
        Matrix right = matmul(a, matmul(b, c));
        for (std::size_t i = 0; i < left.data.size(); ++i) {
            const double denom = std::max(std::abs(left.data[i]), 1.0);
            CHECK(std::abs(left.data[i] - right.data[i]) / denom < 1e-9);
        }
    }
}

TEST_CASE("parallel matmul is bitwise identical to the serial reference") {
    XorShift64 rng(7);
    // big enough to cross the parallel threshold
    Matrix a = random_matrix(80, 70, rng);
    Matrix b = random_matrix(70, 60, rng);
    Matrix p = matmul(a, b);
    Matrix s = matmul_serial(a, b);
    REQUIRE(p.data.size() == s.data.size());
    CHECK(std::memcmp(p.data.data(), s.data.data(), p.data.size() * sizeof(double)) == 0);
}

TEST_CASE("sigmoid basics") {
    Matrix zero(1, 1);
    CHECK(sigmoid(zero)(0, 0) == 0.5);

    // symmetry: sigma(-x) = 1 - sigma(x)
    XorShift64 rng(9);
    for (int i = 0; i < 50; ++i) {
        const double x = rng.uniform(-30.0, 30.0);
        Matrix m = Matrix::from_rows({{x, -x}});
        Matrix s = sigmoid(m);
        CHECK(s(0, 0) + s(0, 1) == doctest::Approx(1.0).epsilon(1e-14));
    }

    Matrix big = Matrix::from_rows({{40.0}});
    CHECK(std::abs(sigmoid(big)(0, 0) - 1.0) < 1e-12);
    Matrix very_negative = Matrix::from_rows({{-745.0}});
    CHECK(sigmoid(very_negative)(0, 0) >= 0.0); // smooth saturation, no overflow
}

TEST_CASE("tanh basics") {
    Matrix zero(1, 1);
    CHECK(tanh_act(zero)(0, 0) == 0.0);
    XorShift64 rng(11);
    for (int i = 0; i < 50; ++i) {
        const double x = rng.uniform(-20.0, 20.0);
        Matrix m = Matrix::from_rows({{x}});
        Matrix n = Matrix::from_rows({{-x}});
        CHECK(tanh_act(m)(0, 0) == -tanh_act(n)(0, 0));
    }
    Matrix big = Matrix::from_rows({{40.0}});
    CHECK(std::abs(tanh_act(big)(0, 0) - 1.0) < 1e-12);
}

TEST_CASE("softmax uniform and shift invariance") {
    Matrix zeros(1, 8);
    Matrix u = softmax(zeros);
    for (int c = 0; c < 8; ++c) CHECK(u(0, c) == doctest::Approx(0.125).epsilon(1e-15));

    XorShift64 rng(13);
    Matrix logits = random_matrix(1, 8, rng, -5.0, 5.0);
    Matrix shifted = logits;
    for (double& v : shifted.data) v += 123.456;
    CHECK(max_abs_diff(softmax(logits), softmax(shifted)) < 1e-12);
}

TEST_CASE("softmax survives huge logits") {
    Matrix logits = Matrix::from_rows({{1000.0, 0.0}});
    Matrix p = softmax(logits);
    CHECK(all_finite(p));
    CHECK(p(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(p(0, 1) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("softmax rows sum to one across extreme ranges") {
    XorShift64 rng(17);
    for (int trial = 0; trial < 100; ++trial) {
        Matrix logits = random_matrix(3, 8, rng, -1000.0, 1000.0);
        Matrix p = softmax(logits);
        for (int r = 0; r < p.rows; ++r) {
            double sum = 0.0;
            for (int c = 0; c < p.cols; ++c) {
                CHECK(p(r, c) >= 0.0);
                sum += p(r, c);
            }
            CHECK(std::abs(sum - 1.0) < 1e-12);
        }
    }
}

// The BPTT derivation leans on these derivative identities; verify them
// against central finite differences.
TEST_CASE("sigmoid and tanh derivative identities vs finite differences") {
    XorShift64 rng(19);
    const double h = 1e-6;
    for (int i = 0; i < 200; ++i) {
        const double x = rng.uniform(-4.0, 4.0);

        const double s = sigmoid_scalar(x);
        const double ds_analytic = s * (1.0 - s);
        const double ds_numeric = (sigmoid_scalar(x + h) - sigmoid_scalar(x - h)) / (2 * h);
        CHECK(std::abs(ds_analytic - ds_numeric) /
                  std::max({std::abs(ds_analytic), std::abs(ds_numeric), 1e-12}) <
              1e-7);

        const double t = std::tanh(x);
        const double dt_analytic = 1.0 - t * t;
        const double dt_numeric = (std::tanh(x + h) - std::tanh(x - h)) / (2 * h);
        CHECK(std::abs(dt_analytic - dt_numeric) /
                  std::max({std::abs(dt_analytic), std::abs(dt_numeric), 1e-12}) <
              1e-7);
    }
}

TEST_CASE("explicit row-wise bias add, no broadcasting") {
    Matrix m = Matrix::from_rows({{1, 2}, {3, 4}});
    const std::vector<double> bias{10, 20};
    add_row_inplace(m, bias);
    CHECK(m(0, 0) == 11.0);
    CHECK(m(1, 1) == 24.0);

    const std::vector<double> wrong{1.0, 2.0, 3.0};
    CHECK_THROWS_AS(add_row_inplace(m, wrong), ShapeError);
}

TEST_CASE("matrix construction guards") {
    CHECK_THROWS_AS(Matrix(0, 3), ShapeError);
    CHECK_THROWS_AS(Matrix(2, 2, std::vector<double>{1.0, 2.0, 3.0}), ShapeError);
}

TEST_CASE("affine and its transpose agree with matmul") {
    XorShift64 rng(23);
    Matrix w = random_matrix(5, 7, rng);
    Matrix x = random_matrix(7, 1, rng);
    Matrix b = random_matrix(5, 1, rng);

    std::vector<double> out(5);
    affine(w, std::span<const double>(x.data), std::span<const double>(b.data), out);
    Matrix expect = add(matmul(w, x), b);
    for (int i = 0; i < 5; ++i) CHECK(out[i] == doctest::Approx(expect(i, 0)).epsilon(1e-14));

    std::vector<double> dx(7, 0.0);
    std::vector<double> dy(5);
    for (int i = 0; i < 5; ++i) dy[static_cast<std::size_t>(i)] = rng.uniform(-1, 1);
    affine_transposed_accum(w, dy, dx);
    Matrix dy_m(1, 5, std::vector<double>(dy));
    Matrix expect_dx = matmul(dy_m, w);
    for (int j = 0; j < 7; ++j)
        CHECK(dx[static_cast<std::size_t>(j)] ==
              doctest::Approx(expect_dx(0, j)).epsilon(1e-14));
}
