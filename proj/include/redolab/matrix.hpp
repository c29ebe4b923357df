#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace redolab {

// Dense row-major matrix of 64-bit floats. The only tensor type in the
// library; vectors are 1xN or stored as std::vector<double>.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    const double& operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    double* row_ptr(std::size_t i) { return data.data() + i * cols; }
    const double* row_ptr(std::size_t i) const { return data.data() + i * cols; }

    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
    std::size_t size() const { return data.size(); }

    void fill(double v) { std::fill(data.begin(), data.end(), v); }
};

// out = a (n x k) * b (k x m)
Matrix matmul(const Matrix& a, const Matrix& b);

// out = a^T (k x n -> n rows become cols) * b; a is (k x n), b is (k x m), out (n x m)
Matrix matmul_at_b(const Matrix& a, const Matrix& b);

// out = a (n x k) * b^T; b is (m x k), out (n x m)
Matrix matmul_a_bt(const Matrix& a, const Matrix& b);

Matrix transpose(const Matrix& a);

bool all_finite(const Matrix& a);

inline void check_shape(const Matrix& a, const Matrix& b, const std::string& where) {
    if (!a.same_shape(b))
        throw std::invalid_argument(where + ": shape mismatch " + std::to_string(a.rows) + "x" +
                                    std::to_string(a.cols) + " vs " + std::to_string(b.rows) +
                                    "x" + std::to_string(b.cols));
}

}  // namespace redolab
