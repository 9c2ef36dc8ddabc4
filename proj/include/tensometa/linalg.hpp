#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace tensometa::linalg {

/// Dense row-major real matrix.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix identity(std::size_t n);

    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t cols() const noexcept { return cols_; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    [[nodiscard]] std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    [[nodiscard]] std::span<const double> row(std::size_t r) const {
        return {data_.data() + r * cols_, cols_};
    }

    [[nodiscard]] std::vector<double>& data() noexcept { return data_; }
    [[nodiscard]] const std::vector<double>& data() const noexcept { return data_; }

    [[nodiscard]] Matrix transpose() const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

[[nodiscard]] Matrix multiply(const Matrix& a, const Matrix& b);
/// a * a^T
[[nodiscard]] Matrix gram_rows(const Matrix& a);
[[nodiscard]] std::vector<double> multiply(const Matrix& a, std::span<const double> x);
/// x^T * a
[[nodiscard]] std::vector<double> left_multiply(std::span<const double> x, const Matrix& a);

[[nodiscard]] double dot(std::span<const double> a, std::span<const double> b);
[[nodiscard]] double norm2(std::span<const double> a);
[[nodiscard]] double frobenius(const Matrix& a);
[[nodiscard]] double max_asymmetry(const Matrix& a);

struct SymmetricEigen {
    std::vector<double> values;  // ascending
    Matrix vectors;              // column j pairs with values[j]; empty if not requested
    std::size_t sweeps = 0;
};

/// Cyclic Jacobi rotations until the off-diagonal Frobenius norm drops to
/// `off_tol`. Input must be square; symmetry is the caller's contract.
[[nodiscard]] SymmetricEigen jacobi_eigen(const Matrix& sym, bool want_vectors = false,
                                          double off_tol = 1e-12, std::size_t max_sweeps = 100);

struct Svd {
    Matrix u;                    // m x k
    std::vector<double> sigma;   // k, descending
    Matrix v;                    // n x k
};

/// Thin SVD by one-sided (Hestenes) Jacobi; k = min(m, n).
[[nodiscard]] Svd jacobi_svd(const Matrix& a, double tol = 1e-15, std::size_t max_sweeps = 80);

/// Solves a x = b by Gaussian elimination with partial pivoting. Returns an
/// empty vector when a pivot falls below `singular_tol`.
[[nodiscard]] std::vector<double> solve(Matrix a, std::vector<double> b,
                                        double singular_tol = 1e-300);

} // namespace tensometa::linalg
