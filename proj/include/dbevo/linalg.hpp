#pragma once

// Dense row-major matrices and the decompositions the analyses are built on.

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace dbevo {

class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    static Matrix identity(std::size_t n);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }

    std::vector<double>& data() noexcept { return data_; }
    const std::vector<double>& data() const noexcept { return data_; }

    std::vector<double> column(std::size_t c) const;
    Matrix transposed() const;
    bool all_finite() const noexcept;

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

Matrix matmul(const Matrix& a, const Matrix& b);
/// aᵀ·b without materializing the transpose.
Matrix matmul_tn(const Matrix& a, const Matrix& b);
double frobenius_norm(const Matrix& m);
double dot(std::span<const double> a, std::span<const double> b);

/// Thin SVD: m (n×d) = u · diag(s) · vᵀ with k = min(n, d).
struct SvdResult {
    Matrix u;
    std::vector<double> s;
    Matrix v;
};

struct SymEigResult {
    std::vector<double> values;  // descending
    Matrix vectors;              // column i pairs with values[i]
};

inline constexpr int kDefaultSweepLimit = 100;

/// One-sided Jacobi (Hestenes) SVD. Singular values are sorted descending; the
/// columns of u belonging to zero singular values are completed to an
/// orthonormal set.
SvdResult svd(const Matrix& m, int max_sweeps = kDefaultSweepLimit);

/// Cyclic Jacobi eigensolver for symmetric matrices. Asymmetry beyond
/// 1e-10 * max(1, max|a_ij|) is rejected.
SymEigResult sym_eig(const Matrix& a, int max_sweeps = kDefaultSweepLimit);

/// Count of values above max(n, d) * machine-epsilon * s[0]. Zero for an
/// all-zero (or empty) spectrum.
std::size_t numerical_rank(std::span<const double> s, std::size_t n, std::size_t d);

} // namespace dbevo
