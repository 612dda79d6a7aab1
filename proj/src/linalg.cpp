#include "dbevo/linalg.hpp"

#include "dbevo/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace dbevo {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
// Pairs whose normalized inner product is below this are treated as orthogonal.
constexpr double kJacobiTol = 4.0 * kEps;

std::string shape_str(const Matrix& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

// Applies the plane rotation [c s; -s c] to the pair (x, y) elementwise.
void rotate(std::span<double> x, std::span<double> y, double c, double s) noexcept {
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double xk = x[k];
        const double yk = y[k];
        x[k] = c * xk - s * yk;
        y[k] = s * xk + c * yk;
    }
}

// Fills the rows of `basis` flagged in `missing` with unit vectors orthogonal to
// every other row. `basis` is k×n with k ≤ n.
void complete_orthonormal(Matrix& basis, const std::vector<bool>& missing) {
    const std::size_t k = basis.rows();
    const std::size_t n = basis.cols();
    std::size_t candidate = 0;
    for (std::size_t i = 0; i < k; ++i) {
        if (!missing[i]) {
            continue;
        }
        auto target = basis.row(i);
        bool placed = false;
        while (!placed && candidate < n) {
            std::fill(target.begin(), target.end(), 0.0);
            target[candidate++] = 1.0;
            // Two Gram-Schmidt passes keep the result orthogonal to rounding level.
            for (int pass = 0; pass < 2; ++pass) {
                for (std::size_t j = 0; j < k; ++j) {
                    if (j == i || (missing[j] && j > i)) {
                        continue;
                    }
                    const auto other = basis.row(j);
                    const double proj = dot(target, other);
                    for (std::size_t c = 0; c < n; ++c) {
                        target[c] -= proj * other[c];
                    }
                }
            }
            const double norm = std::sqrt(dot(target, target));
            if (norm > 0.5) {
                for (double& x : target) {
                    x /= norm;
                }
                placed = true;
            }
        }
        if (!placed) {
            fail(Errc::NoConvergence, "could not complete orthonormal basis");
        }
    }
}

// Core one-sided Jacobi for n ≥ d. Works on columns stored as rows of `cols`.
SvdResult svd_tall(const Matrix& m, int max_sweeps) {
    const std::size_t n = m.rows();
    const std::size_t d = m.cols();
    Matrix w = m.transposed();      // d×n, row i is column i of m
    Matrix vt = Matrix::identity(d); // row i is column i of v

    bool converged = false;
    for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
        converged = true;
        for (std::size_t p = 0; p + 1 < d; ++p) {
            for (std::size_t q = p + 1; q < d; ++q) {
                auto wp = w.row(p);
                auto wq = w.row(q);
                const double alpha = dot(wp, wp);
                const double beta = dot(wq, wq);
                const double gamma = dot(wp, wq);
                if (alpha == 0.0 || beta == 0.0 || gamma == 0.0) {
                    continue;
                }
                if (std::abs(gamma) <= kJacobiTol * std::sqrt(alpha) * std::sqrt(beta)) {
                    continue;
                }
                converged = false;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::hypot(1.0, zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                rotate(wp, wq, c, s);
                rotate(vt.row(p), vt.row(q), c, s);
            }
        }
    }
    if (!converged) {
        fail(Errc::NoConvergence, "one-sided Jacobi exceeded " + std::to_string(max_sweeps) + " sweeps");
    }

    std::vector<double> norms(d);
    for (std::size_t i = 0; i < d; ++i) {
        norms[i] = std::sqrt(dot(w.row(i), w.row(i)));
    }
    std::vector<std::size_t> order(d);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return norms[a] > norms[b]; });

    Matrix ut(d, n);
    Matrix v(d, d);
    std::vector<double> s(d);
    std::vector<bool> missing(d, false);
    for (std::size_t r = 0; r < d; ++r) {
        const std::size_t src = order[r];
        s[r] = norms[src];
        if (s[r] < std::numeric_limits<double>::min()) {
            missing[r] = true;
        } else {
            const auto col = w.row(src);
            auto dst = ut.row(r);
            for (std::size_t k = 0; k < n; ++k) {
                dst[k] = col[k] / s[r];
            }
        }
        for (std::size_t k = 0; k < d; ++k) {
            v(k, r) = vt(src, k);
        }
    }
    if (std::any_of(missing.begin(), missing.end(), [](bool b) { return b; })) {
        complete_orthonormal(ut, missing);
    }
    return {ut.transposed(), std::move(s), std::move(v)};
}

} // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
        fail(Errc::ShapeMismatch, "data length " + std::to_string(data_.size()) + " != " +
                                      std::to_string(rows_) + "x" + std::to_string(cols_));
    }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) {
            fail(Errc::ShapeMismatch, "ragged initializer list");
        }
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        m(i, i) = 1.0;
    }
    return m;
}

std::vector<double> Matrix::column(std::size_t c) const {
    std::vector<double> out(rows_);
    for (std::size_t r = 0; r < rows_; ++r) {
        out[r] = (*this)(r, c);
    }
    return out;
}

Matrix Matrix::transposed() const {
    Matrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r) {
        for (std::size_t c = 0; c < cols_; ++c) {
            t(c, r) = (*this)(r, c);
        }
    }
    return t;
}

bool Matrix::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        fail(Errc::ShapeMismatch, "matmul " + shape_str(a) + " * " + shape_str(b));
    }
    Matrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto dst = out.row(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            const auto brow = b.row(k);
            for (std::size_t j = 0; j < b.cols(); ++j) {
                dst[j] += aik * brow[j];
            }
        }
    }
    return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) {
        fail(Errc::ShapeMismatch, "matmul_tn " + shape_str(a) + "^T * " + shape_str(b));
    }
    Matrix out(a.cols(), b.cols());
    for (std::size_t k = 0; k < a.rows(); ++k) {
        const auto arow = a.row(k);
        const auto brow = b.row(k);
        for (std::size_t i = 0; i < a.cols(); ++i) {
            const double aki = arow[i];
            auto dst = out.row(i);
            for (std::size_t j = 0; j < b.cols(); ++j) {
                dst[j] += aki * brow[j];
            }
        }
    }
    return out;
}

double frobenius_norm(const Matrix& m) {
    double acc = 0.0;
    for (double x : m.data()) {
        acc += x * x;
    }
    return std::sqrt(acc);
}

double dot(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        acc += a[i] * b[i];
    }
    return acc;
}

SvdResult svd(const Matrix& m, int max_sweeps) {
    if (m.rows() == 0 || m.cols() == 0) {
        fail(Errc::InvalidArgument, "svd of empty " + shape_str(m) + " matrix");
    }
    if (!m.all_finite()) {
        fail(Errc::NonFinite, "svd input contains NaN or Inf");
    }
    if (m.rows() >= m.cols()) {
        return svd_tall(m, max_sweeps);
    }
    SvdResult t = svd_tall(m.transposed(), max_sweeps);
    return {std::move(t.v), std::move(t.s), std::move(t.u)};
}

SymEigResult sym_eig(const Matrix& a, int max_sweeps) {
    if (a.rows() != a.cols()) {
        fail(Errc::ShapeMismatch, "sym_eig needs a square matrix, got " + shape_str(a));
    }
    if (!a.all_finite()) {
        fail(Errc::NonFinite, "sym_eig input contains NaN or Inf");
    }
    const std::size_t n = a.rows();
    double max_abs = 0.0;
    for (double x : a.data()) {
        max_abs = std::max(max_abs, std::abs(x));
    }
    const double sym_tol = 1e-10 * std::max(1.0, max_abs);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (std::abs(a(i, j) - a(j, i)) > sym_tol) {
                fail(Errc::NotSymmetric, "entry (" + std::to_string(i) + "," + std::to_string(j) +
                                             ") differs from its transpose");
            }
        }
    }

    // Work on the symmetrized copy; rotations act on row/column pairs.
    Matrix w(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            w(i, j) = 0.5 * (a(i, j) + a(j, i));
        }
    }
    Matrix vt = Matrix::identity(n);
    const double floor = kEps * kEps * frobenius_norm(w);

    bool converged = n < 2;
    for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
        converged = true;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = w(p, q);
                if (std::abs(apq) <= floor ||
                    std::abs(apq) <= kEps * std::sqrt(std::abs(w(p, p) * w(q, q)))) {
                    continue;
                }
                converged = false;
                const double theta = (w(q, q) - w(p, p)) / (2.0 * apq);
                const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::hypot(1.0, theta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                // Columns p, q.
                for (std::size_t k = 0; k < n; ++k) {
                    const double wkp = w(k, p);
                    const double wkq = w(k, q);
                    w(k, p) = c * wkp - s * wkq;
                    w(k, q) = s * wkp + c * wkq;
                }
                // Rows p, q.
                rotate(w.row(p), w.row(q), c, s);
                w(p, q) = 0.0;
                w(q, p) = 0.0;
                rotate(vt.row(p), vt.row(q), c, s);
            }
        }
    }
    if (!converged) {
        fail(Errc::NoConvergence, "Jacobi eigensolver exceeded " + std::to_string(max_sweeps) + " sweeps");
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return w(x, x) > w(y, y); });
    SymEigResult out{std::vector<double>(n), Matrix(n, n)};
    for (std::size_t r = 0; r < n; ++r) {
        out.values[r] = w(order[r], order[r]);
        for (std::size_t k = 0; k < n; ++k) {
            out.vectors(k, r) = vt(order[r], k);
        }
    }
    return out;
}

std::size_t numerical_rank(std::span<const double> s, std::size_t n, std::size_t d) {
    if (s.empty() || !(s[0] > 0.0)) {
        return 0;
    }
    const double threshold = static_cast<double>(std::max(n, d)) * kEps * s[0];
    return static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [&](double x) { return x > threshold; }));
}

} // namespace dbevo
