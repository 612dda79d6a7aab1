#include "dbevo/error.hpp"
#include "dbevo/linalg.hpp"
#include "dbevo/rng.hpp"
#include "support/oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace dbevo;

namespace {

Matrix reconstruct(const SvdResult& r) {
    Matrix us = r.u;
    for (std::size_t i = 0; i < us.rows(); ++i) {
        for (std::size_t k = 0; k < us.cols(); ++k) {
            us(i, k) *= r.s[k];
        }
    }
    return oracle::naive_matmul(us, r.v.transposed());
}

double orthonormality_error(const Matrix& q) {
    const Matrix g = oracle::naive_matmul(q.transposed(), q);
    double worst = 0.0;
    for (std::size_t i = 0; i < g.rows(); ++i) {
        for (std::size_t j = 0; j < g.cols(); ++j) {
            worst = std::max(worst, std::abs(g(i, j) - (i == j ? 1.0 : 0.0)));
        }
    }
    return worst;
}

double rel_diff(const Matrix& a, const Matrix& b) {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        num += (a.data()[k] - b.data()[k]) * (a.data()[k] - b.data()[k]);
        den += b.data()[k] * b.data()[k];
    }
    return den == 0.0 ? std::sqrt(num) : std::sqrt(num / den);
}

} // namespace

TEST_CASE("matrix construction checks sizes") {
    CHECK_THROWS_AS(Matrix(2, 2, std::vector<double>{1, 2, 3}), Error);
    const Matrix m{{1, 2}, {3, 4}, {5, 6}};
    CHECK(m.rows() == 3);
    CHECK(m.cols() == 2);
    CHECK(m(2, 1) == 6);
    CHECK(m.transposed()(1, 2) == 6);
    CHECK(m.column(0) == std::vector<double>{1, 3, 5});
}

TEST_CASE("matmul agrees with the triple loop") {
    Rng rng(3);
    const Matrix a = oracle::random_matrix(rng, 5, 4);
    const Matrix b = oracle::random_matrix(rng, 4, 3);
    CHECK(rel_diff(matmul(a, b), oracle::naive_matmul(a, b)) < 1e-14);
    CHECK(rel_diff(matmul_tn(a, a), oracle::naive_gram(a)) < 1e-14);
    CHECK_THROWS_AS(matmul(a, a), Error);
}

TEST_CASE("svd of small known matrices") {
    SUBCASE("diagonal") {
        const auto r = svd(Matrix{{3, 0}, {0, 1}});
        CHECK(r.s[0] == doctest::Approx(3.0).epsilon(1e-15));
        CHECK(r.s[1] == doctest::Approx(1.0).epsilon(1e-15));
    }
    SUBCASE("rank one") {
        const auto r = svd(Matrix{{1, 1}, {1, 1}});
        CHECK(r.s[0] == doctest::Approx(2.0).epsilon(1e-15));
        CHECK(std::abs(r.s[1]) < 1e-15);
        CHECK(orthonormality_error(r.u) < 1e-12);
    }
    SUBCASE("wide matrix") {
        const Matrix m{{1, 2, 3}, {4, 5, 6}};
        const auto r = svd(m);
        CHECK(r.u.rows() == 2);
        CHECK(r.v.rows() == 3);
        CHECK(r.s.size() == 2);
        CHECK(rel_diff(reconstruct(r), m) < 1e-14);
    }
    SUBCASE("zero matrix") {
        const auto r = svd(Matrix(3, 2));
        CHECK(r.s == std::vector<double>{0.0, 0.0});
        CHECK(orthonormality_error(r.u) < 1e-12);
        CHECK(orthonormality_error(r.v) < 1e-12);
    }
}

TEST_CASE("svd singular values match the Gram-matrix eigen oracle") {
    Rng rng(11);
    const Matrix m = oracle::random_matrix(rng, 6, 4);
    const auto r = svd(m);
    const auto eig = oracle::sym_eigenvalues(oracle::naive_gram(m));
    for (std::size_t k = 0; k < 4; ++k) {
        CHECK(std::abs(r.s[k] - std::sqrt(eig[k])) <= 1e-8 * r.s[0]);
    }
}

TEST_CASE("svd invariants on seeded shapes") {
    Rng rng(5);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t n = 1 + rng.below(12);
        const std::size_t d = 1 + rng.below(12);
        const Matrix m = oracle::random_matrix(rng, n, d);
        const auto r = svd(m);
        CHECK(std::is_sorted(r.s.rbegin(), r.s.rend()));
        CHECK(r.s.back() >= 0.0);
        CHECK(rel_diff(reconstruct(r), m) <= 1e-8);
        CHECK(orthonormality_error(r.u) <= 1e-9);
        CHECK(orthonormality_error(r.v) <= 1e-9);
    }
}

TEST_CASE("svd is deterministic") {
    Rng rng(17);
    const Matrix m = oracle::random_matrix(rng, 9, 5);
    const auto a = svd(m);
    const auto b = svd(m);
    CHECK(a.s == b.s);
    CHECK(a.u == b.u);
    CHECK(a.v == b.v);
}

TEST_CASE("svd error paths") {
    Matrix bad{{1, 2}, {3, 4}};
    bad(0, 1) = std::numeric_limits<double>::quiet_NaN();
    try {
        svd(bad);
        FAIL("expected NonFinite");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::NonFinite);
        CHECK(std::string(e.what()).find("NonFinite") == 0);
    }
    Rng rng(2);
    const Matrix m = oracle::random_matrix(rng, 8, 8);
    try {
        svd(m, 1);
        FAIL("expected NoConvergence");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::NoConvergence);
    }
    CHECK_THROWS_AS(svd(Matrix()), Error);
}

TEST_CASE("sym_eig known values and eigenpairs") {
    auto ident = sym_eig(Matrix::identity(3));
    CHECK(ident.values == std::vector<double>{1, 1, 1});

    auto r1 = sym_eig(Matrix{{2, 2}, {2, 2}});
    CHECK(r1.values[0] == doctest::Approx(4.0).epsilon(1e-15));
    CHECK(std::abs(r1.values[1]) < 1e-15);

    Rng rng(9);
    const Matrix phi = oracle::random_matrix(rng, 5, 3);
    const Matrix a = oracle::naive_gram(phi);
    const auto e = sym_eig(a);
    const auto s = svd(phi);
    for (std::size_t k = 0; k < 3; ++k) {
        CHECK(std::abs(e.values[k] - s.s[k] * s.s[k]) <= 1e-8 * e.values[0]);
        // A v = lambda v
        for (std::size_t i = 0; i < 3; ++i) {
            double av = 0.0;
            for (std::size_t j = 0; j < 3; ++j) {
                av += a(i, j) * e.vectors(j, k);
            }
            CHECK(std::abs(av - e.values[k] * e.vectors(i, k)) <= 1e-8 * e.values[0]);
        }
    }
}

TEST_CASE("sym_eig error paths") {
    try {
        sym_eig(Matrix{{1, 2}, {2.1, 1}});
        FAIL("expected NotSymmetric");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::NotSymmetric);
    }
    try {
        sym_eig(Matrix(2, 3));
        FAIL("expected ShapeMismatch");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::ShapeMismatch);
    }
    // Asymmetry within tolerance is accepted.
    CHECK_NOTHROW(sym_eig(Matrix{{1, 2}, {2 + 1e-12, 1}}));
}

TEST_CASE("numerical rank") {
    const std::vector<double> a{4, 0};
    CHECK(numerical_rank(a, 2, 2) == 1);
    const std::vector<double> tiny{1e-300, 0};
    CHECK(numerical_rank(tiny, 2, 2) == 1);
    const std::vector<double> zero{0, 0};
    CHECK(numerical_rank(zero, 2, 2) == 0);
    CHECK(numerical_rank(std::vector<double>{}, 0, 0) == 0);

    // 20×8 with 5 independent columns and 3 exact duplicates.
    Rng rng(21);
    const Matrix base = oracle::random_matrix(rng, 20, 5);
    Matrix m(20, 8);
    for (std::size_t r = 0; r < 20; ++r) {
        for (std::size_t c = 0; c < 5; ++c) {
            m(r, c) = base(r, c);
        }
        m(r, 5) = base(r, 0);
        m(r, 6) = base(r, 2);
        m(r, 7) = base(r, 4);
    }
    CHECK(numerical_rank(svd(m).s, 20, 8) == 5);
    CHECK(numerical_rank(sym_eig(matmul_tn(m, m)).values, 20, 8) == 5);
}

TEST_CASE("eigen oracle self-check on a known matrix") {
    const auto v = oracle::sym_eigenvalues(Matrix{{2, 1, 0}, {1, 2, 1}, {0, 1, 2}});
    CHECK(v[0] == doctest::Approx(2 + std::sqrt(2.0)).epsilon(1e-13));
    CHECK(v[1] == doctest::Approx(2.0).epsilon(1e-13));
    CHECK(v[2] == doctest::Approx(2 - std::sqrt(2.0)).epsilon(1e-13));
}
