#include <cmath>
#include <random>

#include <doctest.h>

#include "kbes/numkernel.hpp"
#include "test_util.hpp"

using namespace kbes;

TEST_CASE("kron of small matrices") {
    ComplexMatrix a(2, 2), b(2, 2);
    a << 1, 2, 3, 4;
    b << 0, 5, 6, 7;
    const ComplexMatrix k = kron(a, b);
    ComplexMatrix expected(4, 4);
    // clang-format off
    expected << 0,  5,  0, 10,
                6,  7, 12, 14,
                0, 15,  0, 20,
               18, 21, 24, 28;
    // clang-format on
    CHECK(max_abs(k - expected) == 0.0);

    ComplexMatrix row(1, 2);
    row << 1, cplx(0, 1);
    CHECK(kron(row, identity(3)).rows() == 3);
    CHECK(kron(row, identity(3)).cols() == 6);
}

TEST_CASE("kron mixed-product property") {
    std::mt19937_64 rng(7);
    const auto a = test::random_matrix(2, 3, rng);
    const auto b = test::random_matrix(3, 2, rng);
    const auto c = test::random_matrix(3, 2, rng);
    const auto d = test::random_matrix(2, 3, rng);
    const ComplexMatrix lhs = kron(a, b) * kron(c, d);
    const ComplexMatrix rhs = kron(a * c, b * d);
    CHECK(max_abs(lhs - rhs) < 1e-12);
}

TEST_CASE("expm of a nilpotent matrix is a finite series") {
    ComplexMatrix n = ComplexMatrix::Zero(3, 3);
    n(0, 1) = 2.0;
    n(1, 2) = cplx(0, 3);
    ComplexMatrix expected = identity(3) + n + 0.5 * n * n;
    CHECK(max_abs(expm(n) - expected) < 1e-15);
}

TEST_CASE("expm of zero and of a diagonal") {
    CHECK(max_abs(expm(ComplexMatrix::Zero(4, 4)) - identity(4)) == 0.0);
    ComplexMatrix d = ComplexMatrix::Zero(3, 3);
    d(0, 0) = cplx(-1.0, 2.0);
    d(1, 1) = 30.0;
    d(2, 2) = cplx(0.0, -7.0);
    const ComplexMatrix e = expm(d);
    for (int i = 0; i < 3; ++i) {
        CHECK(std::abs(e(i, i) - std::exp(d(i, i))) <= 1e-14 * std::abs(std::exp(d(i, i))));
    }
}

TEST_CASE("expm agrees with eigendecomposition and inverse") {
    std::mt19937_64 rng(11);
    const double scales[] = {0.01, 0.1, 1.0, 3.0, 8.0};
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::Index n = 2 + trial % 7;
        const ComplexMatrix m = scales[trial % 5] * test::random_matrix(n, n, rng);
        const auto dec = eig_general(m);
        REQUIRE(dec.diagonalizable);
        const ComplexMatrix& v = dec.right_eigenvectors;
        const ComplexMatrix via_eig =
            v * dec.eigenvalues.array().exp().matrix().asDiagonal() * v.inverse();
        const ComplexMatrix e = expm(m);
        const ComplexMatrix e_inv = expm(-m);
        // Rounding in each comparison is bounded by the conditioning of its operands.
        CHECK(max_abs(e - via_eig) < 1e-12 * dec.condition_estimate * std::max(1.0, norm1(e)));
        CHECK(max_abs(e * e_inv - identity(n)) < 1e-12 * std::max(1.0, norm1(e) * norm1(e_inv)));
        // Squaring identity exp(2M) = exp(M)².
        CHECK(max_abs(expm(2.0 * m) - e * e) < 1e-12 * std::max(1.0, norm1(e) * norm1(e)));
    }
}

TEST_CASE("expm of a rotation generator") {
    ComplexMatrix g = ComplexMatrix::Zero(2, 2);
    const double theta = 100.0;
    g(0, 1) = -theta;
    g(1, 0) = theta;
    const ComplexMatrix r = expm(g);
    CHECK(std::abs(r(0, 0) - std::cos(theta)) < 1e-12);
    CHECK(std::abs(r(1, 0) - std::sin(theta)) < 1e-12);
}

TEST_CASE("expm rejects bad input") {
    CHECK_THROWS_AS(expm(ComplexMatrix::Zero(2, 3)), DimensionError);
    ComplexMatrix bad = identity(2);
    bad(0, 1) = std::nan("");
    CHECK_THROWS_AS(expm(bad), std::invalid_argument);
}

TEST_CASE("eig_general normalizes and reconstructs") {
    std::mt19937_64 rng(3);
    const auto m = test::random_matrix(5, 5, rng);
    const auto dec = eig_general(m);
    for (Eigen::Index j = 0; j < 5; ++j) {
        CHECK(std::abs(dec.right_eigenvectors.col(j).norm() - 1.0) < 1e-12);
        const ComplexVector r =
            m * dec.right_eigenvectors.col(j) - dec.eigenvalues(j) * dec.right_eigenvectors.col(j);
        CHECK(r.norm() < 1e-10);
    }
    CHECK(dec.condition_estimate >= 1.0);
}

TEST_CASE("eig_general flags a Jordan block") {
    ComplexMatrix j(2, 2);
    j << 1.0, 1.0, 0.0, 1.0;
    const auto dec = eig_general(j);
    CHECK_FALSE(dec.diagonalizable);
    CHECK(dec.condition_estimate > kDefectiveCondition);
}

TEST_CASE("nullspace dimension and content") {
    ComplexMatrix m(3, 3);
    m << 1, 2, 3, 2, 4, 6, 1, 1, 1;
    const auto basis = nullspace(m, 1e-12);
    REQUIRE(basis.size() == 1);
    CHECK((m * basis[0]).norm() < 1e-12);
    CHECK(std::abs(basis[0].norm() - 1.0) < 1e-12);

    CHECK(nullspace(identity(4), 1e-12).empty());
    CHECK(nullspace(ComplexMatrix::Zero(3, 3), 1e-12).size() == 3);
}

TEST_CASE("norms and defects") {
    ComplexMatrix m(2, 2);
    m << 1, cplx(0, -2), 3, 4;
    CHECK(norm1(m) == doctest::Approx(6.0));
    CHECK(max_abs(m) == doctest::Approx(4.0));
    CHECK(hermiticity_defect(m) == doctest::Approx(std::abs(cplx(0, -2) - 3.0)));
    ComplexMatrix h(2, 2);
    h << 2, 0, 0, -3;
    CHECK(spectral_norm(h) == doctest::Approx(3.0));
}
