#include <doctest.h>

#include <cmath>

#include "cvsim/linalg.hpp"
#include "cvsim/rng.hpp"

using namespace cvsim;

TEST_CASE("hermitian eigensystem of a known 2x2") {
    // [[1, i], [-i, 1]] has eigenvalues 0 and 2.
    Matrix a(2, 2);
    a(0, 0) = 1.0;
    a(0, 1) = cxd(0.0, 1.0);
    a(1, 0) = cxd(0.0, -1.0);
    a(1, 1) = 1.0;
    EigenSystem es = hermitian_eigensystem(a);
    CHECK(es.values[0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(es.values[1] == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("random hermitian matrices reconstruct and diagonalize") {
    Rng rng(12345);
    for (int rep = 0; rep < 5; ++rep) {
        const std::size_t n = 24;
        Matrix a(n, n);
        for (std::size_t i = 0; i < n; ++i) {
            a(i, i) = rng.gaussian();
            for (std::size_t j = i + 1; j < n; ++j) {
                const cxd v(rng.gaussian(), rng.gaussian());
                a(i, j) = v;
                a(j, i) = std::conj(v);
            }
        }
        EigenSystem es = hermitian_eigensystem(a);

        // eigenvector orthonormality
        Matrix vv = es.vectors.adjoint() * es.vectors;
        CHECK(max_abs_difference(vv, Matrix::identity(n)) < 1e-12);

        // A = V diag V^dag
        Matrix scaled = es.vectors;
        for (std::size_t k = 0; k < n; ++k)
            for (std::size_t i = 0; i < n; ++i) scaled(i, k) *= es.values[k];
        CHECK(max_abs_difference(scaled * es.vectors.adjoint(), a) < 1e-11);

        // eigenvalues ascending
        for (std::size_t k = 0; k + 1 < n; ++k) CHECK(es.values[k] <= es.values[k + 1]);
    }
}

TEST_CASE("unitary_from_eigensystem produces unitaries for any scale") {
    Rng rng(99);
    const std::size_t n = 16;
    Matrix a(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        a(i, i) = rng.gaussian();
        for (std::size_t j = i + 1; j < n; ++j) {
            const cxd v(rng.gaussian(), rng.gaussian());
            a(i, j) = v;
            a(j, i) = std::conj(v);
        }
    }
    EigenSystem es = hermitian_eigensystem(a);
    for (double scale : {0.0, 1.0, -2.5, 40.0}) {
        Matrix u = unitary_from_eigensystem(es, scale);
        CHECK(max_abs_difference(u.adjoint() * u, Matrix::identity(n)) < 1e-12);
    }
}

TEST_CASE("hermiticity defect flags non-hermitian input") {
    Matrix a(2, 2);
    a(0, 1) = 1.0;
    CHECK(hermiticity_defect(a) == doctest::Approx(1.0));
    CHECK_THROWS(hermitian_eigensystem(Matrix(2, 3)));
}
