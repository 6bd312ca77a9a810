#ifndef CVSIM_LINALG_HPP
#define CVSIM_LINALG_HPP

#include <complex>
#include <cstddef>
#include <vector>

namespace cvsim {

using cxd = std::complex<double>;

/// Dense row-major complex matrix. The simulator never needs more than a few
/// thousand rows; heavy operators are assembled from small spectral blocks.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), a_(rows * cols, cxd(0.0, 0.0)) {}

    static Matrix identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    cxd& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
    const cxd& operator()(std::size_t i, std::size_t j) const { return a_[i * cols_ + j]; }

    cxd* data() { return a_.data(); }
    const cxd* data() const { return a_.data(); }

    Matrix adjoint() const;
    Matrix operator*(const Matrix& rhs) const;
    Matrix operator+(const Matrix& rhs) const;
    Matrix operator-(const Matrix& rhs) const;
    Matrix& operator*=(cxd scalar);

    /// max_ij |a_ij|
    double max_abs() const;
    double frobenius_norm() const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<cxd> a_;
};

/// y = M x for a square matrix and a raw amplitude block.
void matvec(const Matrix& m, const cxd* x, cxd* y);

/// Spectral decomposition A = V diag(values) V^dag of a Hermitian matrix,
/// eigenvalues ascending, eigenvectors in the columns of `vectors`.
struct EigenSystem {
    std::vector<double> values;
    Matrix vectors;
};

/// Cyclic Jacobi diagonalization for complex Hermitian matrices. Orthonormality
/// of the returned eigenvectors is machine precision, which is what makes the
/// spectral gate constructions exactly unitary at truncation.
EigenSystem hermitian_eigensystem(const Matrix& a);

/// max_ij |a_ij - conj(a_ji)|
double hermiticity_defect(const Matrix& a);

/// V diag(exp(i*scale*lambda_k)) V^dag
Matrix unitary_from_eigensystem(const EigenSystem& es, double scale);

double max_abs_difference(const Matrix& a, const Matrix& b);

}  // namespace cvsim

#endif
