#ifndef CVSIM_FOCK_HPP
#define CVSIM_FOCK_HPP

#include <array>
#include <cstddef>
#include <utility>

#include "cvsim/linalg.hpp"

namespace cvsim {

/// Dense operator on one truncated mode (d x d) or a tensor pair
/// (d1*d2 x d1*d2, row index n1*d2 + n2).
struct ModeOperator {
    Matrix matrix;
    int arity = 1;
    std::array<std::size_t, 2> cutoffs{0, 0};

    std::size_t dim() const { return arity == 1 ? cutoffs[0] : cutoffs[0] * cutoffs[1]; }
};

ModeOperator identity_operator(std::size_t cutoff);

/// Ladder operator with entries M[n-1, n] = sqrt(n).
ModeOperator annihilation_matrix(std::size_t cutoff);
ModeOperator creation_matrix(std::size_t cutoff);

/// N = a^dag a, diagonal.
ModeOperator number_operator(std::size_t cutoff);

/// Dimensionless quadratures with hbar = 1: q = (a + a^dag)/sqrt(2),
/// p = -i (a - a^dag)/sqrt(2). [q, p] = i on the subspace n < cutoff-1.
std::pair<ModeOperator, ModeOperator> quadrature_operators(std::size_t cutoff);

/// exp(i * scale * G) for Hermitian G, via spectral decomposition. The result
/// is unitary to machine precision at the build cutoff regardless of scale.
/// Throws if ||G - G^dag||_max >= 1e-10.
ModeOperator hermitian_exponential(const ModeOperator& generator, double scale);

/// Kronecker product acting on the pair index n1*d2 + n2.
ModeOperator tensor_operator(const ModeOperator& a, const ModeOperator& b);

bool is_unitary(const ModeOperator& op, double tol = 1e-10);

}  // namespace cvsim

#endif
