#include "cvsim/fock.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace cvsim {

namespace {
void require_cutoff(std::size_t cutoff) {
    if (cutoff < 2)
        throw std::invalid_argument("cutoff must be >= 2, got " + std::to_string(cutoff));
}
}  // namespace

ModeOperator identity_operator(std::size_t cutoff) {
    require_cutoff(cutoff);
    return ModeOperator{Matrix::identity(cutoff), 1, {cutoff, 0}};
}

ModeOperator annihilation_matrix(std::size_t cutoff) {
    require_cutoff(cutoff);
    Matrix m(cutoff, cutoff);
    for (std::size_t n = 1; n < cutoff; ++n) m(n - 1, n) = std::sqrt(static_cast<double>(n));
    return ModeOperator{std::move(m), 1, {cutoff, 0}};
}

ModeOperator creation_matrix(std::size_t cutoff) {
    ModeOperator a = annihilation_matrix(cutoff);
    return ModeOperator{a.matrix.adjoint(), 1, {cutoff, 0}};
}

ModeOperator number_operator(std::size_t cutoff) {
    require_cutoff(cutoff);
    Matrix m(cutoff, cutoff);
    for (std::size_t n = 0; n < cutoff; ++n) m(n, n) = static_cast<double>(n);
    return ModeOperator{std::move(m), 1, {cutoff, 0}};
}

std::pair<ModeOperator, ModeOperator> quadrature_operators(std::size_t cutoff) {
    require_cutoff(cutoff);
    Matrix q(cutoff, cutoff), p(cutoff, cutoff);
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    for (std::size_t n = 0; n + 1 < cutoff; ++n) {
        const double r = std::sqrt(static_cast<double>(n + 1)) * inv_sqrt2;
        q(n, n + 1) = r;
        q(n + 1, n) = r;
        p(n, n + 1) = cxd(0.0, -r);
        p(n + 1, n) = cxd(0.0, r);
    }
    return {ModeOperator{std::move(q), 1, {cutoff, 0}},
            ModeOperator{std::move(p), 1, {cutoff, 0}}};
}

ModeOperator hermitian_exponential(const ModeOperator& generator, double scale) {
    const double defect = hermiticity_defect(generator.matrix);
    if (defect >= 1e-10)
        throw std::invalid_argument(
            "hermitian_exponential: generator is not Hermitian (defect " +
            std::to_string(defect) + ")");
    EigenSystem es = hermitian_eigensystem(generator.matrix);
    return ModeOperator{unitary_from_eigensystem(es, scale), generator.arity,
                        generator.cutoffs};
}

ModeOperator tensor_operator(const ModeOperator& a, const ModeOperator& b) {
    if (a.arity != 1 || b.arity != 1)
        throw std::invalid_argument("tensor_operator: factors must be single-mode");
    const std::size_t da = a.cutoffs[0], db = b.cutoffs[0];
    Matrix m(da * db, da * db);
    for (std::size_t i = 0; i < da; ++i)
        for (std::size_t k = 0; k < da; ++k) {
            const cxd aik = a.matrix(i, k);
            if (aik == cxd(0.0, 0.0)) continue;
            for (std::size_t j = 0; j < db; ++j)
                for (std::size_t l = 0; l < db; ++l)
                    m(i * db + j, k * db + l) = aik * b.matrix(j, l);
        }
    return ModeOperator{std::move(m), 2, {da, db}};
}

bool is_unitary(const ModeOperator& op, double tol) {
    const Matrix prod = op.matrix.adjoint() * op.matrix;
    return max_abs_difference(prod, Matrix::identity(op.matrix.rows())) < tol;
}

}  // namespace cvsim
