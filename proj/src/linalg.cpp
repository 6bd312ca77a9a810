#include "cvsim/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace cvsim {

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::adjoint() const {
    Matrix m(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) m(j, i) = std::conj((*this)(i, j));
    return m;
}

Matrix Matrix::operator*(const Matrix& rhs) const {
    if (cols_ != rhs.rows_) throw std::invalid_argument("Matrix::operator*: dimension mismatch");
    Matrix out(rows_, rhs.cols_);
    // i-k-j order keeps the inner loop contiguous in both operands.
    for (std::size_t i = 0; i < rows_; ++i) {
        const cxd* arow = a_.data() + i * cols_;
        cxd* orow = out.a_.data() + i * rhs.cols_;
        for (std::size_t k = 0; k < cols_; ++k) {
            const cxd aik = arow[k];
            if (aik == cxd(0.0, 0.0)) continue;
            const cxd* brow = rhs.a_.data() + k * rhs.cols_;
            for (std::size_t j = 0; j < rhs.cols_; ++j) orow[j] += aik * brow[j];
        }
    }
    return out;
}

Matrix Matrix::operator+(const Matrix& rhs) const {
    if (rows_ != rhs.rows_ || cols_ != rhs.cols_)
        throw std::invalid_argument("Matrix::operator+: dimension mismatch");
    Matrix out = *this;
    for (std::size_t i = 0; i < a_.size(); ++i) out.a_[i] += rhs.a_[i];
    return out;
}

Matrix Matrix::operator-(const Matrix& rhs) const {
    if (rows_ != rhs.rows_ || cols_ != rhs.cols_)
        throw std::invalid_argument("Matrix::operator-: dimension mismatch");
    Matrix out = *this;
    for (std::size_t i = 0; i < a_.size(); ++i) out.a_[i] -= rhs.a_[i];
    return out;
}

Matrix& Matrix::operator*=(cxd scalar) {
    for (auto& v : a_) v *= scalar;
    return *this;
}

double Matrix::max_abs() const {
    double m = 0.0;
    for (const auto& v : a_) m = std::max(m, std::abs(v));
    return m;
}

double Matrix::frobenius_norm() const {
    double s = 0.0;
    for (const auto& v : a_) s += std::norm(v);
    return std::sqrt(s);
}

void matvec(const Matrix& m, const cxd* x, cxd* y) {
    const std::size_t n = m.rows(), c = m.cols();
    for (std::size_t i = 0; i < n; ++i) {
        const cxd* row = m.data() + i * c;
        cxd acc(0.0, 0.0);
        for (std::size_t j = 0; j < c; ++j) acc += row[j] * x[j];
        y[i] = acc;
    }
}

double hermiticity_defect(const Matrix& a) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            d = std::max(d, std::abs(a(i, j) - std::conj(a(j, i))));
    return d;
}

EigenSystem hermitian_eigensystem(const Matrix& input) {
    if (input.rows() != input.cols())
        throw std::invalid_argument("hermitian_eigensystem: matrix not square");
    const std::size_t n = input.rows();
    Matrix a = input;
    Matrix v = Matrix::identity(n);

    const double scale = std::max(a.frobenius_norm(), 1e-300);
    const double stop = 1e-15 * scale;

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p + 1 < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += std::norm(a(p, q));
        if (std::sqrt(2.0 * off) < stop) break;

        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const cxd g = a(p, q);
                const double absg = std::abs(g);
                if (absg < 1e-300) continue;
                const double alpha = a(p, p).real();
                const double beta = a(q, q).real();
                // Rotation angle from tan(2*theta) = 2|g| / (alpha - beta),
                // smaller-root form for stability.
                const double tau = (alpha - beta) / (2.0 * absg);
                double t;
                if (tau >= 0.0)
                    t = 1.0 / (tau + std::sqrt(1.0 + tau * tau));
                else
                    t = 1.0 / (tau - std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                const cxd phase = g / absg;          // e^{i phi}
                const cxd sp = s * phase;            // s e^{i phi}
                const cxd spc = s * std::conj(phase);

                // A <- R^dag A R with R(p,p)=c, R(p,q)=-s e^{i phi},
                // R(q,p)=s e^{-i phi}, R(q,q)=c.
                for (std::size_t i = 0; i < n; ++i) {
                    const cxd aip = a(i, p), aiq = a(i, q);
                    a(i, p) = c * aip + spc * aiq;
                    a(i, q) = -sp * aip + c * aiq;
                }
                for (std::size_t j = 0; j < n; ++j) {
                    const cxd apj = a(p, j), aqj = a(q, j);
                    a(p, j) = c * apj + sp * aqj;
                    a(q, j) = -spc * apj + c * aqj;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const cxd vip = v(i, p), viq = v(i, q);
                    v(i, p) = c * vip + spc * viq;
                    v(i, q) = -sp * vip + c * viq;
                }
                // Kill rounding residue in the zeroed pair.
                a(p, q) = 0.0;
                a(q, p) = 0.0;
            }
        }
    }

    EigenSystem es;
    es.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) es.values[i] = a(i, i).real();

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t x, std::size_t y) { return es.values[x] < es.values[y]; });

    EigenSystem sorted;
    sorted.values.resize(n);
    sorted.vectors = Matrix(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        sorted.values[k] = es.values[order[k]];
        for (std::size_t i = 0; i < n; ++i) sorted.vectors(i, k) = v(i, order[k]);
    }
    return sorted;
}

Matrix unitary_from_eigensystem(const EigenSystem& es, double scale) {
    const std::size_t n = es.values.size();
    // V diag(e^{i s lambda}) V^dag done as two rank-structured passes.
    Matrix scaled = es.vectors;
    for (std::size_t k = 0; k < n; ++k) {
        const cxd ph = std::exp(cxd(0.0, scale * es.values[k]));
        for (std::size_t i = 0; i < n; ++i) scaled(i, k) *= ph;
    }
    return scaled * es.vectors.adjoint();
}

double max_abs_difference(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw std::invalid_argument("max_abs_difference: dimension mismatch");
    double d = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) d = std::max(d, std::abs(a(i, j) - b(i, j)));
    return d;
}

}  // namespace cvsim
