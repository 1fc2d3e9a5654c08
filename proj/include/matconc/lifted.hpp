#pragma once

#include <sstream>
#include <utility>

#include "matconc/hermitian.hpp"

namespace matconc {

// Linear maps on the Hilbert space M^d (trace inner product) represented as
// d^2 x d^2 matrices acting on column-major vectorizations:
//   vec(M)[i + j d] = M(i, j),  vec(A M B) = (B^T kron A) vec(M).
// Hence left multiplication by A lifts to I kron A and right multiplication
// by B lifts to B^T kron I.

inline ComplexVector vec(const GeneralMatrix& m) {
    return Eigen::Map<const ComplexVector>(m.data(), m.size());
}

inline GeneralMatrix unvec(const ComplexVector& v, Index d) {
    if (v.size() != d * d) {
        throw PreconditionError("unvec: vector length is not d^2");
    }
    return Eigen::Map<const GeneralMatrix>(v.data(), d, d);
}

inline GeneralMatrix kron(const GeneralMatrix& a, const GeneralMatrix& b) {
    GeneralMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Index i = 0; i < a.rows(); ++i) {
        for (Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

/// Self-adjoint linear map on M^d.
class LiftedOperator {
public:
    /// `matrix` is the d^2 x d^2 representation; it must be Hermitian.
    LiftedOperator(Index d, HermitianMatrix matrix) : d_(d), op_(std::move(matrix)) {
        if (op_.dim() != d * d) {
            std::ostringstream msg;
            msg << "LiftedOperator: representation has dimension " << op_.dim() << ", expected " << d * d;
            throw PreconditionError(msg.str());
        }
    }

    Index dim() const noexcept { return d_; }
    const HermitianMatrix& representation() const noexcept { return op_; }
    const GeneralMatrix& matrix() const noexcept { return op_.matrix(); }

    GeneralMatrix apply(const GeneralMatrix& m) const {
        if (m.rows() != d_ || m.cols() != d_) {
            throw PreconditionError("LiftedOperator::apply: argument dimension mismatch");
        }
        return unvec(op_.matrix() * vec(m), d_);
    }

    /// <M, A(N)> in the trace inner product.
    Complex form(const GeneralMatrix& m, const GeneralMatrix& n) const { return trace_inner(m, apply(n)); }

    /// |A| via the eigendecomposition of the representation.
    LiftedOperator abs() const { return {d_, matconc::abs(op_)}; }
    LiftedOperator abs_power(double r) const { return {d_, matconc::abs_power(op_, r)}; }

    friend LiftedOperator operator+(const LiftedOperator& a, const LiftedOperator& b) {
        check_same(a, b);
        return {a.d_, a.op_ + b.op_};
    }
    friend LiftedOperator operator*(double s, const LiftedOperator& a) { return {a.d_, s * a.op_}; }

    /// Composition A B as a raw matrix (Hermitian only when A and B commute).
    friend GeneralMatrix compose(const LiftedOperator& a, const LiftedOperator& b) {
        check_same(a, b);
        return a.matrix() * b.matrix();
    }

    friend double commutator_norm(const LiftedOperator& a, const LiftedOperator& b) {
        check_same(a, b);
        return spectral_norm(a.matrix() * b.matrix() - b.matrix() * a.matrix());
    }

private:
    static void check_same(const LiftedOperator& a, const LiftedOperator& b) {
        if (a.d_ != b.d_) {
            throw PreconditionError("LiftedOperator: dimension mismatch");
        }
    }

    Index d_;
    HermitianMatrix op_;
};

/// M -> A M.
inline LiftedOperator lift_left(const HermitianMatrix& a) {
    const Index d = a.dim();
    return {d, HermitianMatrix(kron(GeneralMatrix::Identity(d, d), a.matrix()))};
}

/// M -> M B.
inline LiftedOperator lift_right(const HermitianMatrix& b) {
    const Index d = b.dim();
    return {d, HermitianMatrix(kron(b.matrix().transpose(), GeneralMatrix::Identity(d, d)))};
}

}  // namespace matconc
