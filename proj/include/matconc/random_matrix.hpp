#pragma once

#include "matconc/hermitian.hpp"
#include "matconc/rng.hpp"

namespace matconc {

/// Complex matrix with independent N(0,1) real and imaginary parts.
inline GeneralMatrix random_general(Index rows, Index cols, Rng& rng) {
    GeneralMatrix g(rows, cols);
    for (Index j = 0; j < cols; ++j) {
        for (Index i = 0; i < rows; ++i) {
            const double re = standard_normal(rng);
            const double im = standard_normal(rng);
            g(i, j) = Complex(re, im);
        }
    }
    return g;
}

/// (G + G*)/2 for a complex Gaussian G, times `scale`.
inline HermitianMatrix random_hermitian(Index d, Rng& rng, double scale = 1.0) {
    return scale * HermitianMatrix::hermitian_part(random_general(d, d, rng));
}

/// Real symmetric variant (G + G^T)/2 with real Gaussian G.
inline HermitianMatrix random_real_symmetric(Index d, Rng& rng, double scale = 1.0) {
    RealMatrix g(d, d);
    for (Index j = 0; j < d; ++j) {
        for (Index i = 0; i < d; ++i) {
            g(i, j) = standard_normal(rng);
        }
    }
    return scale * HermitianMatrix::from_real(0.5 * (g + g.transpose()));
}

inline ComplexVector random_unit_vector(Index d, Rng& rng) {
    ComplexVector v = random_general(d, 1, rng).col(0);
    return v / v.norm();
}

/// Haar-ish unitary: eigenbasis of a random Hermitian matrix.
inline GeneralMatrix random_unitary(Index d, Rng& rng) { return eigh(random_hermitian(d, rng)).basis; }

/// lambda v v*.
inline HermitianMatrix rank_one(const ComplexVector& v, double lambda) {
    return HermitianMatrix::hermitian_part(lambda * v * v.adjoint());
}

}  // namespace matconc
