#pragma once

// Independent reference computations used only by the tests. None of these
// go through the library's eigensolver or matrix-function code paths.

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "matconc/hermitian.hpp"

namespace oracle {

using matconc::Complex;
using matconc::GeneralMatrix;
using matconc::Index;

/// exp(M) by scaling and squaring with a truncated Taylor series.
inline GeneralMatrix expm_taylor(const GeneralMatrix& m) {
    const double norm = m.cwiseAbs().rowwise().sum().maxCoeff();
    int squarings = 0;
    if (norm > 0.25) {
        squarings = static_cast<int>(std::ceil(std::log2(norm / 0.25)));
    }
    const GeneralMatrix a = m / std::ldexp(1.0, squarings);
    GeneralMatrix term = GeneralMatrix::Identity(m.rows(), m.cols());
    GeneralMatrix sum = term;
    for (int k = 1; k <= 30; ++k) {
        term = term * a / static_cast<double>(k);
        sum += term;
    }
    for (int s = 0; s < squarings; ++s) {
        sum = sum * sum;
    }
    return sum;
}

/// sqrt(sum |b_ij|^2).
inline double frobenius_entrywise(const GeneralMatrix& b) {
    double s = 0.0;
    for (Index i = 0; i < b.rows(); ++i) {
        for (Index j = 0; j < b.cols(); ++j) {
            s += std::norm(b(i, j));
        }
    }
    return std::sqrt(s);
}

/// Eigenvalues from Eigen's tridiagonal QR solver (ascending).
inline Eigen::VectorXd eigenvalues_qr(const GeneralMatrix& h) {
    Eigen::SelfAdjointEigenSolver<GeneralMatrix> es(h, Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

inline double max_abs(const GeneralMatrix& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace oracle
