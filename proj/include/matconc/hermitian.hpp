#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <sstream>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "matconc/errors.hpp"

namespace matconc {

using Complex = std::complex<double>;
using GeneralMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Relative tolerance on max |M - M*| accepted when constructing a HermitianMatrix.
inline constexpr double hermitian_tolerance = 1e-12;

/// Dense d x d complex Hermitian matrix. Immutable value type.
///
/// Construction checks max|M - M*| <= 1e-12 (1 + max|M_ij|) and stores the
/// exactly Hermitian part (M + M*)/2. Anything farther from Hermitian throws
/// NotHermitianError.
class HermitianMatrix {
public:
    /// 1 x 1 zero.
    HermitianMatrix() : m_(GeneralMatrix::Zero(1, 1)) {}

    explicit HermitianMatrix(GeneralMatrix m) : m_(std::move(m)) {
        if (m_.rows() < 1 || m_.rows() != m_.cols()) {
            std::ostringstream msg;
            msg << "HermitianMatrix: expected a square matrix of dimension >= 1, got " << m_.rows()
                << "x" << m_.cols();
            throw PreconditionError(msg.str());
        }
        const double deviation = (m_ - m_.adjoint()).cwiseAbs().maxCoeff();
        const double scale = 1.0 + m_.cwiseAbs().maxCoeff();
        if (!(deviation <= hermitian_tolerance * scale)) {
            std::ostringstream msg;
            msg << "HermitianMatrix: max |M - M*| = " << deviation << " exceeds tolerance "
                << hermitian_tolerance * scale;
            throw NotHermitianError(msg.str());
        }
        symmetrize();
    }

    static HermitianMatrix zero(Index d) { return HermitianMatrix(GeneralMatrix::Zero(d, d)); }
    static HermitianMatrix identity(Index d) { return HermitianMatrix(GeneralMatrix::Identity(d, d)); }

    static HermitianMatrix diagonal(const RealVector& diag) {
        GeneralMatrix m = GeneralMatrix::Zero(diag.size(), diag.size());
        m.diagonal() = diag.cast<Complex>();
        return HermitianMatrix(std::move(m));
    }

    static HermitianMatrix from_real(const RealMatrix& m) { return HermitianMatrix(m.cast<Complex>()); }

    /// Hermitian part (M + M*)/2 of an arbitrary square matrix; never throws on asymmetry.
    static HermitianMatrix hermitian_part(const GeneralMatrix& m) {
        return HermitianMatrix(GeneralMatrix(0.5 * (m + m.adjoint())), Unchecked{});
    }

    Index dim() const noexcept { return m_.rows(); }
    const GeneralMatrix& matrix() const noexcept { return m_; }
    Complex operator()(Index i, Index j) const { return m_(i, j); }

    double trace() const { return m_.diagonal().real().sum(); }
    /// Largest entry modulus.
    double max_abs() const { return m_.cwiseAbs().maxCoeff(); }
    double frobenius_norm() const { return m_.norm(); }

    HermitianMatrix operator-() const { return HermitianMatrix(GeneralMatrix(-m_), Unchecked{}); }

    friend HermitianMatrix operator+(const HermitianMatrix& a, const HermitianMatrix& b) {
        check_same_dim(a, b, "operator+");
        return HermitianMatrix(GeneralMatrix(a.m_ + b.m_), Unchecked{});
    }
    friend HermitianMatrix operator-(const HermitianMatrix& a, const HermitianMatrix& b) {
        check_same_dim(a, b, "operator-");
        return HermitianMatrix(GeneralMatrix(a.m_ - b.m_), Unchecked{});
    }
    friend HermitianMatrix operator*(double s, const HermitianMatrix& a) {
        return HermitianMatrix(GeneralMatrix(s * a.m_), Unchecked{});
    }
    friend HermitianMatrix operator*(const HermitianMatrix& a, double s) { return s * a; }
    friend HermitianMatrix operator/(const HermitianMatrix& a, double s) { return (1.0 / s) * a; }

    HermitianMatrix& operator+=(const HermitianMatrix& b) { return *this = *this + b; }
    HermitianMatrix& operator-=(const HermitianMatrix& b) { return *this = *this - b; }

    static void check_same_dim(const HermitianMatrix& a, const HermitianMatrix& b, const char* where) {
        if (a.dim() != b.dim()) {
            std::ostringstream msg;
            msg << where << ": dimension mismatch " << a.dim() << " vs " << b.dim();
            throw PreconditionError(msg.str());
        }
    }

private:
    struct Unchecked {};
    HermitianMatrix(GeneralMatrix m, Unchecked) : m_(std::move(m)) { symmetrize(); }

    void symmetrize() {
        const GeneralMatrix h = 0.5 * (m_ + m_.adjoint());
        m_ = h;
    }

    GeneralMatrix m_;
};

/// A*A, symmetrized.
inline HermitianMatrix square(const HermitianMatrix& a) {
    return HermitianMatrix::hermitian_part(a.matrix() * a.matrix());
}

/// A^q for integer q >= 0 by repeated squaring.
inline HermitianMatrix integer_power(const HermitianMatrix& a, int q) {
    if (q < 0) {
        throw PreconditionError("integer_power: exponent must be nonnegative");
    }
    GeneralMatrix result = GeneralMatrix::Identity(a.dim(), a.dim());
    GeneralMatrix base = a.matrix();
    for (unsigned e = static_cast<unsigned>(q); e != 0; e >>= 1) {
        if (e & 1U) {
            result = result * base;
        }
        if (e > 1) {
            base = base * base;
        }
    }
    return HermitianMatrix::hermitian_part(result);
}

/// tr[A B] for Hermitian A, B (real).
inline double trace_product(const HermitianMatrix& a, const HermitianMatrix& b) {
    HermitianMatrix::check_same_dim(a, b, "trace_product");
    // tr[AB] = sum_ij A_ij B_ji = sum_ij A_ij conj(B_ij)
    return (a.matrix().array() * b.matrix().array().conjugate()).sum().real();
}

/// Trace inner product <M, N> = tr[M* N].
inline Complex trace_inner(const GeneralMatrix& m, const GeneralMatrix& n) {
    return (m.array().conjugate() * n.array()).sum();
}

// ---------------------------------------------------------------------------
// Spectral decomposition (cyclic Jacobi)

/// A = U diag(lambda) U*, eigenvalues ascending, columns of U orthonormal.
struct SpectralDecomposition {
    RealVector eigenvalues;
    GeneralMatrix basis;

    Index dim() const noexcept { return eigenvalues.size(); }

    GeneralMatrix reconstruct() const {
        return basis * eigenvalues.cast<Complex>().asDiagonal() * basis.adjoint();
    }
};

struct JacobiOptions {
    int max_sweeps = 100;
    /// Convergence when off-diagonal Frobenius norm <= relative_tolerance * ||A||_F.
    double relative_tolerance = 1e-13;
};

/// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi rotations.
/// Deterministic: the sweep order and rotation formulas depend only on the input.
inline SpectralDecomposition eigh(const HermitianMatrix& A, const JacobiOptions& opts = {}) {
    const Index n = A.dim();
    GeneralMatrix a = A.matrix();
    GeneralMatrix v = GeneralMatrix::Identity(n, n);

    const double fro = a.norm();
    auto off_diagonal = [&] {
        double sum = 0.0;
        for (Index j = 0; j < n; ++j) {
            for (Index i = 0; i < n; ++i) {
                if (i != j) {
                    sum += std::norm(a(i, j));
                }
            }
        }
        return std::sqrt(sum);
    };

    bool converged = fro == 0.0 || n == 1;
    for (int sweep = 0; !converged && sweep < opts.max_sweeps; ++sweep) {
        for (Index p = 0; p < n - 1; ++p) {
            for (Index q = p + 1; q < n; ++q) {
                const Complex b = a(p, q);
                const double ab = std::abs(b);
                if (ab == 0.0) {
                    continue;
                }
                const Complex phase = b / ab;
                const double app = a(p, p).real();
                const double aqq = a(q, q).real();
                const double theta = (aqq - app) / (2.0 * ab);
                double t;
                if (std::abs(theta) > 1e150) {
                    t = 0.5 / theta;
                } else {
                    t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                }
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                const Complex cph = std::conj(phase);

                // A <- A U, U = [[c, s], [-s conj(ph), c conj(ph)]] on columns p, q.
                for (Index k = 0; k < n; ++k) {
                    const Complex akp = a(k, p);
                    const Complex akq = a(k, q);
                    a(k, p) = c * akp - s * cph * akq;
                    a(k, q) = s * akp + c * cph * akq;
                }
                // A <- U* A on rows p, q.
                for (Index k = 0; k < n; ++k) {
                    const Complex apk = a(p, k);
                    const Complex aqk = a(q, k);
                    a(p, k) = c * apk - s * phase * aqk;
                    a(q, k) = s * apk + c * phase * aqk;
                }
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                a(p, p) = a(p, p).real();
                a(q, q) = a(q, q).real();

                for (Index k = 0; k < n; ++k) {
                    const Complex vkp = v(k, p);
                    const Complex vkq = v(k, q);
                    v(k, p) = c * vkp - s * cph * vkq;
                    v(k, q) = s * vkp + c * cph * vkq;
                }
            }
        }
        converged = off_diagonal() <= opts.relative_tolerance * fro;
    }
    if (!converged) {
        std::ostringstream msg;
        msg << "eigh: Jacobi did not converge in " << opts.max_sweeps << " sweeps (dim " << n
            << ", off-diagonal residual " << off_diagonal() << ", ||A||_F " << fro << ")";
        throw ConvergenceError(msg.str());
    }

    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Index i, Index j) { return a(i, i).real() < a(j, j).real(); });

    SpectralDecomposition out{RealVector(n), GeneralMatrix(n, n)};
    for (Index k = 0; k < n; ++k) {
        out.eigenvalues(k) = a(order[static_cast<std::size_t>(k)], order[static_cast<std::size_t>(k)]).real();
        out.basis.col(k) = v.col(order[static_cast<std::size_t>(k)]);
    }
    return out;
}

inline RealVector eigenvalues(const HermitianMatrix& a) { return eigh(a).eigenvalues; }
inline double lambda_max(const HermitianMatrix& a) { return eigh(a).eigenvalues(a.dim() - 1); }
inline double lambda_min(const HermitianMatrix& a) { return eigh(a).eigenvalues(0); }

/// Spectral norm of a Hermitian matrix, max |lambda|.
inline double operator_norm(const HermitianMatrix& a) {
    const RealVector ev = eigenvalues(a);
    return std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
}

// ---------------------------------------------------------------------------
// Standard matrix functions

/// Domain of a scalar function; endpoints may be infinite or open.
struct Interval {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    bool open_lo = false;
    bool open_hi = false;

    static Interval real_line() { return {}; }
    static Interval nonnegative() { return {0.0, std::numeric_limits<double>::infinity(), false, false}; }
    static Interval positive() { return {0.0, std::numeric_limits<double>::infinity(), true, false}; }

    bool contains(double x) const {
        const bool above = open_lo ? x > lo : x >= lo;
        const bool below = open_hi ? x < hi : x <= hi;
        return above && below;
    }
};

/// sum_k f(lambda_k) u_k u_k* from an existing decomposition.
template <class F>
HermitianMatrix matrix_function(const SpectralDecomposition& sd, F&& f) {
    RealVector fl(sd.dim());
    for (Index k = 0; k < sd.dim(); ++k) {
        fl(k) = f(sd.eigenvalues(k));
    }
    return HermitianMatrix::hermitian_part(sd.basis * fl.cast<Complex>().asDiagonal() * sd.basis.adjoint());
}

template <class F>
HermitianMatrix matrix_function(const HermitianMatrix& a, F&& f, const Interval& domain = Interval::real_line()) {
    const SpectralDecomposition sd = eigh(a);
    for (Index k = 0; k < sd.dim(); ++k) {
        if (!domain.contains(sd.eigenvalues(k))) {
            std::ostringstream msg;
            msg.precision(17);
            msg << "matrix_function: eigenvalue " << sd.eigenvalues(k) << " lies outside the domain "
                << (domain.open_lo ? "(" : "[") << domain.lo << ", " << domain.hi << (domain.open_hi ? ")" : "]");
            throw DomainError(msg.str());
        }
    }
    return matrix_function(sd, std::forward<F>(f));
}

inline HermitianMatrix expm(const HermitianMatrix& a) {
    return matrix_function(a, [](double x) { return std::exp(x); });
}

inline HermitianMatrix abs(const HermitianMatrix& a) {
    return matrix_function(a, [](double x) { return std::abs(x); });
}

/// |A|^r; |A|^0 = I.
inline HermitianMatrix abs_power(const HermitianMatrix& a, double r) {
    return matrix_function(a, [r](double x) { return r == 0.0 ? 1.0 : std::pow(std::abs(x), r); });
}

/// A_+ = max{A, 0}.
inline HermitianMatrix positive_part(const HermitianMatrix& a) {
    return matrix_function(a, [](double x) { return std::max(x, 0.0); });
}

/// A_- = max{-A, 0}, so A = A_+ - A_-.
inline HermitianMatrix negative_part(const HermitianMatrix& a) {
    return matrix_function(a, [](double x) { return std::max(-x, 0.0); });
}

// ---------------------------------------------------------------------------
// Semidefinite order

struct PsdVerdict {
    bool holds = false;
    /// lambda_min(B - A) and a unit eigenvector attaining it.
    double lambda_min = 0.0;
    ComplexVector witness;
    /// Smallest acceptable lambda_min: -tol (1 + ||A|| + ||B||).
    double threshold = 0.0;
};

/// A <= B in the semidefinite order, up to tol relative to 1 + ||A|| + ||B||.
inline PsdVerdict psd_leq(const HermitianMatrix& a, const HermitianMatrix& b, double tol = 1e-10) {
    HermitianMatrix::check_same_dim(a, b, "psd_leq");
    const SpectralDecomposition sd = eigh(b - a);
    PsdVerdict v;
    v.lambda_min = sd.eigenvalues(0);
    v.witness = sd.basis.col(0);
    v.threshold = -tol * (1.0 + operator_norm(a) + operator_norm(b));
    v.holds = v.lambda_min >= v.threshold;
    return v;
}

// ---------------------------------------------------------------------------
// Norms and dilation

inline RealVector singular_values(const GeneralMatrix& b) {
    Eigen::JacobiSVD<GeneralMatrix> svd(b);
    return svd.singularValues();
}

/// Schatten p-norm (sum sigma_i^p)^{1/p}; p = infinity gives the spectral norm.
inline double schatten_norm(const GeneralMatrix& b, double p) {
    if (std::isnan(p) || p < 1.0) {
        std::ostringstream msg;
        msg << "schatten_norm: p must be >= 1 or infinity, got " << p;
        throw PreconditionError(msg.str());
    }
    const RealVector sv = singular_values(b);
    const double top = sv.size() == 0 ? 0.0 : sv.maxCoeff();
    if (std::isinf(p) || top == 0.0) {
        return top;
    }
    double sum = 0.0;
    for (Index i = 0; i < sv.size(); ++i) {
        sum += std::pow(sv(i) / top, p);
    }
    return top * std::pow(sum, 1.0 / p);
}

inline double schatten_norm(const HermitianMatrix& a, double p) { return schatten_norm(a.matrix(), p); }

/// Largest singular value.
inline double spectral_norm(const GeneralMatrix& b) { return schatten_norm(b, std::numeric_limits<double>::infinity()); }

namespace detail {
inline void check_induced_p(double p) {
    if (!(p == 1.0 || (std::isinf(p) && p > 0))) {
        std::ostringstream msg;
        msg << "induced_norm: only p = 1 and p = infinity are supported, got " << p;
        throw PreconditionError(msg.str());
    }
}
}  // namespace detail

/// Norm induced by the l_p vector norm: p = 1 is the max column l1 norm,
/// p = infinity the max row l1 norm.
template <class Derived>
double induced_norm(const Eigen::MatrixBase<Derived>& b, double p) {
    detail::check_induced_p(p);
    if (b.size() == 0) {
        return 0.0;
    }
    if (p == 1.0) {
        return b.cwiseAbs().colwise().sum().maxCoeff();
    }
    return b.cwiseAbs().rowwise().sum().maxCoeff();
}

inline double induced_norm(const Eigen::SparseMatrix<double>& b, double p) {
    detail::check_induced_p(p);
    RealVector sums = RealVector::Zero(p == 1.0 ? b.cols() : b.rows());
    for (Index k = 0; k < b.outerSize(); ++k) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(b, k); it; ++it) {
            sums(p == 1.0 ? it.col() : it.row()) += std::abs(it.value());
        }
    }
    return sums.size() == 0 ? 0.0 : sums.maxCoeff();
}

/// [[0, B], [B*, 0]], of dimension rows + cols.
inline HermitianMatrix hermitian_dilation(const GeneralMatrix& b) {
    const Index d1 = b.rows();
    const Index d2 = b.cols();
    GeneralMatrix m = GeneralMatrix::Zero(d1 + d2, d1 + d2);
    m.topRightCorner(d1, d2) = b;
    m.bottomLeftCorner(d2, d1) = b.adjoint();
    return HermitianMatrix(std::move(m));
}

}  // namespace matconc
