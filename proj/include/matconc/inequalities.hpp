#pragma once

#include <cmath>
#include <sstream>

#include "matconc/hermitian.hpp"
#include "matconc/lifted.hpp"

namespace matconc {

/// Relative slack below which a gap counts as a violation: gap < -1e-8 * scale.
inline constexpr double violation_tolerance = 1e-8;

/// Both sides of an inequality lhs <= rhs evaluated at one input.
struct InequalityGap {
    double lhs = 0.0;
    double rhs = 0.0;
    double gap = 0.0;    // rhs - lhs
    double scale = 1.0;  // 1 + |lhs| + |rhs|
    bool holds = true;

    static InequalityGap make(double lhs, double rhs, double tol = violation_tolerance) {
        return make_scaled(lhs, rhs, 1.0 + std::abs(lhs) + std::abs(rhs), tol);
    }

    /// Same with an explicit scale, for comparisons whose magnitude is set by operator norms.
    static InequalityGap make_scaled(double lhs, double rhs, double scale, double tol = violation_tolerance) {
        InequalityGap g;
        g.lhs = lhs;
        g.rhs = rhs;
        g.gap = rhs - lhs;
        g.scale = scale;
        g.holds = g.gap >= -tol * g.scale;
        return g;
    }

    double relative() const { return gap / scale; }

    /// Same lhs with the rhs multiplied by `factor` (planted-violation self tests).
    InequalityGap with_rhs_scaled(double factor, double tol = violation_tolerance) const {
        return make(lhs, factor * rhs, tol);
    }
};

namespace detail {

inline void check_triple(const HermitianMatrix& a, const HermitianMatrix& b, const HermitianMatrix& c,
                         const char* where) {
    HermitianMatrix::check_same_dim(a, b, where);
    HermitianMatrix::check_same_dim(a, c, where);
}

inline void check_s(double s, const char* where) {
    if (!(s > 0.0) || std::isinf(s)) {
        std::ostringstream msg;
        msg << where << ": s must be a positive finite number, got " << s;
        throw PreconditionError(msg.str());
    }
}

inline void check_q(int q, const char* where) {
    if (q < 1) {
        std::ostringstream msg;
        msg << where << ": q must be an integer >= 1, got " << q;
        throw PreconditionError(msg.str());
    }
}

/// s X^2 + s^{-1} Y^2.
inline HermitianMatrix weighted_squares(const HermitianMatrix& x, const HermitianMatrix& y, double s) {
    return s * square(x) + (1.0 / s) * square(y);
}

/// s <X, W X> + s^{-1} <Y, W Y> for a lifted W; equals tr[(s X^2 + s^{-1} Y^2) F]
/// when W is left (or right) multiplication by F.
inline double weighted_form(const LiftedOperator& w, const HermitianMatrix& x, const HermitianMatrix& y, double s) {
    return s * w.form(x.matrix(), x.matrix()).real() + (1.0 / s) * w.form(y.matrix(), y.matrix()).real();
}

/// tr[C (F - G)] through lifted maps: <C, (L_F - R_G)(I)>.
inline double trace_difference_lifted(const HermitianMatrix& c, const HermitianMatrix& f, const HermitianMatrix& g) {
    const Index d = c.dim();
    const GeneralMatrix id = GeneralMatrix::Identity(d, d);
    return (lift_left(f).form(c.matrix(), id) - lift_right(g).form(c.matrix(), id)).real();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Mean value trace inequalities

/// |tr[C(e^A - e^B)]| <= (1/4) tr[(s(A-B)^2 + s^{-1}C^2)(e^A + e^B)].
inline InequalityGap emvti_gap(const HermitianMatrix& a, const HermitianMatrix& b, const HermitianMatrix& c, double s) {
    detail::check_triple(a, b, c, "emvti_gap");
    detail::check_s(s, "emvti_gap");
    const HermitianMatrix ea = expm(a);
    const HermitianMatrix eb = expm(b);
    const double lhs = std::abs(trace_product(c, ea - eb));
    const double rhs = 0.25 * trace_product(detail::weighted_squares(a - b, c, s), ea + eb);
    return InequalityGap::make(lhs, rhs);
}

/// Same quantity evaluated through left/right multiplication operators on M^d.
inline InequalityGap emvti_gap_lifted(const HermitianMatrix& a, const HermitianMatrix& b, const HermitianMatrix& c,
                                      double s) {
    detail::check_triple(a, b, c, "emvti_gap_lifted");
    detail::check_s(s, "emvti_gap_lifted");
    const HermitianMatrix ea = expm(a);
    const HermitianMatrix eb = expm(b);
    const LiftedOperator sum = lift_left(ea) + lift_right(eb);
    const double lhs = std::abs(detail::trace_difference_lifted(c, ea, eb));
    const double rhs = 0.25 * detail::weighted_form(sum, a - b, c, s);
    return InequalityGap::make(lhs, rhs);
}

/// |tr[C(A^q - B^q)]| <= (q/4) tr[(s(A-B)^2 + s^{-1}C^2)(|A|^{q-1} + |B|^{q-1})].
inline InequalityGap pmvti_gap(const HermitianMatrix& a, const HermitianMatrix& b, const HermitianMatrix& c, int q,
                               double s) {
    detail::check_triple(a, b, c, "pmvti_gap");
    detail::check_q(q, "pmvti_gap");
    detail::check_s(s, "pmvti_gap");
    const double lhs = std::abs(trace_product(c, integer_power(a, q) - integer_power(b, q)));
    const HermitianMatrix weight = abs_power(a, q - 1) + abs_power(b, q - 1);
    const double rhs = 0.25 * q * trace_product(detail::weighted_squares(a - b, c, s), weight);
    return InequalityGap::make(lhs, rhs);
}

inline InequalityGap pmvti_gap_lifted(const HermitianMatrix& a, const HermitianMatrix& b, const HermitianMatrix& c,
                                      int q, double s) {
    detail::check_triple(a, b, c, "pmvti_gap_lifted");
    detail::check_q(q, "pmvti_gap_lifted");
    detail::check_s(s, "pmvti_gap_lifted");
    const auto sa = eigh(a);
    const auto sb = eigh(b);
    auto pow_q = [q](double x) { return std::pow(x, q); };
    auto abs_pow = [q](double x) { return q == 1 ? 1.0 : std::pow(std::abs(x), q - 1); };
    const double lhs =
        std::abs(detail::trace_difference_lifted(c, matrix_function(sa, pow_q), matrix_function(sb, pow_q)));
    const LiftedOperator sum = lift_left(matrix_function(sa, abs_pow)) + lift_right(matrix_function(sb, abs_pow));
    const double rhs = 0.25 * q * detail::weighted_form(sum, a - b, c, s);
    return InequalityGap::make(lhs, rhs);
}

// ---------------------------------------------------------------------------
// Signed mean value trace inequalities (conjectured)
//
// x_+ = max{x, 0}, x_- = max{-x, 0}, lifted as standard matrix functions.
// The polynomial right-hand side is read as a trace.

/// tr[C(e^A - e^B)] <= (1/2) tr[(s(A-B)_+^2 + s^{-1}C_+^2) e^A + (s(A-B)_-^2 + s^{-1}C_-^2) e^B].
inline InequalityGap conjecture_exp_gap(const HermitianMatrix& a, const HermitianMatrix& b, const HermitianMatrix& c,
                                        double s) {
    detail::check_triple(a, b, c, "conjecture_exp_gap");
    detail::check_s(s, "conjecture_exp_gap");
    const HermitianMatrix ea = expm(a);
    const HermitianMatrix eb = expm(b);
    const HermitianMatrix diff = a - b;
    const double lhs = trace_product(c, ea - eb);
    const double rhs =
        0.5 * (trace_product(detail::weighted_squares(positive_part(diff), positive_part(c), s), ea) +
               trace_product(detail::weighted_squares(negative_part(diff), negative_part(c), s), eb));
    return InequalityGap::make(lhs, rhs);
}

inline InequalityGap conjecture_exp_gap_lifted(const HermitianMatrix& a, const HermitianMatrix& b,
                                               const HermitianMatrix& c, double s) {
    detail::check_triple(a, b, c, "conjecture_exp_gap_lifted");
    detail::check_s(s, "conjecture_exp_gap_lifted");
    const HermitianMatrix ea = expm(a);
    const HermitianMatrix eb = expm(b);
    const HermitianMatrix diff = a - b;
    const double lhs = detail::trace_difference_lifted(c, ea, eb);
    const double rhs = 0.5 * (detail::weighted_form(lift_right(ea), positive_part(diff), positive_part(c), s) +
                              detail::weighted_form(lift_right(eb), negative_part(diff), negative_part(c), s));
    return InequalityGap::make(lhs, rhs);
}

/// tr[C(A^q - B^q)] <= (q/2) tr[(s(A-B)_+^2 + s^{-1}C_+^2)|A|^{q-1} + (s(A-B)_-^2 + s^{-1}C_-^2)|B|^{q-1}].
inline InequalityGap conjecture_poly_gap(const HermitianMatrix& a, const HermitianMatrix& b, const HermitianMatrix& c,
                                         int q, double s) {
    detail::check_triple(a, b, c, "conjecture_poly_gap");
    detail::check_q(q, "conjecture_poly_gap");
    detail::check_s(s, "conjecture_poly_gap");
    const HermitianMatrix diff = a - b;
    const double lhs = trace_product(c, integer_power(a, q) - integer_power(b, q));
    const double rhs =
        0.5 * q *
        (trace_product(detail::weighted_squares(positive_part(diff), positive_part(c), s), abs_power(a, q - 1)) +
         trace_product(detail::weighted_squares(negative_part(diff), negative_part(c), s), abs_power(b, q - 1)));
    return InequalityGap::make(lhs, rhs);
}

inline InequalityGap conjecture_poly_gap_lifted(const HermitianMatrix& a, const HermitianMatrix& b,
                                                const HermitianMatrix& c, int q, double s) {
    detail::check_triple(a, b, c, "conjecture_poly_gap_lifted");
    detail::check_q(q, "conjecture_poly_gap_lifted");
    detail::check_s(s, "conjecture_poly_gap_lifted");
    const auto sa = eigh(a);
    const auto sb = eigh(b);
    auto pow_q = [q](double x) { return std::pow(x, q); };
    auto abs_pow = [q](double x) { return q == 1 ? 1.0 : std::pow(std::abs(x), q - 1); };
    const HermitianMatrix diff = a - b;
    const double lhs = detail::trace_difference_lifted(c, matrix_function(sa, pow_q), matrix_function(sb, pow_q));
    const double rhs =
        0.5 * q *
        (detail::weighted_form(lift_right(matrix_function(sa, abs_pow)), positive_part(diff), positive_part(c), s) +
         detail::weighted_form(lift_right(matrix_function(sb, abs_pow)), negative_part(diff), negative_part(c), s));
    return InequalityGap::make(lhs, rhs);
}

// ---------------------------------------------------------------------------
// Operator inequalities on M^d

/// Relative commutator tolerance for young_commuting_gap.
inline constexpr double commute_tolerance = 1e-10;

/// Young's inequality A B <= (1/p)|A|^p + (1/q)|B|^q for commuting self-adjoint
/// maps, q = p/(p-1). The semidefinite gap is scalarized along the eigenvector
/// v of the smallest eigenvalue of rhs - lhs: lhs = <v, AB v>, rhs = <v, R v>,
/// so gap = lambda_min(R - AB). The scale is 1 + ||AB|| + ||R||.
inline InequalityGap young_commuting_gap(const LiftedOperator& a_op, const LiftedOperator& b_op, double p) {
    if (!(p > 1.0) || std::isinf(p)) {
        std::ostringstream msg;
        msg << "young_commuting_gap: p must lie in (1, inf), got " << p;
        throw PreconditionError(msg.str());
    }
    const double comm = commutator_norm(a_op, b_op);
    const double limit = commute_tolerance * (1.0 + spectral_norm(a_op.matrix()) * spectral_norm(b_op.matrix()));
    if (comm > limit) {
        std::ostringstream msg;
        msg << "young_commuting_gap: operators do not commute, ||AB - BA|| = " << comm << " > " << limit;
        throw PreconditionError(msg.str());
    }
    const double q = p / (p - 1.0);
    const HermitianMatrix product = HermitianMatrix::hermitian_part(compose(a_op, b_op));
    const HermitianMatrix bound =
        (1.0 / p) * a_op.abs_power(p).representation() + (1.0 / q) * b_op.abs_power(q).representation();
    const auto sd = eigh(bound - product);
    const ComplexVector v = sd.basis.col(0);
    const double lhs = (v.adjoint() * product.matrix() * v)(0, 0).real();
    const double rhs = (v.adjoint() * bound.matrix() * v)(0, 0).real();
    return InequalityGap::make_scaled(lhs, rhs, 1.0 + operator_norm(product) + operator_norm(bound));
}

/// |<M, A(N)>| <= [<M, |A|(M)> <N, |A|(N)>]^{1/2}.
inline InequalityGap operator_cs_gap(const LiftedOperator& a_op, const GeneralMatrix& m, const GeneralMatrix& n) {
    const Index d = a_op.dim();
    if (m.rows() != d || m.cols() != d || n.rows() != d || n.cols() != d) {
        throw PreconditionError("operator_cs_gap: M and N must be d x d for a map on M^d");
    }
    const LiftedOperator abs_op = a_op.abs();
    const double lhs = std::abs(a_op.form(m, n));
    const double mm = std::max(0.0, abs_op.form(m, m).real());
    const double nn = std::max(0.0, abs_op.form(n, n).real());
    return InequalityGap::make(lhs, std::sqrt(mm * nn));
}

}  // namespace matconc
