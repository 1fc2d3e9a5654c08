#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Sparse>

#include "matconc/hermitian.hpp"
#include "matconc/random_matrix.hpp"
#include "matconc/report.hpp"
#include "matconc/rng.hpp"
#include "matconc/stats.hpp"

namespace matconc {

// ---------------------------------------------------------------------------
// Exponential tail bounds for bounded random matrices

/// V_X <= s^{-1}(c X + v I) and V^K <= s (c X + v I). The tails do not depend on s.
struct TailBoundParams {
    double c = 0.0;
    double v = 1.0;
    double s = 1.0;
    Index d = 1;

    void validate() const {
        if (!(c >= 0.0) || std::isinf(c)) {
            throw PreconditionError("TailBoundParams: c must be finite and >= 0");
        }
        if (!(v > 0.0) || std::isinf(v)) {
            throw PreconditionError("TailBoundParams: v must be finite and > 0");
        }
        if (!(s > 0.0) || std::isinf(s)) {
            throw PreconditionError("TailBoundParams: s must be finite and > 0");
        }
        if (d < 1) {
            throw PreconditionError("TailBoundParams: d must be >= 1");
        }
    }
};

enum class BoundKind { min_tail, max_tail_refined, max_tail_relaxed };

inline std::string_view to_string(BoundKind k) {
    switch (k) {
        case BoundKind::min_tail: return "min_tail";
        case BoundKind::max_tail_refined: return "max_tail_refined";
        case BoundKind::max_tail_relaxed: return "max_tail_relaxed";
    }
    return "unknown";
}

struct Thm31Tails {
    double min_tail = 0.0;
    double max_tail_refined = 0.0;
    double max_tail_relaxed = 0.0;
};

namespace detail {

inline void check_t(double t, const char* where) {
    if (!(t >= 0.0)) {
        std::ostringstream msg;
        msg << where << ": t must be >= 0, got " << t;
        throw PreconditionError(msg.str());
    }
}

/// (x - log(1 + x)) / x^2 for x >= 0, with its limit 1/2 at 0.
inline double refined_rate(double x) {
    if (x < 1e-3) {
        return 0.5 - x / 3.0 + x * x / 4.0 - x * x * x / 5.0 + x * x * x * x / 6.0;
    }
    return (x - std::log1p(x)) / (x * x);
}

/// (-log(1 - y) - y) / y^2 for 0 <= y < 1, with its limit 1/2 at 0.
inline double mgf_rate(double y) {
    if (y < 1e-3) {
        return 0.5 + y / 3.0 + y * y / 4.0 + y * y * y / 5.0 + y * y * y * y / 6.0;
    }
    return (-std::log1p(-y) - y) / (y * y);
}

}  // namespace detail

/// P(lambda_min(X) <= -t) <= d exp(-t^2/2v);
/// P(lambda_max(X) >= t) <= d exp(-t/c + (v/c^2) log(1 + ct/v)) <= d exp(-t^2/(2v + 2ct)).
/// The refined exponent is evaluated as -(t^2/v) g(ct/v) with
/// g(x) = (x - log1p x)/x^2, which is stable as c -> 0 and equals 1/2 at c = 0.
inline Thm31Tails thm31_tails(const TailBoundParams& p, double t) {
    p.validate();
    detail::check_t(t, "thm31_tails");
    const double d = static_cast<double>(p.d);
    Thm31Tails out;
    out.min_tail = d * std::exp(-t * t / (2.0 * p.v));
    const double x = p.c * t / p.v;
    out.max_tail_refined = d * std::exp(-(t * t / p.v) * detail::refined_rate(x));
    out.max_tail_relaxed = d * std::exp(-t * t / (2.0 * p.v + 2.0 * p.c * t));
    return out;
}

inline double thm31_tail(const TailBoundParams& p, double t, BoundKind kind) {
    const Thm31Tails tails = thm31_tails(p, t);
    switch (kind) {
        case BoundKind::min_tail: return tails.min_tail;
        case BoundKind::max_tail_refined: return tails.max_tail_refined;
        case BoundKind::max_tail_relaxed: return tails.max_tail_relaxed;
    }
    throw PreconditionError("thm31_tail: unknown bound kind");
}

struct Thm31Expectations {
    double lower = 0.0;  // E lambda_min(X) >= lower
    double upper = 0.0;  // E lambda_max(X) <= upper
};

/// E lambda_min >= -sqrt(2 v log d), E lambda_max <= sqrt(2 v log d) + c log d; d may be any real >= 1.
inline Thm31Expectations expectation_bounds(double c, double v, double d) {
    if (!(d >= 1.0)) {
        throw PreconditionError("expectation_bounds: d must be >= 1");
    }
    const double logd = std::log(d);
    const double root = std::sqrt(2.0 * v * logd);
    return {-root, root + c * logd};
}

inline Thm31Expectations thm31_expectations(const TailBoundParams& p) {
    p.validate();
    return expectation_bounds(p.c, p.v, static_cast<double>(p.d));
}

/// (t, bound) pairs of one bound family.
struct BoundCurve {
    BoundKind kind = BoundKind::max_tail_refined;
    std::vector<std::pair<double, double>> points;
};

inline BoundCurve thm31_curve(const TailBoundParams& p, const std::vector<double>& grid, BoundKind kind) {
    BoundCurve curve;
    curve.kind = kind;
    for (double t : grid) {
        curve.points.emplace_back(t, thm31_tail(p, t, kind));
    }
    return curve;
}

/// For c = 0 and V_X <= x_norm I, V^K <= k_norm I: the smallest v over s is
/// sqrt(x_norm k_norm) at s = sqrt(k_norm / x_norm).
inline TailBoundParams best_params_without_c(double x_norm, double k_norm, Index d) {
    if (!(x_norm > 0.0) || !(k_norm > 0.0)) {
        throw PreconditionError("best_params_without_c: both variance bounds must be positive");
    }
    TailBoundParams p;
    p.c = 0.0;
    p.s = std::sqrt(k_norm / x_norm);
    p.v = std::sqrt(x_norm * k_norm);
    p.d = d;
    return p;
}

// ---------------------------------------------------------------------------
// Bounded differences

namespace detail {

inline HermitianMatrix sum_of_squares(const std::vector<HermitianMatrix>& a, const char* where) {
    if (a.empty()) {
        throw PreconditionError(std::string(where) + ": empty matrix list");
    }
    HermitianMatrix sum = HermitianMatrix::zero(a.front().dim());
    for (const auto& aj : a) {
        HermitianMatrix::check_same_dim(aj, sum, where);
        sum += square(aj);
    }
    return sum;
}

inline void check_d(Index d, const char* where) {
    if (d < 1) {
        throw PreconditionError(std::string(where) + ": d must be >= 1");
    }
}

}  // namespace detail

struct BddDiffBound {
    double sigma2 = 0.0;
    double tail = 0.0;
    double mean_bound = 0.0;
};

/// sigma^2 = ||sum A_j^2||; P(lambda_max(H - EH) >= t) <= d exp(-t^2/sigma^2);
/// E lambda_max(H - EH) <= sigma sqrt(log d).
inline BddDiffBound bdd_diff_bound_sigma2(double sigma2, Index d, double t) {
    detail::check_d(d, "bdd_diff_bound");
    detail::check_t(t, "bdd_diff_bound");
    BddDiffBound out;
    out.sigma2 = sigma2;
    out.tail = static_cast<double>(d) * std::exp(-t * t / sigma2);
    out.mean_bound = std::sqrt(sigma2 * std::log(static_cast<double>(d)));
    return out;
}

inline double sigma_squared(const std::vector<HermitianMatrix>& a) {
    return lambda_max(detail::sum_of_squares(a, "sigma_squared"));
}

inline BddDiffBound bdd_diff_bound(const std::vector<HermitianMatrix>& a, Index d, double t) {
    return bdd_diff_bound_sigma2(sigma_squared(a), d, t);
}

// ---------------------------------------------------------------------------
// Dobrushin bounded differences

struct DobrushinBound {
    double norm1 = 0.0;
    double norm_inf = 0.0;
    double b = 1.0;
    double sigma2 = 0.0;
    double tail = 0.0;
    double mean_bound = 0.0;
};

namespace detail {

inline void check_dobrushin_matrix(const Eigen::SparseMatrix<double>& dm, const char* where) {
    if (dm.rows() != dm.cols()) {
        throw PreconditionError(std::string(where) + ": D must be square");
    }
    for (int k = 0; k < dm.outerSize(); ++k) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(dm, k); it; ++it) {
            if (it.value() < 0.0) {
                throw PreconditionError(std::string(where) + ": D must be entrywise nonnegative");
            }
            if (it.row() == it.col() && it.value() != 0.0) {
                throw PreconditionError(std::string(where) + ": D must have a zero diagonal");
            }
        }
    }
}

}  // namespace detail

/// b = [1 - (|||D|||_1 + |||D|||_inf)/2]^{-1}, requiring max{|||D|||_1, |||D|||_inf} < 1.
inline double dobrushin_b(double norm1, double norm_inf) {
    if (!(norm1 < 1.0)) {
        std::ostringstream msg;
        msg << "Dobrushin condition violated: |||D|||_1 = " << norm1 << " >= 1";
        throw DobrushinConditionError(msg.str());
    }
    if (!(norm_inf < 1.0)) {
        std::ostringstream msg;
        msg << "Dobrushin condition violated: |||D|||_inf = " << norm_inf << " >= 1";
        throw DobrushinConditionError(msg.str());
    }
    return 1.0 / (1.0 - 0.5 * (norm1 + norm_inf));
}

/// P(lambda_max(H - EH) >= t) <= d exp(-t^2/(b sigma^2)); E lambda_max <= sigma sqrt(b log d).
inline DobrushinBound dobrushin_bound_sigma2(const Eigen::SparseMatrix<double>& dm, double sigma2, Index d,
                                             double t) {
    detail::check_dobrushin_matrix(dm, "dobrushin_bound");
    detail::check_d(d, "dobrushin_bound");
    detail::check_t(t, "dobrushin_bound");
    DobrushinBound out;
    out.norm1 = induced_norm(dm, 1.0);
    out.norm_inf = induced_norm(dm, std::numeric_limits<double>::infinity());
    out.b = dobrushin_b(out.norm1, out.norm_inf);
    out.sigma2 = sigma2;
    out.tail = static_cast<double>(d) * std::exp(-t * t / (out.b * sigma2));
    out.mean_bound = std::sqrt(sigma2 * out.b * std::log(static_cast<double>(d)));
    return out;
}

inline DobrushinBound dobrushin_bound(const Eigen::SparseMatrix<double>& dm, const std::vector<HermitianMatrix>& a,
                                      Index d, double t) {
    if (static_cast<Index>(a.size()) != dm.rows()) {
        throw PreconditionError("dobrushin_bound: need one A_j per row of D");
    }
    return dobrushin_bound_sigma2(dm, sigma_squared(a), d, t);
}

inline DobrushinBound dobrushin_bound(const RealMatrix& dm, const std::vector<HermitianMatrix>& a, Index d, double t) {
    return dobrushin_bound(Eigen::SparseMatrix<double>(dm.sparseView()), a, d, t);
}

/// B = (1 - 1/n) I + D/n.
inline RealMatrix chain_matrix(const RealMatrix& dm, Index n) {
    if (dm.rows() != n || dm.cols() != n) {
        throw PreconditionError("chain_matrix: D must be n x n");
    }
    if ((dm.array() < 0.0).any() || dm.diagonal().cwiseAbs().maxCoeff() != 0.0) {
        throw PreconditionError("chain_matrix: D must be nonnegative with zero diagonal");
    }
    const double nn = static_cast<double>(n);
    return (1.0 - 1.0 / nn) * RealMatrix::Identity(n, n) + dm / nn;
}

// ---------------------------------------------------------------------------
// Polynomial moments

/// One outcome: X with its conditional variances and a probability weight.
struct BdgSample {
    HermitianMatrix x;
    HermitianMatrix v_x;
    HermitianMatrix v_k;
    double weight = 1.0;
};

struct BdgResult {
    int p = 1;
    double s = 1.0;
    double lhs = 0.0;
    double rhs = 0.0;
    double lhs_se = 0.0;
    double rhs_se = 0.0;
    bool exact = false;
    bool holds = false;
};

/// lhs = (E ||X||_{2p}^{2p})^{1/2p}, rhs = sqrt(2p - 1) (E ||(s V_X + s^{-1} V^K)/2||_p^p)^{1/2p}.
/// With exact = true the samples are a weighted enumeration and the verdict
/// allows only rounding (1e-12 relative); otherwise samples are equally
/// weighted Monte Carlo draws and the verdict allows 3 SE (delta method on
/// batch means).
inline BdgResult bdg_bound(int p, double s, std::span<const BdgSample> samples, bool exact) {
    if (p < 1) {
        throw PreconditionError("bdg_bound: p must be >= 1");
    }
    if (!(s > 0.0) || std::isinf(s)) {
        throw PreconditionError("bdg_bound: s must be positive and finite");
    }
    if (samples.empty()) {
        throw PreconditionError("bdg_bound: no samples");
    }
    std::vector<double> a;
    std::vector<double> b;
    double wsum = 0.0;
    double asum = 0.0;
    double bsum = 0.0;
    for (const auto& smp : samples) {
        const double na = std::pow(schatten_norm(smp.x, 2.0 * p), 2.0 * p);
        const HermitianMatrix mix = 0.5 * (s * smp.v_x + (1.0 / s) * smp.v_k);
        const double nb = std::pow(schatten_norm(mix, static_cast<double>(p)), static_cast<double>(p));
        a.push_back(na);
        b.push_back(nb);
        wsum += smp.weight;
        asum += smp.weight * na;
        bsum += smp.weight * nb;
    }
    BdgResult out;
    out.p = p;
    out.s = s;
    out.exact = exact;
    const double ma = asum / wsum;
    const double mb = bsum / wsum;
    const double inv = 1.0 / (2.0 * p);
    out.lhs = std::pow(ma, inv);
    out.rhs = std::sqrt(2.0 * p - 1.0) * std::pow(mb, inv);
    if (exact) {
        out.holds = out.lhs <= out.rhs * (1.0 + 1e-12);
        return out;
    }
    const MeanSe sa = batch_means(std::span<const double>(a));
    const MeanSe sb = batch_means(std::span<const double>(b));
    out.lhs_se = ma > 0.0 ? inv * std::pow(ma, inv - 1.0) * sa.se : 0.0;
    out.rhs_se = mb > 0.0 ? std::sqrt(2.0 * p - 1.0) * inv * std::pow(mb, inv - 1.0) * sb.se : 0.0;
    out.holds = out.lhs <= out.rhs + 3.0 * std::hypot(out.lhs_se, out.rhs_se);
    return out;
}

// ---------------------------------------------------------------------------
// Rademacher series, the reference bounded-differences model

/// X = sum_j eps_j G_j with independent signs. Replacing eps_j by a fresh sign
/// changes X by 0 or 2 eps_j G_j, so A_j = 2 G_j; the kernel of the
/// independent-coordinates coupling is n (X - X'), which gives
/// V_X = (1/n) sum G_j^2 and V^K = n sum G_j^2 for every outcome.
struct RademacherSeries {
    std::vector<HermitianMatrix> g;

    Index n() const { return static_cast<Index>(g.size()); }
    Index dim() const { return g.front().dim(); }

    HermitianMatrix value(const std::vector<double>& eps) const {
        HermitianMatrix out = HermitianMatrix::zero(dim());
        for (std::size_t j = 0; j < g.size(); ++j) {
            out += eps[j] * g[j];
        }
        return out;
    }

    HermitianMatrix sample(Rng& rng) const {
        HermitianMatrix out = HermitianMatrix::zero(dim());
        for (const auto& gj : g) {
            out += rademacher(rng) * gj;
        }
        return out;
    }

    std::vector<HermitianMatrix> difference_bounds() const {
        std::vector<HermitianMatrix> a;
        for (const auto& gj : g) {
            a.push_back(2.0 * gj);
        }
        return a;
    }

    double sigma2() const { return sigma_squared(difference_bounds()); }

    HermitianMatrix v_x() const { return (1.0 / static_cast<double>(n())) * detail::sum_of_squares(g, "v_x"); }
    HermitianMatrix v_k() const { return static_cast<double>(n()) * detail::sum_of_squares(g, "v_k"); }

    /// All 2^n sign patterns with weight 2^{-n}.
    std::vector<BdgSample> enumerate() const {
        if (n() > 20) {
            throw PreconditionError("RademacherSeries::enumerate: at most 20 coordinates");
        }
        const std::size_t count = std::size_t{1} << static_cast<std::size_t>(n());
        const HermitianMatrix vx = v_x();
        const HermitianMatrix vk = v_k();
        std::vector<BdgSample> out;
        out.reserve(count);
        std::vector<double> eps(g.size());
        for (std::size_t mask = 0; mask < count; ++mask) {
            for (std::size_t j = 0; j < g.size(); ++j) {
                eps[j] = ((mask >> j) & 1U) != 0U ? 1.0 : -1.0;
            }
            out.push_back({value(eps), vx, vk, 1.0 / static_cast<double>(count)});
        }
        return out;
    }

    static RademacherSeries random(Index n, Index d, Rng& rng, double scale = 1.0) {
        RademacherSeries r;
        for (Index j = 0; j < n; ++j) {
            r.g.push_back(random_hermitian(d, rng, scale));
        }
        return r;
    }

};

// ---------------------------------------------------------------------------
// Trace mgf

struct MgfPoint {
    double theta = 0.0;
    double m_hat = 1.0;
    double se = 0.0;
    double log_m = 0.0;
    double log_se = 0.0;  // se / m_hat
};

/// m_hat(theta) = mean over samples of (1/d) tr exp(theta X), with batch-means SE.
inline std::vector<MgfPoint> trace_mgf_estimate(std::span<const HermitianMatrix> xs, const std::vector<double>& grid) {
    if (xs.empty()) {
        throw PreconditionError("trace_mgf_estimate: no samples");
    }
    std::vector<RealVector> eig;
    eig.reserve(xs.size());
    for (const auto& x : xs) {
        eig.push_back(eigenvalues(x));
    }
    std::vector<MgfPoint> out;
    std::vector<double> vals(xs.size());
    for (double theta : grid) {
        for (std::size_t i = 0; i < xs.size(); ++i) {
            vals[i] = (theta * eig[i].array()).exp().mean();
        }
        const MeanSe ms = batch_means(std::span<const double>(vals));
        MgfPoint pt;
        pt.theta = theta;
        pt.m_hat = ms.mean;
        pt.se = ms.se;
        pt.log_m = std::log(ms.mean);
        pt.log_se = ms.se / ms.mean;
        out.push_back(pt);
    }
    return out;
}

enum class MgfBoundForm { tight, relaxed };

/// Upper bound on log m(theta): v theta^2/2 for theta <= 0; for 0 <= theta < 1/c
/// either (v/c^2)[log(1/(1 - c theta)) - c theta] (tight) or
/// v theta^2 / (2(1 - c theta)) (relaxed). With c = 0 both reduce to v theta^2/2.
inline double mgf_log_bound(const TailBoundParams& p, double theta, MgfBoundForm form = MgfBoundForm::tight) {
    p.validate();
    if (theta <= 0.0 || p.c == 0.0) {
        return 0.5 * p.v * theta * theta;
    }
    const double y = p.c * theta;
    if (!(y < 1.0)) {
        std::ostringstream msg;
        msg << "mgf_log_bound: theta = " << theta << " must be < 1/c = " << 1.0 / p.c;
        throw PreconditionError(msg.str());
    }
    if (form == MgfBoundForm::relaxed) {
        return p.v * theta * theta / (2.0 * (1.0 - y));
    }
    return p.v * theta * theta * detail::mgf_rate(y);
}

// ---------------------------------------------------------------------------
// Laplace transform optimization

enum class TailBranch { upper, lower };

struct LaplaceResult {
    double value = 0.0;  // d exp(-theta t + log_bound(theta)) at the optimum
    double theta = 0.0;
};

/// Golden-section tolerance on theta.
inline constexpr double laplace_tolerance = 1e-10;

/// upper: inf_{theta > 0} d exp(-theta t + L(theta)) bounds P(lambda_max >= t);
/// lower: inf_{theta < 0} d exp(-theta t + L(theta)) bounds P(lambda_min <= t).
/// The search runs over [0, 0.999/c] (or [0, 1e6] when c = 0), mirrored for the
/// lower branch. An optimum at the far end of the bracket is a bracketing failure.
inline LaplaceResult laplace_optimize(const std::function<double(double)>& log_bound, Index d, double t,
                                      TailBranch branch, double c = 0.0) {
    if (d < 1) {
        throw PreconditionError("laplace_optimize: d must be >= 1");
    }
    if (!(c >= 0.0)) {
        throw PreconditionError("laplace_optimize: c must be >= 0");
    }
    const double hi = c > 0.0 ? 0.999 / c : 1e6;
    const double sign = branch == TailBranch::upper ? 1.0 : -1.0;
    auto f = [&](double u) {
        const double theta = sign * u;
        return -theta * t + log_bound(theta);
    };
    constexpr double inv_phi = 0.61803398874989484820;
    double a = 0.0;
    double b = hi;
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    double f1 = f(x1);
    double f2 = f(x2);
    while (b - a > laplace_tolerance * std::max(1.0, std::abs(x1))) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        }
    }
    double u = 0.5 * (a + b);
    double fu = f(u);
    const double f0 = f(0.0);
    if (f0 <= fu) {
        u = 0.0;
        fu = f0;
    }
    if (hi - u <= 1e3 * laplace_tolerance * std::max(1.0, hi)) {
        std::ostringstream msg;
        msg << "laplace_optimize: optimum at the end of the scanned interval [0, " << hi << "]";
        throw ConvergenceError(msg.str());
    }
    return {static_cast<double>(d) * std::exp(fu), sign * u};
}

// ---------------------------------------------------------------------------
// Empirical tails

/// Fraction of values >= t.
inline double empirical_exceedance(std::span<const double> values, double t) {
    if (values.empty()) {
        throw PreconditionError("empirical_exceedance: no values");
    }
    std::size_t count = 0;
    for (double v : values) {
        count += v >= t ? 1 : 0;
    }
    return static_cast<double>(count) / static_cast<double>(values.size());
}

/// Evenly spaced grid of `points` values in [lo, hi].
inline std::vector<double> linear_grid(double lo, double hi, std::size_t points) {
    if (points < 2) {
        return {lo};
    }
    std::vector<double> g(points);
    for (std::size_t i = 0; i < points; ++i) {
        g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
    }
    return g;
}

// ---------------------------------------------------------------------------
// JSON

inline json to_json(const TailBoundParams& p) {
    return json{{"c", p.c}, {"v", p.v}, {"s", p.s}, {"d", p.d}};
}

inline json to_json(const BdgResult& r) {
    return json{{"p", r.p},           {"s", r.s},           {"lhs", r.lhs},     {"rhs", r.rhs},
                {"lhs_se", r.lhs_se}, {"rhs_se", r.rhs_se}, {"exact", r.exact}, {"holds", r.holds}};
}

inline json to_json(const DobrushinBound& b) {
    return json{{"norm1", b.norm1}, {"norm_inf", b.norm_inf},      {"b", b.b},
                {"sigma2", b.sigma2}, {"tail", b.tail}, {"mean_bound", b.mean_bound}};
}

}  // namespace matconc
