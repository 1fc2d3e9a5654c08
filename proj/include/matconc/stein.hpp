#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Sparse>

#include "matconc/hermitian.hpp"
#include "matconc/parallel.hpp"
#include "matconc/report.hpp"
#include "matconc/rng.hpp"
#include "matconc/stats.hpp"

namespace matconc {

// ---------------------------------------------------------------------------
// Model interface

/// An exchangeable pair (Z, Z') together with a kernel coupling and a matrix
/// map Psi.
///   sample_state(rng)          Z from its law
///   exchange_step(z, rng)      one draw of Z' given Z = z
///   coupled_step(z, w, rng)    advances both chains of the kernel coupling in
///                              place; equal states stay equal, and swapping
///                              (z, w) with the same randomness swaps the result
///   psi(z)                     centered map with E Psi(Z) = 0
///   contraction()              c with ||E[Psi(Z_i) - Psi(Z'_i)]|| <= L c^i
///   step_bound()               L
///   dim()                      dimension of Psi
template <class M>
concept ExchangeablePairModel = requires(const M& m, typename M::State& z, const typename M::State& cz, Rng& rng) {
    typename M::State;
    requires std::equality_comparable<typename M::State>;
    { m.sample_state(rng) } -> std::same_as<typename M::State>;
    { m.exchange_step(cz, rng) } -> std::same_as<typename M::State>;
    { m.coupled_step(z, z, rng) } -> std::same_as<void>;
    { m.psi(cz) } -> std::convertible_to<HermitianMatrix>;
    { m.contraction() } -> std::convertible_to<double>;
    { m.step_bound() } -> std::convertible_to<double>;
    { m.dim() } -> std::convertible_to<Index>;
};

// ---------------------------------------------------------------------------
// Independent coordinates

/// Z = (Z_1, ..., Z_n) with independent coordinates of an arbitrary
/// equality-comparable token type. Z' replaces one uniformly chosen
/// coordinate by a fresh draw; the coupling replaces the same coordinate of
/// both chains by the same fresh draw.
template <class Token>
class IndependentCoordinatesModel {
public:
    using State = std::vector<Token>;
    using CoordinateSampler = std::function<Token(Index, Rng&)>;
    using MatrixMap = std::function<HermitianMatrix(const State&)>;

    IndependentCoordinatesModel(Index n, Index d, CoordinateSampler sampler, MatrixMap h)
        : n_(n), d_(d), sampler_(std::move(sampler)), h_(std::move(h)), center_(HermitianMatrix::zero(d)) {
        if (n < 1 || d < 1) {
            throw PreconditionError("IndependentCoordinatesModel: n and d must be >= 1");
        }
    }

    Index n() const noexcept { return n_; }
    Index dim() const noexcept { return d_; }

    /// Bounds with (H(z) - H(z with z_j replaced))^2 <= A_j^2; fixes L = max ||A_j||.
    void set_bounds(std::vector<HermitianMatrix> a) {
        if (static_cast<Index>(a.size()) != n_) {
            throw PreconditionError("IndependentCoordinatesModel::set_bounds: need one bound per coordinate");
        }
        double l = 0.0;
        for (const auto& aj : a) {
            if (aj.dim() != d_) {
                throw PreconditionError("IndependentCoordinatesModel::set_bounds: dimension mismatch");
            }
            l = std::max(l, operator_norm(aj));
        }
        bounds_ = std::move(a);
        step_bound_ = l;
    }
    const std::vector<HermitianMatrix>& bounds() const noexcept { return bounds_; }

    void set_step_bound(double l) { step_bound_ = l; }
    void set_center(HermitianMatrix c) {
        HermitianMatrix::check_same_dim(c, center_, "IndependentCoordinatesModel::set_center");
        center_ = std::move(c);
    }
    const HermitianMatrix& center() const noexcept { return center_; }

    HermitianMatrix h(const State& z) const { return h_(z); }

    State sample_state(Rng& rng) const {
        State z;
        z.reserve(static_cast<std::size_t>(n_));
        for (Index j = 0; j < n_; ++j) {
            z.push_back(sampler_(j, rng));
        }
        return z;
    }

    State exchange_step(const State& z, Rng& rng) const {
        State out = z;
        const auto j = static_cast<Index>(uniform_index(rng, static_cast<std::uint64_t>(n_)));
        out[static_cast<std::size_t>(j)] = sampler_(j, rng);
        return out;
    }

    void coupled_step(State& z, State& w, Rng& rng) const {
        const auto j = static_cast<Index>(uniform_index(rng, static_cast<std::uint64_t>(n_)));
        Token fresh = sampler_(j, rng);
        w[static_cast<std::size_t>(j)] = fresh;
        z[static_cast<std::size_t>(j)] = std::move(fresh);
    }

    HermitianMatrix psi(const State& z) const { return h_(z) - center_; }
    double contraction() const noexcept { return 1.0 - 1.0 / static_cast<double>(n_); }
    double step_bound() const noexcept { return step_bound_; }

private:
    Index n_;
    Index d_;
    CoordinateSampler sampler_;
    MatrixMap h_;
    HermitianMatrix center_;
    std::vector<HermitianMatrix> bounds_;
    double step_bound_ = 1.0;
};

/// (1/2n) sum A_j^2 and (n/2) sum A_j^2: the conditional-variance bounds for
/// independent coordinates.
inline std::pair<HermitianMatrix, HermitianMatrix> independent_coordinate_bounds(
    const std::vector<HermitianMatrix>& a) {
    if (a.empty()) {
        throw PreconditionError("independent_coordinate_bounds: empty bound list");
    }
    HermitianMatrix sum = HermitianMatrix::zero(a.front().dim());
    for (const auto& aj : a) {
        sum += square(aj);
    }
    const double n = static_cast<double>(a.size());
    return {(0.5 / n) * sum, (0.5 * n) * sum};
}

/// Generic conditional-variance bounds from per-step constants s_i and Gamma:
/// (1/2) s_0^2 Gamma and (1/2) (sum s_i)^2 Gamma.
inline std::pair<HermitianMatrix, HermitianMatrix> step_sequence_bounds(double s0, double sum_s,
                                                                        const HermitianMatrix& gamma) {
    return {(0.5 * s0 * s0) * gamma, (0.5 * sum_s * sum_s) * gamma};
}

// ---------------------------------------------------------------------------
// Dobrushin model (finite single-site support)

/// Total variation distance between two probability vectors on the same support.
inline double total_variation(const std::vector<double>& p, const std::vector<double>& q) {
    if (p.size() != q.size()) {
        throw PreconditionError("total_variation: support size mismatch");
    }
    double s = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
        s += std::abs(p[k] - q[k]);
    }
    return 0.5 * s;
}

namespace detail {

/// Index k with cumulative mass crossing u * total.
inline std::size_t inverse_cdf(const std::vector<double>& w, double u) {
    double total = 0.0;
    for (double x : w) {
        total += x;
    }
    double target = u * total;
    for (std::size_t k = 0; k < w.size(); ++k) {
        if (target < w[k]) {
            return k;
        }
        target -= w[k];
    }
    // Rounding left u * total at the top; return the last atom with mass.
    for (std::size_t k = w.size(); k-- > 0;) {
        if (w[k] > 0.0) {
            return k;
        }
    }
    return w.size() - 1;
}

}  // namespace detail

/// Maximal coupling of two laws p, q on a finite support driven by two
/// uniforms: with probability 1 - TV(p, q) (decided by u1) both take the same
/// value from the overlap min(p, q); otherwise each takes its value from its
/// own residual, and the residuals have disjoint supports. Swapping p and q
/// swaps the outputs.
inline std::pair<std::size_t, std::size_t> maximal_coupling_draw(const std::vector<double>& p,
                                                                 const std::vector<double>& q, double u1, double u2) {
    std::vector<double> overlap(p.size());
    double w = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
        overlap[k] = std::min(p[k], q[k]);
        w += overlap[k];
    }
    if (u1 < w || w >= 1.0 - 1e-15) {
        const std::size_t k = detail::inverse_cdf(overlap, u2);
        return {k, k};
    }
    std::vector<double> rp(p.size());
    std::vector<double> rq(p.size());
    for (std::size_t k = 0; k < p.size(); ++k) {
        rp[k] = p[k] - overlap[k];
        rq[k] = q[k] - overlap[k];
    }
    return {detail::inverse_cdf(rp, u2), detail::inverse_cdf(rq, u2)};
}

/// Z = (Z_1, ..., Z_n) with values in a finite support and single-site
/// conditionals mu_i(. | z_{-i}). Z' resamples one uniformly chosen site from
/// its conditional (heat bath); the coupling resamples the same site in both
/// chains from a maximal coupling of the two conditionals.
class DobrushinModel {
public:
    using State = std::vector<int>;
    /// Probabilities over `support` of site i given the rest of z.
    using Conditional = std::function<std::vector<double>(const State&, Index)>;
    using MatrixMap = std::function<HermitianMatrix(const State&)>;

    DobrushinModel(std::vector<int> support, Index n, Conditional conditional, Eigen::SparseMatrix<double> d_matrix,
                   Index d, MatrixMap h)
        : support_(std::move(support)), n_(n), conditional_(std::move(conditional)), dmat_(std::move(d_matrix)),
          d_(d), h_(std::move(h)), center_(HermitianMatrix::zero(d)) {
        if (support_.empty() || n_ < 1 || d_ < 1) {
            throw PreconditionError("DobrushinModel: empty support or nonpositive dimension");
        }
        if (dmat_.rows() != n_ || dmat_.cols() != n_) {
            throw PreconditionError("DobrushinModel: D must be n x n");
        }
        for (int k = 0; k < dmat_.outerSize(); ++k) {
            for (Eigen::SparseMatrix<double>::InnerIterator it(dmat_, k); it; ++it) {
                if (it.value() < 0.0 || (it.row() == it.col() && it.value() != 0.0)) {
                    throw PreconditionError("DobrushinModel: D must be nonnegative with zero diagonal");
                }
            }
        }
        d_norm1_ = induced_norm(dmat_, 1.0);
        burn_in_sweeps_ = 0;
    }

    Index n() const noexcept { return n_; }
    Index dim() const noexcept { return d_; }
    const std::vector<int>& support() const noexcept { return support_; }
    const Eigen::SparseMatrix<double>& dobrushin_matrix() const noexcept { return dmat_; }

    void set_step_bound(double l) { step_bound_ = l; }
    void set_center(HermitianMatrix c) {
        HermitianMatrix::check_same_dim(c, center_, "DobrushinModel::set_center");
        center_ = std::move(c);
    }
    const HermitianMatrix& center() const noexcept { return center_; }
    /// Sweeps of heat-bath updates applied to a uniform start by sample_state.
    void set_burn_in_sweeps(std::size_t sweeps) { burn_in_sweeps_ = sweeps; }
    std::size_t burn_in_sweeps() const noexcept { return burn_in_sweeps_; }

    std::vector<double> conditional(const State& z, Index i) const {
        std::vector<double> p = conditional_(z, i);
        if (p.size() != support_.size()) {
            throw PreconditionError("DobrushinModel: conditional has the wrong support size");
        }
        return p;
    }

    HermitianMatrix h(const State& z) const { return h_(z); }

    State sample_state(Rng& rng) const {
        State z(static_cast<std::size_t>(n_));
        for (auto& x : z) {
            x = support_[uniform_index(rng, support_.size())];
        }
        for (std::size_t s = 0; s < burn_in_sweeps_; ++s) {
            for (Index k = 0; k < n_; ++k) {
                heat_bath(z, rng);
            }
        }
        return z;
    }

    State exchange_step(const State& z, Rng& rng) const {
        State out = z;
        heat_bath(out, rng);
        return out;
    }

    void coupled_step(State& z, State& w, Rng& rng) const {
        const auto i = static_cast<Index>(uniform_index(rng, static_cast<std::uint64_t>(n_)));
        const double u1 = uniform01(rng);
        const double u2 = uniform01(rng);
        const auto [a, b] = coupled_site_draw(z, w, i, u1, u2);
        z[static_cast<std::size_t>(i)] = a;
        w[static_cast<std::size_t>(i)] = b;
    }

    /// Maximally coupled replacement values for site i of x and y.
    std::pair<int, int> coupled_site_draw(const State& x, const State& y, Index i, double u1, double u2) const {
        if (x == y) {
            const int v = support_[detail::inverse_cdf(conditional(x, i), u2)];
            return {v, v};
        }
        const auto [a, b] = maximal_coupling_draw(conditional(x, i), conditional(y, i), u1, u2);
        return {support_[a], support_[b]};
    }

    HermitianMatrix psi(const State& z) const { return h_(z) - center_; }
    /// |||B|||_1 = 1 - (1 - |||D|||_1)/n for B = (1 - 1/n) I + D/n.
    double contraction() const noexcept { return 1.0 - (1.0 - d_norm1_) / static_cast<double>(n_); }
    double step_bound() const noexcept { return step_bound_; }

private:
    void heat_bath(State& z, Rng& rng) const {
        const auto i = static_cast<Index>(uniform_index(rng, static_cast<std::uint64_t>(n_)));
        const double u = uniform01(rng);
        z[static_cast<std::size_t>(i)] = support_[detail::inverse_cdf(conditional(z, i), u)];
    }

    std::vector<int> support_;
    Index n_;
    Conditional conditional_;
    Eigen::SparseMatrix<double> dmat_;
    Index d_;
    MatrixMap h_;
    HermitianMatrix center_;
    double d_norm1_ = 0.0;
    double step_bound_ = 1.0;
    std::size_t burn_in_sweeps_ = 0;
};

/// Result of checking TV(mu_i(.|x), mu_i(.|y)) <= sum_j D_ij 1[x_j != y_j]
/// on random state pairs.
struct DobrushinSpotCheck {
    std::size_t checks = 0;
    std::size_t failures = 0;
    double max_excess = -std::numeric_limits<double>::infinity();  // max of tv - bound
    bool passed() const { return failures == 0; }
};

inline DobrushinSpotCheck dobrushin_spot_check(const DobrushinModel& model, std::size_t checks, std::uint64_t seed) {
    DobrushinSpotCheck out;
    const Eigen::SparseMatrix<double, Eigen::RowMajor> d = model.dobrushin_matrix();
    for (std::size_t t = 0; t < checks; ++t) {
        Rng rng = make_rng(seed, t, 0xD0B);
        DobrushinModel::State x(static_cast<std::size_t>(model.n()));
        for (auto& v : x) {
            v = model.support()[uniform_index(rng, model.support().size())];
        }
        DobrushinModel::State y = x;
        const double flip_rate = uniform01(rng);
        for (auto& v : y) {
            if (uniform01(rng) < flip_rate) {
                v = model.support()[uniform_index(rng, model.support().size())];
            }
        }
        const auto i = static_cast<Index>(uniform_index(rng, static_cast<std::uint64_t>(model.n())));
        double bound = 0.0;
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(d, i); it; ++it) {
            if (x[static_cast<std::size_t>(it.col())] != y[static_cast<std::size_t>(it.col())]) {
                bound += it.value();
            }
        }
        const double tv = total_variation(model.conditional(x, i), model.conditional(y, i));
        const double excess = tv - bound;
        out.max_excess = std::max(out.max_excess, excess);
        out.failures += excess > 1e-12 ? 1 : 0;
        ++out.checks;
    }
    return out;
}

/// Empirical disagreement frequency of coupled replacement draws at site i
/// versus the exact total variation of the two conditionals.
struct CouplingDisagreement {
    double tv = 0.0;
    double frequency = 0.0;
    double se = 0.0;
    std::size_t trials = 0;
    bool within(double k_se) const { return std::abs(frequency - tv) <= k_se * se + 1e-12; }
};

inline CouplingDisagreement maximal_coupling_check(const DobrushinModel& model, const DobrushinModel::State& x,
                                                   const DobrushinModel::State& y, Index i, std::size_t trials,
                                                   std::uint64_t seed) {
    if (trials < 2) {
        throw PreconditionError("maximal_coupling_check: trials must be >= 2");
    }
    Rng rng = make_rng(seed, 0, 0xC0);
    std::size_t differ = 0;
    for (std::size_t t = 0; t < trials; ++t) {
        const double u1 = uniform01(rng);
        const double u2 = uniform01(rng);
        const auto [a, b] = model.coupled_site_draw(x, y, i, u1, u2);
        differ += a != b ? 1 : 0;
    }
    CouplingDisagreement out;
    out.trials = trials;
    out.tv = total_variation(model.conditional(x, i), model.conditional(y, i));
    out.frequency = static_cast<double>(differ) / static_cast<double>(trials);
    // Binomial SE at the exact probability, so a zero-variance case is exact.
    out.se = std::sqrt(out.tv * (1.0 - out.tv) / static_cast<double>(trials));
    return out;
}

// ---------------------------------------------------------------------------
// Kernel estimation

struct KernelOptions {
    /// Stop once L c^k / (1 - c) < tail_tol. Nonpositive means 1e-3 * L.
    double tail_tol = 0.0;
    std::size_t max_steps = 100000;
    /// Independent coupled-chain replicas averaged per step.
    std::size_t replicas = 64;
};

struct KernelEstimate {
    HermitianMatrix value;
    std::size_t steps_used = 0;
    /// Bound on the norm of the omitted terms; 0 once every replica coalesced.
    double truncation_bound = 0.0;
    /// False when max_steps ended the sum before the tail bound fell below tail_tol.
    bool converged = true;
};

namespace detail {

/// L c^k / (1 - c); infinite when c >= 1.
inline double geometric_tail(double l, double c, std::size_t k) {
    if (c <= 0.0) {
        return k == 0 ? l : 0.0;
    }
    if (c >= 1.0) {
        return std::numeric_limits<double>::infinity();
    }
    return l * std::pow(c, static_cast<double>(k)) / (1.0 - c);
}

}  // namespace detail

/// Monte Carlo estimate of K(z, z') = sum_i E[Psi(Z_i) - Psi(Z'_i) | Z_0 = z, Z'_0 = z'].
/// Replicas of the coupled chains share the step index (common random numbers
/// across i within a replica). Running the same rng on (z', z) yields exactly
/// the negated estimate.
template <ExchangeablePairModel M>
KernelEstimate estimate_kernel(const M& model, const typename M::State& z, const typename M::State& zp,
                               const KernelOptions& opts, Rng& rng) {
    if (opts.replicas < 1) {
        throw PreconditionError("estimate_kernel: replicas must be >= 1");
    }
    const double l = model.step_bound();
    const double c = model.contraction();
    const double tol = opts.tail_tol > 0.0 ? opts.tail_tol : 1e-3 * l;
    KernelEstimate out;
    out.value = HermitianMatrix::zero(model.dim());
    if (z == zp) {
        out.steps_used = 0;
        out.truncation_bound = 0.0;
        return out;
    }
    const std::size_t r = opts.replicas;
    std::vector<typename M::State> xs(r, z);
    std::vector<typename M::State> ys(r, zp);
    std::vector<bool> merged(r, false);
    GeneralMatrix sum = (model.psi(z) - model.psi(zp)).matrix();  // term i = 0
    std::size_t k = 1;
    std::size_t live = r;
    while (true) {
        if (live == 0) {
            out.truncation_bound = 0.0;
            break;
        }
        out.truncation_bound = detail::geometric_tail(l, c, k);
        if (out.truncation_bound < tol) {
            break;
        }
        if (k >= opts.max_steps) {
            out.converged = false;
            break;
        }
        GeneralMatrix term = GeneralMatrix::Zero(model.dim(), model.dim());
        for (std::size_t j = 0; j < r; ++j) {
            if (merged[j]) {
                continue;
            }
            model.coupled_step(xs[j], ys[j], rng);
            if (xs[j] == ys[j]) {
                merged[j] = true;
                --live;
                continue;
            }
            term += (model.psi(xs[j]) - model.psi(ys[j])).matrix();
        }
        sum += term / static_cast<double>(r);
        ++k;
    }
    out.steps_used = k;
    out.value = HermitianMatrix::hermitian_part(sum);
    return out;
}

// ---------------------------------------------------------------------------
// Conditional variances

struct DominanceCheck {
    std::string name;
    HermitianMatrix bound;
    double slack = 0.0;  // k * SE added to the bound
    PsdVerdict verdict;
};

struct ConditionalVarianceReport {
    HermitianMatrix v_x_hat;
    HermitianMatrix v_k_hat;
    double v_x_se = 0.0;
    double v_k_se = 0.0;
    std::size_t trials = 0;
    double standard_error_scale = 0.0;  // max(v_x_se, v_k_se)
    std::size_t kernel_steps_max = 0;
    bool kernels_converged = true;
    std::vector<DominanceCheck> dominance;

    bool all_hold() const {
        return std::all_of(dominance.begin(), dominance.end(), [](const DominanceCheck& d) { return d.verdict.holds; });
    }
};

/// Standard-error multiple used by every Monte Carlo verdict.
inline constexpr double se_slack = 3.0;

/// Checks v_hat <= bound + k * se * I.
inline DominanceCheck dominance_check(std::string name, const HermitianMatrix& v_hat, const HermitianMatrix& bound,
                                      double se, double k = se_slack) {
    DominanceCheck out;
    out.name = std::move(name);
    out.bound = bound;
    out.slack = k * se;
    out.verdict = psd_leq(v_hat, bound + out.slack * HermitianMatrix::identity(bound.dim()), 1e-12);
    return out;
}

/// Estimates V_X(z) = (1/2) E[(Psi(z) - Psi(Z'))^2 | Z = z] and
/// V^K(z) = (1/2) E[K(z, Z')^2 | Z = z] from `trials` draws of Z'. Trial t uses
/// substream (seed, t). The bounds named x_bound/k_bound are checked with
/// 3 SE slack when given.
template <ExchangeablePairModel M>
ConditionalVarianceReport estimate_conditional_variances(const M& model, const typename M::State& z,
                                                         std::size_t trials, const KernelOptions& opts,
                                                         std::uint64_t seed, unsigned threads = 1,
                                                         const HermitianMatrix* x_bound = nullptr,
                                                         const HermitianMatrix* k_bound = nullptr) {
    if (trials < 2) {
        throw PreconditionError("estimate_conditional_variances: trials must be >= 2");
    }
    std::vector<HermitianMatrix> vx(trials);
    std::vector<HermitianMatrix> vk(trials);
    std::vector<std::size_t> steps(trials);
    std::vector<char> conv(trials);
    const HermitianMatrix psi_z = model.psi(z);
    parallel_for(trials, threads, [&](std::size_t t) {
        Rng rng = make_rng(seed, t, 0xCF);
        const auto zp = model.exchange_step(z, rng);
        const HermitianMatrix diff = psi_z - model.psi(zp);
        vx[t] = 0.5 * square(diff);
        const KernelEstimate ke = estimate_kernel(model, z, zp, opts, rng);
        vk[t] = 0.5 * square(ke.value);
        steps[t] = ke.steps_used;
        conv[t] = ke.converged ? 1 : 0;
    });
    ConditionalVarianceReport rep;
    rep.trials = trials;
    const MatrixMeanSe mx = batch_means(std::span<const HermitianMatrix>(vx));
    const MatrixMeanSe mk = batch_means(std::span<const HermitianMatrix>(vk));
    rep.v_x_hat = mx.mean;
    rep.v_k_hat = mk.mean;
    rep.v_x_se = mx.scale();
    rep.v_k_se = mk.scale();
    rep.standard_error_scale = std::max(rep.v_x_se, rep.v_k_se);
    rep.kernel_steps_max = *std::max_element(steps.begin(), steps.end());
    rep.kernels_converged = std::all_of(conv.begin(), conv.end(), [](char c) { return c != 0; });
    if (x_bound != nullptr) {
        rep.dominance.push_back(dominance_check("v_x", rep.v_x_hat, *x_bound, rep.v_x_se));
    }
    if (k_bound != nullptr) {
        rep.dominance.push_back(dominance_check("v_k", rep.v_k_hat, *k_bound, rep.v_k_se));
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Coupling time

struct CouplingTimeSummary {
    std::size_t trials = 0;
    double mean = 0.0;
    double se = 0.0;
    double median = 0.0;
    double q90 = 0.0;
    double q99 = 0.0;
    double max = 0.0;
    std::size_t cap_hits = 0;
};

/// Steps of coupled_step from (z, w) until the states agree; `cap` if they
/// never do within cap steps.
template <ExchangeablePairModel M>
std::size_t coupling_time_from(const M& model, typename M::State z, typename M::State w, std::size_t cap, Rng& rng) {
    std::size_t t = 0;
    while (!(z == w) && t < cap) {
        model.coupled_step(z, w, rng);
        ++t;
    }
    return t;
}

/// Per trial: Z from sample_state, Z' from exchange_step, then the coupled
/// chains run until they agree.
template <ExchangeablePairModel M>
CouplingTimeSummary coupling_time(const M& model, std::size_t trials, std::size_t cap, std::uint64_t seed,
                                  unsigned threads = 1) {
    if (trials < 1) {
        throw PreconditionError("coupling_time: trials must be >= 1");
    }
    std::vector<double> times(trials);
    std::vector<char> capped(trials);
    parallel_for(trials, threads, [&](std::size_t t) {
        Rng rng = make_rng(seed, t, 0xC7);
        auto z = model.sample_state(rng);
        auto w = model.exchange_step(z, rng);
        const bool already = z == w;
        const std::size_t steps = coupling_time_from(model, std::move(z), std::move(w), cap, rng);
        times[t] = static_cast<double>(steps);
        capped[t] = (!already && steps >= cap) ? 1 : 0;
    });
    CouplingTimeSummary s;
    s.trials = trials;
    const MeanSe ms = batch_means(std::span<const double>(times));
    s.mean = ms.mean;
    s.se = ms.se;
    s.median = quantile(times, 0.5);
    s.q90 = quantile(times, 0.9);
    s.q99 = quantile(times, 0.99);
    s.max = *std::max_element(times.begin(), times.end());
    for (char c : capped) {
        s.cap_hits += c != 0 ? 1 : 0;
    }
    return s;
}

// ---------------------------------------------------------------------------
// Exchangeability check

struct ExchangeabilityReport {
    std::size_t trials = 0;
    double max_z = 0.0;         // largest |mean| / SE over all statistics
    std::string worst;          // name of that statistic
    bool passed = true;         // max_z <= threshold
    double threshold = 4.0;
};

/// Draws (Psi(Z), Psi(Z')) and tests that every entry (real and imaginary
/// parts) of X - X', X^2 - X'^2 and X X' - X' X has mean zero within
/// `threshold` standard errors, as it must when (X, X') and (X', X) share a law.
template <ExchangeablePairModel M>
ExchangeabilityReport verify_exchangeability(const M& model, std::size_t trials, std::uint64_t seed,
                                             unsigned threads = 1, double threshold = 4.0) {
    if (trials < 100) {
        throw PreconditionError("verify_exchangeability: trials must be >= 100");
    }
    const Index d = model.dim();
    std::vector<std::array<GeneralMatrix, 3>> stats(trials);
    parallel_for(trials, threads, [&](std::size_t t) {
        Rng rng = make_rng(seed, t, 0xE8);
        const auto z = model.sample_state(rng);
        const auto zp = model.exchange_step(z, rng);
        const GeneralMatrix x = model.psi(z).matrix();
        const GeneralMatrix y = model.psi(zp).matrix();
        stats[t] = {x - y, x * x - y * y, x * y - y * x};
    });
    static constexpr const char* names[3] = {"X-X'", "X^2-X'^2", "XX'-X'X"};
    ExchangeabilityReport rep;
    rep.trials = trials;
    rep.threshold = threshold;
    const double nt = static_cast<double>(trials);
    for (int s = 0; s < 3; ++s) {
        for (Index i = 0; i < d; ++i) {
            for (Index j = 0; j < d; ++j) {
                for (int part = 0; part < 2; ++part) {
                    double sum = 0.0;
                    double sum2 = 0.0;
                    for (std::size_t t = 0; t < trials; ++t) {
                        const Complex v = stats[t][static_cast<std::size_t>(s)](i, j);
                        const double x = part == 0 ? v.real() : v.imag();
                        sum += x;
                        sum2 += x * x;
                    }
                    const double mean = sum / nt;
                    const double var = std::max(0.0, (sum2 / nt - mean * mean)) * nt / (nt - 1.0);
                    const double se = std::sqrt(var / nt);
                    double zscore = 0.0;
                    if (se > 0.0) {
                        zscore = std::abs(mean) / se;
                    } else if (std::abs(mean) > 1e-12) {
                        zscore = std::numeric_limits<double>::infinity();
                    }
                    if (zscore > rep.max_z) {
                        rep.max_z = zscore;
                        std::ostringstream name;
                        name << names[s] << (part == 0 ? " re" : " im") << " (" << i << "," << j << ")";
                        rep.worst = name.str();
                    }
                }
            }
        }
    }
    rep.passed = rep.max_z <= threshold;
    return rep;
}

// ---------------------------------------------------------------------------
// JSON

inline json to_json(const KernelEstimate& k) {
    return json{{"value", matrix_to_json(k.value)},
                {"steps_used", k.steps_used},
                {"truncation_bound", k.truncation_bound},
                {"converged", k.converged}};
}

inline json to_json(const ConditionalVarianceReport& r) {
    json dom = json::array();
    for (const auto& d : r.dominance) {
        dom.push_back(json{{"name", d.name},
                           {"bound", matrix_to_json(d.bound)},
                           {"slack", d.slack},
                           {"holds", d.verdict.holds},
                           {"lambda_min", d.verdict.lambda_min}});
    }
    return json{{"v_x_hat", matrix_to_json(r.v_x_hat)},
                {"v_k_hat", matrix_to_json(r.v_k_hat)},
                {"trials", r.trials},
                {"v_x_se", r.v_x_se},
                {"v_k_se", r.v_k_se},
                {"standard_error_scale", r.standard_error_scale},
                {"kernel_steps_max", r.kernel_steps_max},
                {"kernels_converged", r.kernels_converged},
                {"dominance", dom}};
}

inline json to_json(const CouplingTimeSummary& s) {
    return json{{"trials", s.trials}, {"mean", s.mean}, {"se", s.se},   {"median", s.median},
                {"q90", s.q90},       {"q99", s.q99},   {"max", s.max}, {"cap_hits", s.cap_hits}};
}

inline json to_json(const ExchangeabilityReport& r) {
    return json{{"trials", r.trials},
                {"max_z", r.max_z},
                {"worst", r.worst},
                {"threshold", r.threshold},
                {"passed", r.passed}};
}

}  // namespace matconc
