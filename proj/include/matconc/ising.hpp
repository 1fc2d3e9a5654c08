#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Sparse>

#include "matconc/bounds.hpp"
#include "matconc/errors.hpp"
#include "matconc/hermitian.hpp"
#include "matconc/parallel.hpp"
#include "matconc/report.hpp"
#include "matconc/rng.hpp"
#include "matconc/stats.hpp"
#include "matconc/stein.hpp"

namespace matconc {

/// n x n periodic lattice of +-1 spins at inverse temperature beta.
class IsingLattice {
public:
    IsingLattice(Index n, double beta) : n_(n), beta_(beta) {
        if (n < 1) {
            throw PreconditionError("IsingLattice: n must be >= 1");
        }
        if (!(beta >= 0.0) || std::isinf(beta)) {
            throw PreconditionError("IsingLattice: beta must be finite and >= 0");
        }
        spins_.assign(static_cast<std::size_t>(n * n), 1);
    }

    static IsingLattice all_up(Index n, double beta) { return IsingLattice(n, beta); }

    static IsingLattice checkerboard(Index n, double beta) {
        IsingLattice l(n, beta);
        for (Index i = 0; i < n; ++i) {
            for (Index j = 0; j < n; ++j) {
                l.set(i, j, (i + j) % 2 == 0 ? 1 : -1);
            }
        }
        return l;
    }

    Index n() const noexcept { return n_; }
    double beta() const noexcept { return beta_; }
    Index sites() const noexcept { return n_ * n_; }
    /// n = 2 wraps both neighbours of a site onto the same vertex.
    bool has_parallel_edges() const noexcept { return n_ == 2; }

    Index wrap(Index i) const noexcept { return ((i % n_) + n_) % n_; }
    Index site(Index i, Index j) const noexcept { return wrap(i) * n_ + wrap(j); }

    int operator()(Index i, Index j) const noexcept { return spins_[static_cast<std::size_t>(site(i, j))]; }
    int at_site(Index k) const noexcept { return spins_[static_cast<std::size_t>(k)]; }

    void set(Index i, Index j, int s) { set_site(site(i, j), s); }
    void set_site(Index k, int s) {
        if (s != 1 && s != -1) {
            throw PreconditionError("IsingLattice: spins must be +1 or -1");
        }
        spins_[static_cast<std::size_t>(k)] = static_cast<std::int8_t>(s);
    }
    void flip_site(Index k) { spins_[static_cast<std::size_t>(k)] = static_cast<std::int8_t>(-at_site(k)); }

    /// Sum of the four periodic neighbours of site k.
    int neighbor_sum(Index k) const noexcept {
        const Index i = k / n_;
        const Index j = k % n_;
        return (*this)(i - 1, j) + (*this)(i + 1, j) + (*this)(i, j - 1) + (*this)(i, j + 1);
    }

    const std::vector<std::int8_t>& spins() const noexcept { return spins_; }

    friend bool operator==(const IsingLattice& a, const IsingLattice& b) {
        return a.n_ == b.n_ && a.beta_ == b.beta_ && a.spins_ == b.spins_;
    }

private:
    Index n_;
    double beta_;
    std::vector<std::int8_t> spins_;
};

/// Sum over the 2n^2 edges (right and down neighbour of every site); for n = 2
/// parallel edges are counted separately.
inline double hamiltonian(const IsingLattice& l) {
    std::int64_t h = 0;
    for (Index i = 0; i < l.n(); ++i) {
        for (Index j = 0; j < l.n(); ++j) {
            h += l(i, j) * (l(i, j + 1) + l(i + 1, j));
        }
    }
    return static_cast<double>(h);
}

/// P(spin = +1 | neighbour sum s) = 1/(1 + exp(-2 s beta)).
inline double conditional_prob_up(int s, double beta) {
    if (s < -4 || s > 4 || s % 2 != 0) {
        std::ostringstream msg;
        msg << "conditional_prob_up: neighbour sum must be even with |s| <= 4, got " << s;
        throw PreconditionError(msg.str());
    }
    if (!(beta >= 0.0)) {
        throw PreconditionError("conditional_prob_up: beta must be >= 0");
    }
    return 1.0 / (1.0 + std::exp(-2.0 * static_cast<double>(s) * beta));
}

namespace detail {

inline std::array<double, 5> up_table(double beta) {
    std::array<double, 5> t{};
    for (int k = 0; k < 5; ++k) {
        t[static_cast<std::size_t>(k)] = conditional_prob_up(2 * k - 4, beta);
    }
    return t;
}

inline void heat_bath_site(IsingLattice& l, Index k, const std::array<double, 5>& table, Rng& rng) {
    const double p = table[static_cast<std::size_t>((l.neighbor_sum(k) + 4) / 2)];
    l.set_site(k, uniform01(rng) < p ? 1 : -1);
}

/// Heat-bath updates with precomputed neighbour indices.
class GlauberRunner {
public:
    explicit GlauberRunner(const IsingLattice& l) : table_(up_table(l.beta())), sites_(l.sites()) {
        nbr_.reserve(static_cast<std::size_t>(4 * sites_));
        for (Index k = 0; k < sites_; ++k) {
            const Index i = k / l.n();
            const Index j = k % l.n();
            nbr_.push_back(static_cast<std::uint32_t>(l.site(i - 1, j)));
            nbr_.push_back(static_cast<std::uint32_t>(l.site(i + 1, j)));
            nbr_.push_back(static_cast<std::uint32_t>(l.site(i, j - 1)));
            nbr_.push_back(static_cast<std::uint32_t>(l.site(i, j + 1)));
        }
    }

    void steps(IsingLattice& l, std::uint64_t count, Rng& rng) const {
        const auto sites = static_cast<std::uint64_t>(sites_);
        for (std::uint64_t t = 0; t < count; ++t) {
            const auto k = uniform_index(rng, sites);
            const std::uint32_t* nb = &nbr_[static_cast<std::size_t>(4 * k)];
            const int s = l.at_site(nb[0]) + l.at_site(nb[1]) + l.at_site(nb[2]) + l.at_site(nb[3]);
            l.set_site(static_cast<Index>(k), uniform01(rng) < table_[static_cast<std::size_t>((s + 4) / 2)] ? 1 : -1);
        }
    }

private:
    std::array<double, 5> table_;
    Index sites_;
    std::vector<std::uint32_t> nbr_;
};

}  // namespace detail

/// Resamples one uniformly chosen site from its conditional law.
inline void glauber_step(IsingLattice& l, Rng& rng) {
    const auto table = detail::up_table(l.beta());
    detail::heat_bath_site(l, static_cast<Index>(uniform_index(rng, static_cast<std::uint64_t>(l.sites()))), table,
                           rng);
}

/// n^2 Glauber steps.
inline void glauber_sweep(IsingLattice& l, Rng& rng) {
    detail::GlauberRunner(l).steps(l, static_cast<std::uint64_t>(l.sites()), rng);
}

// ---------------------------------------------------------------------------
// Dobrushin matrix

/// Value of each neighbour entry: 1/(1 + exp(-4 beta)) - 1/2.
inline double dobrushin_entry(double beta) {
    if (!(beta >= 0.0)) {
        throw PreconditionError("dobrushin_entry: beta must be >= 0");
    }
    return 1.0 / (1.0 + std::exp(-4.0 * beta)) - 0.5;
}

/// Both induced norms of the Ising Dobrushin matrix: four neighbours times the
/// entry, 4/(1 + exp(-4 beta)) - 2.
inline double dobrushin_norm(double beta) { return 4.0 * dobrushin_entry(beta); }

/// Threshold where dobrushin_norm reaches 1: log(3)/4.
inline double beta_dobrushin() { return 0.25 * std::log(3.0); }

/// n^2 x n^2 matrix with the entry at every neighbouring pair (row-major site
/// index); parallel edges for n = 2 add up.
inline Eigen::SparseMatrix<double> dobrushin_matrix(Index n, double beta) {
    if (n < 2) {
        throw PreconditionError("dobrushin_matrix: n must be >= 2");
    }
    const double e = dobrushin_entry(beta);
    const IsingLattice shape(n, 0.0);
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(4 * n * n));
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) {
            const Index k = shape.site(i, j);
            trip.emplace_back(k, shape.site(i - 1, j), e);
            trip.emplace_back(k, shape.site(i + 1, j), e);
            trip.emplace_back(k, shape.site(i, j - 1), e);
            trip.emplace_back(k, shape.site(i, j + 1), e);
        }
    }
    Eigen::SparseMatrix<double> d(n * n, n * n);
    d.setFromTriplets(trip.begin(), trip.end());
    d.prune(0.0);
    return d;
}

/// 50 * ceil(1/(1 - dobrushin_norm(beta))) sweeps.
inline std::size_t default_burn_in_sweeps(double beta) {
    const double norm = dobrushin_norm(beta);
    if (!(norm < 1.0)) {
        std::ostringstream msg;
        msg << "default_burn_in_sweeps: beta = " << beta << " violates the Dobrushin condition (norm " << norm
            << " >= 1)";
        throw DobrushinConditionError(msg.str());
    }
    return 50 * static_cast<std::size_t>(std::ceil(1.0 / (1.0 - norm)));
}

/// Uniform random start followed by burn_in_sweeps Glauber sweeps.
inline IsingLattice sample(Index n, double beta, std::size_t burn_in_sweeps, Rng& rng) {
    IsingLattice l(n, beta);
    for (Index k = 0; k < l.sites(); ++k) {
        l.set_site(k, rademacher(rng) > 0.0 ? 1 : -1);
    }
    detail::GlauberRunner(l).steps(l, static_cast<std::uint64_t>(burn_in_sweeps) * static_cast<std::uint64_t>(l.sites()),
                                   rng);
    return l;
}

// ---------------------------------------------------------------------------
// Correlations

/// d x d window of spatially averaged correlations; entry (a, b) (0-based) is
/// (1/n^2) sum_{k,l} s_{kl} s_{k+a, l+b}.
struct CorrelationEstimate {
    Index d = 1;
    RealMatrix c_hat;
};

inline CorrelationEstimate estimate_correlation(const IsingLattice& l, Index d) {
    if (d < 1 || d > l.n()) {
        std::ostringstream msg;
        msg << "estimate_correlation: window d = " << d << " must lie in [1, n = " << l.n() << "]";
        throw PreconditionError(msg.str());
    }
    const Index n = l.n();
    std::vector<std::int64_t> sums(static_cast<std::size_t>(d * d), 0);
    for (Index k = 0; k < n; ++k) {
        for (Index m = 0; m < n; ++m) {
            const int s = l(k, m);
            for (Index a = 0; a < d; ++a) {
                for (Index b = 0; b < d; ++b) {
                    sums[static_cast<std::size_t>(a * d + b)] += s * l(k + a, m + b);
                }
            }
        }
    }
    CorrelationEstimate out;
    out.d = d;
    out.c_hat.resize(d, d);
    const double inv = 1.0 / static_cast<double>(n * n);
    for (Index a = 0; a < d; ++a) {
        for (Index b = 0; b < d; ++b) {
            out.c_hat(a, b) = static_cast<double>(sums[static_cast<std::size_t>(a * d + b)]) * inv;
        }
    }
    return out;
}

/// Hermitian dilation of the correlation window (dimension 2d).
inline HermitianMatrix correlation_dilation(const RealMatrix& c) {
    return hermitian_dilation(c.cast<Complex>());
}

/// Spectral norm of a real matrix.
inline double deviation_norm(const RealMatrix& a, const RealMatrix& b) {
    return spectral_norm(GeneralMatrix((a - b).cast<Complex>()));
}

struct CorrelationTruth {
    Index n = 0;
    Index d = 0;
    double beta = 0.0;
    std::size_t chains = 0;
    std::size_t sweeps_per_chain = 0;
    RealMatrix mean;
    RealMatrix se;
};

/// Average of estimate_correlation over independent chains, per-entry SE by batch means.
inline CorrelationTruth correlation_ground_truth(Index n, Index d, double beta, std::size_t chains,
                                                 std::size_t sweeps_per_chain, std::uint64_t seed,
                                                 unsigned threads = 1) {
    if (!(dobrushin_norm(beta) < 1.0)) {
        throw DobrushinConditionError("correlation_ground_truth: beta must be below log(3)/4");
    }
    if (chains < 30) {
        throw PreconditionError("correlation_ground_truth: need at least 30 chains");
    }
    std::vector<RealMatrix> est(chains);
    parallel_for(chains, threads, [&](std::size_t c) {
        Rng rng = make_rng(seed, c, 0x15);
        est[c] = estimate_correlation(sample(n, beta, sweeps_per_chain, rng), d).c_hat;
    });
    CorrelationTruth out;
    out.n = n;
    out.d = d;
    out.beta = beta;
    out.chains = chains;
    out.sweeps_per_chain = sweeps_per_chain;
    out.mean.resize(d, d);
    out.se.resize(d, d);
    std::vector<double> entry(chains);
    for (Index a = 0; a < d; ++a) {
        for (Index b = 0; b < d; ++b) {
            for (std::size_t c = 0; c < chains; ++c) {
                entry[c] = est[c](a, b);
            }
            const MeanSe ms = batch_means(std::span<const double>(entry));
            out.mean(a, b) = ms.mean;
            out.se(a, b) = ms.se;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Deviation bound

/// sigma^2 = 16 d^2 / n^2.
inline double ising_sigma2(Index n, Index d) {
    const double dd = static_cast<double>(d);
    const double nn = static_cast<double>(n);
    return 16.0 * dd * dd / (nn * nn);
}

inline void check_ising_bound_args(Index n, Index d, double beta) {
    if (n < 1 || d < 1 || d > n) {
        throw PreconditionError("ising bound: need 1 <= d <= n");
    }
    if (!(beta >= 0.0)) {
        throw PreconditionError("ising bound: beta must be >= 0");
    }
}

/// b = 1/(3 - 4/(1 + exp(-4 beta))).
inline double ising_b(double beta) {
    const double norm = dobrushin_norm(beta);
    return dobrushin_b(norm, norm);
}

/// P(||C_hat - C|| >= t) <= 2d exp(-t^2 (3 - 4/(1 + exp(-4 beta))) n^2/(16 d^2)).
inline double ising_tail_bound(Index n, Index d, double beta, double t) {
    check_ising_bound_args(n, d, beta);
    detail::check_t(t, "ising_tail_bound");
    const double b = ising_b(beta);
    return 2.0 * static_cast<double>(d) * std::exp(-t * t / (b * ising_sigma2(n, d)));
}

/// E||C_hat - C|| <= sigma sqrt(b log 2d).
inline double ising_mean_bound(Index n, Index d, double beta) {
    check_ising_bound_args(n, d, beta);
    return std::sqrt(ising_sigma2(n, d) * ising_b(beta) * std::log(2.0 * static_cast<double>(d)));
}

/// Deviations ||C_hat - truth|| of `samples` independent lattices.
inline std::vector<double> ising_deviations(Index n, double beta, const RealMatrix& truth, std::size_t samples,
                                            std::size_t burn_in_sweeps, std::uint64_t seed, unsigned threads = 1) {
    const Index d = truth.rows();
    std::vector<double> dev(samples);
    parallel_for(samples, threads, [&](std::size_t k) {
        Rng rng = make_rng(seed, k, 0x16);
        dev[k] = deviation_norm(estimate_correlation(sample(n, beta, burn_in_sweeps, rng), d).c_hat, truth);
    });
    return dev;
}

// ---------------------------------------------------------------------------
// Exact small-lattice checks

/// Spin of site k in enumerated state `mask` (bit set means +1).
inline IsingLattice lattice_from_mask(Index n, double beta, std::uint64_t mask) {
    IsingLattice l(n, beta);
    for (Index k = 0; k < n * n; ++k) {
        l.set_site(k, ((mask >> static_cast<std::uint64_t>(k)) & 1U) != 0U ? 1 : -1);
    }
    return l;
}

/// Transition matrix of one Glauber step over all 2^(n^2) states (n <= 4).
inline RealMatrix glauber_transition_matrix(Index n, double beta) {
    if (n < 1 || n > 4) {
        throw PreconditionError("glauber_transition_matrix: n must be in [1, 4]");
    }
    const Index sites = n * n;
    const auto states = static_cast<Index>(std::uint64_t{1} << static_cast<std::uint64_t>(sites));
    RealMatrix p = RealMatrix::Zero(states, states);
    const double w = 1.0 / static_cast<double>(sites);
    for (Index x = 0; x < states; ++x) {
        const IsingLattice l = lattice_from_mask(n, beta, static_cast<std::uint64_t>(x));
        for (Index k = 0; k < sites; ++k) {
            const double up = conditional_prob_up(l.neighbor_sum(k), beta);
            const Index bit = Index{1} << k;
            p(x, x | bit) += w * up;
            p(x, x & ~bit) += w * (1.0 - up);
        }
    }
    return p;
}

// ---------------------------------------------------------------------------
// Exchangeable-pair view

/// Glauber dynamics as a DobrushinModel over sites in row-major order with
/// H(sigma) the dilation of the d x d correlation window. One flip moves each
/// entry of C_hat by at most 4/n^2, so the step bound is 4d/n^2.
inline DobrushinModel ising_dobrushin_model(Index n, Index d, double beta) {
    if (d < 1 || d > n) {
        throw PreconditionError("ising_dobrushin_model: need 1 <= d <= n");
    }
    auto cond = [n, beta](const std::vector<int>& z, Index k) {
        IsingLattice shape(n, 0.0);
        const Index i = k / n;
        const Index j = k % n;
        const int s = z[static_cast<std::size_t>(shape.site(i - 1, j))] +
                      z[static_cast<std::size_t>(shape.site(i + 1, j))] +
                      z[static_cast<std::size_t>(shape.site(i, j - 1))] +
                      z[static_cast<std::size_t>(shape.site(i, j + 1))];
        const double up = conditional_prob_up(s, beta);
        return std::vector<double>{1.0 - up, up};
    };
    auto h = [n, d, beta](const std::vector<int>& z) {
        IsingLattice l(n, beta);
        for (Index k = 0; k < n * n; ++k) {
            l.set_site(k, z[static_cast<std::size_t>(k)]);
        }
        return correlation_dilation(estimate_correlation(l, d).c_hat);
    };
    DobrushinModel mdl({-1, 1}, n * n, cond, dobrushin_matrix(n, beta), 2 * d, h);
    mdl.set_step_bound(4.0 * static_cast<double>(d) / static_cast<double>(n * n));
    if (dobrushin_norm(beta) < 1.0) {
        mdl.set_burn_in_sweeps(default_burn_in_sweeps(beta));
    }
    return mdl;
}

// ---------------------------------------------------------------------------
// Snapshots and reports

/// "n beta" then n rows of +-1 separated by spaces.
inline std::string to_text(const IsingLattice& l) {
    std::ostringstream out;
    out << l.n() << ' ' << format_number(l.beta()) << '\n';
    for (Index i = 0; i < l.n(); ++i) {
        for (Index j = 0; j < l.n(); ++j) {
            out << (j > 0 ? " " : "") << l(i, j);
        }
        out << '\n';
    }
    return out.str();
}

inline IsingLattice lattice_from_text(const std::string& text) {
    std::istringstream in(text);
    Index n = 0;
    double beta = 0.0;
    if (!(in >> n >> beta)) {
        throw PreconditionError("lattice_from_text: malformed header, expected \"n beta\"");
    }
    IsingLattice l(n, beta);
    for (Index k = 0; k < n * n; ++k) {
        int s = 0;
        if (!(in >> s)) {
            throw PreconditionError("lattice_from_text: expected n*n spins");
        }
        l.set_site(k, s);
    }
    std::string rest;
    if (in >> rest) {
        throw PreconditionError("lattice_from_text: trailing content after n*n spins");
    }
    return l;
}

/// Columns i, j (1-based), c_hat, se.
inline CsvTable correlation_table(const RealMatrix& c, const RealMatrix& se) {
    CsvTable t{{"i", "j", "c_hat", "se"}, {}};
    for (Index a = 0; a < c.rows(); ++a) {
        for (Index b = 0; b < c.cols(); ++b) {
            t.add_row({std::to_string(a + 1), std::to_string(b + 1), format_number(c(a, b)), format_number(se(a, b))});
        }
    }
    return t;
}

inline json to_json(const CorrelationTruth& t) {
    return json{{"n", t.n},
                {"d", t.d},
                {"beta", t.beta},
                {"chains", t.chains},
                {"sweeps_per_chain", t.sweeps_per_chain},
                {"mean", real_matrix_to_json(t.mean)},
                {"se", real_matrix_to_json(t.se)}};
}

}  // namespace matconc
