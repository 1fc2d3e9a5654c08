#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "matconc/inequalities.hpp"
#include "matconc/parallel.hpp"
#include "matconc/random_matrix.hpp"
#include "matconc/report.hpp"
#include "matconc/rng.hpp"

namespace matconc {

enum class Inequality { emvti, pmvti, conjecture_exp, conjecture_poly };

inline std::string_view to_string(Inequality ineq) {
    switch (ineq) {
        case Inequality::emvti: return "emvti";
        case Inequality::pmvti: return "pmvti";
        case Inequality::conjecture_exp: return "conjecture_exp";
        case Inequality::conjecture_poly: return "conjecture_poly";
    }
    return "unknown";
}

inline Inequality parse_inequality(std::string_view name) {
    for (Inequality i : {Inequality::emvti, Inequality::pmvti, Inequality::conjecture_exp,
                         Inequality::conjecture_poly}) {
        if (to_string(i) == name) {
            return i;
        }
    }
    throw PreconditionError("unknown inequality '" + std::string(name) +
                            "' (expected emvti, pmvti, conjecture_exp or conjecture_poly)");
}

inline bool uses_q(Inequality ineq) { return ineq == Inequality::pmvti || ineq == Inequality::conjecture_poly; }

/// Input families.
///   gaussian:       independent symmetrized complex Gaussians
///   spiky:          small Gaussian plus a large rank-one spike
///   near_commuting: shared eigenbasis plus a small Gaussian perturbation
///   near_equal:     B = A + eps G with eps log-uniform in [1e-6, 1e-1]
///   tight:          commuting A close to B with C = s (A - B), the
///                   near-equality configuration of the mean value forms
enum class Sampler { gaussian, spiky, near_commuting, near_equal, tight };

inline constexpr std::array<Sampler, 5> all_samplers{Sampler::gaussian, Sampler::spiky, Sampler::near_commuting,
                                                     Sampler::near_equal, Sampler::tight};

inline std::string_view to_string(Sampler s) {
    switch (s) {
        case Sampler::gaussian: return "gaussian";
        case Sampler::spiky: return "spiky";
        case Sampler::near_commuting: return "near_commuting";
        case Sampler::near_equal: return "near_equal";
        case Sampler::tight: return "tight";
    }
    return "unknown";
}

inline Sampler parse_sampler(std::string_view name) {
    for (Sampler s : all_samplers) {
        if (to_string(s) == name) {
            return s;
        }
    }
    throw PreconditionError("unknown sampler '" + std::string(name) + "'");
}

inline constexpr std::array<double, 3> s_grid{1e-2, 1.0, 1e2};
inline constexpr std::array<int, 4> q_grid{1, 2, 3, 8};

struct SamplerConfig {
    Index min_dim = 1;
    Index max_dim = 6;
    double s_min = 1e-2;
    double s_max = 1e2;
    int q_min = 1;
    int q_max = 8;
    /// Probability that s (and q) are taken from the fixed grids instead of drawn.
    double grid_fraction = 0.25;
    std::vector<Sampler> samplers{all_samplers.begin(), all_samplers.end()};

    void validate() const {
        if (min_dim < 1 || max_dim < min_dim) {
            throw PreconditionError("fuzz: dimension range must satisfy 1 <= min_dim <= max_dim");
        }
        if (!(s_min > 0.0) || !(s_max >= s_min) || std::isinf(s_max)) {
            throw PreconditionError("fuzz: s range must satisfy 0 < s_min <= s_max < inf");
        }
        if (q_min < 1 || q_max < q_min) {
            throw PreconditionError("fuzz: q range must satisfy 1 <= q_min <= q_max");
        }
        if (!(grid_fraction >= 0.0 && grid_fraction <= 1.0)) {
            throw PreconditionError("fuzz: grid_fraction must lie in [0, 1]");
        }
        if (samplers.empty()) {
            throw PreconditionError("fuzz: at least one sampler is required");
        }
    }
};

/// One sampled input.
struct FuzzCase {
    Sampler sampler = Sampler::gaussian;
    double s = 1.0;
    int q = 1;
    HermitianMatrix a;
    HermitianMatrix b;
    HermitianMatrix c;

    Index dim() const { return a.dim(); }
};

inline InequalityGap evaluate(Inequality ineq, const FuzzCase& fc) {
    switch (ineq) {
        case Inequality::emvti: return emvti_gap(fc.a, fc.b, fc.c, fc.s);
        case Inequality::pmvti: return pmvti_gap(fc.a, fc.b, fc.c, fc.q, fc.s);
        case Inequality::conjecture_exp: return conjecture_exp_gap(fc.a, fc.b, fc.c, fc.s);
        case Inequality::conjecture_poly: return conjecture_poly_gap(fc.a, fc.b, fc.c, fc.q, fc.s);
    }
    throw PreconditionError("evaluate: unknown inequality");
}

/// Same quantity through the lifted-operator path.
inline InequalityGap evaluate_lifted(Inequality ineq, const FuzzCase& fc) {
    switch (ineq) {
        case Inequality::emvti: return emvti_gap_lifted(fc.a, fc.b, fc.c, fc.s);
        case Inequality::pmvti: return pmvti_gap_lifted(fc.a, fc.b, fc.c, fc.q, fc.s);
        case Inequality::conjecture_exp: return conjecture_exp_gap_lifted(fc.a, fc.b, fc.c, fc.s);
        case Inequality::conjecture_poly: return conjecture_poly_gap_lifted(fc.a, fc.b, fc.c, fc.q, fc.s);
    }
    throw PreconditionError("evaluate_lifted: unknown inequality");
}

namespace detail {

inline double log_uniform(Rng& rng, double lo, double hi) {
    if (lo == hi) {
        return lo;
    }
    return std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * uniform01(rng));
}

inline HermitianMatrix unitary_conjugate(const GeneralMatrix& u, const RealVector& diag) {
    return HermitianMatrix::hermitian_part(u * diag.cast<Complex>().asDiagonal() * u.adjoint());
}

inline RealVector normal_vector(Index d, Rng& rng, double scale = 1.0) {
    RealVector v(d);
    for (Index i = 0; i < d; ++i) {
        v(i) = scale * standard_normal(rng);
    }
    return v;
}

}  // namespace detail

/// Draws one case; every random choice comes from `rng`.
inline FuzzCase sample_case(const SamplerConfig& cfg, Rng& rng) {
    FuzzCase fc;
    fc.sampler = cfg.samplers[uniform_index(rng, cfg.samplers.size())];
    const Index d = cfg.min_dim + static_cast<Index>(uniform_index(rng, static_cast<std::uint64_t>(cfg.max_dim - cfg.min_dim + 1)));

    if (uniform01(rng) < cfg.grid_fraction) {
        std::vector<double> ss;
        for (double s : s_grid) {
            if (s >= cfg.s_min && s <= cfg.s_max) {
                ss.push_back(s);
            }
        }
        fc.s = ss.empty() ? detail::log_uniform(rng, cfg.s_min, cfg.s_max) : ss[uniform_index(rng, ss.size())];
        std::vector<int> qs;
        for (int q : q_grid) {
            if (q >= cfg.q_min && q <= cfg.q_max) {
                qs.push_back(q);
            }
        }
        fc.q = qs.empty() ? cfg.q_min + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(cfg.q_max - cfg.q_min + 1)))
                          : qs[uniform_index(rng, qs.size())];
    } else {
        fc.s = detail::log_uniform(rng, cfg.s_min, cfg.s_max);
        fc.q = cfg.q_min + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(cfg.q_max - cfg.q_min + 1)));
    }

    switch (fc.sampler) {
        case Sampler::gaussian: {
            fc.a = random_hermitian(d, rng);
            fc.b = random_hermitian(d, rng);
            fc.c = random_hermitian(d, rng);
            break;
        }
        case Sampler::spiky: {
            auto spiked = [&](double weight) {
                const ComplexVector v = random_unit_vector(d, rng);
                return 0.1 * random_hermitian(d, rng) + rank_one(v, weight * standard_normal(rng));
            };
            fc.a = spiked(3.0);
            fc.b = spiked(3.0);
            fc.c = spiked(5.0);
            break;
        }
        case Sampler::near_commuting: {
            const GeneralMatrix u = random_unitary(d, rng);
            const double eps = 1e-3;
            fc.a = detail::unitary_conjugate(u, detail::normal_vector(d, rng));
            fc.b = detail::unitary_conjugate(u, detail::normal_vector(d, rng)) + random_hermitian(d, rng, eps);
            fc.c = detail::unitary_conjugate(u, detail::normal_vector(d, rng)) + random_hermitian(d, rng, eps);
            break;
        }
        case Sampler::near_equal: {
            const double eps = detail::log_uniform(rng, 1e-6, 1e-1);
            fc.a = random_hermitian(d, rng);
            fc.b = fc.a + random_hermitian(d, rng, eps);
            fc.c = random_hermitian(d, rng);
            break;
        }
        case Sampler::tight: {
            const GeneralMatrix u = random_unitary(d, rng);
            RealVector lam(d);
            for (Index i = 0; i < d; ++i) {
                lam(i) = 0.5 + std::abs(standard_normal(rng));
            }
            const double eps = detail::log_uniform(rng, 1e-4, 1e-2);
            const RealVector delta = detail::normal_vector(d, rng, eps);
            fc.a = detail::unitary_conjugate(u, lam);
            fc.b = detail::unitary_conjugate(u, lam + delta);
            fc.c = rademacher(rng) * fc.s * (fc.a - fc.b);
            break;
        }
    }
    return fc;
}

// ---------------------------------------------------------------------------
// Shrinking

namespace detail {

inline HermitianMatrix drop_index(const HermitianMatrix& m, Index k) {
    const Index d = m.dim();
    GeneralMatrix out(d - 1, d - 1);
    for (Index i = 0, r = 0; i < d; ++i) {
        if (i == k) {
            continue;
        }
        for (Index j = 0, c = 0; j < d; ++j) {
            if (j == k) {
                continue;
            }
            out(r, c++) = m(i, j);
        }
        ++r;
    }
    return HermitianMatrix::hermitian_part(out);
}

inline bool violated(Inequality ineq, const FuzzCase& fc, double rhs_factor) {
    return !evaluate(ineq, fc).with_rhs_scaled(rhs_factor).holds;
}

}  // namespace detail

/// Result of shrinking a violating case.
struct ShrinkResult {
    FuzzCase witness;
    double t = 1.0;  // B was replaced by A + t (B - A)
};

/// Greedily drops coordinates (principal submatrices) while the violation
/// persists, then bisects t in B_t = A + t (B - A) toward A = B, keeping the
/// smallest t that still violates.
inline ShrinkResult shrink(Inequality ineq, const FuzzCase& start, double rhs_factor = 1.0, int bisection_steps = 40) {
    FuzzCase cur = start;
    bool progress = true;
    while (progress && cur.dim() > 1) {
        progress = false;
        for (Index k = 0; k < cur.dim(); ++k) {
            FuzzCase cand = cur;
            cand.a = detail::drop_index(cur.a, k);
            cand.b = detail::drop_index(cur.b, k);
            cand.c = detail::drop_index(cur.c, k);
            if (detail::violated(ineq, cand, rhs_factor)) {
                cur = std::move(cand);
                progress = true;
                break;
            }
        }
    }
    const HermitianMatrix diff = cur.b - cur.a;
    auto at = [&](double t) {
        FuzzCase fc = cur;
        fc.b = cur.a + t * diff;
        return fc;
    };
    double lo = 0.0;
    double hi = 1.0;
    for (int it = 0; it < bisection_steps; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (detail::violated(ineq, at(mid), rhs_factor)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    ShrinkResult out{hi == 1.0 ? cur : at(hi), hi};
    return out;
}

// ---------------------------------------------------------------------------
// Campaign

struct FuzzViolation {
    std::uint64_t trial = 0;
    FuzzCase original;
    InequalityGap original_gap;
    FuzzCase witness;
    InequalityGap witness_gap;
    double shrink_t = 1.0;
};

/// Cap on violations kept in a report.
inline constexpr std::size_t max_reported_violations = 100;

struct FuzzReport {
    Inequality inequality = Inequality::emvti;
    std::uint64_t trials = 0;
    std::uint64_t seed = 0;
    SamplerConfig sampler_config;
    std::uint64_t violation_count = 0;
    std::vector<FuzzViolation> violations;
    double min_gap_over_scale = std::numeric_limits<double>::infinity();
    std::uint64_t argmin_trial = 0;
    std::vector<std::uint64_t> sampler_counts = std::vector<std::uint64_t>(all_samplers.size(), 0);
};

/// Substream index of the fuzz campaign within a master seed.
inline constexpr std::uint64_t fuzz_stream = 0xF0;

/// Trial k draws its input from make_rng(seed, k, fuzz_stream), so inputs do
/// not depend on the thread count or on other trials.
inline FuzzCase fuzz_case(const SamplerConfig& cfg, std::uint64_t seed, std::uint64_t trial) {
    Rng rng = make_rng(seed, trial, fuzz_stream);
    return sample_case(cfg, rng);
}

inline FuzzReport fuzz(Inequality ineq, std::uint64_t trials, const SamplerConfig& cfg, std::uint64_t seed,
                       unsigned threads = 1) {
    if (trials < 1) {
        throw PreconditionError("fuzz: trials must be >= 1");
    }
    cfg.validate();
    struct TrialResult {
        double rel = 0.0;
        bool holds = true;
        Sampler sampler = Sampler::gaussian;
    };
    std::vector<TrialResult> results(trials);
    parallel_for(trials, threads, [&](std::size_t k) {
        const FuzzCase fc = fuzz_case(cfg, seed, k);
        const InequalityGap g = evaluate(ineq, fc);
        results[k] = {g.relative(), g.holds, fc.sampler};
    });

    FuzzReport rep;
    rep.inequality = ineq;
    rep.trials = trials;
    rep.seed = seed;
    rep.sampler_config = cfg;
    std::vector<std::uint64_t> violating;
    for (std::uint64_t k = 0; k < trials; ++k) {
        const auto& r = results[k];
        ++rep.sampler_counts[static_cast<std::size_t>(r.sampler)];
        if (r.rel < rep.min_gap_over_scale) {
            rep.min_gap_over_scale = r.rel;
            rep.argmin_trial = k;
        }
        if (!r.holds) {
            ++rep.violation_count;
            if (violating.size() < max_reported_violations) {
                violating.push_back(k);
            }
        }
    }

    rep.violations.resize(violating.size());
    parallel_for(violating.size(), threads, [&](std::size_t i) {
        FuzzViolation& v = rep.violations[i];
        v.trial = violating[i];
        v.original = fuzz_case(cfg, seed, v.trial);
        v.original_gap = evaluate(ineq, v.original);
        const ShrinkResult sr = shrink(ineq, v.original);
        v.witness = sr.witness;
        v.witness_gap = evaluate(ineq, sr.witness);
        v.shrink_t = sr.t;
    });
    for (const auto& v : rep.violations) {
        rep.min_gap_over_scale = std::min(rep.min_gap_over_scale, v.witness_gap.relative());
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Planted-violation self test

/// Every case is drawn from the tight sampler and the rhs is multiplied by
/// `rhs_factor`. A case is planted when the lifted path says the scaled
/// inequality fails; it is detected when the harness (primary path) flags it.
struct SelfTestReport {
    Inequality inequality = Inequality::emvti;
    double rhs_factor = 0.8;
    std::uint64_t cases = 0;
    std::uint64_t planted = 0;
    std::uint64_t detected = 0;
    std::uint64_t false_alarms = 0;

    bool passed() const { return planted > 0 && detected == planted; }
};

inline constexpr std::uint64_t self_test_stream = 0x5E1F;

inline SelfTestReport self_test(Inequality ineq, std::uint64_t cases, double rhs_factor, SamplerConfig cfg,
                                std::uint64_t seed, unsigned threads = 1) {
    if (cases < 1) {
        throw PreconditionError("self_test: cases must be >= 1");
    }
    if (!(rhs_factor > 0.0 && rhs_factor < 1.0)) {
        throw PreconditionError("self_test: rhs_factor must lie in (0, 1)");
    }
    cfg.samplers = {Sampler::tight};
    cfg.validate();
    std::vector<std::pair<bool, bool>> verdicts(cases);
    parallel_for(cases, threads, [&](std::size_t k) {
        Rng rng = make_rng(seed, k, self_test_stream);
        const FuzzCase fc = sample_case(cfg, rng);
        const bool planted = !evaluate_lifted(ineq, fc).with_rhs_scaled(rhs_factor).holds;
        const bool detected = !evaluate(ineq, fc).with_rhs_scaled(rhs_factor).holds;
        verdicts[k] = {planted, detected};
    });
    SelfTestReport rep;
    rep.inequality = ineq;
    rep.rhs_factor = rhs_factor;
    rep.cases = cases;
    for (const auto& [planted, detected] : verdicts) {
        rep.planted += planted ? 1 : 0;
        rep.detected += (planted && detected) ? 1 : 0;
        rep.false_alarms += (!planted && detected) ? 1 : 0;
    }
    return rep;
}

// ---------------------------------------------------------------------------
// JSON

inline json to_json(const SamplerConfig& cfg) {
    json samplers = json::array();
    for (Sampler s : cfg.samplers) {
        samplers.push_back(std::string(to_string(s)));
    }
    return json{{"min_dim", cfg.min_dim},         {"max_dim", cfg.max_dim}, {"s_min", cfg.s_min},
                {"s_max", cfg.s_max},             {"q_min", cfg.q_min},     {"q_max", cfg.q_max},
                {"grid_fraction", cfg.grid_fraction}, {"samplers", samplers}};
}

inline json to_json(const FuzzCase& fc, bool with_q) {
    json j{{"sampler", std::string(to_string(fc.sampler))}, {"dim", fc.dim()}, {"s", fc.s}};
    if (with_q) {
        j["q"] = fc.q;
    }
    j["A"] = matrix_to_json(fc.a);
    j["B"] = matrix_to_json(fc.b);
    j["C"] = matrix_to_json(fc.c);
    return j;
}

inline json to_json(const FuzzReport& rep) {
    const bool with_q = uses_q(rep.inequality);
    json viol = json::array();
    for (const auto& v : rep.violations) {
        viol.push_back(json{{"trial", v.trial},
                            {"inputs", to_json(v.witness, with_q)},
                            {"gap", to_json(v.witness_gap)},
                            {"shrink_t", v.shrink_t},
                            {"original_inputs", to_json(v.original, with_q)},
                            {"original_gap", to_json(v.original_gap)}});
    }
    json counts = json::object();
    for (std::size_t i = 0; i < all_samplers.size(); ++i) {
        counts[std::string(to_string(all_samplers[i]))] = rep.sampler_counts[i];
    }
    json cfg = to_json(rep.sampler_config);
    cfg["seed"] = rep.seed;
    return json{{"inequality", std::string(to_string(rep.inequality))},
                {"trials", rep.trials},
                {"violation_count", rep.violation_count},
                {"violations", viol},
                {"min_gap_over_scale", rep.min_gap_over_scale},
                {"argmin_trial", rep.argmin_trial},
                {"sampler_counts", counts},
                {"sampler_config", cfg}};
}

inline json to_json(const SelfTestReport& st) {
    return json{{"inequality", std::string(to_string(st.inequality))},
                {"rhs_factor", st.rhs_factor},
                {"cases", st.cases},
                {"planted", st.planted},
                {"detected", st.detected},
                {"false_alarms", st.false_alarms},
                {"passed", st.passed()}};
}

}  // namespace matconc
