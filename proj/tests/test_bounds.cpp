#include <cmath>

#include <gtest/gtest.h>

#include "matconc/bounds.hpp"
#include "oracles.hpp"

using namespace matconc;

namespace {

TailBoundParams params(double c, double v, Index d) {
    TailBoundParams p;
    p.c = c;
    p.v = v;
    p.d = d;
    return p;
}

}  // namespace

TEST(Tails, ZeroDeviationGivesDimension) {
    for (Index d : {1, 2, 7}) {
        const Thm31Tails t = thm31_tails(params(0.3, 1.7, d), 0.0);
        EXPECT_DOUBLE_EQ(t.min_tail, static_cast<double>(d));
        EXPECT_DOUBLE_EQ(t.max_tail_refined, static_cast<double>(d));
        EXPECT_DOUBLE_EQ(t.max_tail_relaxed, static_cast<double>(d));
    }
}

TEST(Tails, GaussianCaseWithoutC) {
    const Thm31Tails t = thm31_tails(params(0.0, 1.0, 2), 2.0);
    const double expected = 2.0 * std::exp(-2.0);
    EXPECT_NEAR(t.min_tail, expected, 1e-15);
    EXPECT_NEAR(t.max_tail_refined, expected, 1e-15);
    EXPECT_NEAR(t.max_tail_relaxed, expected, 1e-15);
}

TEST(Tails, RefinedTailContinuousInC) {
    for (double t : {0.1, 1.0, 5.0}) {
        const double at0 = thm31_tails(params(0.0, 0.8, 3), t).max_tail_refined;
        const double tiny = thm31_tails(params(1e-12, 0.8, 3), t).max_tail_refined;
        EXPECT_NEAR(tiny / at0, 1.0, 1e-9) << t;
    }
    // Far out the first-order term (t^2/v)(x/3), x = ct/v, is visible and must be resolved.
    const double t = 30.0;
    const double x = 1e-12 * t / 0.8;
    const double ratio = thm31_tails(params(1e-12, 0.8, 3), t).max_tail_refined /
                         thm31_tails(params(0.0, 0.8, 3), t).max_tail_refined;
    EXPECT_NEAR(ratio, std::exp((t * t / 0.8) * x / 3.0), 1e-12);
}

TEST(Tails, RefinedMatchesDirectFormula) {
    for (double c : {0.05, 0.5, 2.0}) {
        for (double v : {0.3, 1.0, 4.0}) {
            for (double t : {0.2, 1.0, 3.0, 10.0}) {
                const double direct = 5.0 * std::exp(-t / c + (v / (c * c)) * std::log(1.0 + c * t / v));
                const double got = thm31_tails(params(c, v, 5), t).max_tail_refined;
                EXPECT_NEAR(got / direct, 1.0, 1e-10) << c << " " << v << " " << t;
            }
        }
    }
}

TEST(Tails, SeriesBranchMatchesClosedForm) {
    for (double x : {5e-4, 9.99e-4, 1e-3, 1.01e-3}) {
        const double closed = (x - std::log1p(x)) / (x * x);
        EXPECT_NEAR(detail::refined_rate(x), closed, 1e-9) << x;
    }
}

TEST(Tails, RefinedNeverExceedsRelaxed) {
    Rng rng = make_rng(5);
    for (int k = 0; k < 500; ++k) {
        const double c = 3.0 * uniform01(rng);
        const double v = 0.01 + 5.0 * uniform01(rng);
        const double t = 20.0 * uniform01(rng);
        const Thm31Tails tails = thm31_tails(params(c, v, 4), t);
        EXPECT_LE(tails.max_tail_refined, tails.max_tail_relaxed * (1.0 + 1e-12));
        EXPECT_LE(tails.max_tail_relaxed, 4.0 * (1.0 + 1e-15));
    }
}

TEST(Tails, MonotoneInT) {
    const auto p = params(0.7, 1.3, 3);
    double prev_min = 4.0;
    double prev_ref = 4.0;
    for (double t = 0.0; t < 20.0; t += 0.25) {
        const Thm31Tails tails = thm31_tails(p, t);
        EXPECT_LE(tails.min_tail, prev_min);
        EXPECT_LE(tails.max_tail_refined, prev_ref);
        prev_min = tails.min_tail;
        prev_ref = tails.max_tail_refined;
    }
}

TEST(Tails, RejectsBadInput) {
    EXPECT_THROW(thm31_tails(params(-1.0, 1.0, 2), 1.0), PreconditionError);
    EXPECT_THROW(thm31_tails(params(0.0, 0.0, 2), 1.0), PreconditionError);
    EXPECT_THROW(thm31_tails(params(0.0, 1.0, 0), 1.0), PreconditionError);
    EXPECT_THROW(thm31_tails(params(0.0, 1.0, 2), -0.1), PreconditionError);
    auto p = params(0.0, 1.0, 2);
    p.s = 0.0;
    EXPECT_THROW(thm31_tails(p, 1.0), PreconditionError);
}

TEST(Tails, ScaleParameterDoesNotEnter) {
    auto p = params(0.4, 1.1, 3);
    const Thm31Tails a = thm31_tails(p, 2.0);
    p.s = 17.0;
    const Thm31Tails b = thm31_tails(p, 2.0);
    EXPECT_EQ(a.max_tail_refined, b.max_tail_refined);
    EXPECT_EQ(a.min_tail, b.min_tail);
}

TEST(Tails, CurveFollowsGrid) {
    const auto grid = linear_grid(0.0, 4.0, 9);
    ASSERT_EQ(grid.size(), 9U);
    EXPECT_DOUBLE_EQ(grid.back(), 4.0);
    const BoundCurve curve = thm31_curve(params(0.0, 1.0, 2), grid, BoundKind::min_tail);
    ASSERT_EQ(curve.points.size(), 9U);
    EXPECT_DOUBLE_EQ(curve.points[4].first, 2.0);
    EXPECT_NEAR(curve.points[4].second, 2.0 * std::exp(-2.0), 1e-15);
    EXPECT_EQ(to_string(BoundKind::max_tail_relaxed), "max_tail_relaxed");
}

TEST(Expectations, WorkedValues) {
    const auto a = expectation_bounds(0.0, 0.5, std::exp(2.0));
    EXPECT_NEAR(a.upper, std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(a.lower, -std::sqrt(2.0), 1e-15);
    const auto b = expectation_bounds(1.0, 0.5, std::exp(1.0));
    EXPECT_NEAR(b.upper, 2.0, 1e-15);
    EXPECT_NEAR(b.lower, -1.0, 1e-15);
    const auto one = thm31_expectations(params(1.0, 0.5, 1));
    EXPECT_DOUBLE_EQ(one.upper, 0.0);
    EXPECT_DOUBLE_EQ(one.lower, 0.0);
    EXPECT_THROW(expectation_bounds(0.0, 1.0, 0.5), PreconditionError);
}

TEST(Expectations, CTermAddsLogD) {
    const auto a = thm31_expectations(params(0.0, 0.5, 3));
    const auto b = thm31_expectations(params(1.0, 0.5, 3));
    EXPECT_NEAR(b.upper - a.upper, std::log(3.0), 1e-14);
    EXPECT_DOUBLE_EQ(a.lower, b.lower);
}

TEST(Expectations, OptimalParametersWithoutC) {
    const TailBoundParams p = best_params_without_c(0.25, 9.0, 3);
    EXPECT_NEAR(p.v, 1.5, 1e-15);
    EXPECT_NEAR(p.s, 6.0, 1e-15);
    // Both dominance constraints are tight and no other s gives smaller v.
    EXPECT_NEAR(p.v / p.s, 0.25, 1e-15);
    EXPECT_NEAR(p.v * p.s, 9.0, 1e-14);
    for (double s = 0.5; s < 50.0; s *= 1.3) {
        EXPECT_GE(std::max(0.25 * s, 9.0 / s), p.v - 1e-14);
    }
    EXPECT_THROW(best_params_without_c(0.0, 1.0, 2), PreconditionError);
}

TEST(BddDiff, WorkedValue) {
    const BddDiffBound b = bdd_diff_bound_sigma2(1.0, 2, 2.0);
    EXPECT_NEAR(b.tail, 2.0 * std::exp(-4.0), 1e-16);
    EXPECT_NEAR(b.mean_bound, std::sqrt(std::log(2.0)), 1e-15);
}

TEST(BddDiff, SigmaFromMatrices) {
    Rng rng = make_rng(11);
    std::vector<HermitianMatrix> a;
    GeneralMatrix sum = GeneralMatrix::Zero(3, 3);
    for (int j = 0; j < 6; ++j) {
        a.push_back(random_hermitian(3, rng));
        sum += a.back().matrix() * a.back().matrix();
    }
    const auto ev = oracle::eigenvalues_qr(sum);
    EXPECT_NEAR(sigma_squared(a), ev(2), 1e-10 * ev(2));
    const BddDiffBound b = bdd_diff_bound(a, 3, 1.5);
    EXPECT_NEAR(b.tail, 3.0 * std::exp(-2.25 / ev(2)), 1e-12);
    EXPECT_THROW(sigma_squared({}), PreconditionError);
}

TEST(BddDiff, ReducesToGaussianTailWithMatchingV) {
    // v = sigma^2 / 2 and c = 0 give exactly the same tail.
    for (double t : {0.0, 0.5, 2.0}) {
        const double bd = bdd_diff_bound_sigma2(1.7, 3, t).tail;
        const double th = thm31_tails(params(0.0, 0.85, 3), t).max_tail_refined;
        EXPECT_NEAR(bd, th, 1e-15);
    }
}

TEST(Dobrushin, ZeroInteractionMatchesBddDiff) {
    Rng rng = make_rng(3);
    std::vector<HermitianMatrix> a;
    for (int j = 0; j < 4; ++j) {
        a.push_back(random_hermitian(2, rng));
    }
    const RealMatrix d0 = RealMatrix::Zero(4, 4);
    for (double t : {0.0, 0.7, 2.5}) {
        const DobrushinBound db = dobrushin_bound(d0, a, 2, t);
        const BddDiffBound bd = bdd_diff_bound(a, 2, t);
        EXPECT_EQ(db.b, 1.0);
        EXPECT_EQ(db.tail, bd.tail);
        EXPECT_EQ(db.mean_bound, bd.mean_bound);
    }
}

TEST(Dobrushin, HalfNormsDoubleVariance) {
    RealMatrix dm(2, 2);
    dm << 0.0, 0.5, 0.5, 0.0;
    const std::vector<HermitianMatrix> a{HermitianMatrix::identity(2), HermitianMatrix::identity(2)};
    const DobrushinBound db = dobrushin_bound(dm, a, 2, 1.0);
    EXPECT_DOUBLE_EQ(db.norm1, 0.5);
    EXPECT_DOUBLE_EQ(db.norm_inf, 0.5);
    EXPECT_DOUBLE_EQ(db.b, 2.0);
    EXPECT_NEAR(db.tail, 2.0 * std::exp(-1.0 / (2.0 * 2.0)), 1e-15);
}

TEST(Dobrushin, ConditionViolationNamesTheNorm) {
    RealMatrix cols(3, 3);
    cols << 0.0, 0.9, 0.0, 0.0, 0.0, 0.0, 0.0, 0.3, 0.0;  // column sum 1.2, row sums < 1
    const std::vector<HermitianMatrix> a(3, HermitianMatrix::identity(1));
    try {
        dobrushin_bound(cols, a, 1, 1.0);
        FAIL() << "expected DobrushinConditionError";
    } catch (const DobrushinConditionError& e) {
        EXPECT_NE(std::string(e.what()).find("|||D|||_1"), std::string::npos);
    }
    try {
        dobrushin_bound(RealMatrix(cols.transpose()), a, 1, 1.0);
        FAIL() << "expected DobrushinConditionError";
    } catch (const DobrushinConditionError& e) {
        EXPECT_NE(std::string(e.what()).find("|||D|||_inf"), std::string::npos);
    }
}

TEST(Dobrushin, RejectsMalformedD) {
    const std::vector<HermitianMatrix> a(2, HermitianMatrix::identity(1));
    RealMatrix neg(2, 2);
    neg << 0.0, -0.1, 0.1, 0.0;
    EXPECT_THROW(dobrushin_bound(neg, a, 1, 1.0), PreconditionError);
    RealMatrix diag(2, 2);
    diag << 0.1, 0.1, 0.1, 0.0;
    EXPECT_THROW(dobrushin_bound(diag, a, 1, 1.0), PreconditionError);
    const std::vector<HermitianMatrix> three(3, HermitianMatrix::identity(1));
    EXPECT_THROW(dobrushin_bound(RealMatrix::Zero(2, 2), three, 1, 1.0), PreconditionError);
}

TEST(Dobrushin, ArithmeticMeanDominatesGeometricMean) {
    Rng rng = make_rng(17);
    for (int k = 0; k < 200; ++k) {
        const double n1 = 0.99 * uniform01(rng);
        const double ni = 0.99 * uniform01(rng);
        const double b = dobrushin_b(n1, ni);
        EXPECT_GE(b, 1.0 / (1.0 - std::sqrt(n1 * ni)) * (1.0 - 1e-14));
        EXPECT_GE(b, 1.0);
    }
}

TEST(ChainMatrix, Identities) {
    Rng rng = make_rng(23);
    const Index n = 6;
    RealMatrix dm = RealMatrix::Zero(n, n);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) {
            if (i != j) {
                dm(i, j) = 0.15 * uniform01(rng);
            }
        }
    }
    const RealMatrix b = chain_matrix(dm, n);
    const double nn = static_cast<double>(n);
    const double d1 = dm.cwiseAbs().colwise().sum().maxCoeff();
    const double di = dm.cwiseAbs().rowwise().sum().maxCoeff();
    EXPECT_NEAR(b.cwiseAbs().colwise().sum().maxCoeff(), 1.0 - (1.0 - d1) / nn, 1e-14);
    EXPECT_NEAR(b.cwiseAbs().rowwise().sum().maxCoeff(), 1.0 - (1.0 - di) / nn, 1e-14);
    for (Index i = 0; i < n; ++i) {
        EXPECT_NEAR(b(i, i), 1.0 - 1.0 / nn, 1e-15);
    }
    EXPECT_THROW(chain_matrix(dm, n + 1), PreconditionError);
}

TEST(Bdg, ScalarSignIsTight) {
    RademacherSeries r;
    r.g.push_back(HermitianMatrix::identity(1) * 1.7);
    const auto samples = r.enumerate();
    const BdgResult res = bdg_bound(1, 1.0, samples, true);
    EXPECT_NEAR(res.lhs, 1.7, 1e-14);
    EXPECT_NEAR(res.rhs, 1.7, 1e-14);
    EXPECT_TRUE(res.holds);
}

TEST(Bdg, ExhaustiveRademacherSeries) {
    Rng rng = make_rng(29);
    const RademacherSeries r = RademacherSeries::random(3, 2, rng);
    const auto samples = r.enumerate();
    ASSERT_EQ(samples.size(), 8U);
    for (int p : {1, 2, 3}) {
        for (double s : {0.1, 1.0, 3.0, 10.0}) {
            const BdgResult res = bdg_bound(p, s, samples, true);
            EXPECT_TRUE(res.holds) << p << " " << s << " " << res.lhs << " " << res.rhs;
            double acc = 0.0;
            for (const auto& smp : samples) {
                acc += smp.weight * oracle::eigenvalues_qr(smp.x.matrix()).array().abs().pow(2.0 * p).sum();
            }
            EXPECT_NEAR(res.lhs, std::pow(acc, 1.0 / (2.0 * p)), 1e-12 * res.lhs);
        }
    }
}

TEST(Bdg, RightSideMinimizedAtBalancedS) {
    Rng rng = make_rng(31);
    const RademacherSeries r = RademacherSeries::random(4, 2, rng);
    const auto samples = r.enumerate();
    const double best = bdg_bound(2, static_cast<double>(r.n()), samples, true).rhs;
    for (double s : {1.0, 2.0, 8.0}) {
        EXPECT_GE(bdg_bound(2, s, samples, true).rhs, best * (1.0 - 1e-12));
    }
}

TEST(Bdg, MonteCarloVerdict) {
    Rng rng = make_rng(37);
    const RademacherSeries r = RademacherSeries::random(5, 3, rng);
    std::vector<BdgSample> samples;
    for (int k = 0; k < 3000; ++k) {
        samples.push_back({r.sample(rng), r.v_x(), r.v_k(), 1.0});
    }
    const BdgResult res = bdg_bound(2, 5.0, samples, false);
    EXPECT_TRUE(res.holds);
    EXPECT_GT(res.lhs_se, 0.0);
    EXPECT_LT(res.rhs_se, 1e-10 * res.rhs);
}

TEST(Bdg, RejectsBadInput) {
    const std::vector<BdgSample> none;
    EXPECT_THROW(bdg_bound(1, 1.0, none, true), PreconditionError);
    RademacherSeries r;
    r.g.push_back(HermitianMatrix::identity(1));
    const auto samples = r.enumerate();
    EXPECT_THROW(bdg_bound(0, 1.0, samples, true), PreconditionError);
    EXPECT_THROW(bdg_bound(1, -1.0, samples, true), PreconditionError);
}

TEST(RademacherSeriesModel, ConditionalVariancesAreExact) {
    Rng rng = make_rng(41);
    const RademacherSeries r = RademacherSeries::random(3, 2, rng);
    const auto outcomes = r.enumerate();
    for (std::size_t mask = 0; mask < outcomes.size(); ++mask) {
        std::vector<double> eps(3);
        for (std::size_t j = 0; j < 3; ++j) {
            eps[j] = ((mask >> j) & 1U) != 0U ? 1.0 : -1.0;
        }
        const GeneralMatrix x = r.value(eps).matrix();
        EXPECT_LT(oracle::max_abs(x - outcomes[mask].x.matrix()), 1e-14);
        // (1/2) E[(X - X')^2 | eps] over the replaced index and its fresh sign.
        GeneralMatrix acc = GeneralMatrix::Zero(2, 2);
        for (std::size_t j = 0; j < 3; ++j) {
            for (double fresh : {-1.0, 1.0}) {
                std::vector<double> e2 = eps;
                e2[j] = fresh;
                const GeneralMatrix diff = x - r.value(e2).matrix();
                acc += (1.0 / 6.0) * (diff * diff);
            }
        }
        const GeneralMatrix vx = 0.5 * acc;
        EXPECT_LT(oracle::max_abs(vx - outcomes[mask].v_x.matrix()), 1e-12);
        EXPECT_LT(oracle::max_abs(9.0 * vx - outcomes[mask].v_k.matrix()), 1e-12);
        EXPECT_DOUBLE_EQ(outcomes[mask].weight, 0.125);
    }
}

TEST(Mgf, BoundFormsOrdered) {
    const auto p = params(0.5, 1.2, 3);
    for (double theta = 0.01; theta < 1.99; theta += 0.01) {
        const double tight = mgf_log_bound(p, theta);
        const double relaxed = mgf_log_bound(p, theta, MgfBoundForm::relaxed);
        EXPECT_LE(tight, relaxed * (1.0 + 1e-12)) << theta;
        EXPECT_GE(tight, 0.5 * p.v * theta * theta * (1.0 - 1e-12));
        const double direct = (p.v / (p.c * p.c)) * (std::log(1.0 / (1.0 - p.c * theta)) - p.c * theta);
        EXPECT_NEAR(tight, direct, 1e-9 * direct) << theta;
    }
    EXPECT_DOUBLE_EQ(mgf_log_bound(p, -2.0), 0.5 * 1.2 * 4.0);
    EXPECT_THROW(mgf_log_bound(p, 2.0), PreconditionError);
    EXPECT_THROW(mgf_log_bound(p, 3.0), PreconditionError);
    EXPECT_DOUBLE_EQ(mgf_log_bound(params(0.0, 2.0, 1), 10.0), 100.0);
}

TEST(Mgf, SeriesBranchMatchesClosedForm) {
    for (double y : {5e-4, 9.99e-4, 1e-3, 1.01e-3}) {
        const double closed = (-std::log1p(-y) - y) / (y * y);
        EXPECT_NEAR(detail::mgf_rate(y), closed, 1e-9) << y;
    }
}

TEST(Mgf, EstimateMatchesEnumeration) {
    Rng rng = make_rng(43);
    const RademacherSeries r = RademacherSeries::random(3, 2, rng);
    const auto outcomes = r.enumerate();
    std::vector<HermitianMatrix> xs;
    for (const auto& o : outcomes) {
        xs.push_back(o.x);
    }
    const std::vector<double> grid{-1.0, -0.2, 0.0, 0.3, 1.0};
    const auto est = trace_mgf_estimate(xs, grid);
    ASSERT_EQ(est.size(), grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
        double exact = 0.0;
        for (const auto& x : xs) {
            exact += oracle::expm_taylor(grid[k] * x.matrix()).trace().real() / 2.0;
        }
        exact /= static_cast<double>(xs.size());
        EXPECT_NEAR(est[k].m_hat, exact, 1e-12 * exact);
        EXPECT_NEAR(est[k].log_m, std::log(exact), 1e-12);
    }
    EXPECT_DOUBLE_EQ(est[2].m_hat, 1.0);
    EXPECT_EQ(est[2].se, 0.0);
}

TEST(Mgf, RademacherSeriesBelowSubGaussianBound) {
    Rng rng = make_rng(47);
    const RademacherSeries r = RademacherSeries::random(4, 3, rng);
    const auto outcomes = r.enumerate();
    std::vector<HermitianMatrix> xs;
    for (const auto& o : outcomes) {
        xs.push_back(o.x);
    }
    const TailBoundParams p =
        best_params_without_c(operator_norm(r.v_x()), operator_norm(r.v_k()), r.dim());
    const auto grid = linear_grid(-2.0, 2.0, 41);
    for (const auto& pt : trace_mgf_estimate(xs, grid)) {
        EXPECT_LE(pt.log_m, mgf_log_bound(p, pt.theta) + 1e-12) << pt.theta;
    }
}

TEST(Laplace, GaussianCalculus) {
    const double v = 1.3;
    auto lb = [v](double th) { return 0.5 * v * th * th; };
    for (double t : {0.5, 1.0, 3.0}) {
        const LaplaceResult up = laplace_optimize(lb, 3, t, TailBranch::upper);
        EXPECT_NEAR(up.value, 3.0 * std::exp(-t * t / (2.0 * v)), 1e-9 * up.value);
        EXPECT_NEAR(up.theta, t / v, 1e-6);
        const LaplaceResult lo = laplace_optimize(lb, 3, -t, TailBranch::lower);
        EXPECT_NEAR(lo.value, 3.0 * std::exp(-t * t / (2.0 * v)), 1e-9 * lo.value);
        EXPECT_NEAR(lo.theta, -t / v, 1e-6);
    }
}

TEST(Laplace, ReproducesRefinedTail) {
    for (double c : {0.1, 0.5, 2.0}) {
        const auto p = params(c, 0.7, 4);
        for (double t : {0.3, 1.0, 4.0, 12.0}) {
            const LaplaceResult res =
                laplace_optimize([&](double th) { return mgf_log_bound(p, th); }, p.d, t, TailBranch::upper, c);
            const double refined = thm31_tails(p, t).max_tail_refined;
            EXPECT_NEAR(res.value / refined, 1.0, 1e-6) << c << " " << t;
            EXPECT_NEAR(res.theta, t / (p.v + c * t), 1e-5);
        }
    }
}

TEST(Laplace, RelaxedBoundNeverBeatsTight) {
    const auto p = params(0.8, 0.6, 2);
    for (double t : {0.5, 2.0, 6.0}) {
        const double tight =
            laplace_optimize([&](double th) { return mgf_log_bound(p, th); }, 2, t, TailBranch::upper, p.c).value;
        const double relaxed = laplace_optimize(
            [&](double th) { return mgf_log_bound(p, th, MgfBoundForm::relaxed); }, 2, t, TailBranch::upper, p.c)
                                   .value;
        EXPECT_LE(tight, relaxed * (1.0 + 1e-9));
    }
}

TEST(Laplace, ZeroDeviationAndBracketFailure) {
    const LaplaceResult zero = laplace_optimize([](double th) { return th * th; }, 5, 0.0, TailBranch::upper);
    EXPECT_DOUBLE_EQ(zero.value, 5.0);
    EXPECT_NEAR(zero.theta, 0.0, 1e-8);
    EXPECT_THROW(laplace_optimize([](double) { return 0.0; }, 2, 1.0, TailBranch::upper), ConvergenceError);
    EXPECT_THROW(laplace_optimize([](double) { return 0.0; }, 0, 1.0, TailBranch::upper), PreconditionError);
}

TEST(Empirical, Exceedance) {
    const std::vector<double> v{0.0, 1.0, 2.0, 3.0};
    EXPECT_DOUBLE_EQ(empirical_exceedance(v, 1.0), 0.75);
    EXPECT_DOUBLE_EQ(empirical_exceedance(v, 3.5), 0.0);
    EXPECT_THROW(empirical_exceedance(std::vector<double>{}, 0.0), PreconditionError);
}

TEST(Empirical, RademacherTailBelowBound) {
    Rng rng = make_rng(53);
    const RademacherSeries r = RademacherSeries::random(10, 2, rng, 0.3);
    std::vector<double> lmax;
    for (int k = 0; k < 20000; ++k) {
        lmax.push_back(lambda_max(r.sample(rng)));
    }
    const double sigma2 = r.sigma2();
    for (double t : linear_grid(0.1, 3.0 * std::sqrt(sigma2), 20)) {
        const double freq = empirical_exceedance(lmax, t);
        const double bound = bdd_diff_bound_sigma2(sigma2, 2, t).tail;
        const double se = std::sqrt(std::max(freq, 1.0 / 20000.0) / 20000.0);
        EXPECT_LE(freq, bound + 3.0 * se) << t;
    }
}

TEST(BoundsJson, Fields) {
    const json j = to_json(params(0.5, 1.0, 3));
    EXPECT_EQ(j["d"], 3);
    EXPECT_EQ(j["c"], 0.5);
    RademacherSeries r;
    r.g.push_back(HermitianMatrix::identity(1));
    const json b = to_json(bdg_bound(1, 1.0, r.enumerate(), true));
    EXPECT_TRUE(b["holds"].get<bool>());
    EXPECT_TRUE(b["exact"].get<bool>());
}
