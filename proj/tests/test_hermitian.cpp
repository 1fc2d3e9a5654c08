#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "matconc/hermitian.hpp"
#include "matconc/random_matrix.hpp"
#include "oracles.hpp"

using namespace matconc;

namespace {

double rel_err(double a, double b) { return std::abs(a - b) / (1.0 + std::abs(b)); }

}  // namespace

TEST(HermitianMatrix, RejectsNonHermitian) {
    GeneralMatrix m(2, 2);
    m << 1.0, 2.0, 3.0, 4.0;
    EXPECT_THROW(HermitianMatrix{m}, NotHermitianError);
    EXPECT_THROW(HermitianMatrix{GeneralMatrix(2, 3)}, PreconditionError);
    EXPECT_THROW(HermitianMatrix{GeneralMatrix(0, 0)}, PreconditionError);
}

TEST(HermitianMatrix, SymmetrizesWithinTolerance) {
    GeneralMatrix m(2, 2);
    m << Complex(1.0, 1e-14), Complex(2.0, 1.0), Complex(2.0 + 1e-13, -1.0), 4.0;
    const HermitianMatrix h(m);
    EXPECT_EQ(h(0, 0).imag(), 0.0);
    EXPECT_EQ(h(0, 1), std::conj(h(1, 0)));
}

TEST(Eigh, IdentityAndDiagonal) {
    const auto id = eigh(HermitianMatrix::identity(2));
    EXPECT_DOUBLE_EQ(id.eigenvalues(0), 1.0);
    EXPECT_DOUBLE_EQ(id.eigenvalues(1), 1.0);
    const auto dg = eigh(HermitianMatrix::diagonal(RealVector{{3.0, -1.0}}));
    EXPECT_DOUBLE_EQ(dg.eigenvalues(0), -1.0);
    EXPECT_DOUBLE_EQ(dg.eigenvalues(1), 3.0);
}

TEST(Eigh, ReconstructionAndUnitarityOnRandomInputs) {
    Rng rng = make_rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const Index d = 1 + static_cast<Index>(uniform_index(rng, 12));
        const double scale = std::pow(10.0, 6.0 * uniform01(rng) - 3.0);
        const HermitianMatrix a = random_hermitian(d, rng, scale);
        const auto sd = eigh(a);
        const double norm_a = oracle::eigenvalues_qr(a.matrix()).cwiseAbs().maxCoeff();
        EXPECT_LE(oracle::max_abs(sd.basis * sd.basis.adjoint() - GeneralMatrix::Identity(d, d)), 1e-10 * d);
        EXPECT_LE(oracle::max_abs(sd.reconstruct() - a.matrix()), 1e-9 * (1.0 + norm_a));
        for (Index k = 1; k < d; ++k) {
            EXPECT_LE(sd.eigenvalues(k - 1), sd.eigenvalues(k));
        }
        const RealVector qr = oracle::eigenvalues_qr(a.matrix());
        EXPECT_LE((qr - sd.eigenvalues).cwiseAbs().maxCoeff(), 1e-12 * (1.0 + norm_a));
    }
}

TEST(Eigh, DegenerateAndLargeDimension) {
    Rng rng = make_rng(3);
    const GeneralMatrix u = random_unitary(8, rng);
    RealVector lam{{1, 1, 1, -2, -2, 0, 0, 5}};
    const HermitianMatrix a = HermitianMatrix::hermitian_part(u * lam.cast<Complex>().asDiagonal() * u.adjoint());
    const auto sd = eigh(a);
    EXPECT_LE(oracle::max_abs(sd.reconstruct() - a.matrix()), 1e-12);
    EXPECT_NEAR(sd.eigenvalues(0), -2.0, 1e-12);
    EXPECT_NEAR(sd.eigenvalues(7), 5.0, 1e-12);

    const HermitianMatrix big = random_hermitian(64, rng);
    const auto sd64 = eigh(big);
    EXPECT_LE(oracle::max_abs(sd64.reconstruct() - big.matrix()), 1e-9 * (1.0 + operator_norm(big)));
}

TEST(Eigh, IsDeterministic) {
    Rng r1 = make_rng(5);
    const HermitianMatrix a = random_hermitian(7, r1);
    const auto x = eigh(a);
    const auto y = eigh(a);
    EXPECT_TRUE((x.eigenvalues.array() == y.eigenvalues.array()).all());
    EXPECT_TRUE((x.basis.array() == y.basis.array()).all());
}

TEST(Eigh, IterationCapReportsDiagnostics) {
    Rng rng = make_rng(8);
    const HermitianMatrix a = random_hermitian(6, rng);
    try {
        eigh(a, JacobiOptions{0, 1e-13});
        FAIL() << "expected ConvergenceError";
    } catch (const ConvergenceError& e) {
        EXPECT_NE(std::string(e.what()).find("dim 6"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("residual"), std::string::npos);
    }
}

TEST(MatrixFunction, ExpOfZeroIsIdentity) {
    const auto e = expm(HermitianMatrix::zero(3));
    EXPECT_LE(oracle::max_abs(e.matrix() - GeneralMatrix::Identity(3, 3)), 1e-15);
}

TEST(MatrixFunction, AbsOfDiagonal) {
    const auto a = abs(HermitianMatrix::diagonal(RealVector{{-2.0, 3.0}}));
    EXPECT_NEAR(a(0, 0).real(), 2.0, 1e-15);
    EXPECT_NEAR(a(1, 1).real(), 3.0, 1e-15);
    EXPECT_NEAR(std::abs(a(0, 1)), 0.0, 1e-15);
}

TEST(MatrixFunction, ExpMatchesTaylorOracle) {
    Rng rng = make_rng(21);
    for (int trial = 0; trial < 50; ++trial) {
        const HermitianMatrix a = random_hermitian(4, rng);
        const GeneralMatrix ref = oracle::expm_taylor(a.matrix());
        const GeneralMatrix got = expm(a).matrix();
        EXPECT_LE((got - ref).norm() / ref.norm(), 1e-10);
    }
}

TEST(MatrixFunction, CommutesWithArgumentAndIdentityFunction) {
    Rng rng = make_rng(22);
    const HermitianMatrix a = random_hermitian(5, rng);
    const GeneralMatrix f = matrix_function(a, [](double x) { return std::sin(x) + x * x; }).matrix();
    EXPECT_LE(oracle::max_abs(f * a.matrix() - a.matrix() * f), 1e-9);
    const auto id = matrix_function(a, [](double x) { return x; });
    EXPECT_LE(oracle::max_abs(id.matrix() - a.matrix()), 1e-12);
    // composition: exp(|A|) = (exp o abs)(A)
    const auto lhs = expm(abs(a));
    const auto rhs = matrix_function(a, [](double x) { return std::exp(std::abs(x)); });
    EXPECT_LE(oracle::max_abs(lhs.matrix() - rhs.matrix()), 1e-10 * rhs.max_abs());
}

TEST(MatrixFunction, DomainErrorNamesEigenvalue) {
    const HermitianMatrix a = HermitianMatrix::diagonal(RealVector{{-0.5, 2.0}});
    try {
        matrix_function(a, [](double x) { return std::log(x); }, Interval::positive());
        FAIL() << "expected DomainError";
    } catch (const DomainError& e) {
        EXPECT_NE(std::string(e.what()).find("-0.5"), std::string::npos);
    }
}

TEST(MatrixFunction, PositiveNegativePartsSplitMatrix) {
    Rng rng = make_rng(23);
    const HermitianMatrix a = random_hermitian(5, rng);
    const HermitianMatrix p = positive_part(a);
    const HermitianMatrix n = negative_part(a);
    EXPECT_LE(oracle::max_abs((p - n).matrix() - a.matrix()), 1e-12);
    EXPECT_LE(oracle::max_abs((p + n).matrix() - abs(a).matrix()), 1e-12);
    EXPECT_LE(oracle::max_abs(p.matrix() * n.matrix()), 1e-12);
}

TEST(IntegerPower, MatchesRepeatedProduct) {
    Rng rng = make_rng(24);
    const HermitianMatrix a = random_hermitian(4, rng);
    GeneralMatrix ref = GeneralMatrix::Identity(4, 4);
    for (int q = 0; q <= 7; ++q) {
        EXPECT_LE(oracle::max_abs(integer_power(a, q).matrix() - ref), 1e-11 * (1.0 + ref.cwiseAbs().maxCoeff()));
        ref = ref * a.matrix();
    }
}

TEST(PsdLeq, TrivialCases) {
    Rng rng = make_rng(30);
    const HermitianMatrix a = random_hermitian(4, rng);
    const auto same = psd_leq(a, a);
    EXPECT_TRUE(same.holds);
    EXPECT_NEAR(same.lambda_min, 0.0, 1e-12);
    const auto zi = psd_leq(HermitianMatrix::zero(3), HermitianMatrix::identity(3));
    EXPECT_TRUE(zi.holds);
    EXPECT_NEAR(zi.lambda_min, 1.0, 1e-15);
    const auto iz = psd_leq(HermitianMatrix::identity(3), HermitianMatrix::zero(3));
    EXPECT_FALSE(iz.holds);
    EXPECT_NEAR(iz.lambda_min, -1.0, 1e-15);
    EXPECT_NEAR(iz.witness.norm(), 1.0, 1e-12);
    EXPECT_THROW(psd_leq(HermitianMatrix::zero(2), HermitianMatrix::zero(3)), PreconditionError);
}

TEST(PsdLeq, WitnessAttainsMinimum) {
    Rng rng = make_rng(31);
    const HermitianMatrix a = random_hermitian(5, rng);
    const HermitianMatrix b = random_hermitian(5, rng);
    const auto v = psd_leq(a, b);
    const GeneralMatrix diff = b.matrix() - a.matrix();
    const double rq = (v.witness.adjoint() * diff * v.witness)(0, 0).real();
    EXPECT_NEAR(rq, v.lambda_min, 1e-10);
    EXPECT_NEAR(v.lambda_min, oracle::eigenvalues_qr(diff)(0), 1e-10);
}

// Property: Re(AB) <= (A^2 + B^2)/2 and ((A+B)/2)^2 <= (A^2+B^2)/2.
TEST(PsdLeq, MatrixAmGmAndOperatorConvexityOfSquare) {
    Rng rng = make_rng(32);
    for (int trial = 0; trial < 300; ++trial) {
        const Index d = 1 + static_cast<Index>(uniform_index(rng, 6));
        const HermitianMatrix a = random_hermitian(d, rng, 0.1 + 3 * uniform01(rng));
        const HermitianMatrix b = random_hermitian(d, rng, 0.1 + 3 * uniform01(rng));
        const HermitianMatrix mean_sq = 0.5 * (square(a) + square(b));
        const HermitianMatrix re_ab = HermitianMatrix::hermitian_part(a.matrix() * b.matrix());
        EXPECT_TRUE(psd_leq(re_ab, mean_sq).holds);
        EXPECT_TRUE(psd_leq(square(0.5 * (a + b)), mean_sq).holds);
    }
}

TEST(SchattenNorm, ClosedFormCases) {
    for (Index d = 1; d <= 5; ++d) {
        for (double p : {1.0, 2.0, 3.5}) {
            EXPECT_NEAR(schatten_norm(GeneralMatrix::Identity(d, d), p), std::pow(double(d), 1.0 / p), 1e-12);
        }
        EXPECT_NEAR(schatten_norm(GeneralMatrix::Identity(d, d), std::numeric_limits<double>::infinity()), 1.0, 1e-15);
    }
    GeneralMatrix m = GeneralMatrix::Zero(2, 2);
    m(0, 0) = 3.0;
    m(1, 1) = -4.0;
    EXPECT_NEAR(schatten_norm(m, 1.0), 7.0, 1e-12);
    EXPECT_THROW(schatten_norm(m, 0.5), PreconditionError);
}

TEST(SchattenNorm, TwoNormIsFrobenius) {
    Rng rng = make_rng(40);
    for (int trial = 0; trial < 20; ++trial) {
        const GeneralMatrix b = random_general(4, 3, rng);
        EXPECT_NEAR(schatten_norm(b, 2.0), oracle::frobenius_entrywise(b), 1e-12 * oracle::frobenius_entrywise(b));
    }
}

TEST(InducedNorm, SmallExample) {
    Eigen::MatrixXd m(2, 2);
    m << 1, 2, 3, 4;
    EXPECT_DOUBLE_EQ(induced_norm(m, 1.0), 6.0);
    EXPECT_DOUBLE_EQ(induced_norm(m, std::numeric_limits<double>::infinity()), 7.0);
    EXPECT_THROW(induced_norm(m, 2.0), PreconditionError);
    Eigen::SparseMatrix<double> sp = m.sparseView();
    EXPECT_DOUBLE_EQ(induced_norm(sp, 1.0), 6.0);
    EXPECT_DOUBLE_EQ(induced_norm(sp, std::numeric_limits<double>::infinity()), 7.0);
}

TEST(Dilation, SmallCases) {
    GeneralMatrix one(1, 1);
    one(0, 0) = 1.0;
    const auto d1 = hermitian_dilation(one);
    EXPECT_EQ(d1.dim(), 2);
    EXPECT_EQ(d1(0, 1), Complex(1.0));
    const auto ev = eigenvalues(d1);
    EXPECT_NEAR(ev(0), -1.0, 1e-15);
    EXPECT_NEAR(ev(1), 1.0, 1e-15);
    const auto z = hermitian_dilation(GeneralMatrix::Zero(2, 3));
    EXPECT_EQ(z.dim(), 5);
    EXPECT_EQ(z.max_abs(), 0.0);
}

// Three routes to the spectral norm must agree: Schatten-infinity (SVD),
// lambda_max of the dilation (Jacobi), and sqrt(lambda_max(B* B)).
TEST(Dilation, SpectralNormRoutesAgree) {
    Rng rng = make_rng(41);
    for (int trial = 0; trial < 100; ++trial) {
        const Index r = 1 + static_cast<Index>(uniform_index(rng, 5));
        const Index c = 1 + static_cast<Index>(uniform_index(rng, 5));
        const GeneralMatrix b = random_general(r, c, rng);
        const double svd = spectral_norm(b);
        const double dil = lambda_max(hermitian_dilation(b));
        const double gram = std::sqrt(oracle::eigenvalues_qr(b.adjoint() * b).maxCoeff());
        EXPECT_LE(rel_err(dil, svd), 1e-10);
        EXPECT_LE(rel_err(gram, svd), 1e-9);
    }
}
