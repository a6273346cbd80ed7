#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "lresp/certificates.hpp"

using namespace lresp;

namespace {

const char* kEightBranch = "8*x + 0.0025*(sin(16*pi*x) + sin(32*pi*x)/4)";

MapModel doubling() { return MapModel::uniform(parse_expr("2*x"), 2, "2*x"); }
MapModel eight_branch() { return MapModel::uniform(parse_expr(kEightBranch), 8, kEightBranch); }

// Spectral radius and positive eigenvectors of a 2x2 nonnegative matrix in
// long double, independent of the certified routine.
struct Eig {
    long double rho, a, b, x, y;
};
Eig eig(const Mat2& A) {
    long double p = A[0][0], q = A[0][1], r = A[1][0], s = A[1][1];
    long double tr = p + s, det = p * s - q * r;
    long double rho = (tr + std::sqrt(tr * tr - 4 * det)) / 2;
    // left: (a,b)(A - rho) = 0  ->  a (p - rho) + b r = 0
    long double a = r, b = rho - p;
    if (a == 0 && b == 0) a = 1;
    long double x = q, y = rho - p;
    if (x == 0 && y == 0) x = 1;
    return {rho, a / (a + b), b / (a + b), x / std::max(x, y), y / std::max(x, y)};
}

EquilibriumCertificate from_matrix(const Mat2& A, int n1 = 1) {
    Rho r = certify_rho(A);
    EquilibriumCertificate c;
    c.n1 = n1;
    c.mat = A;
    c.rho = r.rho;
    c.a = r.a;
    c.b = r.b;
    c.x = r.x;
    c.y = r.y;
    c.ly.M = 1.0;
    c.ly.lambda = 0.5;
    c.ly.C_iter = 1.0;
    BlockBound bb = block_bound(c, 1.0, 1.0);
    c.C1 = bb.w;
    c.C1_strong = bb.s;
    return c;
}

}  // namespace

TEST(LYConstants, DoublingMap) {
    LYConstants ly = ly_constants(certify_expanding(doubling(), 8));
    EXPECT_EQ(ly.lambda, 0.5);
    EXPECT_EQ(ly.B, 0.0);
    EXPECT_EQ(ly.M, 1.0);
    EXPECT_EQ(ly.C, 0.5);
    EXPECT_EQ(ly.Z, 0.0);
    EXPECT_EQ(ly.Bd, 0.0);
    EXPECT_EQ(ly.C_iter, 1.0);
}

TEST(LYConstants, FormulasAgainstDirectEvaluation) {
    DerivativeBounds db{0.25, 0.3, 0.7};
    LYConstants ly = ly_constants(db);
    const double M = 1 + 0.3 / 0.75;
    EXPECT_NEAR(ly.M, M, 1e-14);
    EXPECT_GE(ly.M, M);
    EXPECT_NEAR(ly.C, 0.25 * 0.3 + 0.75 * M, 1e-14);
    EXPECT_NEAR(ly.D, 0.25 * M + ly.C + 3 * 1.0 * M + M * 0.7, 1e-13);
    EXPECT_NEAR(ly.Bd, 0.3 * M / 0.75, 1e-14);
    EXPECT_NEAR(ly.C_iter, ly.Bd + M, 1e-14);
    const double q = 0.3 / 0.75;
    EXPECT_NEAR(ly.D_iter, std::max(3 * 0.25 * 0.3 * M / 0.75, 3 * M * q * q + M * ly.Z) + M * 0.25 + ly.C_iter, 1e-13);
}

TEST(LYConstants, SmallLambdaLimit) {
    LYConstants ly = ly_constants(DerivativeBounds{1e-12, 0.2, 0.0});
    EXPECT_NEAR(ly.M, 1.2, 1e-10);
    EXPECT_NEAR(ly.C, ly.M, 1e-10);
}

TEST(LYConstants, RejectsNonContractingLambda) {
    EXPECT_THROW(ly_constants(DerivativeBounds{1.0, 0.0, 0.0}), NotExpanding);
}

TEST(LYConstants, EightBranchMapNearReferenceValues) {
    LYConstants ly = ly_constants(certify_expanding(eight_branch(), 12));
    EXPECT_LE(ly.lambda, 0.130);
    EXPECT_LE(ly.B, 0.21);
    EXPECT_LE(ly.M, 1.25);
    EXPECT_NEAR(ly.M, 1.2, 0.12);
    EXPECT_NEAR(ly.C_iter, 1.44, 0.144);
    EXPECT_NEAR(ly.D_iter, 3.8, 0.38);
    // C1 contraction of the iterate: M lambda close to 1.2 * 0.127
    EXPECT_NEAR(ly.M * ly.lambda, 1.2 * 0.127, 0.1 * 1.2 * 0.127);
}

TEST(DiscreteLY, DoublingFormulaArithmetic) {
    LYConstants ly = ly_constants(certify_expanding(doubling(), 8));
    DiscreteLY d = discrete_ly(ly, PartitionScheme(4096), 6);
    const double expect = (4.5 + 2.0 / 4096) * 4.5 / 64 + 10.0 / 4096;
    EXPECT_NEAR(d.lambda_eta, expect, 1e-14);
    EXPECT_NEAR(d.lambda_eta, 0.319, 5e-4);
    EXPECT_TRUE(d.usable);
}

TEST(DiscreteLY, LargeMLimitAndUnusableFlag) {
    LYConstants ly = ly_constants(certify_expanding(doubling(), 8));
    DiscreteLY d = discrete_ly(ly, PartitionScheme(1 << 24), 3);
    EXPECT_NEAR(d.lambda_eta, 81.0 / 4 / 8, 1e-4);
    EXPECT_FALSE(d.usable);
}

TEST(OperatorDistance, ScalesInverselyWithM) {
    LYConstants ly = ly_constants(certify_expanding(doubling(), 8));
    DistancePair a = operator_distance(ly, PartitionScheme(4096));
    DistancePair b = operator_distance(ly, PartitionScheme(8192));
    EXPECT_NEAR(a.strong, 3.0 / 4096 * (0.5 + 5.0), 1e-15);
    EXPECT_NEAR(a.weak, 3.0 / 4096, 1e-15);
    EXPECT_NEAR(b.strong * 2, a.strong, 1e-15);
    EXPECT_NEAR(b.weak * 2, a.weak, 1e-15);
}

TEST(PowerDistance, SingleStepAndDegenerateCases) {
    ApproxBound ab;
    ab.delta = 1.0 / 1024;
    ab.per_power = {1.0, 1.0, 1.0, 1.0};
    ab.lambda1 = 0.0;
    auto c1 = power_distance_candidates(ab, 1);
    // n = 1: the node form is the single-step term K delta (lambda M + P M)
    EXPECT_EQ(c1[0].method, "node");
    EXPECT_NEAR(c1[0].strong, 3.0 / 1024 * 5.0, 1e-15);
    DistancePair d = power_distance(ab, 3);
    EXPECT_TRUE(std::isfinite(d.strong) && std::isfinite(d.weak));
    // without a profile only the coarse form is available
    ab.per_power.clear();
    auto cc = power_distance_candidates(ab, 3);
    ASSERT_EQ(cc.size(), 1u);
    EXPECT_EQ(cc[0].method, "coarse");
}

TEST(CertifyRho, MatchesLongDoubleEigensystem) {
    for (Mat2 A : {Mat2{{{4.94e-6, 1.44}, {7.7e-5, 0.00655}}}, Mat2{{{1.91e-6, 1.0}, {0.000147, 0.00655}}},
                   Mat2{{{0.3, 0.2}, {0.1, 0.4}}}}) {
        Rho r = certify_rho(A);
        Eig e = eig(A);
        EXPECT_GE(r.rho, static_cast<double>(e.rho));
        EXPECT_NEAR(r.rho, static_cast<double>(e.rho), 1e-6 * static_cast<double>(e.rho));
        EXPECT_NEAR(r.a, static_cast<double>(e.a), 1e-5);
        EXPECT_NEAR(r.x, static_cast<double>(e.x), 1e-5);
        EXPECT_NEAR(r.y, static_cast<double>(e.y), 1e-5);
    }
}

TEST(CertifyRho, ReferenceMatricesGiveExpectedRates) {
    EquilibriumCertificate c4 = from_matrix({{{4.94e-6, 1.44}, {7.7e-5, 0.00655}}});
    EXPECT_LE(c4.rho, 0.015);
    EXPECT_LE(c4.C1, 1.02);
    EXPECT_NEAR(c4.C1_strong, 98.36, 0.1 * 98.36);
    EquilibriumCertificate c5 = from_matrix({{{1.91e-6, 1.0}, {0.000147, 0.00655}}});
    EXPECT_LE(c5.rho, 0.016);
    EXPECT_LE(c5.C1, 1.02);
    EXPECT_NEAR(c5.C1_strong, 66.67, 0.1 * 66.67);
}

TEST(CertifyRho, DiagonalMatrixIsPerturbedToPositiveVectors) {
    EquilibriumCertificate c = from_matrix({{{0.5, 0.0}, {0.0, 0.25}}});
    EXPECT_NEAR(c.rho, 0.5, 1e-6);
    EXPECT_GT(c.a, 0.0);
    EXPECT_GT(c.b, 0.0);
    EXPECT_TRUE(eigen_inequality_holds(c));
}

TEST(CertifyRho, RejectsNegativeEntries) {
    EXPECT_THROW(certify_rho(Mat2{{{0.5, -1e-3}, {0.0, 0.25}}}), DomainError);
}

TEST(BlockBound, DominatesIteratedMatrix) {
    EquilibriumCertificate c = from_matrix({{{4.94e-6, 1.44}, {7.7e-5, 0.00655}}});
    for (auto [s0, w0] : {std::pair{1.0, 1.0}, std::pair{5.0, 0.1}, std::pair{0.01, 2.0}}) {
        BlockBound bb = block_bound(c, s0, w0);
        long double s = s0, w = w0, rk = 1;
        for (int k = 0; k < 12; ++k) {
            EXPECT_LE(s, bb.s * rk * (1 + 1e-12));
            EXPECT_LE(w, bb.w * rk * (1 + 1e-12));
            long double s2 = c.mat[0][0] * s + c.mat[0][1] * w, w2 = c.mat[1][0] * s + c.mat[1][1] * w;
            s = s2;
            w = w2;
            rk *= c.rho;
        }
    }
}

TEST(TailLength, InfiniteTauGivesOneBlockAndTailDecreases) {
    EquilibriumCertificate c = from_matrix({{{4.94e-6, 1.44}, {7.7e-5, 0.00655}}}, 6);
    TailResult t = tail_length(c, 1.0, std::numeric_limits<double>::infinity());
    EXPECT_EQ(t.l_star, 6);
    double prev = std::numeric_limits<double>::infinity();
    for (int l = 0; l <= 60; l += 3) {
        double v = tail_value(c, 2.0, 0.5, l);
        EXPECT_LE(v, prev);
        prev = v;
    }
    TailResult t2 = tail_length(c, 2.0, 0.5, 1e-6);
    EXPECT_EQ(t2.l_star % 6, 0);
    EXPECT_LE(t2.value, 1e-6);
    EXPECT_GT(tail_value(c, 2.0, 0.5, t2.l_star - 6), 1e-6);
}

TEST(Equilibrium, DoublingMapAtCoarseM) {
    MapModel map = doubling();
    LYConstants ly = ly_constants(certify_expanding(map, 8));
    EquilibriumCertificate eq = equilibrium(assemble(map, PartitionScheme(4096), SchemeKind::c0), ly);
    EXPECT_LE(eq.n1, 24);
    EXPECT_LT(eq.lambda2, 1e-3);
    EXPECT_LT(eq.rho, 0.05);
    EXPECT_TRUE(eigen_inequality_holds(eq));
    EXPECT_GT(resolvent_bound(eq), 1.0);
}

TEST(Equilibrium, EightBranchMap) {
    MapModel map = eight_branch();
    LYConstants ly = ly_constants(certify_expanding(map, 12));
    EquilibriumCertificate eq = equilibrium(assemble(map, PartitionScheme(4096), SchemeKind::c0), ly);
    EXPECT_LE(eq.n1, 24);
    EXPECT_LT(eq.rho, 0.05);
    EXPECT_TRUE(eigen_inequality_holds(eq));
}

TEST(Equilibrium, CapTooSmallThrows) {
    MapModel map = doubling();
    LYConstants ly = ly_constants(certify_expanding(map, 8));
    EquilibriumOptions opt;
    opt.n1_cap = 2;
    opt.lambda2_target = 1e-9;
    EXPECT_THROW(equilibrium(assemble(map, PartitionScheme(256), SchemeKind::c0), ly, opt), NoContraction);
}

TEST(PowerDistance, DoublingFineNoWorseThanReferencePair) {
    // Reference pair at m = 131072: 0.000147 ||f||_C1 + 0.00655 ||f||_inf. The
    // power profile of the coarse operator stands in for the fine one (C_k
    // barely depends on m); only delta changes.
    MapModel map = doubling();
    LYConstants ly = ly_constants(certify_expanding(map, 8));
    DiscretizedOperator op = assemble(map, PartitionScheme(4096), SchemeKind::c0);
    PowerProfile pr = power_profile(op, 19);
    ApproxBound ab = approx_bound(ly, op, pr.C);
    ab.delta = 1.0 / 131072;
    DistancePair d = power_distance(ab, 19);
    EXPECT_LE(d.strong, 0.000147);
    EXPECT_LE(d.weak, 0.00655);
    // every candidate is finite and the coarse one stays within an order of magnitude
    for (const DistancePair& c : power_distance_candidates(ab, 19)) {
        EXPECT_TRUE(std::isfinite(c.strong) && std::isfinite(c.weak)) << c.method;
        if (c.method == "coarse") EXPECT_LE(c.strong, 10 * 0.000147);
    }
}
