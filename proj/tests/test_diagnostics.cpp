#include "altcp/diagnostics.hpp"
#include "altcp/linalg.hpp"
#include "altcp/synthetic.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace altcp {
namespace {

FactoredTensor duplicated_column_truth(int d, int k, std::uint64_t seed) {
    Rng rng(seed);
    Eigen::VectorXd col = random_unit(d, rng);
    Eigen::MatrixXd m(d, k);
    for (int j = 0; j < k; ++j) m.col(j) = col;
    return FactoredTensor(Dims::cube(d), {m, m, m}, Eigen::VectorXd::Ones(k));
}

// ===========================================================================
// incoherence / spectral norms
// ===========================================================================

TEST(Incoherence, OrthonormalIsZero) {
    GroundTruth g = orthonormal_ground_truth(Dims::cube(12), 5, Eigen::VectorXd::Ones(5), 1);
    EXPECT_LE(incoherence(g.tensor).rho, 1e-12);
}

TEST(Incoherence, DuplicatedColumnsGiveOne) {
    IncoherenceResult res = incoherence(duplicated_column_truth(10, 3, 2));
    EXPECT_NEAR(res.rho, 1.0, 1e-12);
    EXPECT_GE(res.mode, 0);
}

TEST(Incoherence, MatchesNaivePairLoop) {
    GroundTruth g = random_ground_truth(Dims::cube(15), 6, 3);
    double naive = 0.0;
    for (int r = 0; r < 3; ++r)
        for (int i = 0; i < 6; ++i)
            for (int j = i + 1; j < 6; ++j)
                naive = std::max(naive,
                                 std::abs(g.tensor.factors[static_cast<size_t>(r)].col(i).dot(
                                     g.tensor.factors[static_cast<size_t>(r)].col(j))));
    EXPECT_NEAR(incoherence(g.tensor).rho, naive, 1e-12);
}

TEST(Incoherence, RandomInstancesSatisfyTheBound) {
    const int d = 1000, k = 100;
    const double bound = 4.0 * std::sqrt(std::log2(double(k)) / double(d));
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        GroundTruth g = random_ground_truth(Dims::cube(d), k, seed);
        EXPECT_LE(incoherence(g.tensor).rho, bound) << "seed " << seed;
    }
}

TEST(FactorSpectralNorms, OrthonormalIsOne) {
    GroundTruth g = orthonormal_ground_truth(Dims::cube(12), 5, Eigen::VectorXd::Ones(5), 5);
    SpectralNormsResult res = factor_spectral_norms(g.tensor);
    for (double n : res.per_mode) EXPECT_NEAR(n, 1.0, 1e-10);
}

TEST(FactorSpectralNorms, DuplicatedColumnGivesSqrtK) {
    SpectralNormsResult res = factor_spectral_norms(duplicated_column_truth(10, 9, 7));
    for (double n : res.per_mode) EXPECT_NEAR(n, 3.0, 1e-10);
}

TEST(FactorSpectralNorms, RandomBoundHolds) {
    const int d = 1000, k = 500;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        GroundTruth g = random_ground_truth(Dims::cube(d), k, seed);
        SpectralNormsResult res = factor_spectral_norms(g.tensor, 2.0);
        for (double m : res.margin) EXPECT_GE(m, 0.0);
        for (double n : res.per_mode)
            EXPECT_LE(n, 1.0 + 2.0 * std::sqrt(double(k) / double(d)));
    }
}

// ===========================================================================
// Khatri-Rao norms, cross terms
// ===========================================================================

TEST(KhatriRaoNorms, OrthonormalGivesOne) {
    GroundTruth g = orthonormal_ground_truth(Dims::cube(12), 4, Eigen::VectorXd::Ones(4), 11);
    KhatriRaoNorms n = khatri_rao_norms(g.tensor);
    EXPECT_NEAR(n.ab, 1.0, 1e-10);
    EXPECT_NEAR(n.bc, 1.0, 1e-10);
    EXPECT_NEAR(n.ac, 1.0, 1e-10);
}

TEST(KhatriRaoNorms, DuplicatedColumnGivesSqrtK) {
    KhatriRaoNorms n = khatri_rao_norms(duplicated_column_truth(8, 4, 13));
    EXPECT_NEAR(n.ab, 2.0, 1e-10);
}

TEST(KhatriRaoNorms, GramShortcutEqualsExplicitProduct) {
    GroundTruth g = random_ground_truth(Dims::cube(9), 5, 17);
    KhatriRaoNorms n = khatri_rao_norms(g.tensor);
    double explicit_ab =
        spectral_norm(khatri_rao(g.tensor.factors[0], g.tensor.factors[1]));
    EXPECT_NEAR(n.ab, explicit_ab, 1e-10);
}

TEST(KhatriRaoNorms, RandomScalingBound) {
    const int d = 500, k = 500;
    const double cap = 1.0 + 10.0 * std::log2(double(d)) * std::sqrt(double(k)) / double(d);
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        GroundTruth g = random_ground_truth(Dims::cube(d), k, seed);
        KhatriRaoNorms n = khatri_rao_norms(g.tensor);
        EXPECT_LE(std::max({n.ab, n.bc, n.ac}), cap);
    }
}

TEST(CrossTerm, OrthonormalVanishes) {
    GroundTruth g = orthonormal_ground_truth(Dims::cube(12), 5, Eigen::VectorXd::Ones(5), 19);
    EXPECT_LE(cross_term_bound(g.tensor).max_norm, 1e-10);
}

TEST(CrossTerm, RankOneEmptySum) {
    GroundTruth g = random_ground_truth(Dims::cube(10), 1, 23);
    EXPECT_DOUBLE_EQ(cross_term_bound(g.tensor).max_norm, 0.0);
}

TEST(CrossTerm, MatchesDirectEvaluation) {
    GroundTruth g = random_ground_truth(Dims::cube(12), 5, 29);
    CrossTermResult res = cross_term_bound(g.tensor);
    double naive_max = 0.0;
    for (int j = 0; j < 5; ++j) {
        Eigen::VectorXd v = Eigen::VectorXd::Zero(12);
        for (int i = 0; i < 5; ++i) {
            if (i == j) continue;
            v += g.tensor.weights[i] *
                 g.tensor.factors[0].col(i).dot(g.tensor.factors[0].col(j)) *
                 g.tensor.factors[1].col(i).dot(g.tensor.factors[1].col(j)) *
                 g.tensor.factors[2].col(i);
        }
        naive_max = std::max(naive_max, v.norm());
    }
    EXPECT_NEAR(res.max_norm, naive_max, 1e-12);
}

TEST(CrossTerm, RandomScalingBound) {
    const int d = 1000, k = 100;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        GroundTruth g = random_ground_truth(Dims::cube(d), k, seed);
        double bound = 10.0 * g.tensor.w_max() * std::sqrt(double(k)) *
                       std::log2(double(d)) / double(d);
        EXPECT_LE(cross_term_bound(g.tensor).max_norm, bound) << "seed " << seed;
    }
}

// ===========================================================================
// 2->p norm estimate
// ===========================================================================

TEST(TwoToP, OrthonormalColumnsGiveOne) {
    Rng rng(1);
    Eigen::MatrixXd q = orthonormal_factor(30, 10, rng);
    EXPECT_NEAR(two_to_p_norm_estimate(q, 3.0, 20, 200, rng), 1.0, 1e-6);
}

TEST(TwoToP, SingleBasisColumnIsExactlyOne) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(6, 1);
    m(0, 0) = 1.0;
    Rng rng(2);
    EXPECT_DOUBLE_EQ(two_to_p_norm_estimate(m, 2.5, 3, 50, rng), 1.0);
}

TEST(TwoToP, BestSoFarIsMonotoneInRestarts) {
    GroundTruth g = random_ground_truth(Dims::cube(40), 60, 31);
    const Eigen::MatrixXd& m = g.tensor.factors[0];
    // Restart r consumes the rng identically in both calls, so the longer
    // run sees the shorter one's starts as a prefix.
    Rng r3(9), r10(9);
    double est3 = two_to_p_norm_estimate(m, 2.5, 3, 100, r3);
    double est10 = two_to_p_norm_estimate(m, 2.5, 10, 100, r10);
    EXPECT_GE(est10, est3);
}

TEST(TwoToP, FiftyRestartsTrackHeavyOracle) {
    // Frozen reference: R=5000 restarts on this exact instance measure
    // 1.381056001843 (the R=50 run agrees to ~1e-12).
    GroundTruth g = random_ground_truth(Dims({200, 200, 200}), 300, 4242);
    Rng rng(2);
    double est = two_to_p_norm_estimate(g.tensor.factors[0], 2.5, 50, 200, rng);
    const double heavy = 1.381056001843;
    EXPECT_GE(est, 0.95 * heavy);
    EXPECT_LE(est, heavy * 1.0001);
}

TEST(TwoToP, RejectsPAtMostTwo) {
    Rng rng(3);
    EXPECT_THROW(two_to_p_norm_estimate(Eigen::MatrixXd::Ones(3, 3), 2.0, 1, 1, rng),
                 ShapeError);
}

// ===========================================================================
// contraction_params / init_theory_params
// ===========================================================================

TEST(ContractionParams, FAtZeroIsConstantTerm) {
    ContractionParams p = contraction_params(50, 100, 3.0, 1.0, 0.01, 2.0, 1.0, 0.0);
    EXPECT_NEAR(p.f(0.0), 3.0 * std::sqrt(50.0) / 100.0, 1e-15);
}

TEST(ContractionParams, NoiselessConstTerm) {
    double w_max = 2.0, w_min = 1.0, alpha = 3.0;
    ContractionParams p = contraction_params(50, 100, alpha, 1.0, 0.01, w_max, w_min, 0.0);
    EXPECT_NEAR(p.const_term, (2.0 * w_max / w_min) * alpha * std::sqrt(50.0) / 100.0,
                1e-15);
}

TEST(ContractionParams, QMatchesHandEvaluation) {
    // alpha = log d, alpha0 = 1, beta' = 0.01, d = 100, k = 50, gamma = 2.
    const double alpha = std::log2(100.0), alpha0 = 1.0, beta = 0.01;
    const double d = 100.0, k = 50.0;
    ContractionParams p = contraction_params(50, 100, alpha, alpha0, beta, 2.0, 1.0, 0.0);
    double hand = 2.0 * 2.0 *
                  ((2.0 * alpha / std::sqrt(d)) *
                       (1.0 + alpha0 * std::sqrt(k / d)) * (1.0 + alpha0 * std::sqrt(k / d)) +
                   beta);
    EXPECT_NEAR(p.q, hand, 1e-12);
    EXPECT_TRUE(p.q_warning);  // far from contraction at this alpha
}

TEST(ContractionParams, EpsilonCapIsMinOfFourTerms) {
    ContractionParams p = contraction_params(20, 400, 2.0, 1.0, 0.05, 3.0, 1.0, 0.1);
    double t1 = 0.05 / 1.0;
    double t2 = std::sqrt(1.0 / 18.0);
    double t3 = 1.0 * p.q / 12.0;
    double t4 = (6.0 / p.q) * (1.0 / 18.0 - 2.0 * std::sqrt(20.0) / 400.0);
    EXPECT_NEAR(p.eps0_cap, std::min(std::min(t1, t2), std::min(t3, t4)), 1e-12);
}

TEST(InitTheoryParams, MuRApproachesOneInUndercompleteLimit) {
    InitTheoryParams p = init_theory_params(1, 100000000, 0.0, 1.0, 1.0, 3.0, 1.0, 0.5);
    EXPECT_NEAR(p.mu_r, 1.0, 1e-3);
}

TEST(InitTheoryParams, MuFromMuTildeArithmetic) {
    // mu = (2 mu_R + mu~ - 1) / (1 - mu~); with mu_R = 1 (alpha0 = 0) and
    // mu~ = 1/2 this is 1.5 / 0.5 = 3 (consistent with the inverse map
    // mu~ = (1 + mu - 2 mu_R)/(1 + mu) at mu = 3).
    InitTheoryParams p = init_theory_params(10, 100, 0.0, 1.0, 1.0, 3.0, 0.0, 0.5);
    EXPECT_NEAR(p.mu_r, 1.0, 1e-15);
    EXPECT_NEAR(p.mu, 3.0, 1e-12);
}

TEST(InitTheoryParams, HandEvaluationAtSquareCase) {
    const double alpha = 3.0, alpha0 = 1.0;
    InitTheoryParams p = init_theory_params(100, 100, 0.01, 2.0, 1.0, alpha, alpha0, 0.5);
    EXPECT_NEAR(p.mu_e, alpha * 1.0 * (2.0 + 2.0 * alpha0 + alpha / 10.0), 1e-12);
    EXPECT_NEAR(p.mu_r, 4.0, 1e-12);
    EXPECT_NEAR(p.mu_min, 4.0, 1e-12);
}

TEST(FormulaUnitCheck, TwentyRandomParameterPoints) {
    // Independent re-implementations of f, q, const term, mu_E, mu_R and
    // g(L), evaluated against the library at random parameter points.
    Rng rng(12345);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (int point = 0; point < 20; ++point) {
        int k = 2 + int(uni(rng) * 500);
        int d = 50 + int(uni(rng) * 2000);
        double alpha = 0.5 + 5.0 * uni(rng);
        double alpha0 = 0.5 + 2.0 * uni(rng);
        double beta = 0.01 + 0.2 * uni(rng);
        double w_min = 0.5 + uni(rng);
        double w_max = w_min * (1.0 + 3.0 * uni(rng));
        double psi = 0.2 * w_min * uni(rng);
        double eps = 0.5 * uni(rng);

        ContractionParams p =
            contraction_params(k, d, alpha, alpha0, beta, w_max, w_min, psi);
        double sd = std::sqrt(double(d)), skd = std::sqrt(double(k) / double(d));
        double f_ref = alpha * std::sqrt(double(k)) / double(d) +
                       (2.0 * alpha / sd) * (1.0 + alpha0 * skd) * (1.0 + alpha0 * skd) * eps +
                       alpha0 * eps * eps;
        EXPECT_NEAR(p.f(eps), f_ref, 1e-12 * std::max(1.0, f_ref));

        double q_ref = (2.0 * w_max / w_min) *
                       ((2.0 * alpha / sd) * (1.0 + alpha0 * skd) * (1.0 + alpha0 * skd) +
                        beta);
        EXPECT_NEAR(p.q, q_ref, 1e-12 * std::max(1.0, q_ref));

        double const_ref =
            (2.0 / w_min) * (psi + w_max * alpha * std::sqrt(double(k)) / double(d));
        EXPECT_NEAR(p.const_term, const_ref, 1e-12 * std::max(1.0, const_ref));

        InitTheoryParams ip =
            init_theory_params(k, d, 0.01, w_max, w_min, alpha, alpha0, 0.5);
        double mu_e_ref = alpha * skd * (2.0 + 2.0 * alpha0 * skd + alpha / sd);
        double mu_r_ref = (1.0 + alpha0 * skd) * (1.0 + alpha0 * skd);
        EXPECT_NEAR(ip.mu_e, mu_e_ref, 1e-12 * std::max(1.0, mu_e_ref));
        EXPECT_NEAR(ip.mu_r, mu_r_ref, 1e-12 * std::max(1.0, mu_r_ref));

        double L = 10.0 + uni(rng) * 1e6;
        double c = uni(rng) * 2.0;
        TrialCountBound g{double(k), c};
        double g_ref = std::sqrt(2.0 * std::log(L)) -
                       (std::log(std::log(L)) + c) / (2.0 * std::sqrt(2.0 * std::log(L))) -
                       std::sqrt(2.0 * std::log(double(k)));
        EXPECT_NEAR(g.g(L), g_ref, 1e-12 * std::max(1.0, std::abs(g_ref)));
    }
}

// ===========================================================================
// assumption_report
// ===========================================================================

TEST(AssumptionReport, LargeOrthonormalInstancePassesEverything) {
    GroundTruth g =
        orthonormal_ground_truth(Dims::cube(10000), 5, Eigen::VectorXd::Ones(5), 37);
    TheoryConstants tc;
    Rng rng(4);
    AssumptionReport rep = assumption_report(g.tensor, 0.0, tc, rng, 10, 50);
    for (const auto& e : rep.entries) EXPECT_TRUE(e.pass) << e.id << ": " << e.description;
    EXPECT_TRUE(rep.all_pass());
}

TEST(AssumptionReport, ExtremeWeightRatioFailsA7) {
    const int d = 100;
    Rng seed_rng(5);
    Eigen::VectorXd w = Eigen::VectorXd::Ones(4);
    w[0] = 10.0 * std::sqrt(double(d));
    GroundTruth g = orthonormal_ground_truth(Dims::cube(d), 4, w, 41);
    TheoryConstants tc;
    Rng rng(6);
    AssumptionReport rep = assumption_report(g.tensor, 0.0, tc, rng, 5, 30);
    const AssumptionEntry* a7 = rep.find("A7");
    ASSERT_NE(a7, nullptr);
    EXPECT_FALSE(a7->pass);
}

TEST(AssumptionReport, OvercompleteRandomInstancesPassTheRandomMatrixClauses) {
    TheoryConstants tc;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        GroundTruth g = random_ground_truth(Dims::cube(500), 800, seed);
        Rng rng(seed + 50);
        AssumptionReport rep = assumption_report(g.tensor, 0.0, tc, rng, 10, 60);
        for (const char* id : {"A1", "A2", "A3", "A4a", "A4b", "A5", "A10", "A11"}) {
            const AssumptionEntry* e = rep.find(id);
            ASSERT_NE(e, nullptr) << id;
            EXPECT_TRUE(e->pass) << id << " measured " << e->measured << " vs threshold "
                                 << e->threshold << " (seed " << seed << ")";
        }
    }
}

TEST(AssumptionReport, FlatSerializationHasStableKeys) {
    GroundTruth g = random_ground_truth(Dims::cube(30), 5, 43);
    TheoryConstants tc;
    Rng rng(7);
    AssumptionReport rep = assumption_report(g.tensor, 0.01, tc, rng, 5, 30);
    std::ostringstream os;
    write_assumption_report(os, rep);
    std::string text = os.str();
    for (const char* key : {"rho=", "gamma=", "A2.pass=", "A11.threshold=", "all_pass="})
        EXPECT_NE(text.find(key), std::string::npos) << key;
}

}  // namespace
}  // namespace altcp
