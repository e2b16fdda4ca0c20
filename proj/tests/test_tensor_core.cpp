#include "altcp/dense_tensor.hpp"
#include "altcp/factored_tensor.hpp"
#include "altcp/linalg.hpp"
#include "altcp/synthetic.hpp"
#include "altcp/tensor_view.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace altcp {
namespace {

Eigen::VectorXd basis(int d, int i) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(d);
    e[i] = 1.0;
    return e;
}

FactoredTensor rank1(int d, double w, int ia, int ib, int ic) {
    std::vector<Eigen::MatrixXd> factors = {basis(d, ia), basis(d, ib), basis(d, ic)};
    Eigen::VectorXd weights(1);
    weights << w;
    return FactoredTensor(Dims::cube(d), factors, weights);
}

// ===========================================================================
// build_dense
// ===========================================================================

TEST(BuildDense, SingleRankOnePlacesOneEntry) {
    DenseTensor t = build_dense(rank1(3, 2.0, 0, 1, 2));
    EXPECT_DOUBLE_EQ(t.at({0, 1, 2}), 2.0);
    double off = 0.0;
    for (size_t i = 0; i < t.entries.size(); ++i) off += std::abs(t.entries[i]);
    EXPECT_DOUBLE_EQ(off, 2.0);  // only the single placed entry is nonzero
}

TEST(BuildDense, DuplicateComponentDoubles) {
    FactoredTensor one = rank1(3, 1.0, 0, 1, 2);
    std::vector<Eigen::MatrixXd> factors;
    for (const auto& m : one.factors) {
        Eigen::MatrixXd twice(m.rows(), 2);
        twice << m, m;
        factors.push_back(twice);
    }
    FactoredTensor two(Dims::cube(3), factors, Eigen::VectorXd::Ones(2));
    DenseTensor t = build_dense(two);
    EXPECT_DOUBLE_EQ(t.at({0, 1, 2}), 2.0);
}

TEST(BuildDense, MatchesTripleLoopOracle) {
    GroundTruth g = random_ground_truth(Dims::cube(6), 4, 77);
    DenseTensor fast = build_dense(g.tensor);
    DenseTensor slow = oracle::build_dense(g.tensor);
    for (size_t i = 0; i < fast.entries.size(); ++i)
        EXPECT_NEAR(fast.entries[i], slow.entries[i], 1e-12);
}

TEST(BuildDense, BudgetErrorNamesEntryCount) {
    GroundTruth g = random_ground_truth(Dims::cube(10), 2, 1);
    try {
        build_dense(g.tensor, 999);
        FAIL() << "expected CapacityError";
    } catch (const CapacityError& e) {
        EXPECT_NE(std::string(e.what()).find("1000"), std::string::npos);
    }
}

// ===========================================================================
// contractions
// ===========================================================================

TEST(ContractVector, RankOneSelectsScaledBasis) {
    TensorView t{rank1(4, 2.0, 0, 1, 2)};
    Eigen::VectorXd out = contract_to_vector(t, 2, {basis(4, 0), basis(4, 1)});
    EXPECT_NEAR((out - 2.0 * basis(4, 2)).norm(), 0.0, 1e-14);
}

TEST(ContractVector, OrthonormalFactorsGiveExactComponent) {
    GroundTruth g = orthonormal_ground_truth(Dims::cube(12), 5,
                                             Eigen::VectorXd::LinSpaced(5, 2.0, 6.0), 3);
    TensorView t{g.tensor};
    for (int j = 0; j < 5; ++j) {
        Eigen::VectorXd out = contract_to_vector(
            t, 2, {g.tensor.factors[0].col(j), g.tensor.factors[1].col(j)});
        Eigen::VectorXd expect = g.tensor.weights[j] * g.tensor.factors[2].col(j);
        EXPECT_NEAR((out - expect).norm(), 0.0, 1e-10);
    }
}

TEST(ContractVector, FactoredMatchesDense) {
    GroundTruth g = random_ground_truth(Dims::cube(8), 5, 5);
    TensorView fac{g.tensor};
    DenseTensor dense = build_dense(g.tensor);
    Rng rng(3);
    for (int mode = 0; mode < 3; ++mode) {
        std::vector<Eigen::VectorXd> others = {random_unit(8, rng), random_unit(8, rng)};
        Eigen::VectorXd a = contract_to_vector(fac, mode, others);
        Eigen::VectorXd b = oracle::contract_vector(dense, mode, others);
        EXPECT_NEAR((a - b).norm(), 0.0, 1e-10);
    }
}

TEST(ContractVector, ShapeErrorOnBadLength) {
    TensorView t{rank1(4, 1.0, 0, 0, 0)};
    EXPECT_THROW(contract_to_vector(t, 2, {basis(3, 0), basis(4, 0)}), ShapeError);
}

TEST(ContractScalar, RankOneAtOwnComponents) {
    GroundTruth g = random_ground_truth(Dims::cube(6), 1, 11);
    FactoredTensor f = g.tensor;
    f.weights[0] = 3.5;
    TensorView t{f};
    EXPECT_NEAR(contract_to_scalar(
                    t, {f.factors[0].col(0), f.factors[1].col(0), f.factors[2].col(0)}),
                3.5, 1e-12);
}

TEST(ContractScalar, ZeroVectorGivesZero) {
    GroundTruth g = random_ground_truth(Dims::cube(5), 3, 2);
    TensorView t{g.tensor};
    Rng rng(4);
    EXPECT_DOUBLE_EQ(contract_to_scalar(t, {random_unit(5, rng),
                                            Eigen::VectorXd::Zero(5),
                                            random_unit(5, rng)}),
                     0.0);
}

TEST(ContractScalar, MatchesDenseOracle) {
    GroundTruth g = random_ground_truth(Dims::cube(8), 5, 21);
    TensorView fac{g.tensor};
    DenseTensor dense = build_dense(g.tensor);
    Rng rng(5);
    std::vector<Eigen::VectorXd> vs = {random_unit(8, rng), random_unit(8, rng),
                                       random_unit(8, rng)};
    EXPECT_NEAR(contract_to_scalar(fac, vs), oracle::contract_scalar(dense, vs), 1e-10);
}

TEST(ContractScalar, MultilinearInEachArgument) {
    GroundTruth g = random_ground_truth(Dims::cube(7), 4, 31);
    TensorView t{g.tensor};
    Rng rng(6);
    for (int mode = 0; mode < 3; ++mode) {
        std::vector<Eigen::VectorXd> vs = {random_unit(7, rng), random_unit(7, rng),
                                           random_unit(7, rng)};
        Eigen::VectorXd x = random_unit(7, rng), y = random_unit(7, rng);
        double alpha = 0.7, beta = -1.3;
        std::vector<Eigen::VectorXd> vx = vs, vy = vs, vmix = vs;
        vx[static_cast<size_t>(mode)] = x;
        vy[static_cast<size_t>(mode)] = y;
        vmix[static_cast<size_t>(mode)] = alpha * x + beta * y;
        EXPECT_NEAR(contract_to_scalar(t, vmix),
                    alpha * contract_to_scalar(t, vx) + beta * contract_to_scalar(t, vy),
                    1e-10);
    }
}

TEST(ContractMatrix, OrthonormalThetaPicksComponent) {
    Eigen::VectorXd w(3);
    w << 2.0, 1.0, 1.0;
    GroundTruth g = orthonormal_ground_truth(Dims::cube(9), 3, w, 17);
    TensorView t{g.tensor};
    Eigen::VectorXd theta = g.tensor.factors[2].col(0);
    Eigen::MatrixXd m = contract_to_matrix(t, theta, 2);
    Eigen::MatrixXd expect =
        2.0 * g.tensor.factors[0].col(0) * g.tensor.factors[1].col(0).transpose();
    EXPECT_NEAR((m - expect).norm(), 0.0, 1e-10);
}

TEST(ContractMatrix, ZeroThetaGivesZeroMatrix) {
    GroundTruth g = random_ground_truth(Dims::cube(5), 3, 13);
    Eigen::MatrixXd m = contract_to_matrix(TensorView{g.tensor}, Eigen::VectorXd::Zero(5), 2);
    EXPECT_DOUBLE_EQ(m.norm(), 0.0);
}

TEST(ContractMatrix, MatchesDenseOracleAllModes) {
    GroundTruth g = random_ground_truth(Dims({4, 5, 6}), 3, 23);
    TensorView fac{g.tensor};
    DenseTensor dense = build_dense(g.tensor);
    Rng rng(7);
    for (int mode = 0; mode < 3; ++mode) {
        Eigen::VectorXd theta = random_unit(g.tensor.dims.extent(mode), rng);
        Eigen::MatrixXd a = contract_to_matrix(fac, theta, mode);
        Eigen::MatrixXd b = oracle::contract_matrix(dense, theta, mode);
        EXPECT_NEAR((a - b).norm(), 0.0, 1e-10);
    }
}

TEST(ContractMatrix, RejectsHigherOrder) {
    GroundTruth g = random_ground_truth(Dims::cube(3, 4), 2, 29);
    EXPECT_THROW(contract_to_matrix(TensorView{g.tensor}, Eigen::VectorXd::Ones(3), 2),
                 ShapeError);
}

TEST(Composite, ContractionsAreSums) {
    GroundTruth g = random_ground_truth(Dims::cube(6), 3, 41);
    Rng rng(8);
    DenseTensor noise = DenseTensor::zeros(Dims::cube(6));
    std::normal_distribution<double> normal;
    for (auto& v : noise.entries) v = 0.01 * normal(rng);

    TensorView comp = TensorView::composite(g.tensor, noise);
    DenseTensor dense_sum = build_dense(g.tensor);
    for (size_t i = 0; i < dense_sum.entries.size(); ++i)
        dense_sum.entries[i] += noise.entries[i];

    std::vector<Eigen::VectorXd> vs = {random_unit(6, rng), random_unit(6, rng),
                                       random_unit(6, rng)};
    EXPECT_NEAR(contract_to_scalar(comp, vs), oracle::contract_scalar(dense_sum, vs), 1e-10);
    Eigen::VectorXd cv = contract_to_vector(comp, 1, {vs[0], vs[2]});
    EXPECT_NEAR((cv - oracle::contract_vector(dense_sum, 1, {vs[0], vs[2]})).norm(), 0.0,
                1e-10);
    EXPECT_NEAR(frobenius_norm(comp), oracle::frobenius(dense_sum), 1e-10);
}

// ===========================================================================
// matricize / khatri_rao
// ===========================================================================

TEST(Matricize, TwoByTwoByTwoFibers) {
    std::vector<double> entries(8);
    for (int i = 0; i < 8; ++i) entries[static_cast<size_t>(i)] = i + 1.0;
    DenseTensor t(Dims::cube(2), entries);
    // Mode-1-fastest layout: entry (i,j,l) = 1 + i + 2j + 4l.
    Eigen::MatrixXd m3 = matricize(t, 2);
    ASSERT_EQ(m3.rows(), 2);
    ASSERT_EQ(m3.cols(), 4);
    // Column order (i,j) with i fastest: (0,0),(1,0),(0,1),(1,1).
    EXPECT_DOUBLE_EQ(m3(0, 0), 1.0);
    EXPECT_DOUBLE_EQ(m3(1, 0), 5.0);
    EXPECT_DOUBLE_EQ(m3(0, 1), 2.0);
    EXPECT_DOUBLE_EQ(m3(0, 2), 3.0);
    EXPECT_DOUBLE_EQ(m3(1, 3), 8.0);
}

TEST(Matricize, KhatriRaoIdentity) {
    GroundTruth g = random_ground_truth(Dims::cube(4), 3, 53);
    DenseTensor dense = build_dense(g.tensor);
    Rng rng(9);
    Eigen::VectorXd a = random_unit(4, rng), b = random_unit(4, rng);
    Eigen::VectorXd via_mat = matricize(dense, 2) * khatri_rao(b, a);
    Eigen::VectorXd via_contract = contract_to_vector(TensorView{dense}, 2, {a, b});
    EXPECT_NEAR((via_mat - via_contract).norm(), 0.0, 1e-12);
}

TEST(Matricize, ZerosStayZero) {
    DenseTensor t = DenseTensor::zeros(Dims({2, 3, 4}));
    EXPECT_DOUBLE_EQ(matricize(t, 1).norm(), 0.0);
}

TEST(KhatriRao, BasisPlacement) {
    Eigen::MatrixXd a = basis(2, 0), b = basis(2, 1);
    Eigen::MatrixXd kr = khatri_rao(a, b);
    ASSERT_EQ(kr.rows(), 4);
    // Column = kron(a_col, b_col): the second factor's index is fastest.
    EXPECT_DOUBLE_EQ(kr(1, 0), 1.0);
    EXPECT_DOUBLE_EQ(kr.sum(), 1.0);
}

TEST(KhatriRao, ColumnNormsMultiply) {
    Rng rng(10);
    Eigen::MatrixXd a = gaussian_matrix(3, 2, rng), b = gaussian_matrix(4, 2, rng);
    Eigen::MatrixXd kr = khatri_rao(a, b);
    for (int j = 0; j < 2; ++j)
        EXPECT_NEAR(kr.col(j).norm(), a.col(j).norm() * b.col(j).norm(), 1e-12);
}

TEST(KhatriRao, GramHadamardIdentity) {
    Rng rng(11);
    Eigen::MatrixXd a = gaussian_matrix(3, 2, rng), b = gaussian_matrix(4, 2, rng);
    Eigen::MatrixXd kr = khatri_rao(a, b);
    Eigen::MatrixXd lhs = kr.transpose() * kr;
    Eigen::MatrixXd rhs =
        ((a.transpose() * a).array() * (b.transpose() * b).array()).matrix();
    EXPECT_NEAR((lhs - rhs).norm(), 0.0, 1e-12);
}

TEST(KhatriRao, ColumnMismatchThrows) {
    EXPECT_THROW(khatri_rao(Eigen::MatrixXd::Ones(2, 2), Eigen::MatrixXd::Ones(2, 3)),
                 ShapeError);
}

// ===========================================================================
// norms
// ===========================================================================

TEST(Frobenius, RankOneUnitComponents) {
    EXPECT_NEAR(frobenius_norm(TensorView{rank1(5, 3.0, 0, 1, 2)}), 3.0, 1e-12);
}

TEST(Frobenius, ZeroTensor) {
    EXPECT_DOUBLE_EQ(frobenius_norm(TensorView{DenseTensor::zeros(Dims::cube(3))}), 0.0);
}

TEST(Frobenius, GramFormulaMatchesDense) {
    GroundTruth g = random_ground_truth(Dims::cube(8), 5, 61);
    double fac = frobenius_norm(TensorView{g.tensor});
    double dense = oracle::frobenius(build_dense(g.tensor));
    EXPECT_NEAR(fac, dense, 1e-10);
}

TEST(SpectralEstimate, RankOneWeight) {
    Rng rng(12);
    GroundTruth g = random_ground_truth(Dims::cube(6), 1, 71);
    FactoredTensor f = g.tensor;
    f.weights[0] = 5.0;
    EXPECT_NEAR(spectral_norm_estimate(TensorView{f}, 5, 100, rng), 5.0, 1e-8);
}

TEST(SpectralEstimate, OrthogonalRankTwoFindsLargest) {
    Eigen::VectorXd w(2);
    w << 3.0, 1.0;
    GroundTruth g = orthonormal_ground_truth(Dims::cube(7), 2, w, 5);
    Rng rng(13);
    EXPECT_NEAR(spectral_norm_estimate(TensorView{g.tensor}, 20, 100, rng), 3.0, 1e-8);
}

TEST(SpectralEstimate, TracksHeavyRestartOracle) {
    GroundTruth g = random_ground_truth(Dims::cube(6), 3, 83);
    DenseTensor dense = build_dense(g.tensor);
    Rng rng_est(14), rng_oracle(15);
    double est = spectral_norm_estimate(TensorView{g.tensor}, 50, 100, rng_est);
    double heavy = spectral_norm_estimate(TensorView{dense}, 10000, 100, rng_oracle);
    EXPECT_LE(est, heavy + 1e-8);
    EXPECT_GE(est, 0.99 * heavy);
}

TEST(SpectralEstimate, BoundedByFrobeniusAndWeightSum) {
    for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
        GroundTruth g = random_ground_truth(Dims::cube(7), 4, seed);
        Rng rng(seed);
        double est = spectral_norm_estimate(TensorView{g.tensor}, 10, 50, rng);
        EXPECT_LE(est, frobenius_norm(TensorView{g.tensor}) + 1e-9);
        EXPECT_LE(est, g.tensor.weights.sum() + 1e-9);
    }
}

TEST(SpectralEstimate, ZeroTensorGivesZero) {
    Rng rng(16);
    EXPECT_DOUBLE_EQ(
        spectral_norm_estimate(TensorView{DenseTensor::zeros(Dims::cube(4))}, 3, 10, rng),
        0.0);
}

// ===========================================================================
// batched kernels
// ===========================================================================

TEST(BatchedKernels, MultiModeMatchesSingleContractionsOnAllViews) {
    GroundTruth g = random_ground_truth(Dims({5, 6, 7}), 4, 101);
    Rng rng(20);
    DenseTensor noise = DenseTensor::zeros(g.tensor.dims);
    std::normal_distribution<double> normal;
    for (auto& v : noise.entries) v = 0.05 * normal(rng);
    std::vector<TensorView> views = {TensorView{g.tensor},
                                     TensorView{build_dense(g.tensor)},
                                     TensorView::composite(g.tensor, noise)};
    std::vector<Eigen::VectorXd> vs = {random_unit(5, rng), random_unit(6, rng),
                                       random_unit(7, rng)};
    for (const TensorView& view : views) {
        std::vector<Eigen::VectorXd> batched = multi_mode_contractions(view, vs);
        EXPECT_NEAR((batched[0] - contract_to_vector(view, 0, {vs[1], vs[2]})).norm(), 0.0,
                    1e-12);
        EXPECT_NEAR((batched[1] - contract_to_vector(view, 1, {vs[0], vs[2]})).norm(), 0.0,
                    1e-12);
        EXPECT_NEAR((batched[2] - contract_to_vector(view, 2, {vs[0], vs[1]})).norm(), 0.0,
                    1e-12);
    }
}

TEST(BatchedKernels, PairContractionsMatchPerColumnOnAllViews) {
    GroundTruth g = random_ground_truth(Dims({5, 6, 7}), 4, 103);
    Rng rng(21);
    DenseTensor noise = DenseTensor::zeros(g.tensor.dims);
    std::normal_distribution<double> normal;
    for (auto& v : noise.entries) v = 0.05 * normal(rng);
    std::vector<TensorView> views = {TensorView{g.tensor},
                                     TensorView{build_dense(g.tensor)},
                                     TensorView::composite(g.tensor, noise)};
    const int k = 3;
    for (const TensorView& view : views) {
        for (int mode = 0; mode < 3; ++mode) {
            int m1 = mode == 0 ? 1 : 0;
            int m2 = mode == 2 ? 1 : 2;
            Eigen::MatrixXd u(view.dims().extent(m1), k), v(view.dims().extent(m2), k);
            for (int j = 0; j < k; ++j) {
                u.col(j) = random_unit(view.dims().extent(m1), rng);
                v.col(j) = random_unit(view.dims().extent(m2), rng);
            }
            Eigen::MatrixXd batched = batched_pair_contractions(view, u, v, mode);
            for (int j = 0; j < k; ++j) {
                Eigen::VectorXd single = contract_to_vector(view, mode, {u.col(j), v.col(j)});
                EXPECT_NEAR((batched.col(j) - single).norm(), 0.0, 1e-12)
                    << "mode " << mode << " col " << j;
            }
        }
    }
}

// ===========================================================================
// mean_diag_slice (symmetric residual helper)
// ===========================================================================

TEST(MeanDiagSlice, FactoredMatchesDense) {
    GroundTruth g = symmetric_ground_truth(6, 3, 91);
    DenseTensor dense = build_dense(g.tensor);
    for (int mode = 0; mode < 3; ++mode) {
        Eigen::VectorXd fac = mean_diag_slice(TensorView{g.tensor}, mode);
        Eigen::VectorXd dns = mean_diag_slice(TensorView{dense}, mode);
        EXPECT_NEAR((fac - dns).norm(), 0.0, 1e-10);
    }
}

// ===========================================================================
// FactoredTensor canonicalization
// ===========================================================================

TEST(FactoredTensor, CanonicalizeNormalizesAndFlipsSigns) {
    Rng rng(17);
    std::vector<Eigen::MatrixXd> factors = {gaussian_matrix(5, 3, rng),
                                            gaussian_matrix(5, 3, rng),
                                            gaussian_matrix(5, 3, rng)};
    Eigen::VectorXd w(3);
    w << 1.0, -2.0, 0.5;
    FactoredTensor f(Dims::cube(5), factors, w);
    DenseTensor before = oracle::build_dense(f);
    f.canonicalize();
    DenseTensor after = oracle::build_dense(f);
    for (size_t i = 0; i < before.entries.size(); ++i)
        EXPECT_NEAR(before.entries[i], after.entries[i], 1e-12);
    for (int j = 0; j < 3; ++j) {
        EXPECT_GT(f.weights[j], 0.0);
        for (int r = 0; r < 3; ++r)
            EXPECT_NEAR(f.factors[static_cast<size_t>(r)].col(j).norm(), 1.0, 1e-12);
    }
}

}  // namespace
}  // namespace altcp
