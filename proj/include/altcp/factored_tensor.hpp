#pragma once

#include "altcp/dims.hpp"
#include "altcp/error.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <vector>

namespace altcp {

/// Rank-k tensor in factored (CP) form: per-mode factor matrices of shape
/// d_r x k plus positive component weights, representing
///   T = sum_j w_j * A_1(:,j) (x) A_2(:,j) (x) ... (x) A_p(:,j).
/// After canonicalize() every factor column has unit 2-norm and every weight
/// is strictly positive.
struct FactoredTensor {
    Dims dims;
    int rank = 0;
    std::vector<Eigen::MatrixXd> factors;  // factors[r] is d_r x k
    Eigen::VectorXd weights;               // length k
    bool normalized = false;

    FactoredTensor() = default;

    FactoredTensor(Dims d, std::vector<Eigen::MatrixXd> mode_factors,
                   Eigen::VectorXd w)
        : dims(std::move(d)),
          rank(static_cast<int>(w.size())),
          factors(std::move(mode_factors)),
          weights(std::move(w)) {
        if (static_cast<int>(factors.size()) != dims.order())
            throw ShapeError("FactoredTensor: one factor matrix per mode required");
        for (int r = 0; r < dims.order(); ++r) {
            if (factors[static_cast<size_t>(r)].rows() != dims.extent(r) ||
                factors[static_cast<size_t>(r)].cols() != rank)
                throw ShapeError("FactoredTensor: factor " + std::to_string(r + 1) +
                                 " must be " + std::to_string(dims.extent(r)) + "x" +
                                 std::to_string(rank));
        }
        if (rank < 1) throw ShapeError("FactoredTensor: rank must be >= 1");
    }

    [[nodiscard]] int order() const { return dims.order(); }

    /// Symmetric rank-k tensor from a single factor matrix (all modes share it).
    static FactoredTensor symmetric(const Eigen::MatrixXd& factor,
                                    const Eigen::VectorXd& w, int order = 3) {
        std::vector<Eigen::MatrixXd> mats(static_cast<size_t>(order), factor);
        FactoredTensor t(Dims::cube(static_cast<int>(factor.rows()), order),
                         std::move(mats), w);
        t.canonicalize();
        return t;
    }

    [[nodiscard]] bool is_symmetric(double tol = 1e-12) const {
        for (size_t r = 1; r < factors.size(); ++r)
            if ((factors[r] - factors[0]).lpNorm<Eigen::Infinity>() > tol) return false;
        return true;
    }

    /// Rescale every factor column to unit norm, folding the norms into the
    /// weights; a negative weight is made positive by flipping the last
    /// mode's column (w * u (x) v (x) c == -w * u (x) v (x) -c).
    void canonicalize() {
        const int p = order();
        for (int j = 0; j < rank; ++j) {
            for (int r = 0; r < p; ++r) {
                double nrm = factors[static_cast<size_t>(r)].col(j).norm();
                if (nrm <= 0.0)
                    throw DegenerateError("FactoredTensor: zero factor column " +
                                          std::to_string(j + 1));
                factors[static_cast<size_t>(r)].col(j) /= nrm;
                weights[j] *= nrm;
            }
            if (weights[j] < 0.0) {
                weights[j] = -weights[j];
                factors[static_cast<size_t>(p - 1)].col(j) *= -1.0;
            }
        }
        normalized = true;
    }

    /// Largest / smallest weight and their ratio gamma = w_max / w_min.
    [[nodiscard]] double w_max() const { return weights.maxCoeff(); }
    [[nodiscard]] double w_min() const { return weights.minCoeff(); }
    [[nodiscard]] double weight_ratio() const { return w_max() / w_min(); }
};

}  // namespace altcp
