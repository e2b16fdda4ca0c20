#pragma once

#include "altcp/error.hpp"
#include "altcp/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace altcp {

/// Khatri-Rao (columnwise Kronecker) product of A (d1 x k) and B (d2 x k):
/// a d1*d2 x k matrix whose column j is kron(A_j, B_j), i.e. entry
/// (i2 + d2*i1, j) = A(i1,j) * B(i2,j). The second argument's row index
/// varies fastest, matching the matricize() column order.
inline Eigen::MatrixXd khatri_rao(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    if (a.cols() != b.cols())
        throw ShapeError("khatri_rao: column counts differ");
    const Eigen::Index d1 = a.rows(), d2 = b.rows(), k = a.cols();
    Eigen::MatrixXd out(d1 * d2, k);
    for (Eigen::Index j = 0; j < k; ++j)
        for (Eigen::Index i1 = 0; i1 < d1; ++i1)
            out.col(j).segment(i1 * d2, d2) = a(i1, j) * b.col(j);
    return out;
}

/// Exact largest singular value via the eigendecomposition of the smaller
/// Gram matrix.
inline double spectral_norm(const Eigen::MatrixXd& m) {
    if (m.size() == 0) return 0.0;
    Eigen::MatrixXd gram = (m.rows() <= m.cols()) ? Eigen::MatrixXd(m * m.transpose())
                                                  : Eigen::MatrixXd(m.transpose() * m);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
    return std::sqrt(std::max(0.0, eig.eigenvalues().maxCoeff()));
}

struct TopSingularPair {
    Eigen::VectorXd left;
    Eigen::VectorXd right;
    double value = 0.0;
    int sweeps = 0;
    bool converged = false;
};

/// Top singular triple of m by alternating power iteration
/// (u <- Mv/|Mv|, v <- M'u/|M'u|), restarted with a fresh random vector when
/// a sweep stalls without converging. Signs are flipped jointly so that
/// u' M v > 0.
inline TopSingularPair top_singular_pair(const Eigen::MatrixXd& m, Rng& rng,
                                         double tol = 1e-10, int max_sweeps = 300,
                                         int restarts = 3) {
    TopSingularPair best;
    if (m.size() == 0 || m.norm() == 0.0) {
        best.left = Eigen::VectorXd::Zero(m.rows());
        best.right = Eigen::VectorXd::Zero(m.cols());
        return best;
    }
    for (int attempt = 0; attempt < restarts; ++attempt) {
        Eigen::VectorXd v = random_unit(static_cast<int>(m.cols()), rng);
        Eigen::VectorXd u = Eigen::VectorXd::Zero(m.rows());
        double sigma = 0.0;
        bool converged = false;
        int sweep = 0;
        for (; sweep < max_sweeps; ++sweep) {
            Eigen::VectorXd mu = m * v;
            double nu = mu.norm();
            if (nu == 0.0) break;
            u = mu / nu;
            Eigen::VectorXd mv = m.transpose() * u;
            double nv = mv.norm();
            if (nv == 0.0) break;
            v = mv / nv;
            double sigma_new = nv;  // |M'u| equals u'Mv after normalization
            if (sweep > 0 && std::abs(sigma_new - sigma) <= tol * std::max(1.0, sigma_new)) {
                sigma = sigma_new;
                converged = true;
                break;
            }
            sigma = sigma_new;
        }
        if (sigma > best.value) {
            best.left = u;
            best.right = v;
            best.value = sigma;
            best.sweeps = sweep + 1;
            best.converged = converged;
        }
        if (converged) break;
    }
    if (best.left.size() > 0 && best.left.dot(m * best.right) < 0.0) {
        best.left = -best.left;
        best.right = -best.right;
    }
    return best;
}

}  // namespace altcp
