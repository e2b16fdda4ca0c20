#pragma once

#include "altcp/decomposition.hpp"
#include "altcp/error.hpp"
#include "altcp/factored_tensor.hpp"
#include "altcp/rng.hpp"
#include "altcp/tensor_view.hpp"

#include <Eigen/Dense>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <tuple>
#include <vector>

namespace altcp {

/// Sine of the angle between two nonzero vectors: scale- and sign-invariant,
/// in [0,1], zero iff the vectors are parallel. Equals
/// sqrt(1 - <u,v>^2 / (|u|^2 |v|^2)), computed as the norm of the projection
/// residual so nearly-parallel vectors do not lose precision to
/// cancellation.
inline double dist(const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
    double nu = u.norm(), nv = v.norm();
    if (nu == 0.0 || nv == 0.0) throw std::domain_error("dist: zero vector");
    Eigen::VectorXd uh = u / nu, vh = v / nv;
    Eigen::VectorXd residual = uh - uh.dot(vh) * vh;
    return std::min(1.0, residual.norm());
}

/// Ground truth instance: a canonicalized factored tensor plus the seed and
/// recipe that produced it.
struct GroundTruth {
    FactoredTensor tensor;
    std::uint64_t seed = 0;
    std::string recipe;
};

/// Random instance in the standard style: i.i.d. standard Gaussian factor
/// matrices per mode, columns normalized with the normalization factors
/// aggregated into the weights.
inline GroundTruth random_ground_truth(const Dims& dims, int k, std::uint64_t seed) {
    if (k < 1) throw ShapeError("random_ground_truth: k must be >= 1");
    Rng rng(seed);
    std::vector<Eigen::MatrixXd> factors;
    factors.reserve(static_cast<size_t>(dims.order()));
    for (int r = 0; r < dims.order(); ++r)
        factors.push_back(gaussian_matrix(dims.extent(r), k, rng));
    FactoredTensor t(dims, std::move(factors), Eigen::VectorXd::Ones(k));
    t.canonicalize();
    return {std::move(t), seed, "gaussian-iid"};
}

/// Symmetric random instance: one Gaussian factor shared by all modes.
inline GroundTruth symmetric_ground_truth(int d, int k, std::uint64_t seed, int order = 3) {
    Rng rng(seed);
    Eigen::MatrixXd factor = gaussian_matrix(d, k, rng);
    FactoredTensor t = FactoredTensor::symmetric(factor, Eigen::VectorXd::Ones(k), order);
    return {std::move(t), seed, "symmetric-gaussian"};
}

/// Random d x k matrix with orthonormal columns (thin QR of a Gaussian
/// draw, sign-fixed so the distribution is Haar).
inline Eigen::MatrixXd orthonormal_factor(int d, int k, Rng& rng) {
    if (k > d) throw ShapeError("orthonormal_factor: k must be <= d");
    Eigen::MatrixXd g = gaussian_matrix(d, k, rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(d, k);
    Eigen::MatrixXd r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    for (int j = 0; j < k; ++j)
        if (r(j, j) < 0) q.col(j) *= -1.0;
    return q;
}

/// Orthonormal-factor instance (every mode a fresh orthonormal frame).
inline GroundTruth orthonormal_ground_truth(const Dims& dims, int k,
                                            const Eigen::VectorXd& weights,
                                            std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Eigen::MatrixXd> factors;
    for (int r = 0; r < dims.order(); ++r)
        factors.push_back(orthonormal_factor(dims.extent(r), k, rng));
    FactoredTensor t(dims, std::move(factors), weights);
    t.canonicalize();
    return {std::move(t), seed, "orthonormal"};
}

/// Perturbation tensor description: target spectral norm, representation,
/// and the estimator's reading of what was achieved.
struct NoiseSpec {
    double psi_target = 0.0;
    double psi_achieved_estimate = 0.0;
    std::string representation = "dense-gaussian";
};

/// Dense i.i.d. Gaussian noise rescaled so its estimated spectral norm hits
/// the target. Fails with a capacity error when the dims do not fit the
/// dense budget (request factored noise instead).
inline std::pair<NoiseSpec, DenseTensor> gaussian_noise(const Dims& dims, double psi_target,
                                                        std::uint64_t seed,
                                                        std::int64_t budget = kDenseEntryBudget,
                                                        int est_restarts = 32,
                                                        int est_iters = 100) {
    if (psi_target < 0.0) throw ShapeError("gaussian_noise: negative target");
    const std::int64_t total = dims.total_entries();
    if (total > budget)
        throw CapacityError("gaussian_noise: " + std::to_string(total) +
                            " entries exceed the dense budget of " + std::to_string(budget) +
                            "; use a factored noise representation");
    NoiseSpec spec;
    spec.psi_target = psi_target;
    DenseTensor noise = DenseTensor::zeros(dims);
    if (psi_target == 0.0) return {spec, std::move(noise)};

    Rng rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (auto& v : noise.entries) v = normal(rng);
    double est = spectral_norm_estimate(TensorView{noise}, est_restarts, est_iters, rng);
    if (est <= 0.0) throw DegenerateError("gaussian_noise: zero spectral estimate");
    double scale = psi_target / est;
    for (auto& v : noise.entries) v *= scale;
    spec.psi_achieved_estimate =
        spectral_norm_estimate(TensorView{noise}, est_restarts, est_iters, rng);
    return {spec, std::move(noise)};
}

/// Rank-r random factored noise scaled to the target spectral norm, for
/// dims past the dense budget.
inline std::pair<NoiseSpec, FactoredTensor> factored_noise(const Dims& dims, double psi_target,
                                                           int noise_rank, std::uint64_t seed,
                                                           int est_restarts = 32,
                                                           int est_iters = 100) {
    if (noise_rank < 1) throw ShapeError("factored_noise: rank must be >= 1");
    GroundTruth g = random_ground_truth(dims, noise_rank, seed);
    NoiseSpec spec;
    spec.psi_target = psi_target;
    spec.representation = "factored-random-rank-" + std::to_string(noise_rank);
    FactoredTensor noise = std::move(g.tensor);
    if (psi_target == 0.0) {
        noise.weights.setZero();
        spec.psi_achieved_estimate = 0.0;
        return {spec, std::move(noise)};
    }
    Rng rng(substream_seed(seed, 1));
    double est = spectral_norm_estimate(TensorView{noise}, est_restarts, est_iters, rng);
    if (est <= 0.0) throw DegenerateError("factored_noise: zero spectral estimate");
    noise.weights *= psi_target / est;
    spec.psi_achieved_estimate =
        spectral_norm_estimate(TensorView{noise}, est_restarts, est_iters, rng);
    return {spec, std::move(noise)};
}

/// One matched estimate/truth pair with resolved signs (one per mode, their
/// product +1 so the flips leave the represented tensor unchanged).
struct MatchedPair {
    int estimate_col = -1;
    int truth_col = -1;
    std::vector<int> signs;
    double max_dist = 1.0;      // max over modes of dist()
    double square_error = 0.0;  // (1/p) sum_r |truth_r - s_r est_r|^2
    double weight_error = 0.0;  // |w_hat - w|^2 / w^2
};

/// Injective estimate-to-truth assignment with per-pair sign resolution.
struct MatchResult {
    std::vector<MatchedPair> pairs;
    std::vector<int> unmatched_estimates;
    std::vector<int> unmatched_truth;
};

namespace detail {

/// Assignment minimizing total cost over rows of an n x m matrix (n <= m),
/// by shortest augmenting paths with potentials. Returns row -> column.
inline std::vector<int> min_cost_assignment(const Eigen::MatrixXd& cost) {
    const int n = static_cast<int>(cost.rows());
    const int m = static_cast<int>(cost.cols());
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(static_cast<size_t>(n) + 1, 0.0), v(static_cast<size_t>(m) + 1, 0.0);
    std::vector<int> p(static_cast<size_t>(m) + 1, 0), way(static_cast<size_t>(m) + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(static_cast<size_t>(m) + 1, inf);
        std::vector<char> used(static_cast<size_t>(m) + 1, 0);
        do {
            used[static_cast<size_t>(j0)] = 1;
            int i0 = p[static_cast<size_t>(j0)], j1 = -1;
            double delta = inf;
            for (int j = 1; j <= m; ++j)
                if (!used[static_cast<size_t>(j)]) {
                    double cur = cost(i0 - 1, j - 1) - u[static_cast<size_t>(i0)] -
                                 v[static_cast<size_t>(j)];
                    if (cur < minv[static_cast<size_t>(j)]) {
                        minv[static_cast<size_t>(j)] = cur;
                        way[static_cast<size_t>(j)] = j0;
                    }
                    if (minv[static_cast<size_t>(j)] < delta) {
                        delta = minv[static_cast<size_t>(j)];
                        j1 = j;
                    }
                }
            for (int j = 0; j <= m; ++j) {
                if (used[static_cast<size_t>(j)]) {
                    u[static_cast<size_t>(p[static_cast<size_t>(j)])] += delta;
                    v[static_cast<size_t>(j)] -= delta;
                } else {
                    minv[static_cast<size_t>(j)] -= delta;
                }
            }
            j0 = j1;
        } while (p[static_cast<size_t>(j0)] != 0);
        do {
            int j1 = way[static_cast<size_t>(j0)];
            p[static_cast<size_t>(j0)] = p[static_cast<size_t>(j1)];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> assignment(static_cast<size_t>(n), -1);
    for (int j = 1; j <= m; ++j)
        if (p[static_cast<size_t>(j)] > 0)
            assignment[static_cast<size_t>(p[static_cast<size_t>(j)]) - 1] = j - 1;
    return assignment;
}

inline void finalize_pair(const Decomposition& estimates, const FactoredTensor& truth,
                          MatchedPair& pair) {
    const int p = truth.order();
    pair.signs.assign(static_cast<size_t>(p), 1);
    // Modes 2..p take the sign of their own correlation; mode 1 takes the
    // product, so the overall flip pattern leaves the tensor unchanged.
    int forced = 1;
    for (int r = 1; r < p; ++r) {
        double corr = estimates.modes[static_cast<size_t>(r)].col(pair.estimate_col).dot(
            truth.factors[static_cast<size_t>(r)].col(pair.truth_col));
        int s = corr < 0.0 ? -1 : 1;
        pair.signs[static_cast<size_t>(r)] = s;
        forced *= s;
    }
    pair.signs[0] = forced;

    double sq = 0.0, mx = 0.0;
    for (int r = 0; r < p; ++r) {
        Eigen::VectorXd est = double(pair.signs[static_cast<size_t>(r)]) *
                              estimates.modes[static_cast<size_t>(r)].col(pair.estimate_col);
        const auto& tru = truth.factors[static_cast<size_t>(r)].col(pair.truth_col);
        sq += (tru - est).squaredNorm();
        mx = std::max(mx, dist(est, tru));
    }
    pair.square_error = sq / double(p);
    pair.max_dist = mx;
    double w_true = truth.weights[pair.truth_col];
    double dw = estimates.weights[pair.estimate_col] - w_true;
    pair.weight_error = dw * dw / (w_true * w_true);
}

}  // namespace detail

/// Match estimate columns to truth columns by last-mode correlation: greedy
/// by default (descending |<c_hat, c>|, ties broken by first-mode
/// correlation then lower index), optimal assignment when `hungarian` is
/// set. Pairs whose max per-mode dist exceeds `accept_threshold` are left
/// unmatched. Signs are resolved per pair so that modes 2..p correlate
/// nonnegatively and the flips multiply to +1.
inline MatchResult match_components(const Decomposition& estimates, const FactoredTensor& truth,
                                    double accept_threshold = 1.0, bool hungarian = false) {
    for (size_t r = 0; r < estimates.modes.size(); ++r)
        if (estimates.modes[r].rows() != truth.factors[r].rows())
            throw ShapeError("match_components: dims differ");
    const int n_est = estimates.found_rank();
    const int k = truth.rank;
    const int last = truth.order() - 1;

    Eigen::MatrixXd corr_last =
        (estimates.modes[static_cast<size_t>(last)].transpose() *
         truth.factors[static_cast<size_t>(last)])
            .cwiseAbs();
    Eigen::MatrixXd corr_first =
        (estimates.modes[0].transpose() * truth.factors[0]).cwiseAbs();

    std::vector<std::pair<int, int>> chosen;
    if (hungarian && n_est > 0) {
        Eigen::MatrixXd cost = -corr_last;
        std::vector<int> assign;
        if (n_est <= k) {
            assign = detail::min_cost_assignment(cost);
            for (int i = 0; i < n_est; ++i) chosen.push_back({i, assign[static_cast<size_t>(i)]});
        } else {
            assign = detail::min_cost_assignment(cost.transpose());
            for (int j = 0; j < k; ++j) chosen.push_back({assign[static_cast<size_t>(j)], j});
        }
    } else {
        struct Cand {
            int i, j;
            double c_last, c_first;
        };
        std::vector<Cand> cands;
        cands.reserve(static_cast<size_t>(n_est) * static_cast<size_t>(k));
        for (int i = 0; i < n_est; ++i)
            for (int j = 0; j < k; ++j)
                cands.push_back({i, j, corr_last(i, j), corr_first(i, j)});
        std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
            if (a.c_last != b.c_last) return a.c_last > b.c_last;
            if (a.c_first != b.c_first) return a.c_first > b.c_first;
            return std::tie(a.i, a.j) < std::tie(b.i, b.j);
        });
        std::vector<char> est_used(static_cast<size_t>(n_est), 0),
            truth_used(static_cast<size_t>(k), 0);
        for (const auto& cand : cands) {
            if (est_used[static_cast<size_t>(cand.i)] || truth_used[static_cast<size_t>(cand.j)])
                continue;
            est_used[static_cast<size_t>(cand.i)] = 1;
            truth_used[static_cast<size_t>(cand.j)] = 1;
            chosen.push_back({cand.i, cand.j});
        }
    }

    MatchResult result;
    std::vector<char> est_matched(static_cast<size_t>(n_est), 0),
        truth_matched(static_cast<size_t>(k), 0);
    for (auto [i, j] : chosen) {
        MatchedPair pair;
        pair.estimate_col = i;
        pair.truth_col = j;
        detail::finalize_pair(estimates, truth, pair);
        if (pair.max_dist > accept_threshold) continue;
        est_matched[static_cast<size_t>(i)] = 1;
        truth_matched[static_cast<size_t>(j)] = 1;
        result.pairs.push_back(std::move(pair));
    }
    for (int i = 0; i < n_est; ++i)
        if (!est_matched[static_cast<size_t>(i)]) result.unmatched_estimates.push_back(i);
    for (int j = 0; j < k; ++j)
        if (!truth_matched[static_cast<size_t>(j)]) result.unmatched_truth.push_back(j);
    return result;
}

/// Mean squared per-mode column error of a sign-resolved pair:
/// (1/p) sum_r |truth_r - s_r est_r|^2.
inline double square_error(const Decomposition& estimates, const FactoredTensor& truth,
                           const MatchedPair& pair) {
    double sq = 0.0;
    const int p = truth.order();
    for (int r = 0; r < p; ++r)
        sq += (truth.factors[static_cast<size_t>(r)].col(pair.truth_col) -
               double(pair.signs[static_cast<size_t>(r)]) *
                   estimates.modes[static_cast<size_t>(r)].col(pair.estimate_col))
                  .squaredNorm();
    return sq / double(p);
}

/// Squared relative weight error |w_hat - w|^2 / w^2 of a matched pair.
inline double weight_error(const Decomposition& estimates, const FactoredTensor& truth,
                           const MatchedPair& pair) {
    double w = truth.weights[pair.truth_col];
    double dw = estimates.weights[pair.estimate_col] - w;
    return dw * dw / (w * w);
}

/// Ratio of truth columns recovered by the match, in [0,1].
inline double recovery_rate(const MatchResult& match, int k) {
    return k > 0 ? double(match.pairs.size()) / double(k) : 0.0;
}

}  // namespace altcp
