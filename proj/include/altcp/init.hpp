#pragma once

#include "altcp/error.hpp"
#include "altcp/linalg.hpp"
#include "altcp/rng.hpp"
#include "altcp/tensor_view.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace altcp {

enum class InitMethod { Random, SvdSlice };

inline std::string to_string(InitMethod m) {
    return m == InitMethod::Random ? "random" : "svd";
}

/// Per-mode unit start vectors for one power-iteration trial, plus the slice
/// direction theta when the SVD method produced them.
struct InitVectors {
    std::vector<Eigen::VectorXd> vectors;
    InitMethod method = InitMethod::Random;
    Eigen::VectorXd theta;  // empty unless method == SvdSlice
};

/// Random start: modes 1..p-1 drawn uniformly from their unit spheres, the
/// last mode produced by one power update from the others (falling back to a
/// random unit vector if that update is numerically zero).
inline InitVectors random_init(const TensorView& t, Rng& rng) {
    const Dims& dims = t.dims();
    const int p = dims.order();
    InitVectors init;
    init.method = InitMethod::Random;
    init.vectors.reserve(static_cast<size_t>(p));
    for (int r = 0; r + 1 < p; ++r)
        init.vectors.push_back(random_unit(dims.extent(r), rng));
    Eigen::VectorXd last = contract_to_vector(t, p - 1, init.vectors);
    double nrm = last.norm();
    init.vectors.push_back(nrm > 1e-14 ? Eigen::VectorXd(last / nrm)
                                       : random_unit(dims.extent(p - 1), rng));
    return init;
}

/// SVD slice initialization with a caller-supplied direction theta:
/// (a0, b0) are the top singular pair of the slice combination T(I,I,theta),
/// and c0 is one power update from them. Throws DegenerateError when the
/// slice matrix is numerically zero, in which case the caller redraws theta.
inline InitVectors svd_init_with_theta(const TensorView& t, const Eigen::VectorXd& theta,
                                       Rng& rng, double svd_tol = 1e-10,
                                       int svd_max_iter = 300) {
    if (t.order() != 3) throw ShapeError("svd_init: third-order tensors only");
    Eigen::MatrixXd slice = contract_to_matrix(t, theta, 2);
    if (slice.norm() <= 1e-14)
        throw DegenerateError("svd_init: slice combination is numerically zero");
    TopSingularPair top = top_singular_pair(slice, rng, svd_tol, svd_max_iter);
    if (top.value <= 1e-14)
        throw DegenerateError("svd_init: slice combination is numerically zero");

    InitVectors init;
    init.method = InitMethod::SvdSlice;
    init.theta = theta;
    init.vectors = {top.left, top.right, Eigen::VectorXd()};
    Eigen::VectorXd c = contract_to_vector(t, 2, {top.left, top.right});
    double nrm = c.norm();
    if (nrm <= 1e-14)
        throw DegenerateError("svd_init: third-mode update is numerically zero");
    init.vectors[2] = c / nrm;
    return init;
}

/// SVD slice initialization with theta drawn standard Gaussian in the
/// third-mode dimension. Degenerate slices trigger a redraw, up to
/// `max_redraws` times, before the error surfaces.
inline InitVectors svd_init(const TensorView& t, Rng& rng, double svd_tol = 1e-10,
                            int svd_max_iter = 300, int max_redraws = 5) {
    for (int attempt = 0;; ++attempt) {
        Eigen::VectorXd theta = gaussian_vector(t.dims().extent(2), rng);
        try {
            return svd_init_with_theta(t, theta, rng, svd_tol, svd_max_iter);
        } catch (const DegenerateError&) {
            if (attempt >= max_redraws) throw;
        }
    }
}

/// Slice spectrum diagnostics for a direction theta against a known truth:
/// lambda_i = w_i <theta, c_i>, the top two magnitudes, and the relative gap.
struct InitDiagnostics {
    Eigen::VectorXd lambda;
    int argmax = -1;
    double lambda1 = 0.0;        // max |lambda_i|
    double lambda2 = 0.0;        // second max |lambda_i|
    double gap_ratio = 0.0;      // lambda1 / lambda2 (inf when lambda2 == 0)
    double implied_mu = 0.0;     // gap_ratio - 1
    bool gap_defined = false;    // false when all lambda_i vanish
};

inline InitDiagnostics gap_diagnostics(const FactoredTensor& truth,
                                       const Eigen::VectorXd& theta) {
    const int last = truth.order() - 1;
    if (theta.size() != truth.dims.extent(last))
        throw ShapeError("gap_diagnostics: theta length mismatch");
    InitDiagnostics d;
    d.lambda = truth.weights.array() *
               (truth.factors[static_cast<size_t>(last)].transpose() * theta).array();
    for (int i = 0; i < d.lambda.size(); ++i) {
        double v = std::abs(d.lambda[i]);
        if (v > d.lambda1) {
            d.lambda2 = d.lambda1;
            d.lambda1 = v;
            d.argmax = i;
        } else if (v > d.lambda2) {
            d.lambda2 = v;
        }
    }
    d.gap_defined = d.lambda1 > 0.0;
    if (d.gap_defined) {
        d.gap_ratio = d.lambda2 > 0.0 ? d.lambda1 / d.lambda2
                                      : std::numeric_limits<double>::infinity();
        d.implied_mu = d.gap_ratio - 1.0;
    }
    return d;
}

/// g(L) = sqrt(2 ln L) - (ln ln L + c) / (2 sqrt(2 ln L)) - sqrt(2 ln k):
/// the high-probability lower bound on the best correlation of L Gaussian
/// slice directions with the dominant component. Natural logarithms.
struct TrialCountBound {
    double k = 0;
    double c = 1.0;

    [[nodiscard]] double g(double num_trials) const {
        double s = std::sqrt(2.0 * std::log(num_trials));
        return s - (std::log(std::log(num_trials)) + c) / (2.0 * s) -
               std::sqrt(2.0 * std::log(k));
    }
};

struct TrialCountResult {
    std::uint64_t required_trials = 0;
    double threshold = 0.0;  // right-hand side the gap condition must clear
    TrialCountBound g;
};

/// Smallest L >= 3 with g(L) >= gamma(1+mu) / (1 - rho gamma (1+mu)) *
/// 4 sqrt(ln k), found by integer bisection on the monotone tail of g.
/// Weights enter only through their ratio gamma. Infeasible when the
/// denominator is nonpositive, i.e. mu >= 1/(rho gamma) - 1.
inline TrialCountResult theory_trial_count(double gamma, double k, double d, double rho,
                                           double mu, double c = 1.0) {
    (void)d;  // enters only through the caller's choice of rho
    if (gamma < 1.0) throw InfeasibleError("theory_trial_count: gamma must be >= 1");
    double denom = 1.0 - rho * gamma * (1.0 + mu);
    if (denom <= 0.0)
        throw InfeasibleError(
            "theory_trial_count: rho * gamma * (1 + mu) >= 1; "
            "requires mu < 1/(rho gamma) - 1");
    TrialCountResult res;
    res.g = TrialCountBound{k, c};
    res.threshold = gamma * (1.0 + mu) / denom * 4.0 * std::sqrt(std::log(k));

    // g is increasing for L >= 10; scan the handful of small values first.
    for (std::uint64_t l = 3; l <= 10; ++l) {
        if (res.g.g(static_cast<double>(l)) >= res.threshold) {
            res.required_trials = l;
            return res;
        }
    }
    std::uint64_t lo = 10, hi = 20;
    const std::uint64_t cap = std::uint64_t{1} << 62;
    while (res.g.g(static_cast<double>(hi)) < res.threshold) {
        lo = hi;
        if (hi >= cap)
            throw InfeasibleError("theory_trial_count: required L exceeds 2^62");
        hi *= 2;
    }
    while (lo + 1 < hi) {
        std::uint64_t mid = lo + (hi - lo) / 2;
        if (res.g.g(static_cast<double>(mid)) >= res.threshold)
            hi = mid;
        else
            lo = mid;
    }
    res.required_trials = hi;
    return res;
}

}  // namespace altcp
