#pragma once

#include "altcp/error.hpp"
#include "altcp/factored_tensor.hpp"
#include "altcp/init.hpp"
#include "altcp/linalg.hpp"
#include "altcp/rng.hpp"
#include "altcp/tensor_view.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace altcp {

/// Tunable constants standing in for the analysis' asymptotic orders. The
/// theory fixes only the scalings; every constant here is explicit and
/// overridable. Base-2 logarithms throughout (g(L) keeps its natural-log
/// definition).
struct TheoryConstants {
    double alpha0 = 2.0;    // spectral-norm constant
    double beta_prime = 0.05;
    double alpha_kr_scale = 10.0;  // Khatri-Rao bound: 1 + scale*log2(d)*sqrt(k)/d
    double two_to_p_cap = 1.5;     // measured 2->2.5 norms reach ~1.28 at k=1.6d
    double mu_tilde = 0.5;
    double g_constant = 1.0;

    /// Incoherence/cross-term constant alpha = 4*sqrt(log2 k).
    [[nodiscard]] double alpha(int k) const { return 4.0 * std::sqrt(std::log2(double(k))); }
    /// Rank-condition polylog instantiation: log2 d. (A squared log would
    /// reject the k = 2d regime the method demonstrably handles.)
    [[nodiscard]] double polylog(int d) const { return std::log2(double(d)); }
};

/// Derived contraction-side quantities for a (k, d) problem.
struct ContractionParams {
    double alpha = 0.0;
    double alpha0 = 0.0;
    double beta_prime = 0.0;
    double q = 0.0;             // per-iteration contraction factor
    bool q_warning = false;     // q >= 1/2: contraction not guaranteed
    double const_term = 0.0;    // non-contracting floor
    double eps0_cap = 0.0;      // largest admissible initialization error
    double eps_r = 0.0;         // target relative accuracy
    int iterations = 0;         // recommended N = ceil(log2(1/(gamma*eps_r)))

    double k = 0, d = 0, w_max = 0, w_min = 0, psi = 0;

    /// f(eps) = alpha sqrt(k)/d + (2 alpha/sqrt(d)) (1+alpha0 sqrt(k/d))^2 eps
    ///        + alpha0 eps^2.
    [[nodiscard]] double f(double eps) const {
        double lin = (2.0 * alpha / std::sqrt(d)) *
                     std::pow(1.0 + alpha0 * std::sqrt(k / d), 2.0);
        return alpha * std::sqrt(k) / d + lin * eps + alpha0 * eps * eps;
    }
};

inline ContractionParams contraction_params(int k, int d, double alpha, double alpha0,
                                            double beta_prime, double w_max, double w_min,
                                            double psi) {
    if (k < 1 || d < 1 || w_max < w_min || w_min <= 0.0)
        throw ShapeError("contraction_params: bad arguments");
    ContractionParams p;
    p.alpha = alpha;
    p.alpha0 = alpha0;
    p.beta_prime = beta_prime;
    p.k = k;
    p.d = d;
    p.w_max = w_max;
    p.w_min = w_min;
    p.psi = psi;

    const double gamma = w_max / w_min;
    const double sqrt_kd = std::sqrt(double(k) / double(d));
    p.q = 2.0 * gamma *
          ((2.0 * alpha / std::sqrt(double(d))) * std::pow(1.0 + alpha0 * sqrt_kd, 2.0) +
           beta_prime);
    p.q_warning = p.q >= 0.5;
    p.const_term = (2.0 / w_min) * (psi + w_max * alpha * std::sqrt(double(k)) / double(d));

    const double logd = std::log2(double(d));
    const double residual_floor = gamma * logd * logd * std::sqrt(double(k)) / double(d);
    // With an exact tensor the noise term vanishes and the floor is set by
    // the residual scale alone.
    p.eps_r = psi > 0.0 ? std::min(psi / w_min, residual_floor) : residual_floor;
    p.iterations =
        std::max(1, static_cast<int>(std::ceil(std::log2(1.0 / (gamma * p.eps_r)))));

    const double t1 = beta_prime / alpha0;
    const double t2 = std::sqrt(w_min / (6.0 * w_max));
    const double t3 = w_min * p.q / (4.0 * w_max);
    const double t4 = (2.0 * w_max / (w_min * p.q)) *
                      (w_min / (6.0 * w_max) - alpha * std::sqrt(double(k)) / double(d));
    p.eps0_cap = std::min(std::min(t1, t2), std::min(t3, t4));
    return p;
}

/// Initialization-side quantities.
struct InitTheoryParams {
    double mu_e = 0.0;
    double mu_r = 0.0;
    double mu_min = 0.0;
    double mu = 0.0;
    bool feasible = true;  // mu < w_min/(w_max rho) - 1
    TrialCountBound g;
};

inline InitTheoryParams init_theory_params(int k, int d, double rho, double w_max,
                                           double w_min, double alpha, double alpha0,
                                           double mu_tilde, double g_constant = 1.0) {
    if (!(mu_tilde > 0.0 && mu_tilde < 1.0))
        throw ShapeError("init_theory_params: mu_tilde must lie in (0,1)");
    InitTheoryParams p;
    const double sqrt_kd = std::sqrt(double(k) / double(d));
    p.mu_e = alpha * sqrt_kd * (2.0 + 2.0 * alpha0 * sqrt_kd + alpha / std::sqrt(double(d)));
    p.mu_r = std::pow(1.0 + alpha0 * sqrt_kd, 2.0);
    p.mu_min = std::min(p.mu_e, p.mu_r);
    p.mu = (2.0 * p.mu_r + mu_tilde - 1.0) / (1.0 - mu_tilde);
    p.feasible = rho > 0.0 ? (p.mu < w_min / (w_max * rho) - 1.0) : true;
    p.g = TrialCountBound{double(k), g_constant};
    return p;
}

/// Exact maximum pairwise column coherence over all modes, via Gram
/// matrices, with the offending (mode, i, j) recorded.
struct IncoherenceResult {
    double rho = 0.0;
    int mode = -1;
    int col_i = -1;
    int col_j = -1;
};

inline IncoherenceResult incoherence(const FactoredTensor& f) {
    IncoherenceResult res;
    for (int r = 0; r < f.order(); ++r) {
        const Eigen::MatrixXd& a = f.factors[static_cast<size_t>(r)];
        Eigen::MatrixXd gram = a.transpose() * a;
        for (int i = 0; i < f.rank; ++i)
            for (int j = i + 1; j < f.rank; ++j) {
                double v = std::abs(gram(i, j));
                if (v > res.rho) res = {v, r, i, j};
            }
    }
    return res;
}

/// Exact per-mode largest singular values, with the margin against the
/// bound 1 + alpha0 sqrt(k/d).
struct SpectralNormsResult {
    std::vector<double> per_mode;
    std::vector<double> margin;  // bound - norm; negative means violated
};

inline SpectralNormsResult factor_spectral_norms(const FactoredTensor& f, double alpha0 = 2.0) {
    SpectralNormsResult res;
    for (int r = 0; r < f.order(); ++r) {
        double nrm = spectral_norm(f.factors[static_cast<size_t>(r)]);
        double bound =
            1.0 + alpha0 * std::sqrt(double(f.rank) / double(f.dims.extent(r)));
        res.per_mode.push_back(nrm);
        res.margin.push_back(bound - nrm);
    }
    return res;
}

/// Spectral norms of the three pairwise Khatri-Rao products, computed from
/// the k x k Gram identity (A.B)'(A.B) = (A'A) .* (B'B) without forming the
/// d^2 x k product.
struct KhatriRaoNorms {
    double ab = 0.0, bc = 0.0, ac = 0.0;
};

inline KhatriRaoNorms khatri_rao_norms(const FactoredTensor& f) {
    if (f.order() != 3) throw ShapeError("khatri_rao_norms: third-order only");
    std::vector<Eigen::MatrixXd> grams;
    grams.reserve(3);
    for (int r = 0; r < 3; ++r)
        grams.push_back(f.factors[static_cast<size_t>(r)].transpose() *
                        f.factors[static_cast<size_t>(r)]);
    auto top = [](const Eigen::MatrixXd& g1, const Eigen::MatrixXd& g2) {
        Eigen::MatrixXd had = g1.array() * g2.array();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(had, Eigen::EigenvaluesOnly);
        return std::sqrt(std::max(0.0, eig.eigenvalues().maxCoeff()));
    };
    return {top(grams[0], grams[1]), top(grams[1], grams[2]), top(grams[0], grams[2])};
}

/// Largest cross-component contraction norm
///   max_j | sum_{i != j} w_i <a_i,a_j> <b_i,b_j> c_i |,
/// evaluated exactly through Gram products.
struct CrossTermResult {
    double max_norm = 0.0;
    int argmax = -1;
};

inline CrossTermResult cross_term_bound(const FactoredTensor& f) {
    if (f.order() != 3) throw ShapeError("cross_term_bound: third-order only");
    const Eigen::MatrixXd& a = f.factors[0];
    const Eigen::MatrixXd& b = f.factors[1];
    const Eigen::MatrixXd& c = f.factors[2];
    Eigen::MatrixXd gram_a = a.transpose() * a;
    Eigen::MatrixXd gram_b = b.transpose() * b;
    CrossTermResult res;
    for (int j = 0; j < f.rank; ++j) {
        Eigen::VectorXd coeff =
            f.weights.array() * gram_a.col(j).array() * gram_b.col(j).array();
        coeff[j] = 0.0;
        double nrm = (c * coeff).norm();
        if (nrm > res.max_norm) res = {nrm, j};
    }
    return res;
}

/// Lower-bound estimate of the 2->p induced norm sup_{|u|=1} |M'u|_p for
/// p > 2, by the nonlinear power iteration u <- normalize(M phi(M'u)) with
/// phi(v) = sign(v) |v|^{p-1}; each step cannot decrease the objective, and
/// the best value over restarts is returned.
inline double two_to_p_norm_estimate(const Eigen::MatrixXd& m, double p, int restarts,
                                     int iters, Rng& rng) {
    if (p <= 2.0) throw ShapeError("two_to_p_norm_estimate: requires p > 2");
    auto lp_norm = [p](const Eigen::VectorXd& v) {
        return std::pow(v.array().abs().pow(p).sum(), 1.0 / p);
    };
    double best = 0.0;
    for (int run = 0; run < restarts; ++run) {
        Eigen::VectorXd u = random_unit(static_cast<int>(m.rows()), rng);
        double value = lp_norm(m.transpose() * u);
        for (int it = 0; it < iters; ++it) {
            Eigen::VectorXd v = m.transpose() * u;
            Eigen::VectorXd phi = v.array().sign() * v.array().abs().pow(p - 1.0);
            Eigen::VectorXd step = m * phi;
            double nrm = step.norm();
            if (nrm <= 1e-300) break;
            u = step / nrm;
            double next = lp_norm(m.transpose() * u);
            if (next <= value * (1.0 + 1e-13)) {
                value = std::max(value, next);
                break;
            }
            value = next;
        }
        best = std::max(best, value);
    }
    return best;
}

/// One assumption's verdict.
struct AssumptionEntry {
    std::string id;
    std::string description;
    double measured = 0.0;
    double threshold = 0.0;
    bool pass = false;
};

/// Measured incoherence, spectral, Khatri-Rao, cross-term and norm
/// quantities for a factored truth, each checked against its threshold.
struct AssumptionReport {
    double rho = 0.0;
    std::vector<double> factor_norms;
    KhatriRaoNorms kr_norms;
    double tensor_spectral_estimate = 0.0;
    double cross_term = 0.0;
    std::vector<double> two_to_p;  // per mode, of the transposed factor
    double gamma = 1.0;
    std::vector<AssumptionEntry> entries;

    [[nodiscard]] bool all_pass() const {
        for (const auto& e : entries)
            if (!e.pass) return false;
        return true;
    }
    [[nodiscard]] const AssumptionEntry* find(const std::string& id) const {
        for (const auto& e : entries)
            if (e.id == id) return &e;
        return nullptr;
    }
};

/// Evaluate the full assumption checklist on a factored tensor with noise
/// level psi. Checks that are only estimable (tensor spectral norm, 2->p
/// norms) use lower-bound estimators, so their verdicts are one-sided.
inline AssumptionReport assumption_report(const FactoredTensor& f, double psi,
                                          const TheoryConstants& tc, Rng& rng,
                                          int norm_restarts = 20, int norm_iters = 100) {
    if (f.order() != 3) throw ShapeError("assumption_report: third-order only");
    const int k = f.rank;
    const int d = f.dims.extent(0);
    const double alpha = tc.alpha(k);
    AssumptionReport rep;
    rep.gamma = f.weight_ratio();

    auto add = [&rep](std::string id, std::string desc, double measured, double threshold,
                      bool pass) {
        rep.entries.push_back({std::move(id), std::move(desc), measured, threshold, pass});
    };

    // A1: unit columns, positive weights.
    double worst_unit = 0.0;
    for (const auto& m : f.factors)
        for (int j = 0; j < k; ++j)
            worst_unit = std::max(worst_unit, std::abs(m.col(j).norm() - 1.0));
    add("A1", "normalized columns and positive weights", worst_unit, 1e-9,
        worst_unit <= 1e-9 && f.w_min() > 0.0);

    // A2: incoherence rho <= alpha/sqrt(d).
    rep.rho = incoherence(f).rho;
    add("A2", "incoherence", rep.rho, alpha / std::sqrt(double(d)),
        rep.rho <= alpha / std::sqrt(double(d)));

    // A3: factor spectral norms <= 1 + alpha0 sqrt(k/d).
    SpectralNormsResult sn = factor_spectral_norms(f, tc.alpha0);
    rep.factor_norms = sn.per_mode;
    double worst_norm = *std::max_element(sn.per_mode.begin(), sn.per_mode.end());
    add("A3", "factor spectral norms", worst_norm,
        1.0 + tc.alpha0 * std::sqrt(double(k) / double(d)),
        *std::min_element(sn.margin.begin(), sn.margin.end()) >= 0.0);

    // A4: tensor spectral norm (lower-bound estimate, one-sided) and the
    // cross-term bound.
    rep.tensor_spectral_estimate =
        spectral_norm_estimate(TensorView{f}, norm_restarts, norm_iters, rng);
    add("A4a", "tensor spectral norm estimate <= w_max * alpha0",
        rep.tensor_spectral_estimate, f.w_max() * tc.alpha0,
        rep.tensor_spectral_estimate <= f.w_max() * tc.alpha0);
    rep.cross_term = cross_term_bound(f).max_norm;
    add("A4b", "cross-term norm", rep.cross_term,
        alpha * f.w_max() * std::sqrt(double(k)) / double(d),
        rep.cross_term <= alpha * f.w_max() * std::sqrt(double(k)) / double(d));

    // A5: rank condition k <= d^1.5 / polylog(d).
    double rank_cap = std::pow(double(d), 1.5) / tc.polylog(d);
    add("A5", "rank condition", double(k), rank_cap, double(k) <= rank_cap);

    // A6: noise bound psi <= min{1/6, sqrt(log k)/(alpha0 sqrt(d))} w_min.
    double noise_cap =
        std::min(1.0 / 6.0,
                 std::sqrt(std::log2(double(k))) / (tc.alpha0 * std::sqrt(double(d)))) *
        f.w_min();
    add("A6", "noise bound", psi, noise_cap, psi <= noise_cap);

    // A7: weight ratio gamma <= min{sqrt(d), d^1.5/k}.
    double gamma_cap = std::min(std::sqrt(double(d)), std::pow(double(d), 1.5) / double(k));
    add("A7", "weight ratio", rep.gamma, gamma_cap, rep.gamma <= gamma_cap);

    // A8/A9: contraction factor and admissible initialization error.
    ContractionParams cp = contraction_params(k, d, alpha, tc.alpha0, tc.beta_prime,
                                              f.w_max(), f.w_min(), psi);
    add("A8", "contraction factor q < 1/2", cp.q, 0.5, !cp.q_warning);
    add("A9", "initialization cap positive", cp.eps0_cap, 0.0, cp.eps0_cap > 0.0);

    // A10: 2->p norms of the transposed factors (lower-bound estimates).
    double worst_2p = 0.0;
    for (const auto& m : f.factors) {
        double est = two_to_p_norm_estimate(m, 2.5, norm_restarts, norm_iters, rng);
        rep.two_to_p.push_back(est);
        worst_2p = std::max(worst_2p, est);
    }
    add("A10", "2->p norm estimates", worst_2p, tc.two_to_p_cap, worst_2p <= tc.two_to_p_cap);

    // A11: Khatri-Rao spectral norms <= 1 + scale*log2(d)*sqrt(k)/d.
    rep.kr_norms = khatri_rao_norms(f);
    double worst_kr = std::max({rep.kr_norms.ab, rep.kr_norms.bc, rep.kr_norms.ac});
    double kr_cap = 1.0 + tc.alpha_kr_scale * std::log2(double(d)) *
                              std::sqrt(double(k)) / double(d);
    add("A11", "Khatri-Rao spectral norms", worst_kr, kr_cap, worst_kr <= kr_cap);

    return rep;
}

/// Flat key/value serialization (one `key=value` per line, stable names).
inline void write_assumption_report(std::ostream& out, const AssumptionReport& rep) {
    out << std::setprecision(17);
    out << "rho=" << rep.rho << "\n";
    out << "gamma=" << rep.gamma << "\n";
    for (size_t r = 0; r < rep.factor_norms.size(); ++r)
        out << "factor_norm_mode" << (r + 1) << "=" << rep.factor_norms[r] << "\n";
    out << "khatri_rao_norm_ab=" << rep.kr_norms.ab << "\n";
    out << "khatri_rao_norm_bc=" << rep.kr_norms.bc << "\n";
    out << "khatri_rao_norm_ac=" << rep.kr_norms.ac << "\n";
    out << "tensor_spectral_estimate=" << rep.tensor_spectral_estimate << "\n";
    out << "cross_term=" << rep.cross_term << "\n";
    for (size_t r = 0; r < rep.two_to_p.size(); ++r)
        out << "two_to_p_mode" << (r + 1) << "=" << rep.two_to_p[r] << "\n";
    for (const auto& e : rep.entries) {
        out << e.id << ".measured=" << e.measured << "\n";
        out << e.id << ".threshold=" << e.threshold << "\n";
        out << e.id << ".pass=" << (e.pass ? "true" : "false") << "\n";
    }
    out << "all_pass=" << (rep.all_pass() ? "true" : "false") << "\n";
}

}  // namespace altcp
