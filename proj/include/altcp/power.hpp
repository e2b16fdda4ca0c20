#pragma once

#include "altcp/decomposition.hpp"
#include "altcp/error.hpp"
#include "altcp/init.hpp"
#include "altcp/rng.hpp"
#include "altcp/tensor_view.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

namespace altcp {

/// Update schedule for one alternating sweep. Jacobi feeds every mode the
/// previous iterate's vectors (the update formula as written); Gauss-Seidel
/// feeds each mode the freshest available vectors. Symmetric runs the
/// single-vector update a <- T(a,a,I)/|T(a,a,I)| and mirrors it to all modes.
enum class UpdateKind { Jacobi, GaussSeidel, Symmetric };

inline std::string to_string(UpdateKind k) {
    switch (k) {
        case UpdateKind::Jacobi: return "jacobi";
        case UpdateKind::GaussSeidel: return "gauss-seidel";
        case UpdateKind::Symmetric: return "symmetric";
    }
    return "?";
}

/// When to stop a trial: a fixed iteration count, a movement threshold, or
/// whichever of the two triggers first. The threshold is
/// t1 * (log2 d)^2 * sqrt(k) / d, with d the geometric mean extent.
struct StoppingRule {
    enum class Mode { FixedIters, Threshold, Both };
    Mode mode = Mode::Both;
    int max_iters = 100;
    double t1 = 1e-8;

    static StoppingRule fixed(int n) { return {Mode::FixedIters, n, 0.0}; }
    static StoppingRule threshold(double t1_, int safety_cap = 100000) {
        return {Mode::Threshold, safety_cap, t1_};
    }
    static StoppingRule both(int n, double t1_) { return {Mode::Both, n, t1_}; }

    /// Movement threshold resolved for a d-dimensional rank-k problem; -1
    /// (never triggered) in FixedIters mode.
    [[nodiscard]] double resolve_threshold(const Dims& dims, int k) const {
        if (mode == Mode::FixedIters) return -1.0;
        double logd = 0.0;
        for (int d : dims.per_mode) logd += std::log2(double(d));
        logd /= dims.order();
        double d_mean = std::exp2(logd);
        return t1 * logd * logd * std::sqrt(double(k)) / d_mean;
    }
};

/// Current vectors of one trial; all unit norm after every step.
struct TrialState {
    std::vector<Eigen::VectorXd> vectors;
    int iteration = 0;
    double last_movement_sq = std::numeric_limits<double>::infinity();
    bool converged = false;
};

/// One trial's outcome: per-mode unit vectors, the weight estimate
/// T(a,b,c), and stop metadata. After sign canonicalization the weight is
/// nonnegative.
struct TripleEstimate {
    std::vector<Eigen::VectorXd> vectors;
    double weight = 0.0;
    int trial_id = -1;
    int iterations = 0;
    std::string stop_reason;  // "threshold" | "max-iter" | "degenerate"
    InitMethod init = InitMethod::Random;
    bool valid = true;
};

/// One alternating power update of every mode for a tensor of any order
/// p >= 3: mode r is replaced by the normalized contraction of T against the
/// other modes' vectors. Throws DegenerateError when an update collapses to
/// zero.
inline TrialState power_step_general(const TensorView& t, const TrialState& s,
                                     UpdateKind kind = UpdateKind::Jacobi) {
    const int p = t.order();
    if (static_cast<int>(s.vectors.size()) != p)
        throw ShapeError("power_step: one vector per mode required");

    TrialState next = s;
    if (kind == UpdateKind::Symmetric) {
        Eigen::VectorXd u = contract_to_vector(t, p - 1,
                                               {s.vectors.begin(), s.vectors.end() - 1});
        double nrm = u.norm();
        if (nrm <= 1e-14) throw DegenerateError("power_step: update collapsed to zero");
        u /= nrm;
        double move = (u - s.vectors[0]).squaredNorm();
        for (auto& v : next.vectors) v = u;
        next.last_movement_sq = move;
    } else if (kind == UpdateKind::Jacobi) {
        std::vector<Eigen::VectorXd> updates = multi_mode_contractions(t, s.vectors);
        double move = 0.0;
        for (int r = 0; r < p; ++r) {
            double nrm = updates[static_cast<size_t>(r)].norm();
            if (nrm <= 1e-14) throw DegenerateError("power_step: update collapsed to zero");
            updates[static_cast<size_t>(r)] /= nrm;
            move = std::max(move, (updates[static_cast<size_t>(r)] -
                                   s.vectors[static_cast<size_t>(r)])
                                      .squaredNorm());
        }
        next.vectors = std::move(updates);
        next.last_movement_sq = move;
    } else {
        double move = 0.0;
        std::vector<Eigen::VectorXd> others(static_cast<size_t>(p - 1));
        for (int r = 0; r < p; ++r) {
            int idx = 0;
            for (int q = 0; q < p; ++q) {
                if (q == r) continue;
                others[static_cast<size_t>(idx++)] = next.vectors[static_cast<size_t>(q)];
            }
            Eigen::VectorXd u = contract_to_vector(t, r, others);
            double nrm = u.norm();
            if (nrm <= 1e-14) throw DegenerateError("power_step: update collapsed to zero");
            u /= nrm;
            move = std::max(move, (u - s.vectors[static_cast<size_t>(r)]).squaredNorm());
            next.vectors[static_cast<size_t>(r)] = u;
        }
        next.last_movement_sq = move;
    }
    next.iteration = s.iteration + 1;
    return next;
}

/// Third-order alternating power update (the general step specialized).
inline TrialState power_step(const TensorView& t, const TrialState& s,
                             UpdateKind kind = UpdateKind::Jacobi) {
    if (t.order() != 3) throw ShapeError("power_step: third-order tensors only");
    return power_step_general(t, s, kind);
}

/// Symmetric power update a <- T(a,a,I) / |T(a,a,I)| for a single vector.
inline Eigen::VectorXd power_step_symmetric(const TensorView& t, const Eigen::VectorXd& a) {
    if (t.order() != 3) throw ShapeError("power_step_symmetric: third-order tensors only");
    Eigen::VectorXd u = contract_to_vector(t, 2, {a, a});
    double nrm = u.norm();
    if (nrm <= 1e-14) throw DegenerateError("power_step_symmetric: update collapsed to zero");
    return u / nrm;
}

/// Run one trial to its stopping rule and estimate the weight at the final
/// vectors. A negative weight flips the last mode's vector (all vectors for
/// the symmetric update), so emitted weights are nonnegative.
inline TripleEstimate run_trial(const TensorView& t, const InitVectors& init,
                                const StoppingRule& stop, int rank_hint,
                                UpdateKind kind = UpdateKind::Jacobi) {
    TripleEstimate est;
    est.init = init.method;
    TrialState state;
    state.vectors = init.vectors;

    const double threshold = stop.resolve_threshold(t.dims(), rank_hint);
    est.stop_reason = "max-iter";
    try {
        for (int it = 0; it < stop.max_iters; ++it) {
            state = power_step_general(t, state, kind);
            if (stop.mode != StoppingRule::Mode::FixedIters &&
                state.last_movement_sq <= threshold) {
                state.converged = true;
                est.stop_reason = "threshold";
                break;
            }
        }
    } catch (const DegenerateError&) {
        est.stop_reason = "degenerate";
        est.valid = false;
    }
    est.vectors = state.vectors;
    est.iterations = state.iteration;
    if (est.valid) {
        est.weight = contract_to_scalar(t, est.vectors);
        if (est.weight < 0.0) {
            if (kind == UpdateKind::Symmetric) {
                for (auto& v : est.vectors) v = -v;  // odd order: flips the sign
            } else {
                est.vectors.back() = -est.vectors.back();
            }
            est.weight = -est.weight;
        }
    }
    return est;
}

struct ClusterResult {
    std::vector<TripleEstimate> centers;
    int shortfall = 0;
};

/// Greedy clustering of trial outputs: repeatedly promote the remaining
/// tuple with the largest |T(a,b,c)|, polish it with up to `refine` more
/// power iterations, emit it as a center, and drop every tuple whose
/// per-mode correlation with the center exceeds nu/2. Returns fewer than k
/// centers (with the shortfall counted) when the tuples run out.
inline ClusterResult cluster(const TensorView& t, const std::vector<TripleEstimate>& tuples,
                             int k, double nu, const StoppingRule& refine,
                             UpdateKind kind = UpdateKind::Jacobi) {
    if (tuples.empty()) throw ShapeError("cluster: no tuples supplied");
    if (!(nu > 0.0 && nu < 1.0)) throw ShapeError("cluster: nu must lie in (0,1)");

    std::vector<char> alive(tuples.size(), 1);
    std::vector<double> value(tuples.size(), 0.0);
    for (size_t i = 0; i < tuples.size(); ++i) {
        if (!tuples[i].valid) {
            alive[i] = 0;  // degenerate trials never seed a cluster
            continue;
        }
        value[i] = std::abs(contract_to_scalar(t, tuples[i].vectors));
    }

    ClusterResult out;
    const int p = t.order();
    for (int c = 0; c < k; ++c) {
        int best = -1;
        for (size_t i = 0; i < tuples.size(); ++i)
            if (alive[i] && (best < 0 || value[i] > value[static_cast<size_t>(best)]))
                best = static_cast<int>(i);
        if (best < 0) break;

        InitVectors seed;
        seed.method = tuples[static_cast<size_t>(best)].init;
        seed.vectors = tuples[static_cast<size_t>(best)].vectors;
        TripleEstimate center = run_trial(t, seed, refine, k, kind);
        center.trial_id = tuples[static_cast<size_t>(best)].trial_id;
        center.init = tuples[static_cast<size_t>(best)].init;
        if (!center.valid) {
            alive[static_cast<size_t>(best)] = 0;
            --c;  // this tuple is unusable; try the next best
            continue;
        }

        for (size_t i = 0; i < tuples.size(); ++i) {
            if (!alive[i]) continue;
            double corr = 0.0;
            for (int r = 0; r < p; ++r)
                corr = std::max(corr, std::abs(center.vectors[static_cast<size_t>(r)].dot(
                                          tuples[i].vectors[static_cast<size_t>(r)])));
            if (corr > nu / 2.0) alive[i] = 0;
        }
        out.centers.push_back(std::move(center));
    }
    out.shortfall = k - static_cast<int>(out.centers.size());
    return out;
}

/// Algorithm front half: L independently seeded trials followed by
/// clustering into k centers. Trial tau draws its randomness from
/// substream_seed(seed, tau), so results are reproducible and independent of
/// execution order. Cluster polishing reuses the trial stopping rule.
inline Decomposition run_power_phase(const TensorView& t, int k, int num_trials,
                                     InitMethod init_method, const StoppingRule& stop,
                                     double nu, std::uint64_t seed,
                                     UpdateKind kind = UpdateKind::Jacobi,
                                     std::vector<TripleEstimate>* trials_out = nullptr) {
    if (num_trials < k)
        throw ShapeError("run_power_phase: need at least k trials, got " +
                         std::to_string(num_trials));
    std::vector<TripleEstimate> trials(static_cast<size_t>(num_trials));
    for (int tau = 0; tau < num_trials; ++tau) {
        Rng rng(substream_seed(seed, static_cast<std::uint64_t>(tau)));
        InitVectors init;
        if (init_method == InitMethod::SvdSlice) {
            try {
                init = svd_init(t, rng);
            } catch (const DegenerateError&) {
                init = random_init(t, rng);  // zero tensor corner; still deterministic
            }
        } else {
            init = random_init(t, rng);
        }
        if (kind == UpdateKind::Symmetric) {
            // Mirror the first mode so the symmetric update starts coherent.
            for (auto& v : init.vectors) v = init.vectors[0];
        }
        trials[static_cast<size_t>(tau)] = run_trial(t, init, stop, k, kind);
        trials[static_cast<size_t>(tau)].trial_id = tau;
    }

    ClusterResult clustered = cluster(t, trials, k, nu, stop, kind);
    if (trials_out) *trials_out = std::move(trials);

    Decomposition dec;
    dec.dims = t.dims();
    dec.requested_rank = k;
    dec.shortfall = clustered.shortfall;
    const int found = static_cast<int>(clustered.centers.size());
    const int p = t.order();
    dec.modes.resize(static_cast<size_t>(p));
    for (int r = 0; r < p; ++r)
        dec.modes[static_cast<size_t>(r)].resize(t.dims().extent(r), found);
    dec.weights.resize(found);
    for (int j = 0; j < found; ++j) {
        const TripleEstimate& c = clustered.centers[static_cast<size_t>(j)];
        for (int r = 0; r < p; ++r)
            dec.modes[static_cast<size_t>(r)].col(j) = c.vectors[static_cast<size_t>(r)];
        dec.weights[j] = c.weight;
        dec.component_meta.push_back({c.trial_id, c.iterations, c.stop_reason, c.init});
    }
    return dec;
}

/// One line per trial in the trial log (delimited text).
struct TrialRecord {
    int trial_id = -1;
    InitMethod init = InitMethod::Random;
    int iterations = 0;
    std::string stop_reason;
    double weight = 0.0;
    int matched_component = -1;  // -1 when no truth or unmatched
    double dist_a = std::numeric_limits<double>::quiet_NaN();
    double dist_b = std::numeric_limits<double>::quiet_NaN();
    double dist_c = std::numeric_limits<double>::quiet_NaN();
};

inline void write_trial_log(std::ostream& out, const std::vector<TrialRecord>& records) {
    out << "trial_id\tinit_method\titerations\tstop_reason\tweight\t"
           "matched_component\tdist_a\tdist_b\tdist_c\n";
    out << std::setprecision(17);
    for (const auto& r : records) {
        out << r.trial_id << '\t' << to_string(r.init) << '\t' << r.iterations << '\t'
            << r.stop_reason << '\t' << r.weight << '\t' << r.matched_component << '\t'
            << r.dist_a << '\t' << r.dist_b << '\t' << r.dist_c << '\n';
    }
}

}  // namespace altcp
