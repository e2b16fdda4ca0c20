#pragma once

#include "altcp/decomposition.hpp"
#include "altcp/error.hpp"
#include "altcp/factored_tensor.hpp"
#include "altcp/linalg.hpp"
#include "altcp/tensor_view.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <vector>

namespace altcp {

/// Radii of the region the refinement is confined to: columns may drift at
/// most eta0*sqrt(k)/d from their anchors and the estimate matrices keep
/// spectral norm at most eta1*sqrt(k/d). The cap is floored at eta1 itself:
/// below k = d the literal scaling drops under the spectral norm of any
/// unit-column matrix (always >= 1), which would make every valid estimate
/// infeasible.
struct NicenessParams {
    double eta0 = 10.0;
    double eta1 = 2.0;

    [[nodiscard]] double column_radius(int k, int d) const {
        return eta0 * std::sqrt(double(k)) / double(d);
    }
    [[nodiscard]] double spectral_cap(int k, int d) const {
        return eta1 * std::max(1.0, std::sqrt(double(k) / double(d)));
    }
};

/// Spectral-then-columnwise projection: clamp the singular values of the
/// candidate to the spectral cap, then pull each column back inside the drift
/// radius around its anchor column.
inline Eigen::MatrixXd project(const Eigen::MatrixXd& candidate,
                               const Eigen::MatrixXd& anchor,
                               const NicenessParams& params) {
    if (candidate.rows() != anchor.rows() || candidate.cols() != anchor.cols())
        throw ShapeError("project: candidate and anchor shapes differ");
    const int d = static_cast<int>(candidate.rows());
    const int k = static_cast<int>(candidate.cols());
    const double cap = params.spectral_cap(k, d);
    const double radius = params.column_radius(k, d);

    Eigen::BDCSVD<Eigen::MatrixXd> svd(candidate, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Eigen::VectorXd sv = svd.singularValues();
    for (Eigen::Index i = 0; i < sv.size(); ++i) sv[i] = std::min(sv[i], cap);
    Eigen::MatrixXd q = svd.matrixU() * sv.asDiagonal() * svd.matrixV().transpose();

    for (int j = 0; j < k; ++j) {
        Eigen::VectorXd step = q.col(j) - anchor.col(j);
        double len = step.norm();
        if (len > radius) q.col(j) = anchor.col(j) + (radius / len) * step;
    }
    return q;
}

/// Componentwise clamp of the weight update: keep the candidate when it
/// moved at most scale*eta0*sqrt(k)/d from the previous weight, otherwise
/// move exactly that far toward it. `scale` is 1 in the plain form; the
/// refinement driver passes the running weight magnitude so the clamp radius
/// tracks the size of the weights themselves.
inline Eigen::VectorXd clip_weights(const Eigen::VectorXd& candidate,
                                    const Eigen::VectorXd& previous, double eta0, int k,
                                    int d, double scale = 1.0) {
    if (candidate.size() != previous.size())
        throw ShapeError("clip_weights: length mismatch");
    const double radius = scale * eta0 * std::sqrt(double(k)) / double(d);
    Eigen::VectorXd out(candidate.size());
    for (Eigen::Index i = 0; i < candidate.size(); ++i) {
        double delta = candidate[i] - previous[i];
        out[i] = (std::abs(delta) <= radius)
                     ? candidate[i]
                     : previous[i] + (delta > 0 ? radius : -radius);
    }
    return out;
}

/// One residual-removal column update for component i of `target_mode`:
///   v = T(u_i, v_i, I) - sum_{j != i} w_j <u_i,u_j> <v_i,v_j> m_j
/// (mode roles permuted so the identity sits in the target mode), returning
/// the norm and direction of v. Costs O(dk) per column via the factored
/// contraction plus Gram products.
struct ColumnUpdate {
    double weight = 0.0;
    Eigen::VectorXd column;
    bool degenerate = false;
};

namespace detail {

/// Finish one column update given the precomputed contraction
/// T(u_i, v_i, I) for that column.
inline ColumnUpdate cd_finish_column(const Eigen::VectorXd& contraction,
                                     const Decomposition& dec, int i, int target_mode,
                                     const Eigen::MatrixXd& gram1,
                                     const Eigen::MatrixXd& gram2, bool symmetric,
                                     const Eigen::VectorXd* mean_slice, int target_dim) {
    const Eigen::MatrixXd& mt = dec.modes[static_cast<size_t>(target_mode)];
    Eigen::VectorXd coeff;
    if (symmetric) {
        const double inv_d = 1.0 / double(target_dim);
        coeff = dec.weights.array() *
                (gram1.col(i).array() * gram2.col(i).array() - inv_d);
    } else {
        coeff = dec.weights.array() * gram1.col(i).array() * gram2.col(i).array();
    }
    coeff[i] = 0.0;

    Eigen::VectorXd v = contraction - mt * coeff;
    if (symmetric) v -= *mean_slice;

    ColumnUpdate upd;
    upd.weight = v.norm();
    if (upd.weight <= 1e-14) {
        upd.degenerate = true;
        upd.column = mt.col(i);  // frozen
        return upd;
    }
    upd.column = v / upd.weight;
    return upd;
}

}  // namespace detail

/// Single-column form of the residual-removal update (third order only).
/// Throws DegenerateError when the update vector vanishes.
inline ColumnUpdate cd_update_column(const TensorView& t, const Decomposition& dec, int i,
                                     int target_mode) {
    if (t.order() != 3) throw ShapeError("cd_update_column: third-order tensors only");
    if (i < 0 || i >= dec.found_rank()) throw ShapeError("cd_update_column: bad column");
    int in1 = -1, in2 = -1;
    for (int r = 0; r < 3; ++r) {
        if (r == target_mode) continue;
        (in1 < 0 ? in1 : in2) = r;
    }
    const Eigen::MatrixXd& m1 = dec.modes[static_cast<size_t>(in1)];
    const Eigen::MatrixXd& m2 = dec.modes[static_cast<size_t>(in2)];
    Eigen::VectorXd contraction =
        contract_to_vector(t, target_mode, {m1.col(i), m2.col(i)});
    ColumnUpdate upd = detail::cd_finish_column(contraction, dec, i, target_mode,
                                                m1.transpose() * m1, m2.transpose() * m2,
                                                false, nullptr,
                                                t.dims().extent(target_mode));
    if (upd.degenerate)
        throw DegenerateError("cd_update_column: update collapsed to zero");
    return upd;
}

/// Niceness bootstrap: one projection pass per mode with the power output
/// serving as both candidate and anchor, recording the radii in effect.
inline Decomposition nice_init(Decomposition dec, const NicenessParams& params) {
    for (size_t r = 0; r < dec.modes.size(); ++r)
        dec.modes[r] = project(dec.modes[r], dec.modes[r], params);
    dec.eta0 = params.eta0;
    dec.eta1 = params.eta1;
    return dec;
}

/// Per-clause niceness report; truth-relative clauses are skipped when no
/// truth is supplied.
struct NiceReport {
    double spectral_norm[3] = {0, 0, 0};
    double spectral_cap = 0.0;
    bool spectral_ok = true;
    double max_col_err = std::numeric_limits<double>::quiet_NaN();
    double column_radius = 0.0;
    bool columns_ok = true;
    double max_weight_err = std::numeric_limits<double>::quiet_NaN();
    double weight_radius = 0.0;
    bool weights_ok = true;
    bool overall = true;
};

inline NiceReport nice_check(const Decomposition& dec,
                             const std::optional<FactoredTensor>& truth,
                             const NicenessParams& params) {
    NiceReport rep;
    const int k = dec.found_rank();
    for (size_t r = 0; r < dec.modes.size() && r < 3; ++r) {
        rep.spectral_norm[r] = spectral_norm(dec.modes[r]);
        double cap = params.spectral_cap(k, static_cast<int>(dec.modes[r].rows()));
        rep.spectral_cap = cap;
        if (rep.spectral_norm[r] > cap) rep.spectral_ok = false;
    }
    if (truth && truth->rank == k) {
        double max_col = 0.0, max_w = 0.0;
        for (size_t r = 0; r < dec.modes.size(); ++r) {
            rep.column_radius =
                params.column_radius(k, static_cast<int>(dec.modes[r].rows()));
            for (int j = 0; j < k; ++j)
                max_col = std::max(
                    max_col, (dec.modes[r].col(j) - truth->factors[r].col(j)).norm());
        }
        rep.max_col_err = max_col;
        rep.columns_ok = max_col <= rep.column_radius;
        rep.weight_radius = params.eta0 * truth->w_max() *
                            std::sqrt(double(k)) / double(dec.dims.extent(0));
        for (int j = 0; j < k; ++j)
            max_w = std::max(max_w, std::abs(dec.weights[j] - truth->weights[j]));
        rep.max_weight_err = max_w;
        rep.weights_ok = max_w <= rep.weight_radius;
    }
    rep.overall = rep.spectral_ok && rep.columns_ok && rep.weights_ok;
    return rep;
}

/// Residual-removal driver: each sweep updates all columns of mode 3, then
/// modes 1 and 2 (each stage reads a frozen snapshot of its own mode and the
/// freshest other modes, then projects against that snapshot), and finally
/// clamps the weight update. The symmetric flag switches the column update
/// to its mean-slice-corrected form. When an aligned truth is supplied the
/// trace records per-sweep errors against it.
inline Decomposition run_refinement(const TensorView& t, Decomposition dec, int sweeps,
                                    const NicenessParams& params, bool symmetric = false,
                                    const std::optional<FactoredTensor>& aligned_truth =
                                        std::nullopt) {
    if (t.order() != 3) throw ShapeError("run_refinement: third-order tensors only");
    const int k = dec.found_rank();
    if (k == 0 || sweeps < 0) return dec;
    dec.eta0 = params.eta0;
    dec.eta1 = params.eta1;

    // Starting outside the confinement region is allowed but worth flagging:
    // the projection will clamp toward it.
    if (sweeps > 0) {
        NiceReport entry = nice_check(dec, std::nullopt, params);
        if (!entry.spectral_ok)
            std::fprintf(stderr,
                         "run_refinement: start exceeds the spectral cap "
                         "(%.4g > %.4g)\n",
                         std::max({entry.spectral_norm[0], entry.spectral_norm[1],
                                   entry.spectral_norm[2]}),
                         entry.spectral_cap);
    }

    double logd = 0.0;
    for (int d : dec.dims.per_mode) logd += std::log2(double(d));
    const int d_mean = static_cast<int>(std::llround(std::exp2(logd / dec.dims.order())));

    std::vector<Eigen::VectorXd> mean_slices(3);
    if (symmetric)
        for (int m = 0; m < 3; ++m) mean_slices[static_cast<size_t>(m)] = mean_diag_slice(t, m);

    auto record = [&](int sweep, int frozen) {
        RefineTraceRow row;
        row.sweep = sweep;
        row.frozen_columns = frozen;
        for (int r = 0; r < 3; ++r)
            row.spectral_norm[r] = spectral_norm(dec.modes[static_cast<size_t>(r)]);
        if (aligned_truth && aligned_truth->rank == k) {
            double max_col = 0.0;
            for (int r = 0; r < 3; ++r) {
                Eigen::MatrixXd delta = dec.modes[static_cast<size_t>(r)] -
                                        aligned_truth->factors[static_cast<size_t>(r)];
                row.frob_err[r] = delta.norm();
                for (int j = 0; j < k; ++j)
                    max_col = std::max(max_col, delta.col(j).norm());
            }
            row.weight_err = (dec.weights - aligned_truth->weights).norm();
            row.max_col_err = max_col;
        }
        dec.trace.push_back(row);
    };

    dec.trace.clear();
    record(0, 0);
    const int stage_order[3] = {2, 0, 1};  // mode 3, then 1, then 2
    for (int sweep = 1; sweep <= sweeps; ++sweep) {
        int frozen = 0;
        Eigen::VectorXd w_candidate = dec.weights;
        for (int m : stage_order) {
            int in1 = -1, in2 = -1;
            for (int r = 0; r < 3; ++r) {
                if (r == m) continue;
                (in1 < 0 ? in1 : in2) = r;
            }
            const Eigen::MatrixXd& m1 = dec.modes[static_cast<size_t>(in1)];
            const Eigen::MatrixXd& m2 = dec.modes[static_cast<size_t>(in2)];
            Eigen::MatrixXd gram1 = m1.transpose() * m1;
            Eigen::MatrixXd gram2 = m2.transpose() * m2;
            Eigen::MatrixXd contractions = batched_pair_contractions(t, m1, m2, m);

            Eigen::MatrixXd candidate(dec.modes[static_cast<size_t>(m)].rows(), k);
            for (int i = 0; i < k; ++i) {
                ColumnUpdate upd = detail::cd_finish_column(
                    contractions.col(i), dec, i, m, gram1, gram2, symmetric,
                    symmetric ? &mean_slices[static_cast<size_t>(m)] : nullptr,
                    dec.dims.extent(m));
                if (upd.degenerate) {
                    ++frozen;
                    candidate.col(i) = dec.modes[static_cast<size_t>(m)].col(i);
                    w_candidate[i] = dec.weights[i];
                } else {
                    candidate.col(i) = upd.column;
                    w_candidate[i] = upd.weight;
                }
            }
            dec.modes[static_cast<size_t>(m)] =
                project(candidate, dec.modes[static_cast<size_t>(m)], params);
        }
        // The clamp radius scales with the running weight magnitude so large
        // weights are reachable in a few sweeps.
        double scale = std::max(1.0, dec.weights.maxCoeff());
        dec.weights = clip_weights(w_candidate, dec.weights, params.eta0, k, d_mean, scale);
        record(sweep, frozen);
    }
    return dec;
}

/// Refinement trace file: one row per sweep, tab separated.
inline void write_refine_trace(std::ostream& out, const std::vector<RefineTraceRow>& trace) {
    out << "sweep\tfrobenius_error_A\tfrobenius_error_B\tfrobenius_error_C\t"
           "weight_error\tmax_col_error\tspectral_norm_A\tspectral_norm_B\t"
           "spectral_norm_C\tfrozen_columns\n";
    out << std::setprecision(17);
    for (const auto& r : trace) {
        out << r.sweep << '\t' << r.frob_err[0] << '\t' << r.frob_err[1] << '\t'
            << r.frob_err[2] << '\t' << r.weight_err << '\t' << r.max_col_err << '\t'
            << r.spectral_norm[0] << '\t' << r.spectral_norm[1] << '\t'
            << r.spectral_norm[2] << '\t' << r.frozen_columns << '\n';
    }
}

}  // namespace altcp
