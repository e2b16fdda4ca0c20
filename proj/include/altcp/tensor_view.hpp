#pragma once

#include "altcp/dense_tensor.hpp"
#include "altcp/error.hpp"
#include "altcp/factored_tensor.hpp"
#include "altcp/rng.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace altcp {

/// Materialize a factored tensor as a dense array (mode-1-fastest layout).
/// Refuses to allocate past the entry budget; the error names the required
/// count so callers can switch to an implicit representation instead.
inline DenseTensor build_dense(const FactoredTensor& f,
                               std::int64_t budget = kDenseEntryBudget) {
    const std::int64_t total = f.dims.total_entries();
    if (total > budget)
        throw CapacityError("build_dense: " + std::to_string(total) +
                            " entries exceed the dense budget of " +
                            std::to_string(budget));
    const int p = f.order();
    std::vector<double> entries(static_cast<size_t>(total), 0.0);
    Eigen::VectorXd buf, next;
    for (int j = 0; j < f.rank; ++j) {
        // Iterated Kronecker expansion, lowest mode fastest.
        buf = f.weights[j] * f.factors[0].col(j);
        for (int r = 1; r < p; ++r) {
            const Eigen::VectorXd& col = f.factors[static_cast<size_t>(r)].col(j);
            next.resize(buf.size() * col.size());
            for (Eigen::Index i = 0; i < col.size(); ++i)
                next.segment(i * buf.size(), buf.size()) = col[i] * buf;
            buf.swap(next);
        }
        Eigen::Map<Eigen::VectorXd>(entries.data(), total) += buf;
    }
    return DenseTensor(f.dims, std::move(entries));
}

/// Uniform handle over the three tensor representations used by the
/// decomposition pipeline: an explicit dense array, a factored (CP) form,
/// or a factored base plus a dense perturbation. All contractions give the
/// same results for equal mathematical content; the factored paths never
/// materialize the tensor. Views are immutable and cheap to copy.
class TensorView {
public:
    enum class Kind { Dense, Factored, Composite };

    explicit TensorView(DenseTensor t)
        : kind_(Kind::Dense), dense_(std::make_shared<DenseTensor>(std::move(t))) {}

    explicit TensorView(FactoredTensor t)
        : kind_(Kind::Factored),
          factored_(std::make_shared<FactoredTensor>(std::move(t))) {}

    /// Factored base plus dense perturbation with matching dims.
    static TensorView composite(FactoredTensor base, DenseTensor perturbation) {
        if (base.dims != perturbation.dims)
            throw ShapeError("TensorView: base and perturbation dims differ");
        TensorView v{std::move(base)};
        v.kind_ = Kind::Composite;
        v.dense_ = std::make_shared<DenseTensor>(std::move(perturbation));
        return v;
    }

    [[nodiscard]] Kind kind() const { return kind_; }
    [[nodiscard]] const Dims& dims() const {
        return kind_ == Kind::Dense ? dense_->dims : factored_->dims;
    }
    [[nodiscard]] int order() const { return dims().order(); }

    [[nodiscard]] const DenseTensor& dense_part() const { return *dense_; }
    [[nodiscard]] const FactoredTensor& factored_part() const { return *factored_; }
    [[nodiscard]] bool has_dense_part() const { return dense_ != nullptr; }
    [[nodiscard]] bool has_factored_part() const { return factored_ != nullptr; }

private:
    Kind kind_;
    std::shared_ptr<const DenseTensor> dense_;
    std::shared_ptr<const FactoredTensor> factored_;
};

namespace detail {

inline void check_mode_vectors(const Dims& dims, int free_mode,
                               const std::vector<Eigen::VectorXd>& others) {
    if (static_cast<int>(others.size()) != dims.order() - 1)
        throw ShapeError("contract: expected one vector per non-free mode");
    int s = 0;
    for (int r = 0; r < dims.order(); ++r) {
        if (r == free_mode) continue;
        if (others[static_cast<size_t>(s)].size() != dims.extent(r))
            throw ShapeError("contract: vector for mode " + std::to_string(r + 1) +
                             " has length " +
                             std::to_string(others[static_cast<size_t>(s)].size()) +
                             ", expected " + std::to_string(dims.extent(r)));
        ++s;
    }
}

/// Dense mode contraction by sequential axis reduction; every step is a
/// matrix-vector product on the column-major buffer.
inline Eigen::VectorXd dense_contract_vector(const DenseTensor& t, int free_mode,
                                             const std::vector<Eigen::VectorXd>& others) {
    const int p = t.dims.order();
    Eigen::VectorXd buf =
        Eigen::Map<const Eigen::VectorXd>(t.entries.data(),
                                          static_cast<Eigen::Index>(t.entries.size()));
    std::vector<int> live(t.dims.per_mode.begin(), t.dims.per_mode.end());
    // Vector for live mode r (r != free_mode) sits at others[r - (r > free_mode)].
    auto vec_for = [&](int r) -> const Eigen::VectorXd& {
        return others[static_cast<size_t>(r > free_mode ? r - 1 : r)];
    };
    int first = 0, last = p - 1;
    while (last != free_mode) {
        const Eigen::Index dl = live[static_cast<size_t>(last)];
        const Eigen::Index rest = buf.size() / dl;
        buf = Eigen::Map<const Eigen::MatrixXd>(buf.data(), rest, dl) * vec_for(last);
        --last;
    }
    while (first != free_mode) {
        const Eigen::Index df = live[static_cast<size_t>(first)];
        const Eigen::Index rest = buf.size() / df;
        buf = Eigen::Map<const Eigen::MatrixXd>(buf.data(), df, rest).transpose() *
              vec_for(first);
        ++first;
    }
    return buf;
}

inline Eigen::VectorXd factored_contract_vector(const FactoredTensor& f, int free_mode,
                                                const std::vector<Eigen::VectorXd>& others) {
    Eigen::VectorXd coeff = f.weights;
    int s = 0;
    for (int r = 0; r < f.order(); ++r) {
        if (r == free_mode) continue;
        coeff.array() *=
            (f.factors[static_cast<size_t>(r)].transpose() * others[static_cast<size_t>(s)])
                .array();
        ++s;
    }
    return f.factors[static_cast<size_t>(free_mode)] * coeff;
}

}  // namespace detail

/// Contract all modes but `free_mode` against the supplied vectors (given in
/// increasing mode order); returns a vector of length d_free. The factored
/// path costs O(d k) per mode.
inline Eigen::VectorXd contract_to_vector(const TensorView& t, int free_mode,
                                          const std::vector<Eigen::VectorXd>& others) {
    if (free_mode < 0 || free_mode >= t.order())
        throw ShapeError("contract_to_vector: free mode out of range");
    detail::check_mode_vectors(t.dims(), free_mode, others);
    switch (t.kind()) {
        case TensorView::Kind::Dense:
            return detail::dense_contract_vector(t.dense_part(), free_mode, others);
        case TensorView::Kind::Factored:
            return detail::factored_contract_vector(t.factored_part(), free_mode, others);
        case TensorView::Kind::Composite:
            return detail::factored_contract_vector(t.factored_part(), free_mode, others) +
                   detail::dense_contract_vector(t.dense_part(), free_mode, others);
    }
    throw std::logic_error("unreachable");
}

/// Full multilinear form T(v_1, ..., v_p).
inline double contract_to_scalar(const TensorView& t, const std::vector<Eigen::VectorXd>& vs) {
    const int p = t.order();
    if (static_cast<int>(vs.size()) != p)
        throw ShapeError("contract_to_scalar: expected one vector per mode");
    std::vector<Eigen::VectorXd> others(vs.begin() + 1, vs.end());
    return vs[0].dot(contract_to_vector(t, 0, others));
}

/// Linear combination of slices: collapse `collapsed_mode` against theta,
/// returning the matrix over the remaining two modes (lower mode as rows).
/// Only defined for third-order tensors. The factored path for mode 3 is
/// A diag(w_i <theta, c_i>) B' and never densifies.
inline Eigen::MatrixXd contract_to_matrix(const TensorView& t, const Eigen::VectorXd& theta,
                                          int collapsed_mode) {
    if (t.order() != 3)
        throw ShapeError("contract_to_matrix: only third-order tensors are supported");
    if (collapsed_mode < 0 || collapsed_mode >= 3)
        throw ShapeError("contract_to_matrix: mode out of range");
    const Dims& dims = t.dims();
    if (theta.size() != dims.extent(collapsed_mode))
        throw ShapeError("contract_to_matrix: theta length mismatch");

    auto dense_slice_comb = [&](const DenseTensor& d) -> Eigen::MatrixXd {
        const Eigen::Index d0 = dims.extent(0), d1 = dims.extent(1), d2 = dims.extent(2);
        Eigen::Map<const Eigen::MatrixXd> flat(d.entries.data(), d0 * d1, d2);
        if (collapsed_mode == 2) {
            Eigen::VectorXd v = flat * theta;
            return Eigen::Map<const Eigen::MatrixXd>(v.data(), d0, d1);
        }
        if (collapsed_mode == 0) {
            Eigen::Map<const Eigen::MatrixXd> m(d.entries.data(), d0, d1 * d2);
            Eigen::VectorXd v = m.transpose() * theta;
            return Eigen::Map<const Eigen::MatrixXd>(v.data(), d1, d2);
        }
        Eigen::MatrixXd out(d0, d2);
        for (Eigen::Index l = 0; l < d2; ++l) {
            Eigen::Map<const Eigen::MatrixXd> slice(d.entries.data() + l * d0 * d1, d0, d1);
            out.col(l) = slice * theta;
        }
        return out;
    };
    auto factored_slice_comb = [&](const FactoredTensor& f) -> Eigen::MatrixXd {
        const int row_mode = (collapsed_mode == 0) ? 1 : 0;
        const int col_mode = (collapsed_mode == 2) ? 1 : 2;
        Eigen::VectorXd lam =
            f.weights.array() *
            (f.factors[static_cast<size_t>(collapsed_mode)].transpose() * theta).array();
        return f.factors[static_cast<size_t>(row_mode)] * lam.asDiagonal() *
               f.factors[static_cast<size_t>(col_mode)].transpose();
    };

    switch (t.kind()) {
        case TensorView::Kind::Dense:
            return dense_slice_comb(t.dense_part());
        case TensorView::Kind::Factored:
            return factored_slice_comb(t.factored_part());
        case TensorView::Kind::Composite:
            return factored_slice_comb(t.factored_part()) + dense_slice_comb(t.dense_part());
    }
    throw std::logic_error("unreachable");
}

/// Frobenius norm. The factored path uses the Gram identity
/// |T|_F^2 = w' [ (A_1'A_1) .* ... .* (A_p'A_p) ] w and never densifies.
inline double frobenius_norm(const TensorView& t) {
    auto factored_sq = [](const FactoredTensor& f) {
        Eigen::MatrixXd had = Eigen::MatrixXd::Ones(f.rank, f.rank);
        for (const auto& a : f.factors) had.array() *= (a.transpose() * a).array();
        return std::max(0.0, double(f.weights.transpose() * had * f.weights));
    };
    auto dense_sq = [](const DenseTensor& d) {
        return Eigen::Map<const Eigen::VectorXd>(d.entries.data(),
                                                 static_cast<Eigen::Index>(d.entries.size()))
            .squaredNorm();
    };
    switch (t.kind()) {
        case TensorView::Kind::Dense:
            return std::sqrt(dense_sq(t.dense_part()));
        case TensorView::Kind::Factored:
            return std::sqrt(factored_sq(t.factored_part()));
        case TensorView::Kind::Composite: {
            // |T + P|_F^2 = |T|_F^2 + 2 <T,P> + |P|_F^2, with the inner
            // product expanded over the rank-1 components of the base.
            const FactoredTensor& f = t.factored_part();
            const DenseTensor& p = t.dense_part();
            TensorView pview{p};
            double cross = 0.0;
            std::vector<Eigen::VectorXd> cols(static_cast<size_t>(f.order()));
            for (int j = 0; j < f.rank; ++j) {
                for (int r = 0; r < f.order(); ++r)
                    cols[static_cast<size_t>(r)] = f.factors[static_cast<size_t>(r)].col(j);
                cross += f.weights[j] * contract_to_scalar(pview, cols);
            }
            return std::sqrt(std::max(0.0, factored_sq(f) + 2.0 * cross + dense_sq(p)));
        }
    }
    throw std::logic_error("unreachable");
}

/// Restart-based lower-bound estimate of the tensor spectral norm
/// sup |T(u_1,...,u_p)| over unit vectors: each restart runs alternating
/// rank-1 maximization (each mode in turn is set to its normalized
/// contraction against the others, which cannot decrease |T(...)|), and the
/// best value over restarts is reported. Exact computation is intractable,
/// so treat the result as a lower bound.
inline double spectral_norm_estimate(const TensorView& t, int restarts, int iters, Rng& rng) {
    if (restarts < 1 || iters < 1)
        throw ShapeError("spectral_norm_estimate: restarts and iters must be >= 1");
    const int p = t.order();
    double best = 0.0;
    std::vector<Eigen::VectorXd> u(static_cast<size_t>(p));
    std::vector<Eigen::VectorXd> others(static_cast<size_t>(p - 1));
    for (int run = 0; run < restarts; ++run) {
        for (int r = 0; r < p; ++r)
            u[static_cast<size_t>(r)] = random_unit(t.dims().extent(r), rng);
        double value = 0.0;
        bool dead = false;
        for (int it = 0; it < iters && !dead; ++it) {
            for (int r = 0; r < p; ++r) {
                int s = 0;
                for (int q = 0; q < p; ++q) {
                    if (q == r) continue;
                    others[static_cast<size_t>(s++)] = u[static_cast<size_t>(q)];
                }
                Eigen::VectorXd w = contract_to_vector(t, r, others);
                double nrm = w.norm();
                if (nrm <= 1e-300) {
                    dead = true;
                    break;
                }
                u[static_cast<size_t>(r)] = w / nrm;
            }
            if (dead) break;
            double v = std::abs(contract_to_scalar(t, u));
            if (v <= value * (1.0 + 1e-13)) {
                value = std::max(value, v);
                break;
            }
            value = v;
        }
        best = std::max(best, value);
    }
    return best;
}

/// All p Jacobi contractions of one alternating update in a single sweep:
/// entry r of the result is T contracted against every mode's vector except
/// mode r. For dense and composite third-order views the dense part is
/// streamed once (per-slice matrix-vector products feed all three outputs)
/// instead of three times.
inline std::vector<Eigen::VectorXd> multi_mode_contractions(
    const TensorView& t, const std::vector<Eigen::VectorXd>& vs) {
    const int p = t.order();
    if (static_cast<int>(vs.size()) != p)
        throw ShapeError("multi_mode_contractions: one vector per mode required");
    std::vector<Eigen::VectorXd> out(static_cast<size_t>(p));

    auto generic = [&](auto&& contract_one) {
        std::vector<Eigen::VectorXd> others(static_cast<size_t>(p - 1));
        for (int r = 0; r < p; ++r) {
            int s = 0;
            for (int q = 0; q < p; ++q) {
                if (q == r) continue;
                others[static_cast<size_t>(s++)] = vs[static_cast<size_t>(q)];
            }
            contract_one(r, others);
        }
    };

    if (t.kind() == TensorView::Kind::Factored || p != 3) {
        generic([&](int r, const std::vector<Eigen::VectorXd>& others) {
            out[static_cast<size_t>(r)] = contract_to_vector(t, r, others);
        });
        return out;
    }

    // Dense or composite third-order: one pass over the dense entries.
    const Dims& dims = t.dims();
    const Eigen::Index d0 = dims.extent(0), d1 = dims.extent(1), d2 = dims.extent(2);
    Eigen::VectorXd out0 = Eigen::VectorXd::Zero(d0);
    Eigen::VectorXd out1 = Eigen::VectorXd::Zero(d1);
    Eigen::VectorXd out2(d2);
    const DenseTensor& dense = t.dense_part();
    for (Eigen::Index l = 0; l < d2; ++l) {
        Eigen::Map<const Eigen::MatrixXd> slice(dense.entries.data() + l * d0 * d1, d0, d1);
        Eigen::VectorXd mb = slice * vs[1];
        out0 += vs[2][l] * mb;
        out1 += vs[2][l] * (slice.transpose() * vs[0]);
        out2[l] = vs[0].dot(mb);
    }
    out[0] = std::move(out0);
    out[1] = std::move(out1);
    out[2] = std::move(out2);
    if (t.kind() == TensorView::Kind::Composite) {
        TensorView base{t.factored_part()};
        generic([&](int r, const std::vector<Eigen::VectorXd>& others) {
            out[static_cast<size_t>(r)] += contract_to_vector(base, r, others);
        });
    }
    return out;
}

/// Columnwise pair contractions for third-order tensors: column i of the
/// result is T(u_i, v_i, I) with the identity in `free_mode` and (u_i, v_i)
/// the i-th columns of the two non-free modes' matrices (in increasing mode
/// order). The dense path runs one matrix product per slice instead of one
/// full pass per column.
inline Eigen::MatrixXd batched_pair_contractions(const TensorView& t,
                                                 const Eigen::MatrixXd& u,
                                                 const Eigen::MatrixXd& v, int free_mode) {
    if (t.order() != 3) throw ShapeError("batched_pair_contractions: third-order only");
    if (u.cols() != v.cols()) throw ShapeError("batched_pair_contractions: column mismatch");
    const Dims& dims = t.dims();
    int m1 = -1, m2 = -1;
    for (int r = 0; r < 3; ++r) {
        if (r == free_mode) continue;
        (m1 < 0 ? m1 : m2) = r;
    }
    if (u.rows() != dims.extent(m1) || v.rows() != dims.extent(m2))
        throw ShapeError("batched_pair_contractions: row mismatch");
    const Eigen::Index k = u.cols();
    Eigen::MatrixXd out(dims.extent(free_mode), k);

    auto add_factored = [&](const FactoredTensor& f, bool assign) {
        Eigen::MatrixXd gu = f.factors[static_cast<size_t>(m1)].transpose() * u;
        Eigen::MatrixXd gv = f.factors[static_cast<size_t>(m2)].transpose() * v;
        Eigen::MatrixXd coeff =
            (gu.array() * gv.array()).colwise() * f.weights.array();
        if (assign)
            out.noalias() = f.factors[static_cast<size_t>(free_mode)] * coeff;
        else
            out.noalias() += f.factors[static_cast<size_t>(free_mode)] * coeff;
    };
    auto add_dense = [&](const DenseTensor& dense, bool assign) {
        if (assign) out.setZero();
        const Eigen::Index d0 = dims.extent(0), d1 = dims.extent(1), d2 = dims.extent(2);
        for (Eigen::Index l = 0; l < d2; ++l) {
            Eigen::Map<const Eigen::MatrixXd> slice(dense.entries.data() + l * d0 * d1, d0,
                                                    d1);
            if (free_mode == 2) {
                // out(l, i) = u_i' slice v_i
                out.row(l) += (u.array() * (slice * v).array()).colwise().sum().matrix();
            } else if (free_mode == 0) {
                // out(:, i) += v2_i(l) * slice * v1_i  with (m1,m2) = (1,2)
                out.noalias() += (slice * u) * v.row(l).asDiagonal();
            } else {
                // out(:, i) += v2_i(l) * slice' * v1_i with (m1,m2) = (0,2)
                out.noalias() += (slice.transpose() * u) * v.row(l).asDiagonal();
            }
        }
    };

    switch (t.kind()) {
        case TensorView::Kind::Dense:
            add_dense(t.dense_part(), true);
            return out;
        case TensorView::Kind::Factored:
            add_factored(t.factored_part(), true);
            return out;
        case TensorView::Kind::Composite:
            add_factored(t.factored_part(), true);
            add_dense(t.dense_part(), false);
            return out;
    }
    throw std::logic_error("unreachable");
}

/// Mean diagonal slice combination (1/d) sum_l T(e_l, e_l, I) with the
/// identity in `free_mode`; the two collapsed modes must have equal extents.
/// Used by the symmetric residual update. The factored path reduces to
/// A_free (w .* colwise <u_j, v_j>) / d.
inline Eigen::VectorXd mean_diag_slice(const TensorView& t, int free_mode) {
    if (t.order() != 3) throw ShapeError("mean_diag_slice: third-order only");
    const Dims& dims = t.dims();
    int m1 = -1, m2 = -1;
    for (int r = 0; r < 3; ++r) {
        if (r == free_mode) continue;
        (m1 < 0 ? m1 : m2) = r;
    }
    if (dims.extent(m1) != dims.extent(m2))
        throw ShapeError("mean_diag_slice: collapsed modes differ in extent");
    const int d = dims.extent(m1);

    auto factored_part = [&](const FactoredTensor& f) -> Eigen::VectorXd {
        Eigen::VectorXd diag_dots = (f.factors[static_cast<size_t>(m1)].array() *
                                     f.factors[static_cast<size_t>(m2)].array())
                                        .colwise()
                                        .sum();
        return f.factors[static_cast<size_t>(free_mode)] *
               (f.weights.array() * diag_dots.array()).matrix() / double(d);
    };
    auto dense_part = [&](const DenseTensor& dt) -> Eigen::VectorXd {
        Eigen::VectorXd out = Eigen::VectorXd::Zero(dims.extent(free_mode));
        std::vector<int> idx(3, 0);
        for (int l = 0; l < d; ++l) {
            idx[static_cast<size_t>(m1)] = l;
            idx[static_cast<size_t>(m2)] = l;
            for (int i = 0; i < dims.extent(free_mode); ++i) {
                idx[static_cast<size_t>(free_mode)] = i;
                out[i] += dt.at(idx);
            }
        }
        return out / double(d);
    };

    switch (t.kind()) {
        case TensorView::Kind::Dense:
            return dense_part(t.dense_part());
        case TensorView::Kind::Factored:
            return factored_part(t.factored_part());
        case TensorView::Kind::Composite:
            return factored_part(t.factored_part()) + dense_part(t.dense_part());
    }
    throw std::logic_error("unreachable");
}

}  // namespace altcp
