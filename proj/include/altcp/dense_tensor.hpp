#pragma once

#include "altcp/dims.hpp"
#include "altcp/error.hpp"

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

namespace altcp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Default cap on dense materialization (2^27 entries ~ 1 GiB of doubles).
inline constexpr std::int64_t kDenseEntryBudget = std::int64_t{1} << 27;

/// Order-p array of reals in a fixed linearization: mode 1 varies fastest,
/// i.e. entry (i_1,...,i_p) lives at flat index
///   i_1 + d_1*(i_2 + d_2*(i_3 + ...)).
/// For p=3 this means flat = i + d1*j + d1*d2*l, so the buffer viewed as a
/// d1 x (d2*d3) column-major matrix has the mode-1 fibers as columns.
struct DenseTensor {
    Dims dims;
    std::vector<double> entries;

    DenseTensor() = default;
    DenseTensor(Dims d, std::vector<double> values)
        : dims(std::move(d)), entries(std::move(values)) {
        if (static_cast<std::int64_t>(entries.size()) != dims.total_entries())
            throw ShapeError("DenseTensor: entry count does not match dims");
    }

    /// All-zero tensor of the given shape.
    static DenseTensor zeros(const Dims& d) {
        return DenseTensor(d, std::vector<double>(static_cast<size_t>(d.total_entries()), 0.0));
    }

    [[nodiscard]] std::int64_t flat_index(const std::vector<int>& idx) const {
        std::int64_t f = 0;
        for (int r = dims.order() - 1; r >= 0; --r) f = f * dims.extent(r) + idx[static_cast<size_t>(r)];
        return f;
    }

    [[nodiscard]] double at(const std::vector<int>& idx) const {
        return entries[static_cast<size_t>(flat_index(idx))];
    }
    double& at(const std::vector<int>& idx) {
        return entries[static_cast<size_t>(flat_index(idx))];
    }

    [[nodiscard]] bool all_finite() const {
        for (double v : entries)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

/// Entrywise symmetry check for third-order cubes: T(i,j,l) equals every
/// permutation of (i,j,l) within tol. Only practical at small dims.
inline bool is_entry_symmetric(const DenseTensor& t, double tol = 1e-12) {
    if (t.dims.order() != 3) return false;
    const int d = t.dims.extent(0);
    if (t.dims.extent(1) != d || t.dims.extent(2) != d) return false;
    for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j)
            for (int l = j; l < d; ++l) {
                double v = t.at({i, j, l});
                for (const auto& p : {std::array<int, 3>{i, l, j}, {j, i, l},
                                      {j, l, i}, {l, i, j}, {l, j, i}}) {
                    if (std::abs(t.at({p[0], p[1], p[2]}) - v) > tol) return false;
                }
            }
    return true;
}

/// Mode-r matricization: a d_r x (prod of other extents) matrix whose columns
/// are the mode-r fibers. Columns are ordered by the remaining modes with the
/// lowest-numbered mode varying fastest, matching the Khatri-Rao convention
/// in khatri_rao() so that mat(T,3) * (b (.) a) == T(a,b,I).
inline Matrix matricize(const DenseTensor& tensor, int mode) {
    const Dims& dims = tensor.dims;
    const int p = dims.order();
    if (mode < 0 || mode >= p) throw ShapeError("matricize: mode out of range");
    const std::int64_t rows = dims.extent(mode);
    const std::int64_t cols = dims.total_entries() / rows;
    Matrix out(rows, cols);

    std::vector<int> idx(static_cast<size_t>(p), 0);
    for (std::int64_t flat = 0; flat < dims.total_entries(); ++flat) {
        std::int64_t rem = flat;
        for (int r = 0; r < p; ++r) {
            idx[static_cast<size_t>(r)] = static_cast<int>(rem % dims.extent(r));
            rem /= dims.extent(r);
        }
        std::int64_t col = 0;
        for (int r = p - 1; r >= 0; --r) {
            if (r == mode) continue;
            col = col * dims.extent(r) + idx[static_cast<size_t>(r)];
        }
        out(idx[static_cast<size_t>(mode)], col) = tensor.entries[static_cast<size_t>(flat)];
    }
    return out;
}

}  // namespace altcp
