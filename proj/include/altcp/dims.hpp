#pragma once

#include "altcp/error.hpp"

#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

namespace altcp {

/// Per-mode extents of an order-p tensor, p >= 3. Modes may differ in size
/// (e.g. two large modes and one small one).
struct Dims {
    std::vector<int> per_mode;

    Dims() = default;
    explicit Dims(std::vector<int> extents) : per_mode(std::move(extents)) {
        if (per_mode.size() < 3)
            throw ShapeError("Dims: order must be at least 3, got " +
                             std::to_string(per_mode.size()));
        for (int d : per_mode)
            if (d < 1) throw ShapeError("Dims: every extent must be >= 1");
    }

    /// Cube of side d, order p.
    static Dims cube(int d, int order = 3) {
        return Dims(std::vector<int>(static_cast<size_t>(order), d));
    }

    [[nodiscard]] int order() const { return static_cast<int>(per_mode.size()); }
    [[nodiscard]] int extent(int mode) const { return per_mode[static_cast<size_t>(mode)]; }

    [[nodiscard]] std::int64_t total_entries() const {
        std::int64_t n = 1;
        for (int d : per_mode) n *= d;
        return n;
    }

    bool operator==(const Dims& other) const { return per_mode == other.per_mode; }
    bool operator!=(const Dims& other) const { return !(*this == other); }

    [[nodiscard]] std::string to_string() const {
        std::string s;
        for (size_t i = 0; i < per_mode.size(); ++i) {
            if (i) s += "x";
            s += std::to_string(per_mode[i]);
        }
        return s;
    }
};

}  // namespace altcp
