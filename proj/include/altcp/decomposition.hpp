#pragma once

#include "altcp/dims.hpp"
#include "altcp/init.hpp"

#include <Eigen/Dense>

#include <limits>
#include <string>
#include <vector>

namespace altcp {

/// Provenance of one recovered component.
struct ComponentMeta {
    int trial_id = -1;
    int iterations = 0;
    std::string stop_reason;
    InitMethod init = InitMethod::Random;
};

/// One row of the refinement trace: errors are against the aligned truth and
/// NaN when no truth was supplied.
struct RefineTraceRow {
    int sweep = 0;
    double frob_err[3] = {std::numeric_limits<double>::quiet_NaN(),
                          std::numeric_limits<double>::quiet_NaN(),
                          std::numeric_limits<double>::quiet_NaN()};
    double weight_err = std::numeric_limits<double>::quiet_NaN();
    double max_col_err = std::numeric_limits<double>::quiet_NaN();
    double spectral_norm[3] = {0.0, 0.0, 0.0};
    int frozen_columns = 0;
};

/// k matched component estimates per mode plus weights and diagnostics.
/// `modes[r]` is d_r x k_found; k_found can fall short of the requested rank,
/// in which case `shortfall` says by how many (never silently padded).
struct Decomposition {
    Dims dims;
    int requested_rank = 0;
    std::vector<Eigen::MatrixXd> modes;
    Eigen::VectorXd weights;
    std::vector<ComponentMeta> component_meta;
    int shortfall = 0;

    // Refinement bookkeeping (set by run_refinement).
    double eta0 = 0.0;
    double eta1 = 0.0;
    std::vector<RefineTraceRow> trace;

    [[nodiscard]] int found_rank() const {
        return modes.empty() ? 0 : static_cast<int>(modes[0].cols());
    }
};

}  // namespace altcp
