#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>

namespace altcp {

using Rng = std::mt19937_64;

/// Deterministic substream derivation: stream i of a base seed is
/// splitmix64(base XOR (i+1)*0x9E3779B97F4A7C15). All per-trial and
/// per-repeat randomness is drawn from substreams of the experiment seed, so
/// results do not depend on execution order.
inline std::uint64_t substream_seed(std::uint64_t base, std::uint64_t index) {
    std::uint64_t z = base ^ ((index + 1) * 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline Eigen::VectorXd gaussian_vector(int dim, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd v(dim);
    for (int i = 0; i < dim; ++i) v[i] = normal(rng);
    return v;
}

inline Eigen::MatrixXd gaussian_matrix(int rows, int cols, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd m(rows, cols);
    // Column-major fill so a matrix draw equals a sequence of column draws.
    for (int j = 0; j < cols; ++j)
        for (int i = 0; i < rows; ++i) m(i, j) = normal(rng);
    return m;
}

/// Uniform draw from the unit sphere: standard Gaussian, normalized.
inline Eigen::VectorXd random_unit(int dim, Rng& rng) {
    Eigen::VectorXd v = gaussian_vector(dim, rng);
    double nrm = v.norm();
    while (nrm == 0.0) {  // probability-zero guard
        v = gaussian_vector(dim, rng);
        nrm = v.norm();
    }
    return v / nrm;
}

}  // namespace altcp
