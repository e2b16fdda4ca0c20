#pragma once

#include "altcp/dense_tensor.hpp"
#include "altcp/error.hpp"
#include "altcp/factored_tensor.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

namespace altcp {

/// Write one factor matrix as delimited text: header `# mode r dims d k`
/// (r is 1-based), then one row per row index with 17 significant digits.
inline void write_factor_matrix(std::ostream& out, int mode_1based,
                                const Eigen::MatrixXd& m) {
    out << "# mode " << mode_1based << " dims " << m.rows() << " " << m.cols() << "\n";
    out << std::setprecision(17);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) out << " ";
            out << m(i, j);
        }
        out << "\n";
    }
}

inline void write_factor_matrix(const std::string& path, int mode_1based,
                                const Eigen::MatrixXd& m) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    write_factor_matrix(out, mode_1based, m);
    if (!out) throw IoError("write failed: " + path);
}

struct FactorMatrixFile {
    int mode_1based = 0;
    Eigen::MatrixXd matrix;
};

inline FactorMatrixFile read_factor_matrix(std::istream& in, const std::string& name = "<stream>") {
    std::string hash, kw_mode, kw_dims;
    FactorMatrixFile f;
    Eigen::Index d = 0, k = 0;
    in >> hash >> kw_mode >> f.mode_1based >> kw_dims >> d >> k;
    if (!in || hash != "#" || kw_mode != "mode" || kw_dims != "dims")
        throw IoError("bad factor-matrix header in " + name);
    f.matrix.resize(d, k);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < k; ++j)
            if (!(in >> f.matrix(i, j)))
                throw IoError("truncated factor matrix in " + name);
    return f;
}

inline FactorMatrixFile read_factor_matrix(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open for reading: " + path);
    return read_factor_matrix(in, path);
}

/// Dense tensor file: header `# dense d1 d2 ... dp`, then the linearized
/// entries (mode 1 fastest), whitespace separated.
inline void write_dense_tensor(std::ostream& out, const DenseTensor& t) {
    out << "# dense";
    for (int d : t.dims.per_mode) out << " " << d;
    out << "\n" << std::setprecision(17);
    for (size_t i = 0; i < t.entries.size(); ++i)
        out << t.entries[i] << ((i + 1) % 8 == 0 ? "\n" : " ");
    out << "\n";
}

inline void write_dense_tensor(const std::string& path, const DenseTensor& t) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    write_dense_tensor(out, t);
    if (!out) throw IoError("write failed: " + path);
}

inline DenseTensor read_dense_tensor(std::istream& in, const std::string& name = "<stream>") {
    std::string header;
    std::getline(in, header);
    std::istringstream hs(header);
    std::string hash, kw;
    hs >> hash >> kw;
    if (hash != "#" || kw != "dense") throw IoError("bad dense-tensor header in " + name);
    std::vector<int> extents;
    for (int d; hs >> d;) extents.push_back(d);
    Dims dims(extents);
    std::vector<double> entries(static_cast<size_t>(dims.total_entries()));
    for (auto& v : entries)
        if (!(in >> v)) throw IoError("truncated dense tensor in " + name);
    return DenseTensor(dims, std::move(entries));
}

inline DenseTensor read_dense_tensor(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open for reading: " + path);
    return read_dense_tensor(in, path);
}

/// Write a whole factored tensor as one factor-matrix file per mode plus a
/// weights file (`# weights k` header).
inline void write_factored_tensor(const std::string& dir_prefix, const FactoredTensor& f) {
    for (int r = 0; r < f.order(); ++r)
        write_factor_matrix(dir_prefix + "factor_mode" + std::to_string(r + 1) + ".txt",
                            r + 1, f.factors[static_cast<size_t>(r)]);
    std::ofstream out(dir_prefix + "weights.txt");
    if (!out) throw IoError("cannot open for writing: " + dir_prefix + "weights.txt");
    out << "# weights " << f.rank << "\n" << std::setprecision(17);
    for (int j = 0; j < f.rank; ++j) out << f.weights[j] << "\n";
}

}  // namespace altcp
