#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "sgvi/errors.hpp"
#include "sgvi/types.hpp"

namespace sgvi {

/// Labeled sparse rows in CSR form. Column 0 is the constant feature 1.
struct SparseDataset {
    std::vector<std::size_t> row_ptr{0};
    std::vector<Index> indices;
    std::vector<double> values;
    std::vector<int> labels;  // each -1 or +1
    Index n_features = 1;

    std::size_t size() const { return labels.size(); }

    /// Appends a row; `idx` must be strictly increasing.
    void add_row(int label, const std::vector<Index>& idx, const std::vector<double>& val) {
        if (label != 1 && label != -1) throw DataError("label must be -1 or +1");
        if (idx.size() != val.size()) throw ShapeError("index/value count mismatch");
        for (std::size_t k = 0; k < idx.size(); ++k) {
            if (k > 0 && idx[k] <= idx[k - 1]) throw DataError("row indices must be strictly increasing");
            if (idx[k] + 1 > n_features) n_features = idx[k] + 1;
        }
        indices.insert(indices.end(), idx.begin(), idx.end());
        values.insert(values.end(), val.begin(), val.end());
        row_ptr.push_back(indices.size());
        labels.push_back(label);
    }

    std::size_t row_begin(std::size_t i) const { return row_ptr[i]; }
    std::size_t row_end(std::size_t i) const { return row_ptr[i + 1]; }

    template <class V>
    double dot(std::size_t i, const V& w) const {
        double s = 0.0;
        for (std::size_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) s += values[k] * w[indices[k]];
        return s;
    }

    /// out += alpha * x_i
    template <class V>
    void axpy(std::size_t i, double alpha, V& out) const {
        for (std::size_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) out[indices[k]] += alpha * values[k];
    }
};

/// Dense rows (N x D), e.g. images scaled to [0, 1].
struct DenseDataset {
    RowMatrix rows;
    double min_value = 0.0;
    double max_value = 1.0;

    std::size_t size() const { return static_cast<std::size_t>(rows.rows()); }
    Index dim() const { return rows.cols(); }
    auto row(std::size_t i) const { return rows.row(static_cast<Index>(i)).transpose(); }

    void refresh_range() {
        if (!rows.allFinite()) throw DataError("dataset contains non-finite values");
        min_value = rows.size() ? rows.minCoeff() : 0.0;
        max_value = rows.size() ? rows.maxCoeff() : 0.0;
    }

    bool in_unit_interval() const { return rows.size() == 0 || (min_value >= 0.0 && max_value <= 1.0); }
};

}  // namespace sgvi
