#pragma once

#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "sgvi/io/datasets.hpp"
#include "sgvi/io/libsvm.hpp"

namespace sgvi {

/// Numeric CSV matrix, one row per line. A first line that does not parse as
/// numbers is treated as a header and skipped.
inline DenseDataset read_csv_matrix(std::istream& in) {
    std::vector<double> values;
    Index cols = -1;
    std::string line;
    std::size_t lineno = 0, nrows = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        bool ok = true;
        while (std::getline(ss, cell, ',')) {
            const auto first = cell.find_first_not_of(" \t");
            const auto last = cell.find_last_not_of(" \t");
            double v;
            if (first == std::string::npos || !detail::parse_double(cell.substr(first, last - first + 1), v)) {
                ok = false;
                break;
            }
            row.push_back(v);
        }
        if (!ok) {
            if (nrows == 0 && cols < 0) {
                cols = 0;  // header consumed
                continue;
            }
            throw ParseError("non-numeric CSV cell", lineno);
        }
        if (cols <= 0) cols = static_cast<Index>(row.size());
        else if (static_cast<Index>(row.size()) != cols)
            throw ParseError("expected " + std::to_string(cols) + " columns, got " + std::to_string(row.size()), lineno);
        values.insert(values.end(), row.begin(), row.end());
        ++nrows;
    }
    if (nrows == 0) throw ParseError("empty CSV input", lineno == 0 ? 1 : lineno);
    DenseDataset ds;
    ds.rows = Eigen::Map<const RowMatrix>(values.data(), static_cast<Index>(nrows), cols);
    ds.refresh_range();
    return ds;
}

inline void write_csv_matrix(std::ostream& out, const RowMatrix& m, const std::vector<std::string>& header = {}) {
    std::ostringstream buf;
    buf.precision(17);
    for (std::size_t j = 0; j < header.size(); ++j) buf << (j ? "," : "") << header[j];
    if (!header.empty()) buf << '\n';
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) buf << (j ? "," : "") << m(i, j);
        buf << '\n';
    }
    out << buf.str();
}

}  // namespace sgvi
