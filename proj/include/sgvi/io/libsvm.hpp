#pragma once

#include <charconv>
#include <cmath>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "sgvi/io/datasets.hpp"

namespace sgvi {

struct LibsvmOptions {
    /// Force the feature count (e.g. a test split aligned to its training
    /// split); indices that would not fit are rejected.
    std::optional<Index> n_features;
};

namespace detail {

inline bool parse_double(std::string_view s, double& out) {
    if (s.empty()) return false;
    // std::from_chars rejects a leading '+', which LIBSVM files commonly use.
    if (s.front() == '+') s.remove_prefix(1);
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && p == s.data() + s.size();
}

inline bool parse_index(std::string_view s, long long& out) {
    if (s.empty()) return false;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && p == s.data() + s.size();
}

}  // namespace detail

/// Reads `label idx:val idx:val ...` lines (1-based feature indices). Labels
/// 0 and -1 both become -1. The constant feature 1 is stored at column 0, so
/// file index j lands in column j and n_features = 1 + max index.
inline SparseDataset parse_libsvm(std::istream& in, const LibsvmOptions& opts = {}) {
    SparseDataset ds;
    std::string line;
    std::size_t lineno = 0;
    std::vector<Index> idx;
    std::vector<double> val;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream tokens(line);
        std::string tok;
        if (!(tokens >> tok)) continue;

        double raw_label;
        if (!detail::parse_double(tok, raw_label)) throw ParseError("bad label '" + tok + "'", lineno);
        int label;
        if (raw_label == 1.0) label = 1;
        else if (raw_label == 0.0 || raw_label == -1.0) label = -1;
        else throw ParseError("label must be -1, 0 or +1, got '" + tok + "'", lineno);

        idx.assign(1, 0);
        val.assign(1, 1.0);
        while (tokens >> tok) {
            const auto colon = tok.find(':');
            if (colon == std::string::npos) throw ParseError("expected idx:val, got '" + tok + "'", lineno);
            long long j;
            double v;
            if (!detail::parse_index(std::string_view(tok).substr(0, colon), j) || j < 1)
                throw ParseError("bad feature index in '" + tok + "'", lineno);
            if (!detail::parse_double(std::string_view(tok).substr(colon + 1), v) || !std::isfinite(v))
                throw ParseError("bad feature value in '" + tok + "'", lineno);
            if (j <= idx.back()) throw ParseError("feature indices not increasing", lineno);
            if (opts.n_features && j >= *opts.n_features)
                throw ParseError("feature index " + std::to_string(j) + " exceeds the forced feature count " +
                                     std::to_string(*opts.n_features),
                                 lineno);
            idx.push_back(static_cast<Index>(j));
            val.push_back(v);
        }
        ds.add_row(label, idx, val);
    }
    if (ds.size() == 0) throw ParseError("empty LIBSVM input", lineno == 0 ? 1 : lineno);
    if (opts.n_features) ds.n_features = *opts.n_features;
    return ds;
}

inline SparseDataset parse_libsvm(std::string_view text, const LibsvmOptions& opts = {}) {
    std::istringstream in{std::string(text)};
    return parse_libsvm(in, opts);
}

/// Writes rows back in LIBSVM form, omitting the constant column 0.
inline void write_libsvm(std::ostream& out, const SparseDataset& ds) {
    std::ostringstream buf;
    buf.precision(17);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        buf << (ds.labels[i] > 0 ? "+1" : "-1");
        for (std::size_t k = ds.row_begin(i); k < ds.row_end(i); ++k) {
            if (ds.indices[k] == 0) continue;
            buf << ' ' << ds.indices[k] << ':' << ds.values[k];
        }
        buf << '\n';
    }
    out << buf.str();
}

}  // namespace sgvi
