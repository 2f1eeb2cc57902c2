#pragma once

#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <string>
#include <string_view>

#include "sgvi/io/datasets.hpp"

namespace sgvi {

/// 64-bit FNV-1a.
class Fnv1a {
public:
    void update(const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            h_ ^= p[i];
            h_ *= 0x100000001b3ULL;
        }
    }
    template <class T>
    void update_value(T v) {
        update(&v, sizeof v);
    }
    std::uint64_t value() const { return h_; }

    std::string hex() const {
        static const char* digits = "0123456789abcdef";
        std::string s(16, '0');
        for (int i = 0; i < 16; ++i) s[static_cast<std::size_t>(i)] = digits[(h_ >> (60 - 4 * i)) & 0xf];
        return s;
    }

private:
    std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

inline std::string dataset_hash(const SparseDataset& ds) {
    Fnv1a h;
    h.update_value<std::int64_t>(ds.n_features);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        h.update_value<std::int32_t>(ds.labels[i]);
        for (std::size_t k = ds.row_begin(i); k < ds.row_end(i); ++k) {
            h.update_value<std::int64_t>(ds.indices[k]);
            h.update_value<double>(ds.values[k]);
        }
        h.update_value<std::int64_t>(-1);
    }
    return h.hex();
}

inline std::string dataset_hash(const DenseDataset& ds) {
    Fnv1a h;
    h.update_value<std::int64_t>(ds.rows.rows());
    h.update_value<std::int64_t>(ds.rows.cols());
    h.update(ds.rows.data(), sizeof(double) * static_cast<std::size_t>(ds.rows.size()));
    return h.hex();
}

/// Directory that relative dataset paths resolve against: $SGVI_DATA_ROOT, or "" when unset.
inline std::string data_root() {
    const char* env = std::getenv("SGVI_DATA_ROOT");
    return env ? std::string(env) : std::string();
}

/// `path` unchanged if absolute or no data root is set, else data_root()/path.
inline std::string resolve_data_path(const std::string& path) {
    const std::string root = data_root();
    if (root.empty() || path.empty() || path.front() == '/') return path;
    return root.back() == '/' ? root + path : root + "/" + path;
}

}  // namespace sgvi
