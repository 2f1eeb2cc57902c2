#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <iterator>
#include <string>
#include <vector>

#include "sgvi/io/datasets.hpp"

namespace sgvi {

inline constexpr std::uint32_t idx_images_magic = 0x00000803;
inline constexpr std::uint32_t idx_labels_magic = 0x00000801;

namespace detail {

inline std::vector<unsigned char> read_all(std::istream& in) {
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::uint32_t be32(const std::vector<unsigned char>& b, std::size_t at) {
    return (std::uint32_t{b[at]} << 24) | (std::uint32_t{b[at + 1]} << 16) | (std::uint32_t{b[at + 2]} << 8) |
           std::uint32_t{b[at + 3]};
}

inline void require_bytes(const std::vector<unsigned char>& b, std::size_t start, std::size_t need, const char* what) {
    if (b.size() < start + need)
        throw FormatError(std::string("IDX ") + what + ": expected " + std::to_string(need) + " bytes, got " +
                          std::to_string(b.size() - std::min(b.size(), start)));
}

}  // namespace detail

/// IDX image file (magic 0x803, dims n x rows x cols, unsigned bytes) as an
/// N x (rows*cols) dataset scaled to [0, 1].
inline DenseDataset read_idx_images(std::istream& in) {
    const auto b = detail::read_all(in);
    detail::require_bytes(b, 0, 16, "header");
    const std::uint32_t magic = detail::be32(b, 0);
    if (magic != idx_images_magic) throw FormatError("IDX images: bad magic 0x" + [&] {
        char s[16];
        std::snprintf(s, sizeof s, "%08x", magic);
        return std::string(s);
    }());
    const std::size_t n = detail::be32(b, 4), rows = detail::be32(b, 8), cols = detail::be32(b, 12);
    const std::size_t d = rows * cols;
    detail::require_bytes(b, 16, n * d, "payload");
    DenseDataset ds;
    ds.rows.resize(static_cast<Index>(n), static_cast<Index>(d));
    for (std::size_t i = 0; i < n * d; ++i) ds.rows.data()[i] = b[16 + i] / 255.0;
    ds.refresh_range();
    return ds;
}

/// IDX label file (magic 0x801).
inline std::vector<int> read_idx_labels(std::istream& in) {
    const auto b = detail::read_all(in);
    detail::require_bytes(b, 0, 8, "header");
    if (detail::be32(b, 0) != idx_labels_magic) throw FormatError("IDX labels: bad magic");
    const std::size_t n = detail::be32(b, 4);
    detail::require_bytes(b, 8, n, "payload");
    return {b.begin() + 8, b.begin() + 8 + static_cast<std::ptrdiff_t>(n)};
}

}  // namespace sgvi
