#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>
#include <string>
#include <tuple>
#include <vector>

#include "sgvi/param_vector.hpp"

namespace sgvi {

/// theta.bin layout, all integers and floats little-endian:
///
///   "SGVITHT1"                       8 bytes
///   u32 slice count, then per slice: u32 name length, name bytes, u64 rows, u64 cols
///   u32 metadata length, metadata bytes (free-form, e.g. JSON)
///   u64 value count, then that many IEEE-754 f64
struct ThetaFile {
    Layout layout;
    std::string metadata;
    Vector values;
};

namespace detail {

inline constexpr char theta_magic[8] = {'S', 'G', 'V', 'I', 'T', 'H', 'T', '1'};

template <class T>
void put_le(std::string& out, T v) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
    out.append(reinterpret_cast<const char*>(b), sizeof(T));
}

class ByteReader {
public:
    explicit ByteReader(std::string bytes) : bytes_(std::move(bytes)) {}

    template <class T>
    T get() {
        need(sizeof(T));
        unsigned char b[sizeof(T)];
        std::memcpy(b, bytes_.data() + pos_, sizeof(T));
        if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
        pos_ += sizeof(T);
        T v;
        std::memcpy(&v, b, sizeof(T));
        return v;
    }

    std::string str(std::size_t n) {
        need(n);
        std::string s = bytes_.substr(pos_, n);
        pos_ += n;
        return s;
    }

    bool at_end() const { return pos_ == bytes_.size(); }

private:
    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n)
            throw FormatError("theta file truncated: need " + std::to_string(n) + " bytes at offset " +
                              std::to_string(pos_) + ", have " + std::to_string(bytes_.size() - pos_));
    }
    std::string bytes_;
    std::size_t pos_ = 0;
};

}  // namespace detail

inline std::string encode_theta(const Layout& layout, const VecRef& values, const std::string& metadata = {}) {
    if (values.size() != layout.size()) throw ShapeError("encode_theta: value count does not match layout");
    std::string out(detail::theta_magic, 8);
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(layout.slices().size()));
    for (const auto& s : layout.slices()) {
        detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.name.size()));
        out += s.name;
        detail::put_le<std::uint64_t>(out, static_cast<std::uint64_t>(s.rows));
        detail::put_le<std::uint64_t>(out, static_cast<std::uint64_t>(s.cols));
    }
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(metadata.size()));
    out += metadata;
    detail::put_le<std::uint64_t>(out, static_cast<std::uint64_t>(values.size()));
    for (Index i = 0; i < values.size(); ++i) detail::put_le<double>(out, values[i]);
    return out;
}

inline ThetaFile decode_theta(std::string bytes) {
    detail::ByteReader r(std::move(bytes));
    if (r.str(8) != std::string(detail::theta_magic, 8)) throw FormatError("not a theta file (bad magic)");
    const auto nslices = r.get<std::uint32_t>();
    std::vector<std::tuple<std::string, Index, Index>> dims;
    for (std::uint32_t k = 0; k < nslices; ++k) {
        const auto len = r.get<std::uint32_t>();
        std::string name = r.str(len);
        const auto rows = static_cast<Index>(r.get<std::uint64_t>());
        const auto cols = static_cast<Index>(r.get<std::uint64_t>());
        dims.emplace_back(std::move(name), rows, cols);
    }
    const auto mlen = r.get<std::uint32_t>();
    std::string meta = r.str(mlen);
    const auto count = r.get<std::uint64_t>();
    Layout layout = Layout::sequential(dims);
    if (static_cast<std::uint64_t>(layout.size()) != count)
        throw FormatError("theta file: layout describes " + std::to_string(layout.size()) + " values but " +
                          std::to_string(count) + " are stored");
    Vector values(static_cast<Index>(count));
    for (Index i = 0; i < values.size(); ++i) values[i] = r.get<double>();
    if (!r.at_end()) throw FormatError("theta file: trailing bytes");
    return {std::move(layout), std::move(meta), std::move(values)};
}

inline void save_theta(const std::string& path, const Layout& layout, const VecRef& values,
                       const std::string& metadata = {}) {
    const std::string bytes = encode_theta(layout, values, metadata);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open " + path + " for writing");
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw DataError("failed writing " + path);
}

inline ThetaFile load_theta(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open " + path);
    return decode_theta({std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()});
}

}  // namespace sgvi
