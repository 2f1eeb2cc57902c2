#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "sgvi/errors.hpp"
#include "sgvi/types.hpp"

namespace sgvi {

struct PgmInfo {
    Index width = 0;
    Index height = 0;
    std::size_t clamped = 0;  // pixels outside [0, 1]
};

/// Lays images (each rows*cols, row-major, values in [0, 1]) out as a
/// grid_rows x grid_cols tile grid with 1-pixel black separators and encodes
/// it as binary PGM (P5, maxval 255, byte = floor(v * 255 + 0.5)).
inline std::string encode_pgm_grid(const std::vector<Vector>& images, Index rows, Index cols, Index grid_rows,
                                   Index grid_cols, PgmInfo* info = nullptr) {
    if (rows < 1 || cols < 1 || grid_rows < 1 || grid_cols < 1) throw InvalidArgument("PGM grid: sizes must be >= 1");
    if (static_cast<std::size_t>(grid_rows * grid_cols) < images.size())
        throw ShapeError("PGM grid: more images than grid cells");
    const Index width = grid_cols * cols + grid_cols - 1;
    const Index height = grid_rows * rows + grid_rows - 1;
    std::vector<unsigned char> pixels(static_cast<std::size_t>(width * height), 0);
    std::size_t clamped = 0;
    for (std::size_t k = 0; k < images.size(); ++k) {
        const Vector& img = images[k];
        if (img.size() != rows * cols) throw ShapeError("PGM grid: image " + std::to_string(k) + " has wrong size");
        const Index top = static_cast<Index>(k) / grid_cols * (rows + 1);
        const Index left = static_cast<Index>(k) % grid_cols * (cols + 1);
        for (Index r = 0; r < rows; ++r)
            for (Index c = 0; c < cols; ++c) {
                double v = img[r * cols + c];
                if (!(v >= 0.0 && v <= 1.0)) {
                    ++clamped;
                    v = std::isnan(v) ? 0.0 : std::clamp(v, 0.0, 1.0);
                }
                pixels[static_cast<std::size_t>((top + r) * width + left + c)] =
                    static_cast<unsigned char>(std::floor(v * 255.0 + 0.5));
            }
    }
    if (info) *info = {width, height, clamped};
    std::string out = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
    out.append(pixels.begin(), pixels.end());
    return out;
}

inline PgmInfo write_pgm_grid(const std::vector<Vector>& images, Index rows, Index cols, Index grid_rows,
                              Index grid_cols, const std::string& path) {
    PgmInfo info;
    const std::string bytes = encode_pgm_grid(images, rows, cols, grid_rows, grid_cols, &info);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open " + path + " for writing");
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw DataError("failed writing " + path);
    return info;
}

}  // namespace sgvi
