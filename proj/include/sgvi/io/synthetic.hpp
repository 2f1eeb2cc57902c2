#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "sgvi/io/datasets.hpp"
#include "sgvi/rng.hpp"

namespace sgvi {

/// Linearly separable labeled points: x ~ N(0, I_d), a random unit direction
/// w and offset b, y = sign(w^T x + b), and points with |w^T x + b| < margin
/// are redrawn. Features are stored densely in columns 1..d.
inline SparseDataset make_separable_logistic(std::uint64_t seed, std::size_t n = 200, Index d = 5,
                                             double margin = 0.5) {
    if (n < 1 || d < 1 || !(margin >= 0.0)) throw InvalidArgument("make_separable_logistic: bad size or margin");
    Rng rng(seed);
    Vector w(d);
    for (Index j = 0; j < d; ++j) w[j] = rng.normal();
    w.normalize();
    const double b = 0.25 * rng.normal();
    SparseDataset ds;
    std::vector<Index> idx(static_cast<std::size_t>(d) + 1);
    std::vector<double> val(static_cast<std::size_t>(d) + 1);
    for (Index j = 0; j <= d; ++j) idx[static_cast<std::size_t>(j)] = j;
    val[0] = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        double score;
        do {
            score = b;
            for (Index j = 0; j < d; ++j) {
                val[static_cast<std::size_t>(j) + 1] = rng.normal();
                score += w[j] * val[static_cast<std::size_t>(j) + 1];
            }
        } while (std::abs(score) < margin);
        ds.add_row(score > 0.0 ? 1 : -1, idx, val);
    }
    return ds;
}

/// Binary side x side images: each row is one horizontal and one vertical bar
/// at random positions, with every pixel flipped independently with
/// probability `flip`.
inline DenseDataset make_binary_bars(std::uint64_t seed, std::size_t n = 1000, Index side = 8, double flip = 0.05) {
    if (n < 1 || side < 2 || !(flip >= 0.0 && flip <= 1.0)) throw InvalidArgument("make_binary_bars: bad arguments");
    Rng rng(seed);
    DenseDataset ds;
    ds.rows = RowMatrix::Zero(static_cast<Index>(n), side * side);
    for (Index i = 0; i < static_cast<Index>(n); ++i) {
        const auto r = static_cast<Index>(rng.uniform_index(static_cast<std::uint64_t>(side)));
        const auto c = static_cast<Index>(rng.uniform_index(static_cast<std::uint64_t>(side)));
        for (Index p = 0; p < side; ++p)
            for (Index q = 0; q < side; ++q) {
                const bool on = (p == r) != (q == c) || (p == r && q == c);
                const bool flipped = rng.uniform() < flip;
                ds.rows(i, p * side + q) = (on != flipped) ? 1.0 : 0.0;
            }
    }
    ds.refresh_range();
    return ds;
}

}  // namespace sgvi
