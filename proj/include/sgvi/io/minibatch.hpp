#pragma once

#include <cstddef>
#include <cstdint>
#include <numeric>
#include <utility>
#include <vector>

#include "sgvi/errors.hpp"
#include "sgvi/rng.hpp"

namespace sgvi {

/// One epoch of minibatches: a Fisher-Yates permutation of [0, n) seeded by
/// derive_seed(seed, epoch), cut into ceil(n / b) chunks (last one may be short).
inline std::vector<std::vector<std::size_t>> minibatch_iter(std::size_t n, std::size_t batch_size,
                                                           std::uint64_t seed, std::uint64_t epoch) {
    if (batch_size < 1 || batch_size > n) throw InvalidArgument("minibatch_iter: need 1 <= B <= N");
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Rng rng(derive_seed(seed, epoch));
    for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.uniform_index(i)]);
    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t start = 0; start < n; start += batch_size) {
        const std::size_t stop = std::min(n, start + batch_size);
        batches.emplace_back(perm.begin() + static_cast<std::ptrdiff_t>(start),
                             perm.begin() + static_cast<std::ptrdiff_t>(stop));
    }
    return batches;
}

/// Endless minibatch sequence across epochs. A batch equal to the full data
/// set is served in index order every time.
class BatchStream {
public:
    BatchStream(std::size_t n, std::size_t batch_size, std::uint64_t seed)
        : n_(n), batch_size_(batch_size), seed_(seed) {
        if (batch_size < 1 || batch_size > n) throw InvalidArgument("BatchStream: need 1 <= B <= N");
    }

    const std::vector<std::size_t>& next() {
        if (batch_size_ == n_) {
            if (batches_.empty()) {
                batches_.emplace_back(n_);
                std::iota(batches_[0].begin(), batches_[0].end(), std::size_t{0});
            }
            return batches_[0];
        }
        if (pos_ >= batches_.size()) {
            batches_ = minibatch_iter(n_, batch_size_, seed_, epoch_++);
            pos_ = 0;
        }
        return batches_[pos_++];
    }

    std::size_t data_size() const { return n_; }

private:
    std::size_t n_, batch_size_;
    std::uint64_t seed_;
    std::uint64_t epoch_ = 0;
    std::size_t pos_ = 0;
    std::vector<std::vector<std::size_t>> batches_;
};

}  // namespace sgvi
