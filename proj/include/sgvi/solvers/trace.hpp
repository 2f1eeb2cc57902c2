#pragma once

#include <chrono>
#include <cstdint>
#include <vector>

#include "sgvi/errors.hpp"

namespace sgvi {

struct TraceRecord {
    int iter = 0;
    double wall_seconds = 0.0;
    double elbo = 0.0;
    double grad_norm = 0.0;
    int inner_iters = 0;
    std::uint64_t passes = 0;  // cumulative per-sample model passes (deterministic work clock)
};

/// Per-iteration optimizer log; iterations strictly increase, times never decrease.
class OptimizerTrace {
public:
    void append(const TraceRecord& r) {
        if (!records_.empty()) {
            const TraceRecord& last = records_.back();
            if (r.iter <= last.iter) throw InvalidState("OptimizerTrace: iterations must strictly increase");
            if (r.wall_seconds < last.wall_seconds || r.passes < last.passes)
                throw InvalidState("OptimizerTrace: time must not decrease");
        }
        records_.push_back(r);
    }

    const std::vector<TraceRecord>& records() const { return records_; }
    bool empty() const { return records_.empty(); }
    std::size_t size() const { return records_.size(); }
    const TraceRecord& back() const { return records_.back(); }

private:
    std::vector<TraceRecord> records_;
};

class Stopwatch {
public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

}  // namespace sgvi
