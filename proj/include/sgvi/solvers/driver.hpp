#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>

#include "sgvi/estimators.hpp"
#include "sgvi/io/minibatch.hpp"
#include "sgvi/latent_model.hpp"
#include "sgvi/solvers/trace.hpp"

namespace sgvi {

/// Settings shared by every optimizer.
struct RunOptions {
    std::size_t batch_size = 100;  // B
    std::size_t samples = 1;       // M
    std::size_t max_outer = 100;
    std::uint64_t seed = 0;
    bool resample_noise = true;    // false: one frozen noise set (deterministic objective)
    double max_seconds = 0.0;      // wall-clock budget; 0 means none (a budget makes runs timing dependent)
};

struct RunResult {
    Vector theta;
    OptimizerTrace trace;
};

namespace detail {

inline void validate(const RunOptions& o, std::size_t n) {
    if (o.samples < 1) throw InvalidArgument("samples (M) must be >= 1");
    if (o.batch_size < 1 || o.batch_size > n) throw InvalidArgument("batch size must satisfy 1 <= B <= N");
    if (!(o.max_seconds >= 0.0)) throw InvalidArgument("max_seconds must be >= 0");
}

/// Minibatch, noise and bookkeeping for one optimizer run.
template <LatentModel M>
class RunState {
public:
    RunState(const M& model, const RunOptions& opts)
        : model_(model), opts_(opts), stream_((validate(opts, model.num_data()), model.num_data()), opts.batch_size,
                                              derive_seed(opts.seed, kBatchStream)) {}

    struct Step {
        const std::vector<std::size_t>* batch;
        NoiseDraws eps;
        double weight;
    };

    Step draw(std::size_t iter) {
        const auto& batch = stream_.next();
        const std::uint64_t noise_seed = derive_seed(derive_seed(opts_.seed, kNoiseStream), opts_.resample_noise ? iter : 0);
        Step s{&batch, draw_batch_noise(noise_seed, batch.size(), opts_.samples, model_.latent_dim()),
               static_cast<double>(model_.num_data()) / static_cast<double>(batch.size())};
        return s;
    }

    GradientEstimate gradient(const Vector& theta, const Step& s) {
        passes_ += s.batch->size() * opts_.samples;
        return batch_gradient(model_, theta, *s.batch, s.eps, s.weight);
    }

    Vector hv(const Vector& theta, const VecRef& v, const Step& s) {
        passes_ += s.batch->size() * opts_.samples;
        return hv_rop(model_, theta, v, *s.batch, s.eps, s.weight);
    }

    void project(Vector& theta) const {
        if constexpr (ProjectedModel<M>) model_.project(theta);
    }

    void record(std::size_t iter, double elbo, double grad_norm, int inner) {
        if (!std::isfinite(elbo))
            throw NumericError("non-finite ELBO estimate at outer iteration " + std::to_string(iter), iter);
        trace_.append({static_cast<int>(iter), clock_.seconds(), elbo, grad_norm, inner, passes_});
    }

    bool out_of_time() const { return opts_.max_seconds > 0.0 && clock_.seconds() >= opts_.max_seconds; }

    OptimizerTrace take_trace() { return std::move(trace_); }
    const OptimizerTrace& trace() const { return trace_; }

private:
    static constexpr std::uint64_t kBatchStream = 0x6261746368ULL;
    static constexpr std::uint64_t kNoiseStream = 0x6e6f697365ULL;

    const M& model_;
    RunOptions opts_;
    BatchStream stream_;
    std::uint64_t passes_ = 0;
    Stopwatch clock_;
    OptimizerTrace trace_;
};

}  // namespace detail
}  // namespace sgvi
