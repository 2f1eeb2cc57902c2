#pragma once

#include <cmath>
#include <string>

#include "sgvi/solvers/driver.hpp"

namespace sgvi {

struct AdagradOptions {
    RunOptions run{100, 1, 100, 0, true};
    double learning_rate = 0.1;
    double delta = 1e-8;
};

/// Adagrad ascent: acc += G^2, theta += lr * G / sqrt(acc + delta).
template <LatentModel M>
RunResult adagrad_run(const M& model, Vector theta, const AdagradOptions& opts) {
    if (!(opts.learning_rate > 0.0)) throw InvalidArgument("adagrad_run: learning rate must be > 0");
    detail::RunState<M> state(model, opts.run);
    Vector acc = Vector::Zero(model.param_dim());
    for (std::size_t t = 1; t <= opts.run.max_outer && !state.out_of_time(); ++t) {
        try {
            const auto step = state.draw(t);
            const GradientEstimate g = state.gradient(theta, step);
            if (!std::isfinite(g.elbo_estimate))
                throw NumericError("non-finite ELBO estimate at outer iteration " + std::to_string(t), t);
            acc += g.grad.cwiseAbs2();
            theta += opts.learning_rate * g.grad.cwiseQuotient((acc.array() + opts.delta).sqrt().matrix());
            state.project(theta);
            state.record(t, g.elbo_estimate, g.grad.norm(), 0);
        } catch (const NumericError& e) {
            if (std::string(e.what()).find("outer iteration") != std::string::npos) throw;
            throw NumericError(std::string(e.what()) + " (outer iteration " + std::to_string(t) + ")", t);
        }
    }
    return {std::move(theta), state.take_trace()};
}

}  // namespace sgvi
