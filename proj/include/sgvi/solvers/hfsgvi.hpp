#pragma once

#include <cmath>
#include <string>

#include "sgvi/solvers/cg.hpp"
#include "sgvi/solvers/driver.hpp"

namespace sgvi {

struct HFOptions {
    RunOptions run{500, 1, 100, 0, true};
    CGConfig cg;
    bool line_search = false;  // backtrack on the minibatch ELBO instead of a unit step
    int jacobi_probes = 4;     // Rademacher probes for the Jacobi diagonal estimate
};

/// Hessian-free stochastic Gaussian variational inference. Per outer iteration:
/// draw a minibatch and one noise row per (datapoint, sample); form G(theta);
/// solve (-H) p = G by truncated CG with H v from the R-operator on the same
/// noise; step theta += p.
template <LatentModel M>
RunResult hfsgvi_run(const M& model, Vector theta, const HFOptions& opts) {
    opts.cg.validate();
    detail::RunState<M> state(model, opts.run);
    const Index d = model.param_dim();
    for (std::size_t t = 1; t <= opts.run.max_outer && !state.out_of_time(); ++t) {
        try {
            const auto step = state.draw(t);
            const GradientEstimate g = state.gradient(theta, step);
            if (!std::isfinite(g.elbo_estimate))
                throw NumericError("non-finite ELBO estimate at outer iteration " + std::to_string(t), t);
            const LinearOperator curvature = [&](const VecRef& v) -> Vector { return -state.hv(theta, v, step); };

            Vector diag;
            if (opts.cg.preconditioner == Preconditioner::jacobi) {
                Rng rng(derive_seed(opts.run.seed ^ 0x6a61636f6269ULL, t));
                diag = Vector::Zero(d);
                for (int k = 0; k < std::max(1, opts.jacobi_probes); ++k) {
                    Vector probe(d);
                    for (Index i = 0; i < d; ++i) probe[i] = (rng.next_u64() >> 63) ? 1.0 : -1.0;
                    diag += probe.cwiseProduct(curvature(probe));
                }
                diag = diag.cwiseAbs() / std::max(1, opts.jacobi_probes);
                const double floor = std::max(1e-8 * diag.maxCoeff(), 1e-300);
                diag = diag.cwiseMax(floor);
            }
            const CGResult cg = cg_solve(curvature, g.grad, opts.cg, diag.size() ? &diag : nullptr);

            if (opts.line_search) {
                const double slope = g.grad.dot(cg.x);
                double alpha = 1.0;
                for (int k = 0; k < 40; ++k, alpha *= 0.5) {
                    Vector trial = theta + alpha * cg.x;
                    state.project(trial);
                    double value;
                    try {
                        value = state.gradient(trial, step).elbo_estimate;
                    } catch (const NumericError&) {
                        continue;
                    }
                    if (std::isfinite(value) && value >= g.elbo_estimate + 1e-4 * alpha * slope) {
                        theta = std::move(trial);
                        break;
                    }
                }
            } else {
                theta += cg.x;
                state.project(theta);
            }
            state.record(t, g.elbo_estimate, g.grad.norm(), cg.iters);
        } catch (const NumericError& e) {
            if (std::string(e.what()).find("outer iteration") != std::string::npos) throw;
            throw NumericError(std::string(e.what()) + " (outer iteration " + std::to_string(t) + ")", t);
        }
    }
    return {std::move(theta), state.take_trace()};
}

}  // namespace sgvi
