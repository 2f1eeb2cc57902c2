#pragma once

#include <cmath>
#include <deque>
#include <limits>
#include <string>

#include "sgvi/solvers/driver.hpp"

namespace sgvi {

/// The K most recent curvature pairs of the minimized objective -L:
/// s = theta_{t+1} - theta_t, y = -(G_{t+1} - G_t).
class LBFGSMemory {
public:
    explicit LBFGSMemory(std::size_t capacity, double curvature_threshold = 1e-10)
        : capacity_(capacity), threshold_(curvature_threshold) {
        if (capacity < 1) throw InvalidArgument("LBFGSMemory: capacity must be >= 1");
    }

    /// Stores the pair when s^T y > threshold * |s| |y|; returns whether it was kept.
    bool push(Vector s, Vector y) {
        const double sy = s.dot(y);
        if (!(sy > threshold_ * s.norm() * y.norm()) || !std::isfinite(sy)) return false;
        if (pairs_.size() == capacity_) pairs_.pop_front();
        pairs_.push_back({std::move(s), std::move(y), 1.0 / sy});
        return true;
    }

    void clear() { pairs_.clear(); }
    std::size_t size() const { return pairs_.size(); }
    std::size_t capacity() const { return capacity_; }

    /// Ascent direction H_t G from the two-loop recursion (G itself when empty).
    Vector direction(const VecRef& ascent_grad) const {
        Vector q = -ascent_grad;  // gradient of -L
        std::vector<double> alpha(pairs_.size());
        for (std::size_t k = pairs_.size(); k-- > 0;) {
            alpha[k] = pairs_[k].rho * pairs_[k].s.dot(q);
            q -= alpha[k] * pairs_[k].y;
        }
        if (!pairs_.empty()) {
            const auto& last = pairs_.back();
            q *= last.s.dot(last.y) / last.y.squaredNorm();
        }
        for (std::size_t k = 0; k < pairs_.size(); ++k) {
            const double beta = pairs_[k].rho * pairs_[k].y.dot(q);
            q += (alpha[k] - beta) * pairs_[k].s;
        }
        return -q;
    }

private:
    struct Pair {
        Vector s, y;
        double rho;
    };
    std::size_t capacity_;
    double threshold_;
    std::deque<Pair> pairs_;
};

struct LBFGSOptions {
    RunOptions run{100, 1, 100, 0, true};
    std::size_t memory = 10;
    double curvature_threshold = 1e-10;
    double armijo = 1e-4;
    int max_backtracks = 40;
};

/// Stochastic L-BFGS. Each iteration fixes a minibatch and noise, takes the
/// two-loop direction, and backtracks until the minibatch ELBO satisfies the
/// Armijo condition; the curvature pair is formed on that same minibatch.
template <LatentModel M>
RunResult lbfgs_run(const M& model, Vector theta, const LBFGSOptions& opts) {
    if (opts.memory < 1) throw InvalidArgument("lbfgs_run: memory K must be >= 1");
    detail::RunState<M> state(model, opts.run);
    LBFGSMemory memory(opts.memory, opts.curvature_threshold);
    for (std::size_t t = 1; t <= opts.run.max_outer && !state.out_of_time(); ++t) {
        try {
            const auto step = state.draw(t);
            const GradientEstimate g = state.gradient(theta, step);
            if (!std::isfinite(g.elbo_estimate))
                throw NumericError("non-finite ELBO estimate at outer iteration " + std::to_string(t), t);
            Vector dir = memory.direction(g.grad);
            double slope = g.grad.dot(dir);
            if (!(slope > 0.0)) {
                memory.clear();
                dir = g.grad;
                slope = g.grad.squaredNorm();
            }
            const double gnorm = g.grad.norm();
            double alpha = memory.size() > 0 ? 1.0 : std::min(1.0, 1.0 / std::max(gnorm, 1e-300));
            // near the optimum the decrease falls below the rounding error of the ELBO itself
            const double slack = 16.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(g.elbo_estimate));
            int backtracks = 0;
            for (; backtracks < opts.max_backtracks; ++backtracks, alpha *= 0.5) {
                Vector trial = theta + alpha * dir;
                state.project(trial);
                GradientEstimate next;
                try {
                    next = state.gradient(trial, step);
                } catch (const NumericError&) {
                    continue;  // overflow at the trial point counts as a rejected step
                }
                if (std::isfinite(next.elbo_estimate) && next.grad.allFinite() &&
                    next.elbo_estimate >= g.elbo_estimate + opts.armijo * alpha * slope - slack) {
                    memory.push(trial - theta, g.grad - next.grad);
                    theta = std::move(trial);
                    break;
                }
            }
            state.record(t, g.elbo_estimate, gnorm, backtracks);
        } catch (const NumericError& e) {
            if (std::string(e.what()).find("outer iteration") != std::string::npos) throw;
            throw NumericError(std::string(e.what()) + " (outer iteration " + std::to_string(t) + ")", t);
        }
    }
    return {std::move(theta), state.take_trace()};
}

}  // namespace sgvi
