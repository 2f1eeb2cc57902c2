#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <vector>

#include "sgvi/errors.hpp"
#include "sgvi/rng.hpp"
#include "sgvi/types.hpp"

namespace sgvi {

struct FiniteDiffOptions {
    double relative_step = 1e-3;  // h_i = step * (1 + |theta_i|)
    int order = 4;                // 2: central difference, 4: five-point stencil
    std::size_t coordinates = 0;  // how many coordinates to probe; 0 = all
    std::uint64_t seed = 0;       // picks the probed subset
    double floor = 1e-6;          // relative-error denominator floor, scaled by max(1, |grad|_inf)
};

struct FiniteDiffReport {
    double max_rel_error = 0.0;
    Index worst_coordinate = -1;
    double analytic = 0.0;  // at the worst coordinate
    double numeric = 0.0;
    std::vector<Index> coordinates;
    std::vector<double> rel_errors;

    bool passed(double tol) const { return max_rel_error < tol; }
};

/// Central differences (second or fourth order) of the callback's value against its gradient.
/// Relative error per coordinate: |a - n| / max(|a|, |n|, floor * max(1, |a|_inf)).
inline FiniteDiffReport finite_diff_check(const std::function<ValueGrad(const Vector&)>& value_and_grad,
                                          const VecRef& theta, const FiniteDiffOptions& opts = {}) {
    if (!(opts.relative_step > 0.0)) throw InvalidArgument("finite_diff_check: step must be > 0");
    if (opts.order != 2 && opts.order != 4) throw InvalidArgument("finite_diff_check: order must be 2 or 4");
    const Index d = theta.size();
    const ValueGrad base = value_and_grad(theta);
    if (base.grad.size() != d) throw ShapeError("finite_diff_check: gradient length differs from theta");
    if (!std::isfinite(base.value) || !base.grad.allFinite())
        throw NumericError("finite_diff_check: callback returned non-finite output at theta");

    std::vector<Index> coords(static_cast<std::size_t>(d));
    std::iota(coords.begin(), coords.end(), Index{0});
    if (opts.coordinates > 0 && opts.coordinates < coords.size()) {
        Rng rng(opts.seed);
        for (std::size_t i = coords.size(); i > 1; --i) std::swap(coords[i - 1], coords[rng.uniform_index(i)]);
        coords.resize(opts.coordinates);
        std::sort(coords.begin(), coords.end());
    }

    FiniteDiffReport rep;
    rep.coordinates = coords;
    const double scale = std::max(1.0, base.grad.size() ? base.grad.cwiseAbs().maxCoeff() : 0.0);
    Vector probe = theta;
    for (Index i : coords) {
        const double h = opts.relative_step * (1.0 + std::abs(theta[i]));
        auto at = [&](double offset) {
            probe[i] = theta[i] + offset;
            const double v = value_and_grad(probe).value;
            probe[i] = theta[i];
            if (!std::isfinite(v))
                throw NumericError("finite_diff_check: callback returned non-finite value", static_cast<std::size_t>(i));
            return v;
        };
        const double numeric = opts.order == 2
                                   ? (at(h) - at(-h)) / (2.0 * h)
                                   : (8.0 * (at(h) - at(-h)) - (at(2.0 * h) - at(-2.0 * h))) / (12.0 * h);
        const double a = base.grad[i];
        const double denom = std::max({std::abs(a), std::abs(numeric), opts.floor * scale});
        const double err = denom > 0.0 ? std::abs(a - numeric) / denom : 0.0;
        rep.rel_errors.push_back(err);
        if (err > rep.max_rel_error || rep.worst_coordinate < 0) {
            if (err >= rep.max_rel_error) {
                rep.max_rel_error = err;
                rep.worst_coordinate = i;
                rep.analytic = a;
                rep.numeric = numeric;
            }
        }
    }
    return rep;
}

}  // namespace sgvi
