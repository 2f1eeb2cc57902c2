#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "sgvi/analysis/identities.hpp"
#include "sgvi/errors.hpp"
#include "sgvi/rng.hpp"
#include "sgvi/types.hpp"

namespace sgvi {

/// A test function of eps ~ N(0, I_d) with a declared Lipschitz constant and
/// a known mean (needed by the tail study).
struct LipschitzFunction {
    std::string name;
    double lipschitz = 0.0;
    std::function<double(const VecRef&)> f;
    double mean = 0.0;
};

inline LipschitzFunction linear_unit_norm() {
    return {"linear", 1.0, [](const VecRef& e) { return e.sum() / std::sqrt(static_cast<double>(e.size())); }, 0.0};
}

inline LipschitzFunction sin_normalized_sum() {
    return {"sin", 1.0, [](const VecRef& e) { return std::sin(e.sum() / std::sqrt(static_cast<double>(e.size()))); },
            0.0};
}

inline LipschitzFunction sigmoid_normalized_sum() {
    return {"sigmoid", 0.25,
            [](const VecRef& e) { return 1.0 / (1.0 + std::exp(-e.sum() / std::sqrt(static_cast<double>(e.size())))); },
            0.5};
}

inline LipschitzFunction constant_function(double c = 1.0) {
    return {"constant", 0.0, [c](const VecRef&) { return c; }, c};
}

inline std::vector<LipschitzFunction> builtin_lipschitz_functions() {
    return {linear_unit_norm(), sin_normalized_sum(), sigmoid_normalized_sum(), constant_function()};
}

inline std::vector<std::string> builtin_lipschitz_names() {
    std::vector<std::string> names;
    for (const auto& f : builtin_lipschitz_functions()) names.push_back(f.name);
    return names;
}

inline LipschitzFunction lipschitz_function_by_name(const std::string& name) {
    for (auto& f : builtin_lipschitz_functions())
        if (f.name == name) return f;
    throw InvalidArgument("unknown test function '" + name + "'");
}

struct VarianceRow {
    Index dim = 0;
    double variance = 0.0;
    double standard_error = 0.0;  // sqrt(2 / (n - 1)) * variance
    double bound = 0.0;           // pi^2 L^2 / 4
    double loose_bound = 0.0;     // pi^2 L^2 d / 4
    bool within_bound = false;    // variance <= bound + 5 SE
    bool within_l2 = false;       // variance <= L^2 (reported only)
};

struct VarianceReport {
    std::string function;
    double lipschitz = 0.0;
    std::size_t trials = 0;
    std::vector<VarianceRow> rows;
    double slope = 0.0;     // weighted least-squares slope of variance on log10(d)
    double slope_se = 0.0;

    bool bound_holds() const {
        for (const auto& r : rows)
            if (!r.within_bound) return false;
        return true;
    }
    bool no_trend(double max_se = 2.0) const { return std::abs(slope) <= max_se * slope_se; }
};

namespace detail {

inline void require_trials(std::size_t trials) {
    if (trials < 1000) throw InvalidArgument("at least 1000 trials are required (got " + std::to_string(trials) + ")");
}

/// Weighted least squares y ~ a + b x with known per-point standard errors.
/// Points with zero error are exact; if every point is exact the data must
/// lie on a line and the slope error is zero.
inline std::pair<double, double> weighted_slope(const std::vector<double>& x, const std::vector<double>& y,
                                                const std::vector<double>& se) {
    const std::size_t n = x.size();
    if (n < 2) return {0.0, 0.0};
    double tiny = 0.0;
    for (double s : se) tiny = std::max(tiny, s);
    if (tiny == 0.0) {
        double mx = 0, my = 0;
        for (std::size_t i = 0; i < n; ++i) mx += x[i] / n, my += y[i] / n;
        double sxy = 0, sxx = 0;
        for (std::size_t i = 0; i < n; ++i) sxy += (x[i] - mx) * (y[i] - my), sxx += (x[i] - mx) * (x[i] - mx);
        return {sxx > 0 ? sxy / sxx : 0.0, 0.0};
    }
    tiny *= 1e-12;
    double sw = 0, swx = 0, swy = 0;
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double s = std::max(se[i], tiny);
        w[i] = 1.0 / (s * s);
        sw += w[i];
        swx += w[i] * x[i];
        swy += w[i] * y[i];
    }
    const double mx = swx / sw, my = swy / sw;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += w[i] * (x[i] - mx) * (x[i] - mx);
        sxy += w[i] * (x[i] - mx) * (y[i] - my);
    }
    if (sxx <= 0.0) return {0.0, 0.0};
    return {sxy / sxx, std::sqrt(1.0 / sxx)};
}

}  // namespace detail

/// Empirical variance of f(eps) at each dimension against pi^2 L^2 / 4, plus a
/// regression of the variance on log10(d) to expose any dimension trend.
inline VarianceReport variance_study(const LipschitzFunction& fn, const std::vector<Index>& dims, std::size_t trials,
                                     std::uint64_t seed) {
    detail::require_trials(trials);
    if (dims.empty()) throw InvalidArgument("variance_study: no dimensions given");
    VarianceReport rep{fn.name, fn.lipschitz, trials, {}, 0.0, 0.0};
    const double bound = std::numbers::pi * std::numbers::pi * fn.lipschitz * fn.lipschitz / 4.0;
    std::vector<double> x, y, se;
    for (Index d : dims) {
        if (d < 1) throw InvalidArgument("variance_study: dimensions must be >= 1");
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(d)));
        Vector eps(d);
        detail::Welford acc;
        for (std::size_t t = 0; t < trials; ++t) {
            for (Index j = 0; j < d; ++j) eps[j] = rng.normal();
            acc.add(fn.f(eps));
        }
        VarianceRow row;
        row.dim = d;
        row.variance = acc.variance();
        row.standard_error = std::sqrt(2.0 / static_cast<double>(trials - 1)) * row.variance;
        row.bound = bound;
        row.loose_bound = bound * static_cast<double>(d);
        row.within_bound = row.variance <= bound + 5.0 * row.standard_error;
        row.within_l2 = row.variance <= fn.lipschitz * fn.lipschitz;
        rep.rows.push_back(row);
        x.push_back(std::log10(static_cast<double>(d)));
        y.push_back(row.variance);
    }
    // pooled standard error for the regression
    double pooled = 0.0;
    for (double v : y) pooled += v / static_cast<double>(y.size());
    se.assign(y.size(), std::sqrt(2.0 / static_cast<double>(trials - 1)) * pooled);
    std::tie(rep.slope, rep.slope_se) = detail::weighted_slope(x, y, se);
    return rep;
}

struct TailRow {
    std::size_t samples = 0;  // M
    double t = 0.0;
    double frequency = 0.0;       // fraction of trials with |mean_M - E f| >= t
    double standard_error = 0.0;  // binomial, sqrt(p (1 - p) / trials)
    double bound = 0.0;           // 2 exp(-2 M t^2 / (pi^2 L^2))
    bool within_bound = false;    // frequency <= bound + 3 SE
};

struct TailReport {
    std::string function;
    double lipschitz = 0.0;
    Index dim = 1;
    std::size_t trials = 0;
    std::vector<TailRow> rows;

    bool bound_holds() const {
        for (const auto& r : rows)
            if (!r.within_bound) return false;
        return true;
    }
};

inline double tail_bound(std::size_t samples, double t, double lipschitz) {
    if (lipschitz == 0.0) return t > 0.0 ? 0.0 : 2.0;
    return 2.0 * std::exp(-2.0 * static_cast<double>(samples) * t * t /
                          (std::numbers::pi * std::numbers::pi * lipschitz * lipschitz));
}

/// Frequency with which the M-sample average of f(eps) misses E[f] by at
/// least t, for each (M, t), against the sub-Gaussian tail bound.
inline TailReport tail_study(const LipschitzFunction& fn, const std::vector<std::size_t>& sample_counts,
                             const std::vector<double>& t_values, std::size_t trials, std::uint64_t seed,
                             Index dim = 1) {
    detail::require_trials(trials);
    if (dim < 1) throw InvalidArgument("tail_study: dimension must be >= 1");
    TailReport rep{fn.name, fn.lipschitz, dim, trials, {}};
    for (std::size_t M : sample_counts) {
        if (M < 1) throw InvalidArgument("tail_study: sample counts must be >= 1");
        Rng rng(derive_seed(seed, M));
        Vector eps(dim);
        std::vector<std::size_t> exceed(t_values.size(), 0);
        for (std::size_t trial = 0; trial < trials; ++trial) {
            double s = 0.0;
            for (std::size_t m = 0; m < M; ++m) {
                for (Index j = 0; j < dim; ++j) eps[j] = rng.normal();
                s += fn.f(eps);
            }
            const double dev = std::abs(s / static_cast<double>(M) - fn.mean);
            for (std::size_t k = 0; k < t_values.size(); ++k)
                if (dev >= t_values[k]) ++exceed[k];
        }
        for (std::size_t k = 0; k < t_values.size(); ++k) {
            TailRow row;
            row.samples = M;
            row.t = t_values[k];
            row.frequency = static_cast<double>(exceed[k]) / static_cast<double>(trials);
            row.standard_error = std::sqrt(row.frequency * (1.0 - row.frequency) / static_cast<double>(trials));
            row.bound = tail_bound(M, row.t, fn.lipschitz);
            row.within_bound = row.frequency <= row.bound + 3.0 * row.standard_error;
            rep.rows.push_back(row);
        }
    }
    return rep;
}

}  // namespace sgvi
