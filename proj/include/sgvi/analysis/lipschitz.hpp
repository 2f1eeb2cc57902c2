#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "sgvi/errors.hpp"
#include "sgvi/rng.hpp"
#include "sgvi/types.hpp"

namespace sgvi {

enum class Activation { sigmoid, tanh, softplus };

inline Activation activation_from_name(const std::string& s) {
    if (s == "sigmoid") return Activation::sigmoid;
    if (s == "tanh") return Activation::tanh;
    if (s == "softplus") return Activation::softplus;
    throw InvalidArgument("unknown activation '" + s + "'");
}

inline double activate(Activation a, double x) {
    switch (a) {
        case Activation::sigmoid:
            return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
        case Activation::tanh:
            return std::tanh(x);
        case Activation::softplus:
            return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
    }
    return 0.0;
}

/// Lipschitz constant of eps -> g(w^T (mu + R eps) + b): |R^T w| times the
/// activation's maximal slope (1/4 for sigmoid, 1 for tanh and softplus).
inline double lipschitz_layer_bound(const VecRef& w_row, const Matrix& R, Activation a) {
    if (R.rows() != w_row.size()) throw ShapeError("lipschitz_layer_bound: W row length must equal R rows");
    const double norm = (R.transpose() * w_row).norm();
    return a == Activation::sigmoid ? 0.25 * norm : norm;
}

struct LipschitzCheck {
    std::size_t pairs = 0;
    std::size_t violations = 0;
    double bound = 0.0;
    double max_ratio = 0.0;  // largest |g(a) - g(b)| / |eps - eta| seen
};

/// Draws `pairs` independent (eps, eta) ~ N(0, I) and counts pairs whose
/// layer outputs differ by more than bound * |eps - eta| (with a relative
/// allowance of 1e-12 for rounding).
inline LipschitzCheck check_layer_lipschitz(const VecRef& w_row, const VecRef& mu, const Matrix& R, double b,
                                            Activation a, std::size_t pairs, std::uint64_t seed) {
    if (mu.size() != R.rows() || w_row.size() != R.rows()) throw ShapeError("check_layer_lipschitz: shape mismatch");
    LipschitzCheck out;
    out.pairs = pairs;
    out.bound = lipschitz_layer_bound(w_row, R, a);
    const Vector wr = R.transpose() * w_row;
    const double base = w_row.dot(mu) + b;
    Rng rng(seed);
    Vector e(R.cols()), h(R.cols());
    for (std::size_t k = 0; k < pairs; ++k) {
        for (Index j = 0; j < e.size(); ++j) e[j] = rng.normal();
        for (Index j = 0; j < h.size(); ++j) h[j] = rng.normal();
        const double lhs = std::abs(activate(a, base + wr.dot(e)) - activate(a, base + wr.dot(h)));
        const double dist = (e - h).norm();
        const double rhs = out.bound * dist;
        if (dist > 0.0) out.max_ratio = std::max(out.max_ratio, lhs / dist);
        if (lhs > rhs * (1.0 + 1e-12) + 1e-300) ++out.violations;
    }
    return out;
}

}  // namespace sgvi
