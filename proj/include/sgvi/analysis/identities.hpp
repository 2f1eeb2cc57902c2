#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "sgvi/analysis/polynomial.hpp"
#include "sgvi/rng.hpp"

namespace sgvi {

/// One comparison between an analytic parameter derivative of E[f] and the
/// Monte-Carlo mean of the matching z-derivative.
struct IdentityCheck {
    std::string identity;  // "hessian-mu", "hessian-C", "fourth", "third", "expectation"
    Index coordinate = 0;
    double analytic = 0.0;
    double monte_carlo = 0.0;
    double standard_error = 0.0;
    double gap_se = 0.0;  // |analytic - monte_carlo| / standard_error

    bool passed(double max_se = 5.0) const { return gap_se < max_se; }
};

struct IdentityReport {
    std::string function;
    std::size_t samples = 0;
    std::vector<IdentityCheck> checks;

    double max_gap_se() const {
        double g = 0.0;
        for (const auto& c : checks) g = std::max(g, c.gap_se);
        return g;
    }
    bool passed(double max_se = 5.0) const { return max_gap_se() < max_se; }
};

namespace detail {

struct Welford {
    std::size_t n = 0;
    double mean = 0.0, m2 = 0.0;
    void add(double x) {
        ++n;
        const double d = x - mean;
        mean += d / static_cast<double>(n);
        m2 += d * (x - mean);
    }
    double variance() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
    double standard_error() const { return n > 0 ? std::sqrt(variance() / static_cast<double>(n)) : 0.0; }
};

inline double gap_in_se(double a, double m, double se) {
    const double diff = std::abs(a - m);
    if (se > 0.0) return diff / se;
    return diff <= 1e-12 * std::max(1.0, std::abs(a)) ? 0.0 : std::numeric_limits<double>::infinity();
}

}  // namespace detail

/// For each coordinate j of a separable polynomial with z_j ~ N(mu_j, C_j):
///
///   hessian-mu : d^2 E[f] / d mu_j^2   vs  E[f''(z_j)]
///   hessian-C  : 2 d E[f] / d C_j      vs  E[f''(z_j)]
///   fourth     : d^2 E[f] / d C_j^2    vs  1/4 E[f''''(z_j)]
///   third      : d^2 E[f] / d mu_j dC_j vs 1/2 E[f'''(z_j)]
///   expectation: closed-form E[f]      vs  mean of f(z)
///
/// Gaps are reported in standard errors of the Monte-Carlo side.
inline IdentityReport identity_suite(const PolynomialTestFunction& f, const VecRef& mu, const VecRef& var,
                                     std::size_t samples, std::uint64_t seed = 0) {
    if (f.degree() > 4) throw Unsupported("identity_suite: degree > 4");
    if (samples < 2) throw InvalidArgument("identity_suite: need at least 2 samples");
    if (mu.size() != f.dim() || var.size() != f.dim()) throw ShapeError("identity_suite: mean/variance length mismatch");
    const Index d = f.dim();
    std::vector<detail::Welford> second(static_cast<std::size_t>(d)), third(static_cast<std::size_t>(d)),
        fourth(static_cast<std::size_t>(d));
    detail::Welford value;
    Rng rng(seed);
    Vector z(d);
    for (std::size_t s = 0; s < samples; ++s) {
        for (Index j = 0; j < d; ++j) z[j] = mu[j] + std::sqrt(var[j]) * rng.normal();
        value.add(f.value(z));
        for (Index j = 0; j < d; ++j) {
            const auto u = static_cast<std::size_t>(j);
            second[u].add(f.derivative(j, 2, z[j]));
            third[u].add(f.derivative(j, 3, z[j]));
            fourth[u].add(f.derivative(j, 4, z[j]));
        }
    }

    IdentityReport rep{f.name(), samples, {}};
    auto push = [&](const char* id, Index j, double a, double m, double se) {
        rep.checks.push_back({id, j, a, m, se, detail::gap_in_se(a, m, se)});
    };
    push("expectation", 0, f.expectation(mu, var), value.mean, value.standard_error());
    for (Index j = 0; j < d; ++j) {
        const auto u = static_cast<std::size_t>(j);
        push("hessian-mu", j, f.expectation_partial(j, 2, 0, mu, var), second[u].mean, second[u].standard_error());
        push("hessian-C", j, 2.0 * f.expectation_partial(j, 0, 1, mu, var), second[u].mean,
             second[u].standard_error());
        push("fourth", j, f.expectation_partial(j, 0, 2, mu, var), 0.25 * fourth[u].mean,
             0.25 * fourth[u].standard_error());
        push("third", j, f.expectation_partial(j, 1, 1, mu, var), 0.5 * third[u].mean, 0.5 * third[u].standard_error());
    }
    return rep;
}

}  // namespace sgvi
