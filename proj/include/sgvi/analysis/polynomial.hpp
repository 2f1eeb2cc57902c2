#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "sgvi/errors.hpp"
#include "sgvi/types.hpp"

namespace sgvi {

/// Separable polynomial f(z) = sum_j p_j(z_j) with each p_j of degree <= 4,
/// so every mixed partial derivative vanishes and the Gaussian expectation
/// has a closed form through the first four moments.
class PolynomialTestFunction {
public:
    using Coeffs = std::array<double, 5>;  // c0 + c1 z + c2 z^2 + c3 z^3 + c4 z^4

    /// One coefficient list per coordinate, lowest degree first.
    explicit PolynomialTestFunction(const std::vector<std::vector<double>>& per_coordinate, std::string name = {})
        : name_(std::move(name)) {
        if (per_coordinate.empty()) throw InvalidArgument("PolynomialTestFunction: need at least one coordinate");
        for (const auto& c : per_coordinate) {
            Coeffs k{};
            for (std::size_t i = 0; i < c.size(); ++i) {
                if (i >= 5) {
                    if (c[i] != 0.0) throw Unsupported("PolynomialTestFunction: degree > 4 is not supported");
                    continue;
                }
                k[i] = c[i];
            }
            coeffs_.push_back(k);
        }
    }

    /// Univariate polynomial.
    static PolynomialTestFunction univariate(const std::vector<double>& c, std::string name = {}) {
        return PolynomialTestFunction(std::vector<std::vector<double>>{c}, std::move(name));
    }

    Index dim() const { return static_cast<Index>(coeffs_.size()); }
    const std::string& name() const { return name_; }
    const Coeffs& coeffs(Index j) const { return coeffs_[static_cast<std::size_t>(j)]; }

    int degree() const {
        int d = 0;
        for (const auto& c : coeffs_)
            for (int i = 4; i > d; --i)
                if (c[static_cast<std::size_t>(i)] != 0.0) d = i;
        return d;
    }

    double value(const VecRef& z) const {
        double s = 0.0;
        for (Index j = 0; j < dim(); ++j) s += derivative(j, 0, z[j]);
        return s;
    }

    /// d^k f / dz_j^k at z_j (k = 0..4).
    double derivative(Index j, int k, double z) const {
        const Coeffs& c = coeffs(j);
        double s = 0.0, p = 1.0;
        for (int i = k; i <= 4; ++i) {
            s += falling(i, k) * c[static_cast<std::size_t>(i)] * p;
            p *= z;
        }
        return s;
    }

    /// E[f(z)] for z_j ~ N(mu_j, C_j) independent.
    double expectation(const VecRef& mu, const VecRef& var) const {
        check(mu, var);
        double s = 0.0;
        for (Index j = 0; j < dim(); ++j) s += moment_combo(j, mu[j], var[j], 0, 0);
        return s;
    }

    /// d^(a+b) E[f] / d mu_j^a d C_j^b in closed form (a + b <= 2).
    double expectation_partial(Index j, int a, int b, const VecRef& mu, const VecRef& var) const {
        check(mu, var);
        return moment_combo(j, mu[j], var[j], a, b);
    }

private:
    static double falling(int n, int k) {
        double r = 1.0;
        for (int i = 0; i < k; ++i) r *= n - i;
        return r;
    }

    void check(const VecRef& mu, const VecRef& var) const {
        if (mu.size() != dim() || var.size() != dim())
            throw ShapeError("PolynomialTestFunction: mean/variance length must equal the dimension");
        if ((var.array() < 0.0).any()) throw InvalidArgument("PolynomialTestFunction: variance must be >= 0");
    }

    // sum_i c_i * d^(a+b)/dmu^a dC^b E[z^i], from
    // E[z^2] = m^2 + C, E[z^3] = m^3 + 3 m C, E[z^4] = m^4 + 6 m^2 C + 3 C^2.
    double moment_combo(Index j, double m, double C, int a, int b) const {
        std::array<double, 5> d{};
        if (a == 0 && b == 0) d = {1, m, m * m + C, m * m * m + 3 * m * C, m * m * m * m + 6 * m * m * C + 3 * C * C};
        else if (a == 1 && b == 0) d = {0, 1, 2 * m, 3 * m * m + 3 * C, 4 * m * m * m + 12 * m * C};
        else if (a == 0 && b == 1) d = {0, 0, 1, 3 * m, 6 * m * m + 6 * C};
        else if (a == 2 && b == 0) d = {0, 0, 2, 6 * m, 12 * m * m + 12 * C};
        else if (a == 1 && b == 1) d = {0, 0, 0, 3, 12 * m};
        else if (a == 0 && b == 2) d = {0, 0, 0, 0, 6};
        else throw Unsupported("expectation_partial: only orders up to 2 are available");
        const Coeffs& c = coeffs(j);
        double s = 0.0;
        for (std::size_t i = 0; i < 5; ++i) s += c[i] * d[i];
        return s;
    }

    std::vector<Coeffs> coeffs_;
    std::string name_;
};

/// Built-in polynomials of degree <= 4 used by the identity checks.
inline std::vector<PolynomialTestFunction> builtin_polynomials() {
    return {
        PolynomialTestFunction::univariate({0, 0, 0, 0, 1}, "z^4"),
        PolynomialTestFunction::univariate({0, 0, 0, 1}, "z^3"),
        PolynomialTestFunction::univariate({1, -2, 0.5}, "quadratic"),
        PolynomialTestFunction::univariate({0.5, 1, -1, 0.25, 0.1}, "quartic-mixed"),
        PolynomialTestFunction({{0, 0, 1}, {0, 1, 0, 1}, {2, 0, 0, 0, -0.5}}, "separable-3d"),
    };
}

}  // namespace sgvi
