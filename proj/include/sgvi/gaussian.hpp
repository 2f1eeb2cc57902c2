#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <variant>

#include <boost/math/distributions/normal.hpp>

#include "sgvi/errors.hpp"
#include "sgvi/rng.hpp"
#include "sgvi/types.hpp"

namespace sgvi {

/// Lower-triangular factor R with C = R R^T.
struct FullFactor {
    Matrix lower;
};

/// Diagonal scale, C = diag(sigma^2).
struct Diagonal {
    Vector sigma;
};

using Scale = std::variant<FullFactor, Diagonal>;

/// q(z) = N(mean, C) with C given through its scale.
class GaussianVariational {
public:
    GaussianVariational(Vector mean, Scale scale) : mean_(std::move(mean)), scale_(std::move(scale)) {
        std::visit([this](const auto& s) { validate(s); }, scale_);
    }

    static GaussianVariational diagonal(Vector mean, Vector sigma) {
        return {std::move(mean), Diagonal{std::move(sigma)}};
    }

    static GaussianVariational full(Vector mean, Matrix lower) {
        return {std::move(mean), FullFactor{std::move(lower)}};
    }

    Index dim() const { return mean_.size(); }
    const Vector& mean() const { return mean_; }
    const Scale& scale() const { return scale_; }
    bool is_diagonal() const { return std::holds_alternative<Diagonal>(scale_); }

    Matrix covariance() const {
        if (const auto* d = std::get_if<Diagonal>(&scale_)) {
            return d->sigma.array().square().matrix().asDiagonal();
        }
        const Matrix& r = std::get<FullFactor>(scale_).lower;
        return r * r.transpose();
    }

private:
    void validate(const Diagonal& d) const {
        detail::require_shape(d.sigma.size() == mean_.size(), "diagonal scale length differs from mean length");
        if (!(d.sigma.array() > 0.0).all()) throw InvalidArgument("diagonal scale entries must be strictly positive");
    }

    void validate(const FullFactor& f) const {
        const Index n = mean_.size();
        detail::require_shape(f.lower.rows() == n && f.lower.cols() == n, "scale factor must be d_z x d_z");
        for (Index j = 0; j < n; ++j) {
            if (!(f.lower(j, j) > 0.0)) throw InvalidArgument("scale factor diagonal must be strictly positive");
            for (Index i = 0; i < j; ++i) {
                if (f.lower(i, j) != 0.0) throw InvalidArgument("scale factor must be lower triangular");
            }
        }
    }

    Vector mean_;
    Scale scale_;
};

/// Standard-normal draws, one row per sample.
struct NoiseDraws {
    RowMatrix samples;
    std::uint64_t seed = 0;

    Index count() const { return samples.rows(); }
    Index dim() const { return samples.cols(); }
    auto row(Index i) const { return samples.row(i).transpose(); }
};

/// M x d_z i.i.d. standard normals; deterministic in (seed, count, dim).
inline NoiseDraws sample_epsilon(std::uint64_t seed, Index count, Index dim) {
    if (count < 1 || dim < 1) throw InvalidArgument("sample_epsilon: count and dim must be positive");
    NoiseDraws out{RowMatrix(count, dim), seed};
    Rng rng(seed);
    for (Index i = 0; i < count; ++i)
        for (Index j = 0; j < dim; ++j) out.samples(i, j) = rng.normal();
    return out;
}

/// Rows z_m = mu + R eps_m (or mu + sigma * eps_m).
inline RowMatrix reparameterize(const GaussianVariational& q, const NoiseDraws& eps) {
    detail::require_shape(eps.dim() == q.dim(), "reparameterize: noise dimension differs from q");
    RowMatrix z(eps.count(), q.dim());
    if (const auto* d = std::get_if<Diagonal>(&q.scale())) {
        z = eps.samples.array().rowwise() * d->sigma.transpose().array();
    } else {
        const Matrix& r = std::get<FullFactor>(q.scale()).lower;
        z.noalias() = eps.samples * r.transpose();
    }
    z.rowwise() += q.mean().transpose();
    return z;
}

/// KL(N(mu, diag sigma^2) || N(0, I)) = 1/2 sum(mu^2 + sigma^2 - log sigma^2 - 1).
inline double kl_diag_standard(const VecRef& mu, const VecRef& sigma) {
    detail::require_shape(mu.size() == sigma.size(), "kl_diag_standard: length mismatch");
    if (!(sigma.array() > 0.0).all()) throw InvalidArgument("kl_diag_standard: sigma must be positive");
    double kl = 0.0;
    for (Index i = 0; i < mu.size(); ++i) {
        const double s2 = sigma[i] * sigma[i];
        kl += mu[i] * mu[i] + s2 - std::log(s2) - 1.0;
    }
    return 0.5 * kl;
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

inline double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw InvalidArgument("normal_quantile: p must lie in (0, 1)");
    return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

}  // namespace sgvi
