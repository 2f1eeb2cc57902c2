#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "sgvi/errors.hpp"
#include "sgvi/gaussian.hpp"
#include "sgvi/latent_model.hpp"

namespace sgvi {

struct GradientEstimate {
    Vector grad;
    double elbo_estimate = 0.0;
    std::size_t samples_used = 0;
};

using Batch = std::span<const std::size_t>;

/// Datapoint indices 0..n-1.
inline std::vector<std::size_t> full_batch(std::size_t n) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    return idx;
}

/// One fresh noise row per (datapoint, sample): row b * M + m.
inline NoiseDraws draw_batch_noise(std::uint64_t seed, std::size_t batch_size, std::size_t samples, Index dim) {
    return sample_epsilon(seed, static_cast<Index>(batch_size * samples), dim);
}

namespace detail {

template <class M>
std::size_t samples_per_point(const M& model, Batch batch, const NoiseDraws& eps) {
    if (batch.empty()) return 0;
    require_shape(eps.dim() == model.latent_dim(), "noise dimension " + std::to_string(eps.dim()) +
                                                       " differs from latent dimension " +
                                                       std::to_string(model.latent_dim()));
    const auto rows = static_cast<std::size_t>(eps.count());
    require_shape(rows >= batch.size() && rows % batch.size() == 0,
                  "noise rows must be a positive multiple of the batch size");
    for (std::size_t i : batch)
        if (i >= model.num_data()) throw ShapeError("batch index " + std::to_string(i) + " out of range");
    return rows / batch.size();
}

inline void check_finite(const Vector& g, double value, std::size_t datapoint, const char* what) {
    if (!std::isfinite(value) || !g.allFinite())
        throw NumericError(std::string(what) + " is not finite at datapoint " + std::to_string(datapoint), datapoint);
}

template <class M>
void add_global(const M& model, const VecRef& theta, GradientEstimate& out) {
    ValueGrad r = model.global_terms(theta);
    out.grad += r.grad;
    out.elbo_estimate += r.value;
}

}  // namespace detail

/// G(theta) = (w / M) sum_b sum_m [ vjp(g_bm) + explicit grad ] + grad r(theta),
/// with w = data_weight (N / B for an unbiased full-data estimate).
template <LatentModel M>
GradientEstimate mc_gradient(const M& model, const VecRef& theta, Batch batch, const NoiseDraws& eps,
                             double data_weight = 1.0) {
    const std::size_t per = detail::samples_per_point(model, batch, eps);
    GradientEstimate out{Vector::Zero(model.param_dim()), 0.0, per * batch.size()};
    double total = 0.0;
    for (std::size_t b = 0; b < batch.size(); ++b) {
        const std::size_t i = batch[b];
        for (std::size_t m = 0; m < per; ++m) {
            const auto e = eps.row(static_cast<Index>(b * per + m));
            const Vector z = model.param_map(theta, e, i);
            const ValueGrad fg = model.loss_and_grad_z(theta, z, i);
            detail::check_finite(fg.grad, fg.value, i, "integrand gradient");
            const ValueGrad ex = model.explicit_terms(theta, e, i);
            out.grad += model.vjp(theta, e, i, fg.grad);
            out.grad += ex.grad;
            total += fg.value + ex.value;
        }
    }
    if (per > 0) {
        out.grad *= data_weight / static_cast<double>(per);
        out.elbo_estimate = data_weight * total / static_cast<double>(per);
    }
    detail::add_global(model, theta, out);
    return out;
}

/// Diagonal specialization: grad += g^T dmu/dtheta + (eps * g)^T dsigma/dtheta.
/// Works in O(d + d_z) memory per sample.
template <DiagonalLatentModel M>
GradientEstimate mc_gradient_diag(const M& model, const VecRef& theta, Batch batch, const NoiseDraws& eps,
                                  double data_weight = 1.0) {
    const std::size_t per = detail::samples_per_point(model, batch, eps);
    GradientEstimate out{Vector::Zero(model.param_dim()), 0.0, per * batch.size()};
    Vector z(model.latent_dim());
    Vector scaled(model.latent_dim());
    double total = 0.0;
    for (std::size_t b = 0; b < batch.size(); ++b) {
        const std::size_t i = batch[b];
        const MeanScale q = model.mean_scale(theta, i);
        for (std::size_t m = 0; m < per; ++m) {
            const auto e = eps.row(static_cast<Index>(b * per + m));
            z = q.mean + q.sigma.cwiseProduct(e);
            const ValueGrad fg = model.loss_and_grad_z(theta, z, i);
            detail::check_finite(fg.grad, fg.value, i, "integrand gradient");
            scaled = e.cwiseProduct(fg.grad);
            out.grad += model.vjp_mean_scale(theta, i, fg.grad, scaled);
            const ValueGrad ex = model.explicit_terms(theta, e, i);
            out.grad += ex.grad;
            total += fg.value + ex.value;
        }
    }
    if (per > 0) {
        out.grad *= data_weight / static_cast<double>(per);
        out.elbo_estimate = data_weight * total / static_cast<double>(per);
    }
    detail::add_global(model, theta, out);
    return out;
}

/// Gradient through the cheapest route the model offers; drivers call this.
template <LatentModel M>
GradientEstimate batch_gradient(const M& model, const VecRef& theta, Batch batch, const NoiseDraws& eps,
                                double data_weight = 1.0) {
    if constexpr (FusedGradientModel<M>) {
        const std::size_t per = detail::samples_per_point(model, batch, eps);
        GradientEstimate out{Vector::Zero(model.param_dim()), 0.0, per * batch.size()};
        double total = 0.0;
        for (std::size_t b = 0; b < batch.size(); ++b) {
            for (std::size_t m = 0; m < per; ++m) {
                const ValueGrad s = model.sample_value_and_grad(theta, eps.row(static_cast<Index>(b * per + m)), batch[b]);
                detail::check_finite(s.grad, s.value, batch[b], "sample gradient");
                out.grad += s.grad;
                total += s.value;
            }
        }
        if (per > 0) {
            out.grad *= data_weight / static_cast<double>(per);
            out.elbo_estimate = data_weight * total / static_cast<double>(per);
        }
        detail::add_global(model, theta, out);
        return out;
    } else if constexpr (DiagonalLatentModel<M>) {
        return mc_gradient_diag(model, theta, batch, eps, data_weight);
    } else {
        return mc_gradient(model, theta, batch, eps, data_weight);
    }
}

/// Unbiased H_theta v estimate on the same noise as the paired gradient call.
template <LatentModel M>
Vector hv_rop(const M& model, const VecRef& theta, const VecRef& v, Batch batch, const NoiseDraws& eps,
              double data_weight = 1.0) {
    detail::require_shape(v.size() == model.param_dim(), "hv_rop: direction length differs from parameter length");
    const std::size_t per = detail::samples_per_point(model, batch, eps);
    Vector out = Vector::Zero(model.param_dim());
    for (std::size_t b = 0; b < batch.size(); ++b) {
        for (std::size_t m = 0; m < per; ++m) {
            out += model.rop_gradient(theta, v, eps.row(static_cast<Index>(b * per + m)), batch[b]);
        }
    }
    if (per > 0) out *= data_weight / static_cast<double>(per);
    if (!out.allFinite()) throw NumericError("hv_rop: non-finite Hessian-vector product");
    out += model.global_rop(theta, v);
    return out;
}

/// Dense Hessian assembled column by column from hv_rop on basis vectors.
/// Verification only; refuses d above `cap`.
template <LatentModel M>
Matrix exact_hessian_small(const M& model, const VecRef& theta, Batch batch, const NoiseDraws& eps,
                           double data_weight = 1.0, Index cap = 200) {
    const Index d = model.param_dim();
    if (d > cap) throw SizeError("exact_hessian_small: d = " + std::to_string(d) + " exceeds cap " + std::to_string(cap));
    Matrix h(d, d);
    Vector e = Vector::Zero(d);
    for (Index j = 0; j < d; ++j) {
        e[j] = 1.0;
        h.col(j) = hv_rop(model, theta, e, batch, eps, data_weight);
        e[j] = 0.0;
    }
    return h;
}

/// Hessian of E_q[f] with respect to (mu, R) applied to vec(V), V = [v_mu | V_R]:
/// the Monte-Carlo mean of H V [1; eps][1, eps^T]. Uses only products with H.
inline Matrix hv_mu_r(const std::function<Vector(const VecRef& z, const VecRef& w)>& hess_z_vec,
                      const GaussianVariational& q, const Matrix& v, const NoiseDraws& eps) {
    if (q.is_diagonal()) throw InvalidArgument("hv_mu_r: requires a full-factor scale");
    const Index n = q.dim();
    detail::require_shape(v.rows() == n && v.cols() == n + 1, "hv_mu_r: V must be d_z x (d_z + 1)");
    detail::require_shape(eps.dim() == n, "hv_mu_r: noise dimension differs from q");
    const Matrix& r = std::get<FullFactor>(q.scale()).lower;
    Matrix out = Matrix::Zero(n, n + 1);
    Vector aug(n + 1);
    aug[0] = 1.0;
    for (Index m = 0; m < eps.count(); ++m) {
        const auto e = eps.row(m);
        aug.tail(n) = e;
        const Vector z = q.mean() + r * e;
        const Vector hv = hess_z_vec(z, v * aug);
        out.noalias() += hv * aug.transpose();
    }
    return out / static_cast<double>(eps.count());
}

/// Full-data ELBO estimate with `samples` noise rows per datapoint drawn from `seed`.
template <LatentModel M>
double evaluate_elbo(const M& model, const VecRef& theta, std::uint64_t seed, std::size_t samples = 1) {
    const auto all = full_batch(model.num_data());
    if (all.empty()) return model.global_terms(theta).value;
    const NoiseDraws eps = draw_batch_noise(seed, all.size(), samples, model.latent_dim());
    return batch_gradient(model, theta, all, eps).elbo_estimate;
}

}  // namespace sgvi
