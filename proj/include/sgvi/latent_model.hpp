#pragma once

#include <concepts>
#include <cstddef>

#include "sgvi/param_vector.hpp"
#include "sgvi/types.hpp"

namespace sgvi {

/// Per-sample objective of a latent Gaussian model:
///
///   l(theta, eps; x_i) = f(z; x_i) + e(theta, z; x_i),   z = mu(theta) + R(theta) eps
///
/// `f` is the integrand seen through z, `e` collects the parts that depend on
/// theta directly at fixed z (decoder weights, closed-form KL). A dataset-level
/// term r(theta) (regularizer) is added once per objective evaluation.
///
/// Required operations:
///   param_map(theta, eps, i)          z
///   loss_and_grad_z(theta, z, i)      f and g = grad_z f
///   hess_z_vec(theta, z, i, w)        (grad_z^2 f) w
///   jvp(theta, eps, i, v)             d(mu + R eps)/d theta . v
///   vjp(theta, eps, i, u)             u^T . d(mu + R eps)/d theta
///   explicit_terms(theta, eps, i)     e and its theta-gradient at fixed z
///   rop_gradient(theta, v, eps, i)    directional derivative along v of the
///                                     full per-sample theta-gradient
///   global_terms(theta), global_rop(theta, v)
template <class M>
concept LatentModel = requires(const M& m, const Vector& theta, const Vector& v, std::size_t i) {
    { m.latent_dim() } -> std::convertible_to<Index>;
    { m.param_dim() } -> std::convertible_to<Index>;
    { m.layout() } -> std::convertible_to<const Layout&>;
    { m.num_data() } -> std::convertible_to<std::size_t>;
    { m.param_map(theta, v, i) } -> std::convertible_to<Vector>;
    { m.loss_and_grad_z(theta, v, i) } -> std::same_as<ValueGrad>;
    { m.hess_z_vec(theta, v, i, v) } -> std::convertible_to<Vector>;
    { m.jvp(theta, v, i, v) } -> std::convertible_to<Vector>;
    { m.vjp(theta, v, i, v) } -> std::convertible_to<Vector>;
    { m.explicit_terms(theta, v, i) } -> std::same_as<ValueGrad>;
    { m.rop_gradient(theta, v, v, i) } -> std::convertible_to<Vector>;
    { m.global_terms(theta) } -> std::same_as<ValueGrad>;
    { m.global_rop(theta, v) } -> std::convertible_to<Vector>;
};

struct MeanScale {
    Vector mean;
    Vector sigma;
};

/// Models whose q is diagonal: expose (mu, sigma) and the adjoint of their
/// Jacobians separately so the estimator never forms a d_z x d_z matrix.
template <class M>
concept DiagonalLatentModel = LatentModel<M> && requires(const M& m, const Vector& theta, const Vector& u, std::size_t i) {
    { m.mean_scale(theta, i) } -> std::same_as<MeanScale>;
    { m.vjp_mean_scale(theta, i, u, u) } -> std::convertible_to<Vector>;
};

/// Optional fused per-sample value and theta-gradient.
template <class M>
concept FusedGradientModel = LatentModel<M> && requires(const M& m, const Vector& theta, const Vector& eps, std::size_t i) {
    { m.sample_value_and_grad(theta, eps, i) } -> std::same_as<ValueGrad>;
};

/// Optional projection onto the feasible parameter set after each update.
template <class M>
concept ProjectedModel = requires(const M& m, Vector& theta) { m.project(theta); };

}  // namespace sgvi
