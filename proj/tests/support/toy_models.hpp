#pragma once

// Small LatentModel implementations with hand-checkable derivatives.

#include <cmath>
#include <string>

#include "sgvi/sgvi.hpp"

namespace toy {

using sgvi::Index;
using sgvi::Layout;
using sgvi::Matrix;
using sgvi::ValueGrad;
using sgvi::Vector;
using sgvi::VecRef;

/// theta = mu, z = mu + s * eps (s fixed; s = 0 gives a deterministic model),
/// f(z) = 1/2 z^T A z + a^T z + c on every datapoint, optional global
/// term -lambda/2 |theta|^2.
class QuadraticMeanModel {
public:
    QuadraticMeanModel(Matrix A, Vector a, double c = 0.0, double noise = 1.0, std::size_t n = 1, double ridge = 0.0)
        : A_(std::move(A)), a_(std::move(a)), c_(c), s_(noise), n_(n), ridge_(ridge),
          layout_(Layout::sequential({{"mu", a_.size(), 1}})) {}

    Index latent_dim() const { return a_.size(); }
    Index param_dim() const { return a_.size(); }
    const Layout& layout() const { return layout_; }
    std::size_t num_data() const { return n_; }

    Vector param_map(const VecRef& theta, const VecRef& eps, std::size_t) const { return theta + s_ * eps; }
    ValueGrad loss_and_grad_z(const VecRef&, const VecRef& z, std::size_t) const {
        return {0.5 * z.dot(A_ * z) + a_.dot(z) + c_, A_ * z + a_};
    }
    Vector hess_z_vec(const VecRef&, const VecRef&, std::size_t, const VecRef& w) const { return A_ * w; }
    Vector jvp(const VecRef&, const VecRef&, std::size_t, const VecRef& v) const { return v; }
    Vector vjp(const VecRef&, const VecRef&, std::size_t, const VecRef& u) const { return u; }
    ValueGrad explicit_terms(const VecRef&, const VecRef&, std::size_t) const {
        return {0.0, Vector::Zero(param_dim())};
    }
    Vector rop_gradient(const VecRef&, const VecRef& v, const VecRef&, std::size_t) const { return A_ * v; }
    ValueGrad global_terms(const VecRef& theta) const { return {-0.5 * ridge_ * theta.squaredNorm(), -ridge_ * theta}; }
    Vector global_rop(const VecRef&, const VecRef& v) const { return -ridge_ * v; }

private:
    Matrix A_;
    Vector a_;
    double c_, s_;
    std::size_t n_;
    double ridge_;
    Layout layout_;
};

/// theta = sigma (d_z entries), mu = 0, z = sigma * eps, f(z) = 1/2 |z|^2.
/// Diagonal model: d/dsigma E[f] = sigma.
class SigmaOnlyModel {
public:
    explicit SigmaOnlyModel(Index d) : d_(d), layout_(Layout::sequential({{"sigma", d, 1}})) {}

    Index latent_dim() const { return d_; }
    Index param_dim() const { return d_; }
    const Layout& layout() const { return layout_; }
    std::size_t num_data() const { return 1; }

    Vector param_map(const VecRef& theta, const VecRef& eps, std::size_t) const { return theta.cwiseProduct(eps); }
    ValueGrad loss_and_grad_z(const VecRef&, const VecRef& z, std::size_t) const { return {0.5 * z.squaredNorm(), z}; }
    Vector hess_z_vec(const VecRef&, const VecRef&, std::size_t, const VecRef& w) const { return w; }
    Vector jvp(const VecRef&, const VecRef& eps, std::size_t, const VecRef& v) const { return eps.cwiseProduct(v); }
    Vector vjp(const VecRef&, const VecRef& eps, std::size_t, const VecRef& u) const { return eps.cwiseProduct(u); }
    ValueGrad explicit_terms(const VecRef&, const VecRef&, std::size_t) const { return {0.0, Vector::Zero(d_)}; }
    Vector rop_gradient(const VecRef&, const VecRef& v, const VecRef& eps, std::size_t) const {
        return eps.cwiseProduct(eps).cwiseProduct(v);
    }
    ValueGrad global_terms(const VecRef&) const { return {0.0, Vector::Zero(d_)}; }
    Vector global_rop(const VecRef&, const VecRef&) const { return Vector::Zero(d_); }

    sgvi::MeanScale mean_scale(const VecRef& theta, std::size_t) const { return {Vector::Zero(d_), theta}; }
    Vector vjp_mean_scale(const VecRef&, std::size_t, const VecRef&, const VecRef& u_sigma) const { return u_sigma; }

private:
    Index d_;
    Layout layout_;
};

/// theta = [mu | vec(R)] (R column-major, full d_z x d_z), z = mu + R eps and
/// f(z) = sum_j (c4 z_j^4 / 12 + z_j^2 / 2) + b^T z with a coupling term
/// kappa * z_0 * z_1 when d_z >= 2. Exercises the generic (non-diagonal) path.
class FullFactorModel {
public:
    FullFactorModel(Index d, double c4 = 0.3, double kappa = 0.4)
        : d_(d), c4_(c4), kappa_(kappa), b_(Vector::LinSpaced(d, -0.5, 0.5)),
          layout_(Layout::sequential({{"mu", d, 1}, {"R", d, d}})) {}

    Index latent_dim() const { return d_; }
    Index param_dim() const { return d_ + d_ * d_; }
    const Layout& layout() const { return layout_; }
    std::size_t num_data() const { return 1; }

    Matrix R(const VecRef& theta) const { return Eigen::Map<const Matrix>(theta.data() + d_, d_, d_); }

    Vector param_map(const VecRef& theta, const VecRef& eps, std::size_t) const { return theta.head(d_) + R(theta) * eps; }
    ValueGrad loss_and_grad_z(const VecRef&, const VecRef& z, std::size_t) const {
        ValueGrad out{b_.dot(z), b_};
        for (Index j = 0; j < d_; ++j) {
            out.value += c4_ * std::pow(z[j], 4) / 12.0 + 0.5 * z[j] * z[j];
            out.grad[j] += c4_ * std::pow(z[j], 3) / 3.0 + z[j];
        }
        if (d_ >= 2) {
            out.value += kappa_ * z[0] * z[1];
            out.grad[0] += kappa_ * z[1];
            out.grad[1] += kappa_ * z[0];
        }
        return out;
    }
    Vector hess_z_vec(const VecRef&, const VecRef& z, std::size_t, const VecRef& w) const {
        Vector out(d_);
        for (Index j = 0; j < d_; ++j) out[j] = (c4_ * z[j] * z[j] + 1.0) * w[j];
        if (d_ >= 2) {
            out[0] += kappa_ * w[1];
            out[1] += kappa_ * w[0];
        }
        return out;
    }
    Vector jvp(const VecRef&, const VecRef& eps, std::size_t, const VecRef& v) const {
        return v.head(d_) + Eigen::Map<const Matrix>(v.data() + d_, d_, d_) * eps;
    }
    Vector vjp(const VecRef&, const VecRef& eps, std::size_t, const VecRef& u) const {
        Vector out(param_dim());
        out.head(d_) = u;
        Eigen::Map<Matrix>(out.data() + d_, d_, d_) = u * eps.transpose();
        return out;
    }
    ValueGrad explicit_terms(const VecRef&, const VecRef&, std::size_t) const {
        return {0.0, Vector::Zero(param_dim())};
    }
    Vector rop_gradient(const VecRef& theta, const VecRef& v, const VecRef& eps, std::size_t i) const {
        const Vector z = param_map(theta, eps, i);
        return vjp(theta, eps, i, hess_z_vec(theta, z, i, jvp(theta, eps, i, v)));
    }
    ValueGrad global_terms(const VecRef&) const { return {0.0, Vector::Zero(param_dim())}; }
    Vector global_rop(const VecRef&, const VecRef&) const { return Vector::Zero(param_dim()); }

    double c4() const { return c4_; }
    double kappa() const { return kappa_; }
    const Vector& b() const { return b_; }

private:
    Index d_;
    double c4_, kappa_;
    Vector b_;
    Layout layout_;
};

/// theta = T phi + t for an invertible T: every operation is the base
/// model's, pulled back through the affine map.
template <class Base>
class AffineModel {
public:
    AffineModel(const Base& base, Matrix T, Vector t)
        : base_(base), T_(std::move(T)), t_(std::move(t)), layout_(Layout::sequential({{"phi", T_.cols(), 1}})) {}

    Vector to_theta(const VecRef& phi) const { return T_ * phi + t_; }

    Index latent_dim() const { return base_.latent_dim(); }
    Index param_dim() const { return T_.cols(); }
    const Layout& layout() const { return layout_; }
    std::size_t num_data() const { return base_.num_data(); }

    Vector param_map(const VecRef& phi, const VecRef& eps, std::size_t i) const {
        return base_.param_map(to_theta(phi), eps, i);
    }
    ValueGrad loss_and_grad_z(const VecRef& phi, const VecRef& z, std::size_t i) const {
        return base_.loss_and_grad_z(to_theta(phi), z, i);
    }
    Vector hess_z_vec(const VecRef& phi, const VecRef& z, std::size_t i, const VecRef& w) const {
        return base_.hess_z_vec(to_theta(phi), z, i, w);
    }
    Vector jvp(const VecRef& phi, const VecRef& eps, std::size_t i, const VecRef& v) const {
        return base_.jvp(to_theta(phi), eps, i, T_ * v);
    }
    Vector vjp(const VecRef& phi, const VecRef& eps, std::size_t i, const VecRef& u) const {
        return T_.transpose() * base_.vjp(to_theta(phi), eps, i, u);
    }
    ValueGrad explicit_terms(const VecRef& phi, const VecRef& eps, std::size_t i) const {
        ValueGrad e = base_.explicit_terms(to_theta(phi), eps, i);
        return {e.value, T_.transpose() * e.grad};
    }
    Vector rop_gradient(const VecRef& phi, const VecRef& v, const VecRef& eps, std::size_t i) const {
        return T_.transpose() * base_.rop_gradient(to_theta(phi), T_ * v, eps, i);
    }
    ValueGrad global_terms(const VecRef& phi) const {
        ValueGrad g = base_.global_terms(to_theta(phi));
        return {g.value, T_.transpose() * g.grad};
    }
    Vector global_rop(const VecRef& phi, const VecRef& v) const {
        return T_.transpose() * base_.global_rop(to_theta(phi), T_ * v);
    }

private:
    const Base& base_;
    Matrix T_;
    Vector t_;
    Layout layout_;
};

/// Constant integrand: every gradient is zero.
class ConstantModel {
public:
    explicit ConstantModel(Index d) : d_(d), layout_(Layout::sequential({{"mu", d, 1}})) {}
    Index latent_dim() const { return d_; }
    Index param_dim() const { return d_; }
    const Layout& layout() const { return layout_; }
    std::size_t num_data() const { return 4; }
    Vector param_map(const VecRef& theta, const VecRef& eps, std::size_t) const { return theta + eps; }
    ValueGrad loss_and_grad_z(const VecRef&, const VecRef&, std::size_t) const { return {3.0, Vector::Zero(d_)}; }
    Vector hess_z_vec(const VecRef&, const VecRef&, std::size_t, const VecRef&) const { return Vector::Zero(d_); }
    Vector jvp(const VecRef&, const VecRef&, std::size_t, const VecRef& v) const { return v; }
    Vector vjp(const VecRef&, const VecRef&, std::size_t, const VecRef& u) const { return u; }
    ValueGrad explicit_terms(const VecRef&, const VecRef&, std::size_t) const { return {0.0, Vector::Zero(d_)}; }
    Vector rop_gradient(const VecRef&, const VecRef&, const VecRef&, std::size_t) const { return Vector::Zero(d_); }
    ValueGrad global_terms(const VecRef&) const { return {0.0, Vector::Zero(d_)}; }
    Vector global_rop(const VecRef&, const VecRef&) const { return Vector::Zero(d_); }

private:
    Index d_;
    Layout layout_;
};

}  // namespace toy
