#pragma once

#include <cmath>
#include <memory>
#include <span>
#include <utility>

#include "sgvi/estimators.hpp"
#include "sgvi/io/datasets.hpp"
#include "sgvi/latent_model.hpp"
#include "sgvi/param_vector.hpp"

namespace sgvi {

inline double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

/// log(sigmoid(x)) without overflow.
inline double log_sigmoid(double x) { return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); }

/// How the scale slice of theta maps to sigma.
enum class ScaleParam {
    log_sigma,  // sigma = exp(rho), unconstrained
    sigma,      // sigma stored directly, kept positive by projection
};

/// Variational Bayesian logistic regression with a factorized Gaussian
/// posterior over the coefficients and the prior covariance eliminated in
/// closed form. Objective:
///
///   L(mu, sigma) = E[ sum_i log sigmoid(y_i x_i^T (mu + sigma * eps)) ]
///                  + 1/2 sum_j log(sigma_j^2 / (sigma_j^2 + mu_j^2))
///
/// theta = [mu (D) | s (D)] with s = rho = log sigma by default.
class LogisticVBModel {
public:
    static constexpr double min_sigma = 1e-10;

    explicit LogisticVBModel(std::shared_ptr<const SparseDataset> data, ScaleParam param = ScaleParam::log_sigma)
        : data_(std::move(data)), param_(param) {
        if (!data_) throw InvalidArgument("LogisticVBModel: null dataset");
        dim_ = data_->n_features;
        layout_ = Layout::sequential({{"mu", dim_, 1}, {param_ == ScaleParam::log_sigma ? "rho" : "sigma", dim_, 1}});
    }

    Index latent_dim() const { return dim_; }
    Index param_dim() const { return 2 * dim_; }
    const Layout& layout() const { return layout_; }
    std::size_t num_data() const { return data_->size(); }
    const SparseDataset& data() const { return *data_; }
    ScaleParam scale_param() const { return param_; }

    /// mu = 0, sigma = sigma0.
    Vector initial_theta(double sigma0 = 1.0) const {
        Vector theta = Vector::Zero(param_dim());
        theta.tail(dim_).setConstant(param_ == ScaleParam::log_sigma ? std::log(sigma0) : sigma0);
        return theta;
    }

    Vector sigma(const VecRef& theta) const {
        if (param_ == ScaleParam::log_sigma) return theta.tail(dim_).array().exp().matrix();
        return theta.tail(dim_);
    }

    // d sigma / d s, elementwise.
    Vector sigma_slope(const VecRef& theta) const {
        if (param_ == ScaleParam::log_sigma) return theta.tail(dim_).array().exp().matrix();
        return Vector::Ones(dim_);
    }

    void project(Vector& theta) const {
        if (param_ == ScaleParam::sigma) theta.tail(dim_) = theta.tail(dim_).cwiseMax(min_sigma);
    }

    Vector param_map(const VecRef& theta, const VecRef& eps, std::size_t) const {
        return theta.head(dim_) + sigma(theta).cwiseProduct(eps);
    }

    ValueGrad loss_and_grad_z(const VecRef&, const VecRef& z, std::size_t i) const {
        const double y = data_->labels[i];
        const double m = y * data_->dot(i, z);
        ValueGrad out{log_sigmoid(m), Vector::Zero(dim_)};
        data_->axpy(i, y * sigmoid(-m), out.grad);
        return out;
    }

    Vector hess_z_vec(const VecRef&, const VecRef& z, std::size_t i, const VecRef& w) const {
        const double s = sigmoid(data_->dot(i, z) * data_->labels[i]);
        Vector out = Vector::Zero(dim_);
        data_->axpy(i, -s * (1.0 - s) * data_->dot(i, w), out);
        return out;
    }

    Vector jvp(const VecRef& theta, const VecRef& eps, std::size_t, const VecRef& v) const {
        return v.head(dim_) + eps.cwiseProduct(sigma_slope(theta)).cwiseProduct(v.tail(dim_));
    }

    Vector vjp(const VecRef& theta, const VecRef& eps, std::size_t, const VecRef& u) const {
        Vector out(param_dim());
        out.head(dim_) = u;
        out.tail(dim_) = u.cwiseProduct(eps).cwiseProduct(sigma_slope(theta));
        return out;
    }

    ValueGrad explicit_terms(const VecRef&, const VecRef&, std::size_t) const {
        return {0.0, Vector::Zero(param_dim())};
    }

    MeanScale mean_scale(const VecRef& theta, std::size_t) const { return {theta.head(dim_), sigma(theta)}; }

    Vector vjp_mean_scale(const VecRef& theta, std::size_t, const VecRef& u_mean, const VecRef& u_sigma) const {
        Vector out(param_dim());
        out.head(dim_) = u_mean;
        out.tail(dim_) = u_sigma.cwiseProduct(sigma_slope(theta));
        return out;
    }

    /// Sparse fused path: touches only the nonzeros of x_i besides the output.
    ValueGrad sample_value_and_grad(const VecRef& theta, const VecRef& eps, std::size_t i) const {
        const double y = data_->labels[i];
        const auto mu = theta.head(dim_);
        const auto s = theta.tail(dim_);
        double dot = 0.0;
        for (std::size_t k = data_->row_begin(i); k < data_->row_end(i); ++k) {
            const Index j = data_->indices[k];
            dot += data_->values[k] * (mu[j] + sigma_at(s[j]) * eps[j]);
        }
        const double m = y * dot;
        const double c = y * sigmoid(-m);
        ValueGrad out{log_sigmoid(m), Vector::Zero(param_dim())};
        for (std::size_t k = data_->row_begin(i); k < data_->row_end(i); ++k) {
            const Index j = data_->indices[k];
            const double gj = c * data_->values[k];
            out.grad[j] += gj;
            out.grad[dim_ + j] += gj * eps[j] * slope_at(s[j]);
        }
        return out;
    }

    Vector rop_gradient(const VecRef& theta, const VecRef& v, const VecRef& eps, std::size_t i) const {
        const Vector z = param_map(theta, eps, i);
        const double y = data_->labels[i];
        const double m = y * data_->dot(i, z);
        const double s = sigmoid(m);
        const Vector a = jvp(theta, eps, i, v);
        Vector g = Vector::Zero(dim_);
        data_->axpy(i, y * sigmoid(-m), g);
        Vector rg = Vector::Zero(dim_);
        data_->axpy(i, -s * (1.0 - s) * data_->dot(i, a), rg);

        Vector out(param_dim());
        out.head(dim_) = rg;
        const Vector slope = sigma_slope(theta);
        out.tail(dim_) = rg.cwiseProduct(eps).cwiseProduct(slope);
        if (param_ == ScaleParam::log_sigma) {
            // R{d sigma / d rho} = sigma * v_rho
            out.tail(dim_) += g.cwiseProduct(eps).cwiseProduct(slope).cwiseProduct(v.tail(dim_));
        }
        return out;
    }

    /// 1/2 sum_j log(sigma_j^2 / (sigma_j^2 + mu_j^2)).
    ValueGrad global_terms(const VecRef& theta) const {
        ValueGrad out{0.0, Vector::Zero(param_dim())};
        for (Index j = 0; j < dim_; ++j) {
            const double mu = theta[j];
            const double sg = sigma_at(theta[dim_ + j]);
            const double s2 = sg * sg;
            const double q = s2 + mu * mu;
            out.value += 0.5 * (std::log(s2) - std::log(q));
            out.grad[j] = -mu / q;
            out.grad[dim_ + j] = param_ == ScaleParam::log_sigma ? mu * mu / q : mu * mu / (sg * q);
        }
        return out;
    }

    Vector global_rop(const VecRef& theta, const VecRef& v) const {
        Vector out(param_dim());
        for (Index j = 0; j < dim_; ++j) {
            const double mu = theta[j];
            const double sg = sigma_at(theta[dim_ + j]);
            const double s2 = sg * sg;
            const double q = s2 + mu * mu;
            const double q2 = q * q;
            const double h_mm = (mu * mu - s2) / q2;
            double h_ms, h_ss;
            if (param_ == ScaleParam::log_sigma) {
                h_ms = 2.0 * mu * s2 / q2;
                h_ss = -2.0 * mu * mu * s2 / q2;
            } else {
                h_ms = 2.0 * mu * sg / q2;
                h_ss = -1.0 / s2 - (mu * mu - s2) / q2;
            }
            out[j] = h_mm * v[j] + h_ms * v[dim_ + j];
            out[dim_ + j] = h_ms * v[j] + h_ss * v[dim_ + j];
        }
        return out;
    }

    /// Misclassified rows of `data` under the posterior-mean classifier sign(x^T mu).
    std::size_t misclassified(const VecRef& theta, const SparseDataset& data) const {
        std::size_t errors = 0;
        const auto mu = theta.head(dim_);
        for (std::size_t i = 0; i < data.size(); ++i) {
            double s = 0.0;
            for (std::size_t k = data.row_begin(i); k < data.row_end(i); ++k)
                if (data.indices[k] < dim_) s += data.values[k] * mu[data.indices[k]];
            const int predicted = s >= 0.0 ? 1 : -1;
            if (predicted != data.labels[i]) ++errors;
        }
        return errors;
    }

private:
    double sigma_at(double s) const { return param_ == ScaleParam::log_sigma ? std::exp(s) : s; }
    double slope_at(double s) const { return param_ == ScaleParam::log_sigma ? std::exp(s) : 1.0; }

    std::shared_ptr<const SparseDataset> data_;
    ScaleParam param_;
    Index dim_ = 0;
    Layout layout_;
};

/// Lower bound and its theta-gradient on `batch` through the diagonal estimator.
inline GradientEstimate logistic_elbo(const LogisticVBModel& model, const VecRef& theta, Batch batch,
                                      const NoiseDraws& eps, double data_weight = 1.0) {
    return mc_gradient_diag(model, theta, batch, eps, data_weight);
}

}  // namespace sgvi
