#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <memory>
#include <numbers>
#include <string>
#include <utility>

#include "sgvi/gaussian.hpp"
#include "sgvi/io/datasets.hpp"
#include "sgvi/latent_model.hpp"
#include "sgvi/models/logistic.hpp"
#include "sgvi/param_vector.hpp"
#include "sgvi/rng.hpp"

namespace sgvi {

enum class Likelihood { bernoulli, gaussian };

struct VAEConfig {
    Index input_dim = 0;
    Index hidden_dim = 0;
    Index latent_dim = 0;
    Likelihood likelihood = Likelihood::bernoulli;
    double shrinkage = 0.001;     // L2 coefficient on decoder weights W4, W5
    double obs_variance = 1.0;    // Gaussian likelihood only
};

/// Intermediates of one forward pass, consumed by backward and the R-operator.
struct VAECache {
    Vector he, mu, s3, sigma, eps, z, hd, s5, y;
    std::uint64_t theta_tag = 0;
    std::uint64_t x_tag = 0;
};

namespace detail {

inline std::uint64_t fingerprint(const double* p, Index n) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (Index i = 0; i < n; ++i) {
        std::uint64_t bits;
        std::memcpy(&bits, p + i, sizeof bits);
        h = splitmix64(h ^ bits);
    }
    return h;
}

inline Vector tanh_vec(const Vector& s) { return s.array().tanh().matrix(); }

inline Vector sigmoid_vec(const Vector& s) {
    Vector y(s.size());
    for (Index i = 0; i < s.size(); ++i) y[i] = sigmoid(s[i]);
    return y;
}

}  // namespace detail

/// Variational auto-encoder with one tanh hidden layer on each side:
///
///   h_e = tanh(W1 x + b1),  mu = W2 h_e + b2,  sigma = exp((W3 h_e + b3) / 2)
///   z = mu + sigma * eps,   h_d = tanh(W4 z + b4),  y = sigmoid(W5 h_d + b5)
///
/// Per-datapoint objective: log p(x | z) - KL(q(z|x) || N(0, I))
///                          - shrinkage / 2 (|W4|^2 + |W5|^2).
class VAEModel {
public:
    VAEModel(VAEConfig cfg, std::shared_ptr<const DenseDataset> data)
        : cfg_(cfg), data_(std::move(data)), layout_(make_layout(cfg)) {
        if (cfg_.input_dim < 1 || cfg_.hidden_dim < 1 || cfg_.latent_dim < 1)
            throw InvalidArgument("VAEModel: layer sizes must be positive");
        if (cfg_.obs_variance <= 0.0) throw InvalidArgument("VAEModel: observation variance must be positive");
        if (data_) {
            if (data_->dim() != cfg_.input_dim) throw ShapeError("VAEModel: dataset dimension differs from input_dim");
            if (cfg_.likelihood == Likelihood::bernoulli && !data_->in_unit_interval())
                throw DataError("VAEModel: Bernoulli likelihood requires inputs in [0, 1]");
        }
        for (const char* n : {"W1", "b1", "W2", "b2", "W3", "b3", "W4", "b4", "W5", "b5"}) slices_.push_back(layout_.find(n));
    }

    static Layout make_layout(const VAEConfig& c) {
        const Index d = c.input_dim, h = c.hidden_dim, k = c.latent_dim;
        return Layout::sequential({{"W1", h, d}, {"b1", h, 1}, {"W2", k, h}, {"b2", k, 1}, {"W3", k, h},
                                   {"b3", k, 1}, {"W4", h, k}, {"b4", h, 1}, {"W5", d, h}, {"b5", d, 1}});
    }

    const VAEConfig& config() const { return cfg_; }
    Index latent_dim() const { return cfg_.latent_dim; }
    Index param_dim() const { return layout_.size(); }
    const Layout& layout() const { return layout_; }
    std::size_t num_data() const { return data_ ? data_->size() : 0; }

    /// Weights ~ N(0, init_scale^2), biases 0.
    Vector initialize(double init_scale, std::uint64_t seed) const {
        Vector theta = Vector::Zero(param_dim());
        Rng rng(seed);
        for (int l = 0; l < 5; ++l) {
            const Slice& w = slices_[2 * l];
            for (Index j = 0; j < w.size(); ++j) theta[w.offset + j] = init_scale * rng.normal();
        }
        return theta;
    }

    // ---- forward / backward / R-operator -------------------------------

    VAECache forward(const VecRef& theta, const VecRef& x, const VecRef& eps) const {
        check_inputs(theta, x, eps);
        const auto w = unpack(theta);
        VAECache c;
        c.he = detail::tanh_vec(w.W1 * x + w.b1);
        require_finite(c.he, "h_e");
        c.mu = w.W2 * c.he + w.b2;
        c.s3 = w.W3 * c.he + w.b3;
        c.sigma = (0.5 * c.s3.array()).exp().matrix();
        require_finite(c.mu, "mu_e");
        require_finite(c.sigma, "sigma_e");
        c.eps = eps;
        c.z = c.mu + c.sigma.cwiseProduct(eps);
        decode_into(w, c);
        c.theta_tag = detail::fingerprint(theta.data(), theta.size());
        c.x_tag = detail::fingerprint(x.data(), x.size());
        return c;
    }

    /// Single-sample lower bound from a forward cache.
    double elbo(const VecRef& theta, const VecRef& x, const VAECache& c) const {
        return reconstruction(x, c.s5, c.y) - kl(c) - penalty(theta);
    }

    double reconstruction(const VecRef& x, const Vector& s5, const Vector& y) const {
        double r = 0.0;
        if (cfg_.likelihood == Likelihood::bernoulli) {
            for (Index j = 0; j < x.size(); ++j) r += x[j] * log_sigmoid(s5[j]) + (1.0 - x[j]) * log_sigmoid(-s5[j]);
        } else {
            const double v = cfg_.obs_variance;
            r = -0.5 * (x - y).squaredNorm() / v - 0.5 * static_cast<double>(x.size()) * std::log(2.0 * std::numbers::pi * v);
        }
        return r;
    }

    /// Gradient of the single-sample bound with respect to theta.
    Vector backward(const VecRef& theta, const VecRef& x, const VAECache& c) const {
        if (c.theta_tag != detail::fingerprint(theta.data(), theta.size()) ||
            c.x_tag != detail::fingerprint(x.data(), x.size()) || c.y.size() != cfg_.input_dim)
            throw InvalidState("VAEModel::backward: cache does not come from forward on this (theta, x)");
        const auto w = unpack(theta);
        Vector grad = Vector::Zero(param_dim());
        const Vector gz = decoder_backward(w, x, c, &grad);
        const Vector d2 = gz - c.mu;
        const Vector d3 = 0.5 * (gz.cwiseProduct(c.z - c.mu).array() + 1.0 - c.sigma.array().square()).matrix();
        encoder_backward(w, x, c.he, d2, d3, grad);
        return grad;
    }

    /// Directional derivative of backward()'s gradient along v (exact H v for one sample).
    Vector rop(const VecRef& theta, const VecRef& v, const VecRef& x, const VecRef& eps) const {
        detail::require_shape(v.size() == param_dim(), "VAEModel::rop: direction length differs from parameter length");
        const VAECache c = forward(theta, x, eps);
        const auto w = unpack(theta);
        const auto r = unpack(v);
        const double lam = cfg_.shrinkage;

        // forward R pass
        const Vector dhe = (1.0 - c.he.array().square()).matrix();
        const Vector rhe = dhe.cwiseProduct(r.W1 * x + r.b1);
        const Vector rmu = r.W2 * c.he + w.W2 * rhe + r.b2;
        const Vector rs3 = r.W3 * c.he + w.W3 * rhe + r.b3;
        const Vector rsigma = 0.5 * c.sigma.cwiseProduct(rs3);
        const Vector rz = rmu + rsigma.cwiseProduct(c.eps);
        const Vector dhd = (1.0 - c.hd.array().square()).matrix();
        const Vector rhd = dhd.cwiseProduct(r.W4 * c.z + w.W4 * rz + r.b4);
        const Vector rs5 = r.W5 * c.hd + w.W5 * rhd + r.b5;

        // backward pass and its R counterpart
        Vector d5, rd5;
        output_delta(x, c.y, rs5, d5, rd5);

        Vector out(param_dim());
        auto o = unpack_mut(out);
        o.W5 = rd5 * c.hd.transpose() + d5 * rhd.transpose() - lam * r.W5;
        o.b5 = rd5;
        const Vector gh = w.W5.transpose() * d5;
        const Vector rgh = r.W5.transpose() * d5 + w.W5.transpose() * rd5;
        const Vector d4 = gh.cwiseProduct(dhd);
        const Vector rd4 = rgh.cwiseProduct(dhd) - 2.0 * gh.cwiseProduct(c.hd).cwiseProduct(rhd);
        o.W4 = rd4 * c.z.transpose() + d4 * rz.transpose() - lam * r.W4;
        o.b4 = rd4;
        const Vector gz = w.W4.transpose() * d4;
        const Vector rgz = r.W4.transpose() * d4 + w.W4.transpose() * rd4;

        const Vector se = c.sigma.cwiseProduct(c.eps);
        const Vector d2 = gz - c.mu;
        const Vector rd2 = rgz - rmu;
        const Vector d3 = 0.5 * (gz.cwiseProduct(se).array() + 1.0 - c.sigma.array().square()).matrix();
        const Vector rd3 = 0.5 * (rgz.cwiseProduct(se) + gz.cwiseProduct(rsigma).cwiseProduct(c.eps) -
                                  c.sigma.array().square().matrix().cwiseProduct(rs3));
        o.W3 = rd3 * c.he.transpose() + d3 * rhe.transpose();
        o.b3 = rd3;
        o.W2 = rd2 * c.he.transpose() + d2 * rhe.transpose();
        o.b2 = rd2;
        const Vector ge = w.W2.transpose() * d2 + w.W3.transpose() * d3;
        const Vector rge = r.W2.transpose() * d2 + w.W2.transpose() * rd2 + r.W3.transpose() * d3 + w.W3.transpose() * rd3;
        const Vector rd1 = rge.cwiseProduct(dhe) - 2.0 * ge.cwiseProduct(c.he).cwiseProduct(rhe);
        o.W1 = rd1 * x.transpose();
        o.b1 = rd1;
        return out;
    }

    /// Decodes a side x side grid of latent points z = (Phi^-1(u_col), Phi^-1(u_row)),
    /// u_k = (k + 0.5) / side. Rows of the result are images in row-major cell order.
    RowMatrix generate(const VecRef& theta, Index side) const {
        if (cfg_.latent_dim != 2) throw Unsupported("VAEModel::generate: grid generation needs a 2-D latent space");
        if (side < 1) throw InvalidArgument("VAEModel::generate: side must be positive");
        const Vector u = grid_latents(side);
        const auto w = unpack(theta);
        RowMatrix images(side * side, cfg_.input_dim);
        Vector z(2);
        for (Index r = 0; r < side; ++r) {
            for (Index c = 0; c < side; ++c) {
                z << u[c], u[r];
                images.row(r * side + c) = decode_mean(w, z).transpose();
            }
        }
        return images;
    }

    /// Latent coordinates of a grid row: Phi^-1((k + 0.5) / side), mirrored exactly.
    static Vector grid_latents(Index side) {
        Vector u(side);
        for (Index k = 0; k < (side + 1) / 2; ++k) {
            u[k] = normal_quantile((static_cast<double>(k) + 0.5) / static_cast<double>(side));
            u[side - 1 - k] = -u[k];
        }
        if (side % 2 == 1) u[side / 2] = 0.0;
        return u;
    }

    Vector decode(const VecRef& theta, const VecRef& z) const {
        detail::require_shape(z.size() == cfg_.latent_dim, "VAEModel::decode: latent length mismatch");
        return decode_mean(unpack(theta), z);
    }

    // ---- LatentModel contract -------------------------------------------

    Vector param_map(const VecRef& theta, const VecRef& eps, std::size_t i) const {
        const auto w = unpack(theta);
        const Enc e = encode(w, x_at(i));
        return e.mu + e.sigma.cwiseProduct(eps);
    }

    /// f = log p(x_i | z), g = grad_z f.
    ValueGrad loss_and_grad_z(const VecRef& theta, const VecRef& z, std::size_t i) const {
        const auto w = unpack(theta);
        const auto x = x_at(i);
        VAECache c;
        c.z = z;
        decode_into(w, c);
        ValueGrad out{reconstruction(x, c.s5, c.y), {}};
        out.grad = decoder_backward(w, x, c, nullptr);
        return out;
    }

    Vector hess_z_vec(const VecRef& theta, const VecRef& z, std::size_t i, const VecRef& wv) const {
        const auto w = unpack(theta);
        const auto x = x_at(i);
        VAECache c;
        c.z = z;
        decode_into(w, c);
        const Vector dhd = (1.0 - c.hd.array().square()).matrix();
        const Vector rhd = dhd.cwiseProduct(w.W4 * wv);
        const Vector rs5 = w.W5 * rhd;
        Vector d5, rd5;
        output_delta(x, c.y, rs5, d5, rd5);
        const Vector gh = w.W5.transpose() * d5;
        const Vector rgh = w.W5.transpose() * rd5;
        const Vector rd4 = rgh.cwiseProduct(dhd) - 2.0 * gh.cwiseProduct(c.hd).cwiseProduct(rhd);
        return w.W4.transpose() * rd4;
    }

    Vector jvp(const VecRef& theta, const VecRef& eps, std::size_t i, const VecRef& v) const {
        const auto w = unpack(theta);
        const auto r = unpack(v);
        const auto x = x_at(i);
        const Enc e = encode(w, x);
        const Vector rhe = (1.0 - e.he.array().square()).matrix().cwiseProduct(r.W1 * x + r.b1);
        const Vector rmu = r.W2 * e.he + w.W2 * rhe + r.b2;
        const Vector rs3 = r.W3 * e.he + w.W3 * rhe + r.b3;
        return rmu + (0.5 * e.sigma.cwiseProduct(rs3)).cwiseProduct(eps);
    }

    Vector vjp(const VecRef& theta, const VecRef& eps, std::size_t i, const VecRef& u) const {
        const auto w = unpack(theta);
        const auto x = x_at(i);
        const Enc e = encode(w, x);
        Vector grad = Vector::Zero(param_dim());
        encoder_backward(w, x, e.he, u, 0.5 * u.cwiseProduct(e.sigma).cwiseProduct(eps), grad);
        return grad;
    }

    /// -KL - penalty, plus the decoder gradient at fixed z.
    ValueGrad explicit_terms(const VecRef& theta, const VecRef& eps, std::size_t i) const {
        const auto x = x_at(i);
        const VAECache c = forward(theta, x, eps);
        const auto w = unpack(theta);
        ValueGrad out{-kl(c) - penalty(theta), Vector::Zero(param_dim())};
        decoder_backward(w, x, c, &out.grad);
        const Vector d3 = 0.5 * (1.0 - c.sigma.array().square()).matrix();
        encoder_backward(w, x, c.he, -c.mu, d3, out.grad);
        return out;
    }

    MeanScale mean_scale(const VecRef& theta, std::size_t i) const {
        Enc e = encode(unpack(theta), x_at(i));
        return {std::move(e.mu), std::move(e.sigma)};
    }

    Vector vjp_mean_scale(const VecRef& theta, std::size_t i, const VecRef& u_mean, const VecRef& u_sigma) const {
        const auto w = unpack(theta);
        const auto x = x_at(i);
        const Enc e = encode(w, x);
        Vector grad = Vector::Zero(param_dim());
        encoder_backward(w, x, e.he, u_mean, 0.5 * u_sigma.cwiseProduct(e.sigma), grad);
        return grad;
    }

    ValueGrad sample_value_and_grad(const VecRef& theta, const VecRef& eps, std::size_t i) const {
        const auto x = x_at(i);
        const VAECache c = forward(theta, x, eps);
        return {elbo(theta, x, c), backward(theta, x, c)};
    }

    Vector rop_gradient(const VecRef& theta, const VecRef& v, const VecRef& eps, std::size_t i) const {
        return rop(theta, v, x_at(i), eps);
    }

    ValueGrad global_terms(const VecRef&) const { return {0.0, Vector::Zero(param_dim())}; }
    Vector global_rop(const VecRef&, const VecRef&) const { return Vector::Zero(param_dim()); }

private:
    using CMap = Eigen::Map<const Matrix>;
    using CVMap = Eigen::Map<const Vector>;
    using MMap = Eigen::Map<Matrix>;
    using MVMap = Eigen::Map<Vector>;

    template <class MatMap, class VecMap>
    struct Params {
        MatMap W1;
        VecMap b1;
        MatMap W2;
        VecMap b2;
        MatMap W3;
        VecMap b3;
        MatMap W4;
        VecMap b4;
        MatMap W5;
        VecMap b5;
    };

    struct Enc {
        Vector he, mu, sigma;
    };

    Params<CMap, CVMap> unpack(const VecRef& t) const {
        detail::require_shape(t.size() == param_dim(), "VAEModel: parameter length " + std::to_string(t.size()) +
                                                           " differs from layout size " + std::to_string(param_dim()));
        const double* p = t.data();
        auto m = [&](int k) { return CMap(p + slices_[k].offset, slices_[k].rows, slices_[k].cols); };
        auto v = [&](int k) { return CVMap(p + slices_[k].offset, slices_[k].rows); };
        return {m(0), v(1), m(2), v(3), m(4), v(5), m(6), v(7), m(8), v(9)};
    }

    Params<MMap, MVMap> unpack_mut(Vector& t) const {
        double* p = t.data();
        auto m = [&](int k) { return MMap(p + slices_[k].offset, slices_[k].rows, slices_[k].cols); };
        auto v = [&](int k) { return MVMap(p + slices_[k].offset, slices_[k].rows); };
        return {m(0), v(1), m(2), v(3), m(4), v(5), m(6), v(7), m(8), v(9)};
    }

    VecRef x_at(std::size_t i) const {
        if (!data_ || i >= data_->size()) throw ShapeError("VAEModel: datapoint index out of range");
        return data_->row(i);
    }

    void check_inputs(const VecRef& theta, const VecRef& x, const VecRef& eps) const {
        detail::require_shape(theta.size() == param_dim(), "VAEModel: parameter length mismatch");
        detail::require_shape(x.size() == cfg_.input_dim, "VAEModel: input length mismatch");
        detail::require_shape(eps.size() == cfg_.latent_dim, "VAEModel: noise length mismatch");
    }

    static void require_finite(const Vector& v, const char* layer) {
        if (!v.allFinite()) throw NumericError(std::string("VAEModel: non-finite activations in layer ") + layer);
    }

    Enc encode(const Params<CMap, CVMap>& w, const VecRef& x) const {
        Enc e;
        e.he = detail::tanh_vec(w.W1 * x + w.b1);
        e.mu = w.W2 * e.he + w.b2;
        e.sigma = (0.5 * (w.W3 * e.he + w.b3).array()).exp().matrix();
        return e;
    }

    void decode_into(const Params<CMap, CVMap>& w, VAECache& c) const {
        c.hd = detail::tanh_vec(w.W4 * c.z + w.b4);
        require_finite(c.hd, "h_d");
        c.s5 = w.W5 * c.hd + w.b5;
        require_finite(c.s5, "y");
        c.y = detail::sigmoid_vec(c.s5);
    }

    Vector decode_mean(const Params<CMap, CVMap>& w, const VecRef& z) const {
        const Vector hd = detail::tanh_vec(w.W4 * z + w.b4);
        return detail::sigmoid_vec(w.W5 * hd + w.b5);
    }

    double kl(const VAECache& c) const {
        return 0.5 * (c.mu.array().square() + c.s3.array().exp() - c.s3.array() - 1.0).sum();
    }

    double penalty(const VecRef& theta) const {
        const double* p = theta.data();
        const Slice& w4 = slices_[6];
        const Slice& w5 = slices_[8];
        return 0.5 * cfg_.shrinkage *
               (CVMap(p + w4.offset, w4.size()).squaredNorm() + CVMap(p + w5.offset, w5.size()).squaredNorm());
    }

    // dl/ds5 and its R-image for a given R{s5}.
    void output_delta(const VecRef& x, const Vector& y, const Vector& rs5, Vector& d5, Vector& rd5) const {
        const Vector dy = y.cwiseProduct((1.0 - y.array()).matrix());
        const Vector ry = dy.cwiseProduct(rs5);
        if (cfg_.likelihood == Likelihood::bernoulli) {
            d5 = x - y;
            rd5 = -ry;
        } else {
            const double v = cfg_.obs_variance;
            const Vector diff = x - y;
            d5 = diff.cwiseProduct(dy) / v;
            rd5 = (-ry.cwiseProduct(dy) + diff.cwiseProduct((1.0 - 2.0 * y.array()).matrix()).cwiseProduct(ry)) / v;
        }
    }

    // Decoder gradients (into grad when given) and grad_z log p(x|z).
    Vector decoder_backward(const Params<CMap, CVMap>& w, const VecRef& x, const VAECache& c, Vector* grad) const {
        Vector d5;
        if (cfg_.likelihood == Likelihood::bernoulli) {
            d5 = x - c.y;
        } else {
            d5 = (x - c.y).cwiseProduct(c.y.cwiseProduct((1.0 - c.y.array()).matrix())) / cfg_.obs_variance;
        }
        const Vector d4 = (w.W5.transpose() * d5).cwiseProduct((1.0 - c.hd.array().square()).matrix());
        if (grad) {
            auto g = unpack_mut(*grad);
            g.W5 = d5 * c.hd.transpose() - cfg_.shrinkage * w.W5;
            g.b5 = d5;
            g.W4 = d4 * c.z.transpose() - cfg_.shrinkage * w.W4;
            g.b4 = d4;
        }
        return w.W4.transpose() * d4;
    }

    // Accumulates encoder gradients given dl/dmu (d2) and dl/ds3 (d3).
    void encoder_backward(const Params<CMap, CVMap>& w, const VecRef& x, const Vector& he, const VecRef& d2,
                          const VecRef& d3, Vector& grad) const {
        auto g = unpack_mut(grad);
        g.W3 += d3 * he.transpose();
        g.b3 += d3;
        g.W2 += d2 * he.transpose();
        g.b2 += d2;
        const Vector d1 = (w.W2.transpose() * d2 + w.W3.transpose() * d3).cwiseProduct((1.0 - he.array().square()).matrix());
        g.W1 += d1 * x.transpose();
        g.b1 += d1;
    }

    VAEConfig cfg_;
    std::shared_ptr<const DenseDataset> data_;
    Layout layout_;
    std::vector<Slice> slices_;
};

}  // namespace sgvi
