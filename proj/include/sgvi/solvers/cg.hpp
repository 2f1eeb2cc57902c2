#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>

#include "sgvi/errors.hpp"
#include "sgvi/rng.hpp"
#include "sgvi/types.hpp"

namespace sgvi {

enum class Preconditioner { identity, jacobi };

struct CGConfig {
    int max_iters = 10;           // K
    double rel_tolerance = 1e-4;  // e
    double damping = 0.0;         // lambda, solves (A + lambda I) x = b
    Preconditioner preconditioner = Preconditioner::identity;

    void validate() const {
        if (max_iters < 1) throw InvalidArgument("CGConfig: max_iters must be >= 1");
        if (!(rel_tolerance > 0.0)) throw InvalidArgument("CGConfig: rel_tolerance must be > 0");
        if (!(damping >= 0.0)) throw InvalidArgument("CGConfig: damping must be >= 0");
    }
};

struct CGResult {
    Vector x;
    int iters = 0;
    double residual = 0.0;            // |r| / |b|
    bool negative_curvature = false;
};

using LinearOperator = std::function<Vector(const VecRef&)>;

/// Iterations that guarantee A-norm relative error <= e for condition number c:
/// ceil(sqrt(c) / 2 * ln(2 / e)), from |e_K|_A <= 2 exp(-2K / sqrt(c)) |e_0|_A.
inline int cg_iterations_for(double condition, double rel_tolerance) {
    return static_cast<int>(std::ceil(0.5 * std::sqrt(condition) * std::log(2.0 / rel_tolerance)));
}

/// Preconditioned conjugate gradient on (A + lambda I) x = b, truncated after
/// min(K, d) iterations or once |r| / |b| <= e.
///
/// When p^T A p <= 0 the solve stops and returns the current iterate (zero if
/// it happens on the first direction) with the flag set.
inline CGResult cg_solve(const LinearOperator& apply, const VecRef& b, const CGConfig& cfg,
                         const Vector* jacobi_diag = nullptr) {
    cfg.validate();
    const Index d = b.size();
    CGResult out{Vector::Zero(d), 0, 0.0, false};
    const double bnorm = b.norm();
    if (!std::isfinite(bnorm)) throw NumericError("cg_solve: right-hand side is not finite");
    if (bnorm == 0.0) return out;

    const bool precondition = cfg.preconditioner == Preconditioner::jacobi;
    if (precondition && (!jacobi_diag || jacobi_diag->size() != d))
        throw InvalidArgument("cg_solve: Jacobi preconditioner needs a diagonal of matching length");
    auto solve_m = [&](const Vector& r) -> Vector {
        return precondition ? Vector(r.cwiseQuotient(*jacobi_diag)) : r;
    };

    Vector r = b;
    Vector z = solve_m(r);
    Vector p = z;
    double rz = r.dot(z);
    const int limit = static_cast<int>(std::min<Index>(cfg.max_iters, d));
    out.residual = 1.0;
    for (int k = 0; k < limit; ++k) {
        Vector ap = apply(p);
        if (ap.size() != d) throw ShapeError("cg_solve: operator output length differs from input");
        if (cfg.damping > 0.0) ap += cfg.damping * p;
        if (!ap.allFinite()) throw NumericError("cg_solve: operator returned non-finite values");
        const double pap = p.dot(ap);
        if (!(pap > 0.0)) {
            out.negative_curvature = true;
            break;
        }
        const double alpha = rz / pap;
        out.x += alpha * p;
        r -= alpha * ap;
        out.iters = k + 1;
        out.residual = r.norm() / bnorm;
        if (out.residual <= cfg.rel_tolerance) break;
        z = solve_m(r);
        const double rz_next = r.dot(z);
        p = z + (rz_next / rz) * p;
        rz = rz_next;
    }
    return out;
}

/// Probabilistic symmetry check: |u^T A v - v^T A u| <= tol * scale on random u, v.
inline bool is_symmetric_operator(const LinearOperator& apply, Index d, std::uint64_t seed, double tol = 1e-8,
                                  int trials = 3) {
    Rng rng(seed);
    for (int t = 0; t < trials; ++t) {
        Vector u(d), v(d);
        for (Index i = 0; i < d; ++i) {
            u[i] = rng.normal();
            v[i] = rng.normal();
        }
        const Vector au = apply(u), av = apply(v);
        const double a = u.dot(av), c = v.dot(au);
        const double scale = std::max({1.0, std::abs(a), std::abs(c)});
        if (std::abs(a - c) > tol * scale) return false;
    }
    return true;
}

}  // namespace sgvi
