#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "sgvi/sgvi.hpp"
#include "support/oracles.hpp"

using namespace sgvi;

namespace {

const IdentityCheck& find_check(const IdentityReport& r, const std::string& id, Index j = 0) {
    for (const auto& c : r.checks)
        if (c.identity == id && c.coordinate == j) return c;
    throw std::runtime_error("missing check " + id);
}

Vector v1(double x) { return Vector::Constant(1, x); }

}  // namespace

TEST(Polynomial, QuarticMomentsByHand) {
    const auto f = PolynomialTestFunction::univariate({0, 0, 0, 0, 1});
    EXPECT_EQ(f.degree(), 4);
    const Vector mu = v1(1.0), var = v1(1.0);
    EXPECT_DOUBLE_EQ(f.expectation(mu, var), 1 + 6 + 3);
    EXPECT_DOUBLE_EQ(f.expectation_partial(0, 2, 0, mu, var), 24.0);
    EXPECT_DOUBLE_EQ(2.0 * f.expectation_partial(0, 0, 1, mu, var), 24.0);
    EXPECT_DOUBLE_EQ(f.expectation_partial(0, 0, 2, mu, var), 6.0);
    EXPECT_DOUBLE_EQ(f.derivative(0, 4, 0.3), 24.0);
}

TEST(Polynomial, CubicMixedPartial) {
    const auto f = PolynomialTestFunction::univariate({0, 0, 0, 1});
    for (double m : {-1.0, 0.0, 2.5})
        for (double c : {0.1, 1.0, 3.0}) EXPECT_DOUBLE_EQ(f.expectation_partial(0, 1, 1, v1(m), v1(c)), 3.0);
    EXPECT_DOUBLE_EQ(0.5 * f.derivative(0, 3, 0.7), 3.0);
}

TEST(Polynomial, ExpectationMatchesQuadrature) {
    const oracle::GaussHermite gh(20);
    for (const auto& f : builtin_polynomials()) {
        Vector mu(f.dim()), var(f.dim());
        for (Index j = 0; j < f.dim(); ++j) mu[j] = 0.3 * (j + 1) - 0.5, var[j] = 0.5 + 0.25 * j;
        double expect = 0.0;
        for (Index j = 0; j < f.dim(); ++j)
            expect += gh.expect([&](double e) { return f.derivative(j, 0, mu[j] + std::sqrt(var[j]) * e); });
        EXPECT_NEAR(f.expectation(mu, var), expect, 1e-10 * (1 + std::abs(expect))) << f.name();
    }
}

TEST(Polynomial, RejectsDegreeAboveFour) {
    EXPECT_THROW(PolynomialTestFunction::univariate({0, 0, 0, 0, 0, 1}), Unsupported);
    EXPECT_NO_THROW(PolynomialTestFunction::univariate({0, 0, 0, 0, 1, 0}));
}

TEST(Identities, QuarticAtUnitMomentsMatchesHandValues) {
    const auto rep = identity_suite(PolynomialTestFunction::univariate({0, 0, 0, 0, 1}, "z^4"), v1(1.0), v1(1.0),
                                    100000, 3);
    EXPECT_DOUBLE_EQ(find_check(rep, "hessian-mu").analytic, 24.0);
    EXPECT_DOUBLE_EQ(find_check(rep, "hessian-C").analytic, 24.0);
    EXPECT_DOUBLE_EQ(find_check(rep, "fourth").analytic, 6.0);
    EXPECT_DOUBLE_EQ(find_check(rep, "fourth").monte_carlo, 6.0);  // f'''' is constant
    EXPECT_TRUE(rep.passed());
}

TEST(Identities, CubicThirdDerivativeIdentity) {
    const auto rep = identity_suite(PolynomialTestFunction::univariate({0, 0, 0, 1}), v1(0.4), v1(2.0), 1000, 1);
    EXPECT_DOUBLE_EQ(find_check(rep, "third").analytic, 3.0);
    EXPECT_DOUBLE_EQ(find_check(rep, "third").monte_carlo, 3.0);
}

TEST(Identities, AllBuiltinsAgreeAtMillionSamples) {
    for (const auto& f : builtin_polynomials()) {
        Vector mu(f.dim()), var(f.dim());
        for (Index j = 0; j < f.dim(); ++j) mu[j] = 0.5 - 0.4 * j, var[j] = 0.8 + 0.3 * j;
        const auto rep = identity_suite(f, mu, var, 1000000, 42);
        EXPECT_TRUE(rep.passed(5.0)) << f.name() << " max gap " << rep.max_gap_se();
        EXPECT_LT(find_check(rep, "expectation").gap_se, 5.0) << f.name();
    }
}

TEST(Identities, DetectsWrongAnalyticSide) {
    // a shifted mean makes the expectation check fail by many standard errors
    const auto f = PolynomialTestFunction::univariate({0, 0, 1});
    const auto rep = identity_suite(f, v1(0.0), v1(1.0), 100000, 2);
    const auto& c = find_check(rep, "expectation");
    EXPECT_GT(std::abs(c.analytic + 0.05 - c.monte_carlo) / c.standard_error, 5.0);
}

TEST(Identities, ShapeAndDegreeErrors) {
    const auto f = PolynomialTestFunction::univariate({0, 1});
    EXPECT_THROW(identity_suite(f, Vector::Zero(2), Vector::Ones(2), 100), ShapeError);
    EXPECT_THROW(identity_suite(f, v1(0), v1(1), 1), InvalidArgument);
}

TEST(Variance, LinearUnitNormIsDimensionFree) {
    const auto rep = variance_study(linear_unit_norm(), {1, 10, 100, 1000}, 20000, 1);
    ASSERT_EQ(rep.rows.size(), 4u);
    for (const auto& r : rep.rows) {
        EXPECT_NEAR(r.bound, std::numbers::pi * std::numbers::pi / 4, 1e-15);
        EXPECT_LT(std::abs(r.variance - 1.0), 5.0 * std::sqrt(2.0 / (20000 - 1)));
        EXPECT_TRUE(r.within_bound);
        EXPECT_DOUBLE_EQ(r.loose_bound, r.bound * r.dim);
    }
    EXPECT_TRUE(rep.bound_holds());
    EXPECT_TRUE(rep.no_trend(3.0));
}

TEST(Variance, ConstantHasZeroVariance) {
    const auto rep = variance_study(constant_function(2.5), {1, 50}, 1000, 3);
    for (const auto& r : rep.rows) {
        EXPECT_EQ(r.variance, 0.0);
        EXPECT_EQ(r.bound, 0.0);
        EXPECT_TRUE(r.within_bound);
    }
}

TEST(Variance, SineMatchesCharacteristicFunction) {
    const double closed = (1.0 - std::exp(-2.0)) / 2.0;
    const oracle::GaussHermite gh(60);
    EXPECT_NEAR(gh.expect([](double e) { return std::sin(e) * std::sin(e); }), closed, 1e-12);
    const auto rep = variance_study(sin_normalized_sum(), {1}, 100000, 5);
    const auto& r = rep.rows[0];
    EXPECT_LT(std::abs(r.variance - closed), 5.0 * r.standard_error);
    EXPECT_TRUE(r.within_bound);
}

TEST(Variance, AllBuiltinsWithinBound) {
    for (const auto& fn : builtin_lipschitz_functions()) {
        const auto rep = variance_study(fn, {1, 4, 32, 256}, 5000, 11);
        EXPECT_TRUE(rep.bound_holds()) << fn.name;
        for (const auto& r : rep.rows) EXPECT_GE(r.variance, 0.0);
    }
}

TEST(Variance, RefusesFewTrials) {
    EXPECT_THROW(variance_study(linear_unit_norm(), {1}, 100, 1), InvalidArgument);
    EXPECT_THROW(tail_study(linear_unit_norm(), {1}, {0.1}, 999, 1), InvalidArgument);
    EXPECT_THROW(lipschitz_function_by_name("nope"), InvalidArgument);
    EXPECT_EQ(lipschitz_function_by_name("sin").lipschitz, 1.0);
}

TEST(Tail, BoundValues) {
    EXPECT_DOUBLE_EQ(tail_bound(1, 0.0, 1.0), 2.0);
    EXPECT_NEAR(tail_bound(1, std::numbers::pi, 1.0), 2.0 * std::exp(-2.0), 1e-15);
    EXPECT_NEAR(tail_bound(100, 0.5, 1.0), 2.0 * std::exp(-50.0 / (std::numbers::pi * std::numbers::pi)), 1e-15);
    EXPECT_NEAR(tail_bound(100, 0.5, 1.0), 0.0126, 5e-5);
}

TEST(Tail, LinearFunctionFrequencies) {
    const auto rep = tail_study(linear_unit_norm(), {1, 100}, {0.0, 0.5, std::numbers::pi}, 20000, 7);
    ASSERT_EQ(rep.rows.size(), 6u);
    EXPECT_TRUE(rep.bound_holds());
    for (const auto& r : rep.rows) {
        if (r.t == 0.0) {
            EXPECT_EQ(r.frequency, 1.0);
            EXPECT_EQ(r.bound, 2.0);
        }
    }
    // M = 1, t = pi: P(|eps| >= pi) = erfc(pi / sqrt 2)
    const double p = std::erfc(std::numbers::pi / std::sqrt(2.0));
    EXPECT_NEAR(p, 0.00169, 2e-5);
    const auto& r = rep.rows[2];
    EXPECT_LT(std::abs(r.frequency - p), 5.0 * std::sqrt(p * (1 - p) / 20000));
    // M = 100, t = 0.5: a five-sigma event, expect none in 2e4 trials
    EXPECT_EQ(rep.rows[4].frequency, 0.0);
    EXPECT_LE(rep.rows[4].frequency, rep.rows[4].bound);
}

TEST(Lipschitz, LayerBoundExamples) {
    Vector w(2);
    w << 3, 4;
    const Matrix I = Matrix::Identity(2, 2);
    EXPECT_DOUBLE_EQ(lipschitz_layer_bound(w, I, Activation::sigmoid), 1.25);
    EXPECT_DOUBLE_EQ(lipschitz_layer_bound(w, I, Activation::tanh), 5.0);
    EXPECT_DOUBLE_EQ(lipschitz_layer_bound(w, I, Activation::softplus), 5.0);
    for (auto a : {Activation::sigmoid, Activation::tanh, Activation::softplus})
        EXPECT_EQ(lipschitz_layer_bound(Vector::Zero(2), I, a), 0.0);
    EXPECT_THROW(lipschitz_layer_bound(w, Matrix::Identity(3, 3), Activation::tanh), ShapeError);
}

TEST(Lipschitz, SigmoidIsQuarterOfTanh) {
    Rng r(2);
    for (int k = 0; k < 20; ++k) {
        Vector w(3);
        Matrix R = Matrix::Zero(3, 3);
        for (Index i = 0; i < 3; ++i) {
            w[i] = r.normal();
            for (Index j = 0; j <= i; ++j) R(i, j) = r.normal();
        }
        EXPECT_EQ(lipschitz_layer_bound(w, R, Activation::sigmoid), 0.25 * lipschitz_layer_bound(w, R, Activation::tanh));
    }
}

TEST(Lipschitz, NoViolationsOnRandomPairs) {
    Vector w(3), mu(3);
    w << 1.5, -2.0, 0.7;
    mu << 0.1, -0.3, 0.2;
    Matrix R(3, 3);
    R << 1.0, 0, 0, 0.5, 0.8, 0, -0.2, 0.3, 1.2;
    for (auto a : {Activation::sigmoid, Activation::tanh, Activation::softplus}) {
        const LipschitzCheck c = check_layer_lipschitz(w, mu, R, 0.1, a, 100000, 9);
        EXPECT_EQ(c.violations, 0u);
        EXPECT_LE(c.max_ratio, c.bound * (1 + 1e-12));
        EXPECT_GT(c.max_ratio, 0.0);
    }
    EXPECT_EQ(activation_from_name("tanh"), Activation::tanh);
    EXPECT_THROW(activation_from_name("relu6"), InvalidArgument);
}

TEST(FiniteDiff, QuadraticIsExact) {
    auto f = [](const Vector& t) {
        Vector g(2);
        g << t[0], 2 * t[1];
        return ValueGrad{0.5 * t[0] * t[0] + t[1] * t[1], g};
    };
    const auto rep = finite_diff_check(f, Vector::Ones(2));
    EXPECT_LT(rep.max_rel_error, 1e-10);
    EXPECT_EQ(rep.coordinates.size(), 2u);
}

TEST(FiniteDiff, ConstantReportsZero) {
    auto f = [](const Vector& t) { return ValueGrad{4.0, Vector::Zero(t.size())}; };
    const auto rep = finite_diff_check(f, Vector::Ones(3));
    EXPECT_EQ(rep.max_rel_error, 0.0);
}

TEST(FiniteDiff, CorruptedCoordinateIsNamed) {
    auto f = [](const Vector& t) {
        Vector g = t.array().cos().matrix();
        g[2] *= 1.01;
        return ValueGrad{t.array().sin().sum(), g};
    };
    const auto rep = finite_diff_check(f, Vector::Constant(4, 0.3));
    EXPECT_EQ(rep.worst_coordinate, 2);
    EXPECT_NEAR(rep.max_rel_error, 0.01 / 1.01, 1e-6);
}

TEST(FiniteDiff, SubsetAndErrors) {
    auto f = [](const Vector& t) { return ValueGrad{t.squaredNorm(), 2 * t}; };
    FiniteDiffOptions o;
    o.coordinates = 3;
    o.seed = 5;
    const auto rep = finite_diff_check(f, Vector::LinSpaced(10, -1, 1), o);
    EXPECT_EQ(rep.coordinates.size(), 3u);
    auto bad = [](const Vector& t) { return ValueGrad{std::nan(""), t}; };
    EXPECT_THROW(finite_diff_check(bad, Vector::Ones(2)), NumericError);
}
