#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "sensemask/error.hpp"
#include "sensemask/numerics.hpp"

using namespace sensemask;
using Eigen::VectorXd;

namespace {

VectorXd random_vec(std::mt19937_64& rng, int n) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    VectorXd v(n);
    do {
        for (int i = 0; i < n; ++i) v[i] = u(rng);
    } while (v.norm() < 0.1);
    return v;
}

// Central differences of the unclamped cosine.
VectorXd fd_grad_x(const VectorXd& x, const VectorXd& y, double step) {
    auto f = [&](const VectorXd& v) { return v.dot(y) / (v.norm() * y.norm()); };
    VectorXd g(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        VectorXd p = x, m = x;
        p[i] += step;
        m[i] -= step;
        g[i] = (f(p) - f(m)) / (2 * step);
    }
    return g;
}

}  // namespace

TEST_CASE("cosine examples") {
    VectorXd v(3);
    v << 0.3, -1.7, 2.2;
    CHECK(cosine(v, v) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(cosine(Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1)) == 0.0);
    const double expected = 32.0 / (std::sqrt(14.0) * std::sqrt(77.0));
    CHECK(std::abs(cosine(Eigen::Vector3d(1, 2, 3), Eigen::Vector3d(4, 5, 6)) - expected) < 1e-15);
    CHECK(std::abs(expected - 0.974631846) < 1e-9);
}

TEST_CASE("cosine errors") {
    CHECK_THROWS_AS(cosine(Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 0)), ZeroNormError);
    CHECK_THROWS_AS(cosine(Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 0)), ZeroNormError);
    CHECK_THROWS_AS(cosine(VectorXd::Ones(2), VectorXd::Ones(3)), LengthMismatch);
    CHECK_THROWS_AS(cosine(Eigen::Vector2d(NAN, 0), Eigen::Vector2d(1, 0)), NonFiniteError);
}

TEST_CASE("cosine is clamped, symmetric and scale invariant") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> scale(0.01, 100.0);
    for (int t = 0; t < 200; ++t) {
        const VectorXd x = random_vec(rng, 7);
        const VectorXd y = random_vec(rng, 7);
        const double c = cosine(x, y);
        CHECK(c >= -1.0);
        CHECK(c <= 1.0);
        CHECK(cosine(y, x) == c);
        CHECK(std::abs(cosine(scale(rng) * x, scale(rng) * y) - c) < 1e-12);
    }
    // A nearly-parallel pair whose raw quotient can exceed 1 by an ulp.
    VectorXd x(3);
    x << 1e-3, 3.0, 7.0;
    CHECK(cosine(x, 3.0 * x) <= 1.0);
}

TEST_CASE("cosine works on matrices as flattened vectors") {
    Eigen::MatrixXd a(2, 2), b(2, 2);
    a << 1, 2, 3, 4;
    b << 4, 3, 2, 1;
    const Eigen::Map<const VectorXd> fa(a.data(), 4), fb(b.data(), 4);
    CHECK(cosine(a, b) == doctest::Approx(fa.dot(fb) / (fa.norm() * fb.norm())).epsilon(1e-15));
}

TEST_CASE("cosine_grad examples") {
    const auto self = cosine_grad(Eigen::Vector2d(1, 0), Eigen::Vector2d(1, 0));
    CHECK(self.dx.norm() == 0.0);
    CHECK(self.dy.norm() == 0.0);
    const auto orth = cosine_grad(Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1));
    CHECK(orth.dx[0] == 0.0);
    CHECK(orth.dx[1] == 1.0);
    CHECK(orth.dy[0] == 1.0);
    CHECK(orth.dy[1] == 0.0);
    CHECK_THROWS_AS(cosine_grad(Eigen::Vector2d(0, 0), Eigen::Vector2d(0, 1)), ZeroNormError);
}

TEST_CASE("cosine_grad matches finite differences") {
    std::mt19937_64 rng(5);
    for (int t = 0; t < 100; ++t) {
        const VectorXd x = random_vec(rng, 6);
        const VectorXd y = random_vec(rng, 6);
        const auto g = cosine_grad(x, y);
        CHECK((g.dx - fd_grad_x(x, y, 1e-6)).cwiseAbs().maxCoeff() < 1e-5);
        CHECK((g.dy - fd_grad_x(y, x, 1e-6)).cwiseAbs().maxCoeff() < 1e-5);
    }
}

TEST_CASE("adam: zero gradient is a fixed point") {
    Eigen::VectorXd p(3);
    p << 1.0, -2.0, 0.5;
    const Eigen::VectorXd start = p;
    AdamState<double> st(3, 1);
    for (int i = 0; i < 5; ++i) adam_step(p, Eigen::VectorXd::Zero(3), st);
    CHECK(p == start);
    CHECK(st.t == 5);
}

TEST_CASE("adam: first step moves by about lr") {
    Eigen::VectorXd p(1);
    p << 1.0;
    AdamState<double> st(1, 1);
    adam_step(p, Eigen::VectorXd::Constant(1, 1.0), st);
    // m̂ = 1, v̂ = 1 → 1 − 0.01·1/(1 + 1e-8)
    CHECK(std::abs(p[0] - (1.0 - 0.01 / (1.0 + 1e-8))) < 1e-15);
    CHECK(p[0] == doctest::Approx(0.99));
}

TEST_CASE("adam: two-step hand trace") {
    const double lr = 0.01, b1 = 0.9, b2 = 0.999, eps = 1e-8;
    const double g1 = 0.5, g2 = -1.5;
    double theta = 2.0;
    double m = (1 - b1) * g1, v = (1 - b2) * g1 * g1;
    theta -= lr * (m / (1 - b1)) / (std::sqrt(v / (1 - b2)) + eps);
    m = b1 * m + (1 - b1) * g2;
    v = b2 * v + (1 - b2) * g2 * g2;
    theta -= lr * (m / (1 - b1 * b1)) / (std::sqrt(v / (1 - b2 * b2)) + eps);

    Eigen::VectorXd p = Eigen::VectorXd::Constant(1, 2.0);
    AdamState<double> st(1, 1, {lr, b1, b2, eps});
    adam_step(p, Eigen::VectorXd::Constant(1, g1), st);
    adam_step(p, Eigen::VectorXd::Constant(1, g2), st);
    CHECK(std::abs(p[0] - theta) < 1e-12);
    CHECK(st.t == 2);
    CHECK((st.v.array() >= 0).all());
}

TEST_CASE("adam: shape mismatch") {
    Eigen::VectorXd p = Eigen::VectorXd::Zero(3);
    AdamState<double> st(3, 1);
    CHECK_THROWS_AS(adam_step(p, Eigen::VectorXd::Zero(2), st), LengthMismatch);
    AdamState<double> wrong(2, 1);
    CHECK_THROWS_AS(adam_step(p, Eigen::VectorXd::Zero(3), wrong), LengthMismatch);
}

TEST_CASE("adam works on matrices and in float") {
    Eigen::MatrixXf p = Eigen::MatrixXf::Ones(2, 3);
    AdamState<float> st(2, 3, {0.1f, 0.9f, 0.999f, 1e-8f});
    adam_step(p, Eigen::MatrixXf::Ones(2, 3), st);
    CHECK(p(1, 2) == doctest::Approx(0.9f));
}
