#ifndef SENSEMASK_NUMERICS_HPP
#define SENSEMASK_NUMERICS_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>

#include "sensemask/error.hpp"

namespace sensemask {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

namespace detail {

template <typename DerivedX, typename DerivedY>
void check_cosine_args(const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedY>& y) {
    if (x.size() == 0 || y.size() == 0) {
        throw LengthMismatch("cosine of an empty vector");
    }
    if (x.size() != y.size()) {
        throw LengthMismatch("cosine: lengths " + std::to_string(x.size()) + " and " +
                             std::to_string(y.size()) + " differ");
    }
    if (!x.allFinite() || !y.allFinite()) {
        throw NonFiniteError("cosine: non-finite entry");
    }
}

}  // namespace detail

/// Cosine similarity x·y / (‖x‖‖y‖), clamped to [-1, 1].
/// Works on any Eigen vector or matrix expression (matrices are treated as
/// their flattened coefficient sequence). Throws ZeroNormError if either
/// input has zero norm.
template <typename DerivedX, typename DerivedY>
typename DerivedX::Scalar cosine(const Eigen::MatrixBase<DerivedX>& x,
                                 const Eigen::MatrixBase<DerivedY>& y) {
    using Scalar = typename DerivedX::Scalar;
    detail::check_cosine_args(x, y);
    const Scalar nx = x.norm();
    const Scalar ny = y.norm();
    if (nx == Scalar(0) || ny == Scalar(0)) {
        throw ZeroNormError("cosine: zero-norm input");
    }
    const Scalar dot = x.reshaped().dot(y.reshaped());
    return std::clamp(dot / (nx * ny), Scalar(-1), Scalar(1));
}

template <typename Scalar>
struct CosineGrad {
    Scalar value;        // unclamped cosine
    VectorX<Scalar> dx;  // ∂cos/∂x
    VectorX<Scalar> dy;  // ∂cos/∂y
};

/// Cosine together with its analytic gradient with respect to both inputs:
///   ∂cos/∂x = y/(‖x‖‖y‖) − cos·x/‖x‖²   (symmetric for y).
template <typename DerivedX, typename DerivedY>
CosineGrad<typename DerivedX::Scalar> cosine_grad(const Eigen::MatrixBase<DerivedX>& x,
                                                  const Eigen::MatrixBase<DerivedY>& y) {
    using Scalar = typename DerivedX::Scalar;
    detail::check_cosine_args(x, y);
    const Scalar nx2 = x.squaredNorm();
    const Scalar ny2 = y.squaredNorm();
    if (nx2 == Scalar(0) || ny2 == Scalar(0)) {
        throw ZeroNormError("cosine_grad: zero-norm input");
    }
    const Scalar inv = Scalar(1) / std::sqrt(nx2 * ny2);
    const auto xv = x.reshaped();
    const auto yv = y.reshaped();
    const Scalar c = xv.dot(yv) * inv;
    CosineGrad<Scalar> out{c, VectorX<Scalar>(xv.size()), VectorX<Scalar>(yv.size())};
    out.dx = yv * inv - (c / nx2) * xv;
    out.dy = xv * inv - (c / ny2) * yv;
    return out;
}

template <typename Scalar>
struct AdamConfig {
    Scalar lr = Scalar(0.01);
    Scalar beta1 = Scalar(0.9);
    Scalar beta2 = Scalar(0.999);
    Scalar eps = Scalar(1e-8);
};

/// Moment estimates for one parameter block. Shapes follow the parameters.
template <typename Scalar>
struct AdamState {
    MatrixX<Scalar> m;
    MatrixX<Scalar> v;
    std::int64_t t = 0;
    AdamConfig<Scalar> config;

    AdamState() = default;
    AdamState(Eigen::Index rows, Eigen::Index cols, AdamConfig<Scalar> cfg = {})
        : m(MatrixX<Scalar>::Zero(rows, cols)), v(MatrixX<Scalar>::Zero(rows, cols)), config(cfg) {}
};

/// One bias-corrected Adam update, in place on `params`.
template <typename DerivedP, typename DerivedG>
void adam_step(Eigen::MatrixBase<DerivedP>& params, const Eigen::MatrixBase<DerivedG>& grads,
               AdamState<typename DerivedP::Scalar>& state) {
    using Scalar = typename DerivedP::Scalar;
    if (params.rows() != grads.rows() || params.cols() != grads.cols() ||
        params.rows() != state.m.rows() || params.cols() != state.m.cols()) {
        throw LengthMismatch("adam_step: parameter, gradient and state shapes differ");
    }
    if (!grads.allFinite()) {
        throw NonFiniteError("adam_step: non-finite gradient");
    }
    const auto& cfg = state.config;
    state.t += 1;
    state.m = cfg.beta1 * state.m + (Scalar(1) - cfg.beta1) * grads;
    state.v = cfg.beta2 * state.v + (Scalar(1) - cfg.beta2) * grads.cwiseAbs2();
    const Scalar c1 = Scalar(1) - std::pow(cfg.beta1, static_cast<Scalar>(state.t));
    const Scalar c2 = Scalar(1) - std::pow(cfg.beta2, static_cast<Scalar>(state.t));
    params -= (cfg.lr * (state.m.array() / c1) /
               ((state.v.array() / c2).sqrt() + cfg.eps))
                  .matrix();
}

}  // namespace sensemask

#endif  // SENSEMASK_NUMERICS_HPP
