#ifndef SENSEMASK_LOSSES_HPP
#define SENSEMASK_LOSSES_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <span>
#include <utility>

#include "sensemask/error.hpp"
#include "sensemask/numerics.hpp"

namespace sensemask {

/// A triplet-loss value with its gradients on the three embeddings.
/// Gradients are zero when the hinge is inactive.
template <typename Scalar>
struct TripletTerm {
    Scalar loss = Scalar(0);
    VectorX<Scalar> g0;
    VectorX<Scalar> g1;
    VectorX<Scalar> g2;
};

/// max(−cos(z0, z1) + cos(z0, z2), 0): z0 and z1 should agree on the aspect,
/// z2 should not.
template <typename D0, typename D1, typename D2>
TripletTerm<typename D0::Scalar> triplet_loss_a(const Eigen::MatrixBase<D0>& z0,
                                                const Eigen::MatrixBase<D1>& z1,
                                                const Eigen::MatrixBase<D2>& z2) {
    using Scalar = typename D0::Scalar;
    const auto pos = cosine_grad(z0, z1);
    const auto neg = cosine_grad(z0, z2);
    const Scalar inner = -std::clamp(pos.value, Scalar(-1), Scalar(1)) +
                         std::clamp(neg.value, Scalar(-1), Scalar(1));
    TripletTerm<Scalar> out;
    if (inner > Scalar(0)) {
        out.loss = inner;
        out.g0 = neg.dx - pos.dx;
        out.g1 = -pos.dy;
        out.g2 = neg.dy;
    } else {
        out.g0 = VectorX<Scalar>::Zero(z0.size());
        out.g1 = VectorX<Scalar>::Zero(z1.size());
        out.g2 = VectorX<Scalar>::Zero(z2.size());
    }
    return out;
}

/// max(−cos(z0, z2) + cos(z0, z1), 0): the auxiliary aspect, where z0 and z2
/// should agree and z1 should not.
template <typename D0, typename D1, typename D2>
TripletTerm<typename D0::Scalar> triplet_loss_b(const Eigen::MatrixBase<D0>& z0,
                                                const Eigen::MatrixBase<D1>& z1,
                                                const Eigen::MatrixBase<D2>& z2) {
    auto swapped = triplet_loss_a(z0, z2, z1);
    std::swap(swapped.g1, swapped.g2);
    return swapped;
}

/// (1/l) Σ_layers Σ_dims 1(A + B > 1) for two 0/1 masks of equal shape.
template <typename DA, typename DB>
typename DA::Scalar overlap_loss(const Eigen::MatrixBase<DA>& mask_a,
                                 const Eigen::MatrixBase<DB>& mask_b) {
    using Scalar = typename DA::Scalar;
    if (mask_a.rows() != mask_b.rows() || mask_a.cols() != mask_b.cols()) {
        throw ShapeMismatch("overlap_loss: mask shapes differ");
    }
    if (mask_a.cols() == 0) {
        throw ShapeMismatch("overlap_loss: masks have no layers");
    }
    const auto both = ((mask_a.array() + mask_b.array()) > Scalar(1)).count();
    return static_cast<Scalar>(both) / static_cast<Scalar>(mask_a.cols());
}

/// Surrogate gradient of overlap_loss: d/dA = B/l, d/dB = A/l, as if the
/// indicator were the product of the two binarized masks.
template <typename DA, typename DB>
std::pair<MatrixX<typename DA::Scalar>, MatrixX<typename DA::Scalar>> overlap_grad(
    const Eigen::MatrixBase<DA>& mask_a, const Eigen::MatrixBase<DB>& mask_b) {
    using Scalar = typename DA::Scalar;
    if (mask_a.rows() != mask_b.rows() || mask_a.cols() != mask_b.cols()) {
        throw ShapeMismatch("overlap_grad: mask shapes differ");
    }
    const Scalar inv_l = Scalar(1) / static_cast<Scalar>(mask_a.cols());
    return {mask_b * inv_l, mask_a * inv_l};
}

struct LossConfig {
    int aspects = 1;
    double lambda = 0.5;

    void validate() const {
        if (aspects != 1 && aspects != 2) {
            throw ConfigError("aspects must be 1 or 2");
        }
        if (!(lambda >= 0.0 && lambda <= 1.0)) {
            throw ConfigError("lambda must lie in [0, 1]");
        }
    }
};

/// Batch mean of a span of per-triplet losses, in index order.
template <typename Scalar>
Scalar batch_mean(std::span<const Scalar> losses) {
    if (losses.empty()) {
        throw EmptyData("batch_mean of an empty batch");
    }
    Scalar sum = Scalar(0);
    for (Scalar v : losses) sum += v;
    return sum / static_cast<Scalar>(losses.size());
}

/// L_final from batch means: mean L^(a) for one aspect, otherwise
/// ½λ(L^(a) + L^(b)) + (1 − λ)·L_ovl.
template <typename Scalar>
Scalar final_loss(Scalar mean_a, Scalar mean_b, Scalar overlap, const LossConfig& cfg) {
    cfg.validate();
    if (cfg.aspects == 1) {
        return mean_a;
    }
    const Scalar lambda = static_cast<Scalar>(cfg.lambda);
    return Scalar(0.5) * lambda * (mean_a + mean_b) + (Scalar(1) - lambda) * overlap;
}

/// Coefficients of ∂L_final/∂(L^(a)_mean, L^(b)_mean, L_ovl).
struct FinalLossWeights {
    double a;
    double b;
    double overlap;
};

inline FinalLossWeights final_loss_weights(const LossConfig& cfg) {
    cfg.validate();
    if (cfg.aspects == 1) {
        return {1.0, 0.0, 0.0};
    }
    return {0.5 * cfg.lambda, 0.5 * cfg.lambda, 1.0 - cfg.lambda};
}

}  // namespace sensemask

#endif  // SENSEMASK_LOSSES_HPP
