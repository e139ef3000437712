#ifndef SENSEMASK_MASKER_HPP
#define SENSEMASK_MASKER_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>

namespace sensemask {

enum class MaskMode { Dim, Head };

/// Binary mask over an h×l stack, stored as real-valued logits.
///
/// Dim mode keeps one logit per (dimension, layer) and selects the k largest
/// per layer. Head mode keeps one logit per (head, layer), selects the k/a
/// largest heads per layer and expands each to its a dimensions. The binary
/// mask is recomputed from the logits on every use.
struct MaskParams {
    MaskMode mode = MaskMode::Dim;
    int h = 0;
    int l = 0;
    int k = 0;
    int head_size = 0;       // a; Head mode only
    Eigen::MatrixXd logits;  // h×l (Dim) or (h/a)×l (Head)

    int rows() const { return mode == MaskMode::Dim ? h : h / head_size; }
    /// Entries selected per layer column of `logits`.
    int selected_per_layer() const { return mode == MaskMode::Dim ? k : k / head_size; }

    /// Throws ConfigError if dimensions, k or head size are inconsistent, or
    /// ShapeMismatch if the logits have the wrong shape.
    void validate() const;
};

/// Mask with zero logits (ties resolve to the lowest indices).
MaskParams make_dim_mask(int h, int l, int k);
MaskParams make_head_mask(int h, int l, int k, int head_size);

/// Indices of the `count` largest entries of `column`, ascending by index.
/// Ties go to the lower index.
std::vector<int> top_k_indices(const Eigen::Ref<const Eigen::VectorXd>& column, int count);

/// 0/1 matrix h×l with exactly k ones per layer.
Eigen::MatrixXd binarize(const MaskParams& mask);

/// Elementwise product with the binarized mask. The result stays h×l with
/// zeros at unselected positions; its cosine with another masked tensor equals
/// the cosine of the compacted k×l forms.
Eigen::MatrixXd apply(const MaskParams& mask, const Eigen::MatrixXd& x);

/// Keeps only the selected rows of each layer, giving a k×l matrix.
Eigen::MatrixXd compact(const Eigen::MatrixXd& binary, const Eigen::MatrixXd& x);

/// Straight-through gradient on the logits given ∂loss/∂(binary mask).
/// Dim: identity. Head: sum over each head's a rows.
Eigen::MatrixXd ste_backward(const MaskParams& mask, const Eigen::MatrixXd& upstream);

struct MaskStats {
    /// (i, j) = number of dimensions where layers i and j agree.
    Eigen::MatrixXi agreement;
    /// Σ_layers Σ_dims 1(A + B > 1), present when a second mask is given.
    std::optional<long> overlap_total;
    /// overlap_total / l, the overlap-loss value.
    std::optional<double> overlap_mean;
};

MaskStats mask_stats(const Eigen::MatrixXd& mask_a,
                     const std::optional<Eigen::MatrixXd>& mask_b = std::nullopt);

/// Mask JSON: {mode, k, a, h, l, logits (row-major), binary (row-major 0/1)}.
std::string mask_to_json(const MaskParams& mask);
/// Parses and validates the exactly-k invariant; throws FormatError.
MaskParams mask_from_json(const std::string& text);
void save_mask(const MaskParams& mask, const std::string& path);
MaskParams load_mask(const std::string& path);

}  // namespace sensemask

#endif  // SENSEMASK_MASKER_HPP
