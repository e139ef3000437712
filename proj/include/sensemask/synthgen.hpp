#ifndef SENSEMASK_SYNTHGEN_HPP
#define SENSEMASK_SYNTHGEN_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "sensemask/embedstore.hpp"

namespace sensemask {

/// Synthetic layer-wise embeddings with known aspect-bearing dimensions.
///
/// In every layer, k_true dimensions carry a per-(word, sense) mean vector of
/// norm signal_strength and, when k_true_b > 0, another k_true_b dimensions
/// carry a per-aux-class mean vector. Means within a word (or across aux
/// classes) are mutually orthogonal. Every entry gets N(0, noise_sigma²)
/// noise; all other dimensions are noise only.
struct PlantSpec {
    int h = 64;
    int l = 4;
    int head_size = 8;  // a; only used when source == Attention
    int k_true = 8;
    int k_true_b = 0;
    int n_words = 20;
    int senses_min = 2;
    int senses_max = 3;
    int aux_classes = 0;  // 0: records carry no aux label
    int n_occurrences = 2000;
    double signal_strength = 3.0;
    double noise_sigma = 1.0;
    std::uint64_t seed = 0;
    Source source = Source::Hidden;

    /// Throws BadSpec.
    void validate() const;
};

/// Planted dimension indices per layer, ascending.
struct GroundTruth {
    std::vector<std::vector<int>> aspect_a_dims;
    std::vector<std::vector<int>> aspect_b_dims;
};

struct SyntheticData {
    Dataset dataset;
    GroundTruth truth;
};

SyntheticData generate(const PlantSpec& spec);

/// 0/1 h×l matrix selecting the given per-layer dimensions.
Eigen::MatrixXd truth_mask(const std::vector<std::vector<int>>& dims, int h);

struct RecoveryScore {
    Eigen::VectorXd precision;  // per layer
    Eigen::VectorXd recall;     // per layer
    double mean_precision = 0.0;
    double mean_recall = 0.0;
};

/// Precision and recall of a binary mask's selected dimensions against the
/// planted ones, per layer and averaged over layers.
RecoveryScore recovery_score(const Eigen::MatrixXd& mask,
                             const std::vector<std::vector<int>>& truth_dims);

std::string truth_to_json(const GroundTruth& truth);
GroundTruth truth_from_json(const std::string& text);

}  // namespace sensemask

#endif  // SENSEMASK_SYNTHGEN_HPP
