#ifndef SENSEMASK_SIMCLS_HPP
#define SENSEMASK_SIMCLS_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sensemask/embedstore.hpp"

namespace sensemask {

/// Per-layer cosine similarities of two h×l tensors (length l).
/// Throws ZeroNormError carrying the offending layer index.
Eigen::VectorXd layerwise_sim(const Eigen::MatrixXd& t1, const Eigen::MatrixXd& t2);

/// Sum of the last four layer columns. Throws TooFewLayers when l < 4.
Eigen::VectorXd baseline_repr(const Eigen::MatrixXd& t);

/// Cosine of the two baseline vectors.
double baseline_sim(const Eigen::MatrixXd& t1, const Eigen::MatrixXd& t2);

/// Linear layer followed by a sigmoid.
struct Classifier {
    Eigen::VectorXd weights;
    double bias = 0.0;
};

/// sigmoid(weights·sims + bias), kept strictly inside (0, 1).
double classify(const Classifier& cls, const Eigen::VectorXd& sims);
inline bool decide(double probability) { return probability >= 0.5; }

enum class Representation { Baseline, Layerwise, Masked };

Representation parse_representation(const std::string& name);
std::string to_string(Representation r);

/// Similarity features and 0/1 labels for a list of pairs.
struct PairFeatures {
    Eigen::MatrixXd x;  // one row per pair
    Eigen::VectorXd y;
};

/// Builds features for `pairs`. Masked requires a 0/1 h×l `mask`; the
/// layer-wise similarity is then taken over the masked tensors.
PairFeatures pair_features(const Dataset& dataset, const std::vector<LabeledPair>& pairs,
                           Representation repr,
                           const std::optional<Eigen::MatrixXd>& mask = std::nullopt);

struct ClassifierConfig {
    int batch_size = 8;
    double lr = 0.01;
    int max_epochs = 100;
    int patience = 5;
    std::uint64_t seed = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct ClassifierFit {
    Classifier classifier;
    int best_epoch = 0;
    double best_dev_accuracy = 0.0;
    std::vector<double> dev_accuracy;  // per epoch
};

/// Logistic regression by Adam on binary cross-entropy, zero-initialized,
/// early-stopped on dev accuracy (the best snapshot is returned).
ClassifierFit train_classifier(const PairFeatures& train, const PairFeatures& dev,
                               const ClassifierConfig& cfg);

double accuracy(const Classifier& cls, const PairFeatures& data);

struct AccuracyRow {
    std::string split;
    std::size_t n = 0;
    double accuracy = 0.0;
};

/// Sample mean and standard deviation (n − 1 denominator) of accuracies.
std::pair<double, double> mean_std(const std::vector<double>& values);

/// TSV: "split\tn\taccuracy" rows; when `summary_group` rows are given
/// (at least two), a trailing "mean ± std" line over them.
std::string format_report(const std::vector<AccuracyRow>& rows,
                          const std::vector<std::vector<std::size_t>>& summary_groups = {},
                          const std::vector<std::string>& group_names = {});

std::string classifier_to_json(const Classifier& cls);
Classifier classifier_from_json(const std::string& text);

}  // namespace sensemask

#endif  // SENSEMASK_SIMCLS_HPP
