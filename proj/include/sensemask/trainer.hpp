#ifndef SENSEMASK_TRAINER_HPP
#define SENSEMASK_TRAINER_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sensemask/embedstore.hpp"
#include "sensemask/losses.hpp"
#include "sensemask/masker.hpp"
#include "sensemask/numerics.hpp"

namespace sensemask {

struct TrainConfig {
    MaskMode mode = MaskMode::Dim;
    int k = 128;  // selected dimensions per layer; n_head·a in head mode
    int batch_size = 8;
    double lr = 0.01;
    int max_epochs = 100;
    int patience = 5;
    std::uint64_t seed = 0;
    LossConfig loss;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    AdamConfig<double> adam() const { return {lr, beta1, beta2, eps}; }
    void validate() const;
};

struct EpochLog {
    int epoch = 0;
    double train_loss = 0.0;
    double dev_loss = 0.0;
    /// Binary-mask entries (both masks) that flipped since the previous epoch.
    long selected_changed = 0;
};

struct TrainResult {
    MaskParams mask_a;
    std::optional<MaskParams> mask_b;
    std::vector<EpochLog> log;
    double initial_dev_loss = 0.0;
    int best_epoch = 0;
    double best_dev_loss = 0.0;
    /// Optimizer state at the end of training.
    AdamState<double> adam_a;
    std::optional<AdamState<double>> adam_b;
};

/// Uniform logits in [−0.01, 0.01].
Eigen::MatrixXd init_logits(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed);

/// Index positions of a triplet inside its dataset.
struct TripletIndex {
    std::size_t i0, i1, i2;
};

std::vector<TripletIndex> resolve(const Dataset& dataset, const std::vector<Triplet>& triplets);

/// Mean L_final over `triplets` for fixed masks (mask_b only with two aspects).
double evaluate_loss(const Dataset& dataset, const std::vector<TripletIndex>& triplets,
                     const MaskParams& mask_a, const MaskParams* mask_b, const LossConfig& cfg);

struct StepGrads {
    double loss = 0.0;        // L_final of the batch
    Eigen::MatrixXd logits_a;  // ∂L_final/∂logits via the straight-through path
    Eigen::MatrixXd logits_b;  // empty with one aspect
};

/// Forward and backward for one batch.
StepGrads batch_gradients(const Dataset& dataset, std::span<const TripletIndex> batch,
                          const MaskParams& mask_a, const MaskParams* mask_b,
                          const LossConfig& cfg);

/// Trains one mask (two with cfg.loss.aspects == 2) by Adam on the logits with
/// straight-through gradients; returns the snapshot with the lowest dev loss.
TrainResult train_mask(const std::vector<Triplet>& train, const std::vector<Triplet>& dev,
                       const Dataset& dataset, const TrainConfig& cfg);

void write_training_log(const std::vector<EpochLog>& log, const std::filesystem::path& path);

/// Binary blob: "ADAM" | u32 version | i64 t | u32 rows | u32 cols | f64 lr,
/// beta1, beta2, eps | rows·cols f64 m | rows·cols f64 v.
std::string serialize_adam(const AdamState<double>& state);
AdamState<double> parse_adam(const std::string& bytes);

}  // namespace sensemask

#endif  // SENSEMASK_TRAINER_HPP
