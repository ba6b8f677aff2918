#pragma once

#include "mobdemo/network.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace mobdemo {

struct TrainConfig {
    double learning_rate = 5e-5;
    std::size_t batch_size = 64;
    double weight_decay = 1e-4;
    int max_epochs = 200;
    int patience = 20;
    double dropout = 0.3;
    std::vector<double> task_weights; ///< empty means 1 per head
    std::uint64_t seed = 0;
    bool layer_norm = false;

    static constexpr std::array<double, 4> kLearningRateGrid{1e-3, 1e-4, 5e-5, 1e-5};
    static constexpr std::array<std::size_t, 4> kBatchSizeGrid{16, 32, 64, 128};
    static constexpr std::array<double, 3> kWeightDecayGrid{1e-3, 1e-4, 1e-5};

    /// Throws Error("bad_config") for non-positive values.
    void validate() const;
    /// True when lr, batch size and weight decay are all grid members.
    bool in_grid() const noexcept;
    /// Canonical text form, used for hashing.
    std::string canonical() const;
};

/// Inputs with per-head labels (-1 = masked).
struct Dataset {
    RowMatrix x;
    HeadTargets y;

    std::size_t rows() const noexcept { return static_cast<std::size_t>(x.rows()); }
    Dataset subset(std::span<const std::size_t> rows) const;
};

struct EpochLog {
    int epoch = 0;
    double train_loss = 0.0;
    std::vector<double> val_task_loss;
    double val_loss = 0.0;
    double wall_ms = 0.0;
};

struct TrainResult {
    int best_epoch = 0;
    double best_val_loss = 0.0;
    std::vector<EpochLog> log;
    double wall_ms = 0.0;
};

/// Adam with L2 weight decay folded into the gradient; seeded epoch
/// shuffles; early stopping on summed validation data loss. On return the
/// network holds the parameters of the best validation epoch.
/// Throws Error("empty_split") when either split has no rows.
TrainResult train(Network &network, const Dataset &train_set, const Dataset &val_set, const TrainConfig &config);

/// Eval-mode data loss (no regularization term) over a whole split.
LossValue evaluate_loss(const Network &network, const Dataset &data, std::span<const double> task_weights);

/// First llround(fraction * n) entries of a seeded permutation of 0..n-1,
/// so smaller fractions are prefixes of larger ones under the same seed.
/// Throws Error("empty_subsample") when that rounds to zero.
std::vector<std::size_t> subsample_indices(std::size_t n, double fraction, std::uint64_t seed);
Dataset subsample_training(const Dataset &data, double fraction, std::uint64_t seed);

/// epoch,train_loss,val_loss_<head>...,val_loss,wall_ms
void write_training_log(std::ostream &out, const TrainResult &result, std::span<const std::string> head_names);

} // namespace mobdemo
