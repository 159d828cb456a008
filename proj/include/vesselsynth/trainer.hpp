#pragma once

#include "vesselsynth/rvnn.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

namespace vsynth {

struct TrainConfig {
    int epochs = 1;
    int batch_size = 10;
    double lr = 1e-4;
    double alpha = 0.3;
    double gamma = 0.001;
    std::uint64_t seed = 0;
    int checkpoint_every = 0; ///< epochs between checkpoints; 0 = final only
    int max_depth = 10;       ///< corpus trees may not exceed this depth
};

struct EpochReport {
    int epoch = 0; ///< 1-based
    LossBreakdown mean_loss;
    double accuracy = 0.0; ///< teacher-forced classifier accuracy over the epoch
    double seconds = 0.0;
};

/// Inverse-class-count weights over child-count labels, rescaled to sum 3.
/// Every class must occur at least once.
std::array<double, 3> compute_class_weights(const std::vector<VesselTree>& corpus);

/// subtree_size(node) / node_count.
double node_weight(const TreeStats& stats, int node_index);

struct TrainCallbacks {
    std::function<void(const EpochReport&)> on_epoch;
    std::function<void(const ParameterStore&, int epoch)> on_checkpoint;
    /// Return true to stop after the current epoch (used by budgeted runs).
    std::function<bool(const EpochReport&)> stop_when;
};

struct TrainResult {
    ParameterStore store;
    std::vector<EpochReport> reports;
};

/// Gradient-accumulation training loop: per batch, sum per-tree gradients of
/// the full objective (fresh Gaussian noise per tree), divide by the batch
/// size, apply one Adam step. Trees are reshuffled every epoch from the
/// seeded generator, so the loss trajectory is a pure function of
/// (seed, corpus, config). Passing resume_from continues from an existing
/// store (step counter and Adam state included) instead of fresh init.
TrainResult train(const std::vector<VesselTree>& corpus, const TrainConfig& config,
                  const TrainCallbacks& callbacks = {},
                  const ParameterStore* resume_from = nullptr);

/// Fraction of nodes whose logits argmax equals the true child count,
/// teacher-forced with zero noise.
double classifier_accuracy(const ParameterStore& params,
                           const std::vector<VesselTree>& corpus);

} // namespace vsynth
