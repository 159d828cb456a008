#pragma once

#include "vesselsynth/neural.hpp"
#include "vesselsynth/vessel_tree.hpp"

#include <array>
#include <span>
#include <vector>

namespace vsynth {

inline constexpr int kLatentDim = 128;
inline constexpr int kFeatureDim = 4;
inline constexpr int kNumClasses = 3;

/// The fixed layer list (names, shapes). Checkpoints are validated against
/// it; the shapes are load-bearing.
const std::vector<LayerSpec>& rvnn_architecture();

/// Recursive bottom-up encoding. Node code = fc3(concat(feature code,
/// sum of per-child transformed codes)); absent children contribute zeros;
/// leaky ReLU after every layer. Features must lie in [0,1] (tolerance 1e-6).
std::vector<double> encode_tree(const VesselTree& tree, const ParameterStore& params);

struct LatentSample {
    std::vector<double> z, mu, log_var;
};

/// Gaussian bottleneck: mu and log-variance heads over a shared hidden
/// layer, then z = mu + exp(log_var/2) * noise.
LatentSample latent_sample(std::span<const double> code, const ParameterStore& params,
                           std::span<const double> noise);

/// g_z: maps a latent vector to the decoder's root node code.
std::vector<double> decode_root(std::span<const double> z, const ParameterStore& params);

struct NodeDecode {
    std::array<double, 4> features;
    std::array<double, 3> logits;
    std::vector<double> left_code, right_code;
};

/// Single decoding step: features head, class logits, and both child codes.
NodeDecode decode_node(std::span<const double> code, const ParameterStore& params);

/// Reconstruction aligned with a target tree: indices into features/logits
/// are target node indices.
struct DecodedTree {
    std::vector<std::array<double, 4>> features;
    std::vector<std::array<double, 3>> logits;
    int nodes_decoded = 0;
};

/// Decode following the target topology (teacher forcing); recursion
/// descends exactly into the children the target has.
DecodedTree decode_tree_teacher_forced(std::span<const double> z, const VesselTree& target,
                                       const ParameterStore& params);

/// Decode following the classifier: argmax 0 = leaf, 1 = right child only,
/// 2 = both. Depth capped at max_depth; features clamped to [0,1].
VesselTree decode_tree_free(std::span<const double> z, const ParameterStore& params,
                            int max_depth);

/// Mean over nodes of the Euclidean distance between reconstructed and
/// target feature vectors.
double loss_recon(const DecodedTree& decoded, const VesselTree& target);

/// Class- and subtree-weighted cross entropy over node child counts.
double loss_topo(const DecodedTree& decoded, const VesselTree& target,
                 const TreeStats& stats, const std::array<double, 3>& class_weights);

/// KL divergence of N(mu, exp(log_var)) from the standard normal.
double loss_kl(std::span<const double> mu, std::span<const double> log_var);

struct LossBreakdown {
    double recon = 0.0, topo = 0.0, kl = 0.0, total = 0.0;
    double alpha = 0.0, gamma = 0.0;
};

LossBreakdown loss_total(double recon, double topo, double kl, double alpha, double gamma);

struct TreeLossResult {
    LossBreakdown loss;
    int correct_nodes = 0; ///< classifier argmax equals true child count
    int total_nodes = 0;
};

/// Full training objective for one tree: encode, sample with caller noise,
/// teacher-forced decode, three loss terms.
TreeLossResult rvnn_loss(const VesselTree& tree, const TreeStats& stats,
                         std::span<const double> noise,
                         const std::array<double, 3>& class_weights,
                         double alpha, double gamma, const ParameterStore& params);

/// Same forward, then hand-derived backward; gradients accumulate into the
/// store's gradient slots.
TreeLossResult rvnn_loss_and_grad(const VesselTree& tree, const TreeStats& stats,
                                  std::span<const double> noise,
                                  const std::array<double, 3>& class_weights,
                                  double alpha, double gamma, ParameterStore& params);

std::array<double, 3> softmax3(const std::array<double, 3>& logits);

} // namespace vsynth
