#pragma once

#include "vesselsynth/vec3.hpp"
#include "vesselsynth/vessel_tree.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace vsynth {

/// Per-attribute min/max over a corpus; the key that maps features between
/// raw units and the [0,1] training range. Persisted next to every
/// normalized corpus and inside checkpoints.
struct NormStats {
    std::array<double, 4> min{};
    std::array<double, 4> max{};

    std::string to_json() const;
    static NormStats from_json(const std::string& text);
};

/// Min-max normalize every attribute over the whole corpus. A constant
/// attribute maps to 0 everywhere.
std::pair<std::vector<VesselTree>, NormStats>
normalize_corpus(const std::vector<VesselTree>& trees);

/// Map one tree's features into [0,1] with existing stats (clamped nowhere;
/// callers own range checks).
VesselTree normalize_tree(const VesselTree& tree, const NormStats& stats);

/// Inverse of normalization. A constant attribute recovers its min.
VesselTree denormalize_tree(const VesselTree& tree, const NormStats& stats);

/// Disambiguation rule for multiple cross-sections at a bifurcation: the
/// smallest radius wins.
double select_bifurcation_radius(const std::vector<double>& candidates);

/// Centerline polyline with owned child branches. Ownership by value keeps
/// the branch graph acyclic by construction.
struct CenterlinePolyline {
    struct Sample {
        Vec3 position;
        double radius = 0.0;
    };
    std::vector<Sample> points;
    std::vector<CenterlinePolyline> children;
};

/// One tree node per centerline point; children chains attach at polyline
/// ends. The shared junction point belongs to the parent polyline.
VesselTree polyline_to_tree(const CenterlinePolyline& root);

/// Procedural stand-in for a real centerline corpus.
struct SynthParams {
    int max_depth = 10;
    double bifurcation_prob = 0.35;
    double radius_root = 0.5;
    double radius_decay = 0.8;
    double segment_length_mean = 2.0;
    double tortuosity_jitter = 0.15; ///< std of direction perturbation, radians
    std::uint64_t seed = 0;
};

/// Deterministic per seed. Radii shrink by radius_decay at each bifurcation;
/// positions follow a direction-persistent random walk.
VesselTree generate_synthetic_tree(const SynthParams& params);

} // namespace vsynth
