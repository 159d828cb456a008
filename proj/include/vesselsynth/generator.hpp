#pragma once

#include "vesselsynth/rvnn.hpp"

#include <cstdint>
#include <vector>

namespace vsynth {

struct GenerationRequest {
    int count = 1;
    std::uint64_t seed = 0;
    int max_depth = 10;
};

/// Draw z from the standard-normal prior, decode free-run, denormalize.
/// Each sample owns a derived rng stream (seed, index), so a prefix of the
/// output is independent of count. Samples whose denormalized radii are not
/// strictly positive are rejected and redrawn, up to 10 attempts each.
std::vector<VesselTree> sample_trees(const GenerationRequest& request,
                                     const ParameterStore& params,
                                     const NormStats& stats);

} // namespace vsynth
