#include "vesselsynth/generator.hpp"

#include "vesselsynth/rng.hpp"

#include <algorithm>

namespace vsynth {

std::vector<VesselTree> sample_trees(const GenerationRequest& request,
                                     const ParameterStore& params,
                                     const NormStats& stats) {
    if (request.count < 1) throw ValidationError("count must be >= 1");
    if (request.max_depth < 1) throw ValidationError("max_depth must be >= 1");
    if (!params.matches(rvnn_architecture())) {
        throw ValidationError("checkpoint does not match the model architecture");
    }

    const Rng base(request.seed);
    std::vector<VesselTree> out;
    out.reserve(static_cast<std::size_t>(request.count));
    std::vector<double> z(static_cast<std::size_t>(kLatentDim));

    constexpr int kMaxAttempts = 10;
    for (int i = 0; i < request.count; ++i) {
        bool accepted = false;
        for (int attempt = 0; attempt < kMaxAttempts && !accepted; ++attempt) {
            Rng rng = base.substream(static_cast<std::uint64_t>(i) * kMaxAttempts +
                                     static_cast<std::uint64_t>(attempt));
            rng.fill_normal(z);
            const VesselTree decoded = decode_tree_free(z, params, request.max_depth);
            VesselTree raw = denormalize_tree(decoded, stats);
            const bool radii_ok = std::all_of(
                raw.nodes().begin(), raw.nodes().end(),
                [](const TreeNode& n) { return n.features.r > 0.0; });
            if (!radii_ok) continue;
            raw.validate();
            out.push_back(std::move(raw));
            accepted = true;
        }
        if (!accepted) {
            throw RuntimeError("sample " + std::to_string(i) + ": no physical tree after " +
                               std::to_string(kMaxAttempts) + " attempts");
        }
    }
    return out;
}

} // namespace vsynth
