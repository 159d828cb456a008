#include "vesselsynth/corpus.hpp"

#include "vesselsynth/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace vsynth {

namespace {

using ordered_json = nlohmann::ordered_json;

std::array<double, 4> spans(const NormStats& s) {
    std::array<double, 4> out{};
    for (int k = 0; k < 4; ++k) out[static_cast<std::size_t>(k)] = s.max[static_cast<std::size_t>(k)] - s.min[static_cast<std::size_t>(k)];
    return out;
}

} // namespace

std::string NormStats::to_json() const {
    ordered_json doc;
    doc["min"] = min;
    doc["max"] = max;
    return doc.dump(2) + "\n";
}

NormStats NormStats::from_json(const std::string& text) {
    ordered_json doc;
    try {
        doc = ordered_json::parse(text);
        NormStats s;
        s.min = doc.at("min").get<std::array<double, 4>>();
        s.max = doc.at("max").get<std::array<double, 4>>();
        for (int k = 0; k < 4; ++k) {
            if (!(s.min[static_cast<std::size_t>(k)] <= s.max[static_cast<std::size_t>(k)])) {
                throw ValidationError("normalization stats: min > max");
            }
        }
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed normalization stats: ") + e.what());
    }
}

std::pair<std::vector<VesselTree>, NormStats>
normalize_corpus(const std::vector<VesselTree>& trees) {
    if (trees.empty()) throw ValidationError("empty corpus");
    NormStats stats;
    stats.min.fill(std::numeric_limits<double>::infinity());
    stats.max.fill(-std::numeric_limits<double>::infinity());
    for (const VesselTree& t : trees) {
        t.validate();
        for (const TreeNode& n : t.nodes()) {
            const auto f = n.features.as_array();
            for (int k = 0; k < 4; ++k) {
                stats.min[static_cast<std::size_t>(k)] = std::min(stats.min[static_cast<std::size_t>(k)], f[static_cast<std::size_t>(k)]);
                stats.max[static_cast<std::size_t>(k)] = std::max(stats.max[static_cast<std::size_t>(k)], f[static_cast<std::size_t>(k)]);
            }
        }
    }
    std::vector<VesselTree> out;
    out.reserve(trees.size());
    for (const VesselTree& t : trees) out.push_back(normalize_tree(t, stats));
    return {std::move(out), stats};
}

VesselTree normalize_tree(const VesselTree& tree, const NormStats& stats) {
    const auto span = spans(stats);
    std::vector<TreeNode> nodes = tree.nodes();
    for (TreeNode& n : nodes) {
        auto f = n.features.as_array();
        for (int k = 0; k < 4; ++k) {
            const auto ks = static_cast<std::size_t>(k);
            f[ks] = span[ks] > 0.0 ? (f[ks] - stats.min[ks]) / span[ks] : 0.0;
        }
        n.features = NodeFeatures::from_array(f);
    }
    return VesselTree::from_records(std::move(nodes), tree.root());
}

VesselTree denormalize_tree(const VesselTree& tree, const NormStats& stats) {
    for (int k = 0; k < 4; ++k) {
        const auto ks = static_cast<std::size_t>(k);
        if (!std::isfinite(stats.min[ks]) || !std::isfinite(stats.max[ks]) ||
            stats.min[ks] > stats.max[ks]) {
            throw ValidationError("inconsistent normalization stats");
        }
    }
    const auto span = spans(stats);
    std::vector<TreeNode> nodes = tree.nodes();
    for (TreeNode& n : nodes) {
        auto f = n.features.as_array();
        for (int k = 0; k < 4; ++k) {
            const auto ks = static_cast<std::size_t>(k);
            f[ks] = stats.min[ks] + f[ks] * span[ks];
        }
        n.features = NodeFeatures::from_array(f);
    }
    return VesselTree::from_records(std::move(nodes), tree.root());
}

double select_bifurcation_radius(const std::vector<double>& candidates) {
    if (candidates.empty()) throw ValidationError("no cross-section candidates");
    double best = candidates.front();
    for (double r : candidates) {
        if (!(r > 0.0)) throw ValidationError("cross-section radius must be positive");
        best = std::min(best, r);
    }
    return best;
}

namespace {

void append_polyline(const CenterlinePolyline& poly, VesselTree& tree,
                     int attach_index, VesselTree::Slot first_slot) {
    if (poly.points.size() < 2) {
        throw ValidationError("polyline needs at least 2 points");
    }
    int tail = attach_index;
    bool first = true;
    for (const auto& p : poly.points) {
        if (!(p.radius > 0.0)) throw ValidationError("polyline radius must be positive");
        const NodeFeatures f{p.position.x, p.position.y, p.position.z, p.radius};
        if (tail < 0) {
            tail = tree.add_root(f);
        } else {
            tail = tree.add_child(tail, first ? first_slot : VesselTree::Slot::right, f);
        }
        first = false;
    }
    if (poly.children.size() > 2) {
        throw ValidationError("junction with more than 2 child branches (non-binary)");
    }
    if (poly.children.size() == 2) {
        append_polyline(poly.children[0], tree, tail, VesselTree::Slot::left);
        append_polyline(poly.children[1], tree, tail, VesselTree::Slot::right);
    } else if (poly.children.size() == 1) {
        // a single child lands in the right slot
        append_polyline(poly.children[0], tree, tail, VesselTree::Slot::right);
    }
}

} // namespace

VesselTree polyline_to_tree(const CenterlinePolyline& root) {
    VesselTree tree;
    append_polyline(root, tree, -1, VesselTree::Slot::right);
    tree.validate();
    return tree;
}

VesselTree generate_synthetic_tree(const SynthParams& params) {
    if (params.max_depth < 1) throw ValidationError("max_depth must be >= 1");
    if (params.bifurcation_prob < 0.0 || params.bifurcation_prob > 1.0) {
        throw ValidationError("bifurcation_prob must lie in [0,1]");
    }
    if (!(params.radius_root > 0.0)) throw ValidationError("radius_root must be positive");
    if (!(params.radius_decay > 0.0 && params.radius_decay < 1.0)) {
        throw ValidationError("radius_decay must lie in (0,1)");
    }

    Rng rng(params.seed);
    VesselTree tree;

    struct GrowItem {
        int parent_index; ///< -1 for root
        VesselTree::Slot slot;
        Vec3 position;
        Vec3 direction;
        double radius;
        int depth;
    };

    auto perturb = [&rng, &params](const Vec3& dir) {
        // small random rotation: jitter two orthogonal components
        const Vec3 axis = std::abs(dir.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
        const Vec3 u = normalized(cross(dir, axis));
        const Vec3 v = normalized(cross(dir, u));
        const double a = rng.normal() * params.tortuosity_jitter;
        const double b = rng.normal() * params.tortuosity_jitter;
        return normalized(dir + u * std::tan(a) + v * std::tan(b));
    };

    // depth-first growth with an explicit stack keeps the rng draw order a
    // pure function of the topology decisions
    std::vector<GrowItem> stack;
    stack.push_back({-1, VesselTree::Slot::right, Vec3{0, 0, 0}, Vec3{0, 0, 1},
                     params.radius_root, 1});
    while (!stack.empty()) {
        GrowItem item = stack.back();
        stack.pop_back();

        const NodeFeatures f{item.position.x, item.position.y, item.position.z, item.radius};
        const int index = item.parent_index < 0
                              ? tree.add_root(f)
                              : tree.add_child(item.parent_index, item.slot, f);

        if (item.depth >= params.max_depth) continue;

        const bool bifurcate = rng.uniform() < params.bifurcation_prob;
        const double step = params.segment_length_mean *
                            std::exp(0.25 * rng.normal()); // mild length variation
        if (bifurcate) {
            // split into two diverging directions around the parent heading
            const Vec3 axis = std::abs(item.direction.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
            const Vec3 u = normalized(cross(item.direction, axis));
            const double split = 0.35 + 0.25 * rng.uniform(); // half-angle, radians
            const Vec3 dir_a = normalized(item.direction * std::cos(split) + u * std::sin(split));
            const Vec3 dir_b = normalized(item.direction * std::cos(split) - u * std::sin(split));
            const double child_radius = item.radius * params.radius_decay;
            // push right first; left is grown first off the stack
            stack.push_back({index, VesselTree::Slot::right, item.position + dir_b * step,
                             perturb(dir_b), child_radius, item.depth + 1});
            stack.push_back({index, VesselTree::Slot::left, item.position + dir_a * step,
                             perturb(dir_a), child_radius, item.depth + 1});
        } else {
            const Vec3 dir = perturb(item.direction);
            stack.push_back({index, VesselTree::Slot::right, item.position + dir * step,
                             dir, item.radius, item.depth + 1});
        }
    }
    tree.validate();
    return tree;
}

} // namespace vsynth
