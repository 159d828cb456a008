#pragma once

#include "vesselsynth/common.hpp"

#include <array>
#include <string>
#include <vector>

namespace vsynth {

inline constexpr int kNoChild = -1;

/// Per-node attributes: spatial position and conduit radius.
struct NodeFeatures {
    double x = 0.0, y = 0.0, z = 0.0, r = 0.0;

    std::array<double, 4> as_array() const { return {x, y, z, r}; }
    static NodeFeatures from_array(const std::array<double, 4>& a) {
        return {a[0], a[1], a[2], a[3]};
    }
};

struct TreeNode {
    int id = 0; ///< external id, preserved through serialization
    NodeFeatures features;
    int left = kNoChild;  ///< index into VesselTree::nodes()
    int right = kNoChild;
};

/// Binary tree of vessel centerline samples. Nodes are stored by index;
/// child links are indices, ids are the external names used on disk.
/// Structural invariant: a node with a single child keeps it in the right
/// slot (ingest accepts either slot and normalizes).
class VesselTree {
public:
    VesselTree() = default;

    int add_root(const NodeFeatures& f, int id = 0);
    enum class Slot { left, right };
    int add_child(int parent_index, Slot slot, const NodeFeatures& f, int id = -1);

    bool empty() const { return nodes_.empty(); }
    int size() const { return static_cast<int>(nodes_.size()); }
    int root() const { return root_; }
    const TreeNode& node(int index) const { return nodes_[static_cast<std::size_t>(index)]; }
    TreeNode& node(int index) { return nodes_[static_cast<std::size_t>(index)]; }
    const std::vector<TreeNode>& nodes() const { return nodes_; }

    NodeFeatures& features(int index) { return nodes_[static_cast<std::size_t>(index)].features; }
    const NodeFeatures& features(int index) const { return nodes_[static_cast<std::size_t>(index)].features; }

    int num_children(int index) const {
        const TreeNode& n = node(index);
        return (n.left != kNoChild ? 1 : 0) + (n.right != kNoChild ? 1 : 0);
    }

    /// Raw trees carry physical radii (> 0); normalized trees map the corpus
    /// minimum to exactly 0, so structural checks accept r = 0 there.
    enum class RadiusPolicy { require_positive, allow_zero };

    /// Checks the full structural contract: single root, unique ids, valid
    /// child indices, no sharing/cycles, finite features, positive radii.
    /// Throws ValidationError with a description of the first violation.
    void validate(RadiusPolicy policy = RadiusPolicy::require_positive) const;

    /// Pre-order node indices (node, left, right).
    std::vector<int> preorder() const;
    /// Post-order node indices (left, right, node).
    std::vector<int> postorder() const;

    /// Construct from parallel node records; used by the parser.
    static VesselTree from_records(std::vector<TreeNode> nodes, int root_index);

private:
    std::vector<TreeNode> nodes_;
    int root_ = kNoChild;
};

/// Traversal statistics used by loss weighting and preprocessing.
struct TreeStats {
    int depth = 0;      ///< max nodes on a root-to-leaf path (root alone = 1)
    int node_count = 0;
    std::vector<int> subtree_size; ///< by node index; node plus all descendants
    std::vector<int> class_label;  ///< by node index; number of children (0, 1, 2)
};

VesselTree parse_tree(const std::string& json_text,
                      VesselTree::RadiusPolicy policy = VesselTree::RadiusPolicy::require_positive);
std::string serialize_tree(const VesselTree& tree);

/// Re-root at the node minimizing the rooted depth. Ties break toward the
/// smallest node id. If every depth-minimizing node has three neighbors
/// (which would need three children), the sample is excluded: throws
/// ValidationError.
VesselTree rebalance_root(const VesselTree& tree);

/// Drop every node deeper than max_depth (root has depth 1).
VesselTree trim_depth(const VesselTree& tree, int max_depth);

TreeStats compute_stats(const VesselTree& tree);

} // namespace vsynth
