#include "vesselsynth/vessel_tree.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <unordered_map>
#include <unordered_set>

namespace vsynth {

namespace {

using ordered_json = nlohmann::ordered_json;

void check_finite(const NodeFeatures& f, int id) {
    for (double v : f.as_array()) {
        if (!std::isfinite(v)) {
            throw ValidationError("node " + std::to_string(id) +
                                  ": non-finite feature value");
        }
    }
}

} // namespace

int VesselTree::add_root(const NodeFeatures& f, int id) {
    if (!nodes_.empty()) throw ValidationError("tree already has a root");
    nodes_.push_back(TreeNode{id, f, kNoChild, kNoChild});
    root_ = 0;
    return 0;
}

int VesselTree::add_child(int parent_index, Slot slot, const NodeFeatures& f, int id) {
    TreeNode& parent = node(parent_index);
    const int index = static_cast<int>(nodes_.size());
    const int assigned_id = id >= 0 ? id : index;
    if (slot == Slot::left) {
        if (parent.left != kNoChild) throw ValidationError("left child slot occupied");
        parent.left = index;
    } else {
        if (parent.right != kNoChild) throw ValidationError("right child slot occupied");
        parent.right = index;
    }
    nodes_.push_back(TreeNode{assigned_id, f, kNoChild, kNoChild});
    return index;
}

void VesselTree::validate(RadiusPolicy policy) const {
    if (nodes_.empty() || root_ == kNoChild) throw ValidationError("tree has no root");
    const int n = size();
    if (root_ < 0 || root_ >= n) throw ValidationError("root index out of range");

    std::unordered_set<int> ids;
    std::vector<int> parent_count(static_cast<std::size_t>(n), 0);
    for (int i = 0; i < n; ++i) {
        const TreeNode& nd = node(i);
        if (!ids.insert(nd.id).second) {
            throw ValidationError("duplicate node id " + std::to_string(nd.id));
        }
        check_finite(nd.features, nd.id);
        const bool radius_ok = policy == RadiusPolicy::allow_zero
                                   ? nd.features.r >= 0.0
                                   : nd.features.r > 0.0;
        if (!radius_ok) {
            throw ValidationError("node " + std::to_string(nd.id) +
                                  ": radius must be positive");
        }
        for (int c : {nd.left, nd.right}) {
            if (c == kNoChild) continue;
            if (c < 0 || c >= n) throw ValidationError("child index out of range");
            if (c == i) throw ValidationError("node is its own child");
            parent_count[static_cast<std::size_t>(c)]++;
        }
        if (nd.left != kNoChild && nd.right == kNoChild) {
            throw ValidationError("node " + std::to_string(nd.id) +
                                  ": single child must occupy the right slot");
        }
    }
    if (parent_count[static_cast<std::size_t>(root_)] != 0) {
        throw ValidationError("root has a parent (cycle or multiple roots)");
    }
    int reachable = 0;
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    std::vector<int> stack{root_};
    while (!stack.empty()) {
        const int i = stack.back();
        stack.pop_back();
        if (seen[static_cast<std::size_t>(i)]) {
            throw ValidationError("cycle or shared node detected");
        }
        seen[static_cast<std::size_t>(i)] = 1;
        ++reachable;
        const TreeNode& nd = node(i);
        if (nd.left != kNoChild) stack.push_back(nd.left);
        if (nd.right != kNoChild) stack.push_back(nd.right);
    }
    for (int i = 0; i < n; ++i) {
        if (i == root_) continue;
        if (parent_count[static_cast<std::size_t>(i)] != 1 || !seen[static_cast<std::size_t>(i)]) {
            throw ValidationError("node " + std::to_string(node(i).id) +
                                  ": cycle or multiple parents detected");
        }
    }
}

std::vector<int> VesselTree::preorder() const {
    std::vector<int> order;
    if (root_ == kNoChild) return order;
    order.reserve(nodes_.size());
    std::vector<int> stack{root_};
    while (!stack.empty()) {
        const int i = stack.back();
        stack.pop_back();
        order.push_back(i);
        const TreeNode& nd = node(i);
        if (nd.right != kNoChild) stack.push_back(nd.right);
        if (nd.left != kNoChild) stack.push_back(nd.left);
    }
    return order;
}

std::vector<int> VesselTree::postorder() const {
    // (node, right, left) DFS reversed yields (left, right, node)
    std::vector<int> out;
    if (root_ == kNoChild) return out;
    out.reserve(nodes_.size());
    std::vector<int> stack{root_};
    std::vector<int> visit;
    visit.reserve(nodes_.size());
    while (!stack.empty()) {
        const int i = stack.back();
        stack.pop_back();
        visit.push_back(i);
        const TreeNode& nd = node(i);
        if (nd.left != kNoChild) stack.push_back(nd.left);
        if (nd.right != kNoChild) stack.push_back(nd.right);
    }
    out.assign(visit.rbegin(), visit.rend());
    return out;
}

VesselTree VesselTree::from_records(std::vector<TreeNode> nodes, int root_index) {
    VesselTree t;
    t.nodes_ = std::move(nodes);
    t.root_ = root_index;
    return t;
}

VesselTree parse_tree(const std::string& json_text, VesselTree::RadiusPolicy policy) {
    ordered_json doc;
    try {
        doc = ordered_json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed tree JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("root") || !doc.contains("nodes")) {
        throw ValidationError("tree JSON must be an object with 'root' and 'nodes'");
    }

    struct RawNode {
        int id;
        NodeFeatures f;
        long long left, right; ///< external ids, -1 when absent
    };
    std::vector<RawNode> raw;
    std::unordered_map<long long, int> id_to_index;
    try {
        for (const auto& jn : doc.at("nodes")) {
            RawNode rn;
            rn.id = jn.at("id").get<int>();
            rn.f = {jn.at("x").get<double>(), jn.at("y").get<double>(),
                    jn.at("z").get<double>(), jn.at("r").get<double>()};
            rn.left = jn.contains("left") && !jn.at("left").is_null()
                          ? jn.at("left").get<long long>()
                          : -1;
            rn.right = jn.contains("right") && !jn.at("right").is_null()
                           ? jn.at("right").get<long long>()
                           : -1;
            const int index = static_cast<int>(raw.size());
            if (!id_to_index.emplace(rn.id, index).second) {
                throw ValidationError("duplicate node id " + std::to_string(rn.id));
            }
            raw.push_back(rn);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed tree JSON: ") + e.what());
    }

    long long root_id;
    try {
        root_id = doc.at("root").get<long long>();
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed tree JSON: ") + e.what());
    }
    const auto root_it = id_to_index.find(root_id);
    if (root_it == id_to_index.end()) {
        throw ValidationError("missing root node id " + std::to_string(root_id));
    }

    std::vector<TreeNode> nodes;
    nodes.reserve(raw.size());
    for (const RawNode& rn : raw) {
        TreeNode node;
        node.id = rn.id;
        node.features = rn.f;
        for (int side = 0; side < 2; ++side) {
            const long long child_id = side == 0 ? rn.left : rn.right;
            if (child_id < 0) continue;
            const auto it = id_to_index.find(child_id);
            if (it == id_to_index.end()) {
                throw ValidationError("unknown child id " + std::to_string(child_id));
            }
            (side == 0 ? node.left : node.right) = it->second;
        }
        // normalize a lone left child into the right slot
        if (node.left != kNoChild && node.right == kNoChild) {
            node.right = node.left;
            node.left = kNoChild;
        }
        nodes.push_back(node);
    }

    VesselTree tree = VesselTree::from_records(std::move(nodes), root_it->second);
    tree.validate(policy);
    return tree;
}

std::string serialize_tree(const VesselTree& tree) {
    ordered_json doc;
    doc["root"] = tree.node(tree.root()).id;
    ordered_json nodes = ordered_json::array();
    for (int i : tree.preorder()) {
        const TreeNode& n = tree.node(i);
        ordered_json jn;
        jn["id"] = n.id;
        jn["x"] = n.features.x;
        jn["y"] = n.features.y;
        jn["z"] = n.features.z;
        jn["r"] = n.features.r;
        jn["left"] = n.left == kNoChild ? ordered_json(nullptr) : ordered_json(tree.node(n.left).id);
        jn["right"] = n.right == kNoChild ? ordered_json(nullptr) : ordered_json(tree.node(n.right).id);
        nodes.push_back(std::move(jn));
    }
    doc["nodes"] = std::move(nodes);
    return doc.dump(2) + "\n";
}

namespace {

struct Adjacency {
    std::vector<std::vector<int>> neighbors;
};

Adjacency build_adjacency(const VesselTree& tree) {
    Adjacency adj;
    adj.neighbors.resize(static_cast<std::size_t>(tree.size()));
    for (int i = 0; i < tree.size(); ++i) {
        const TreeNode& n = tree.node(i);
        for (int c : {n.left, n.right}) {
            if (c == kNoChild) continue;
            adj.neighbors[static_cast<std::size_t>(i)].push_back(c);
            adj.neighbors[static_cast<std::size_t>(c)].push_back(i);
        }
    }
    return adj;
}

std::vector<int> bfs_distances(const Adjacency& adj, int start) {
    std::vector<int> dist(adj.neighbors.size(), -1);
    std::queue<int> q;
    dist[static_cast<std::size_t>(start)] = 0;
    q.push(start);
    while (!q.empty()) {
        const int u = q.front();
        q.pop();
        for (int v : adj.neighbors[static_cast<std::size_t>(u)]) {
            if (dist[static_cast<std::size_t>(v)] < 0) {
                dist[static_cast<std::size_t>(v)] = dist[static_cast<std::size_t>(u)] + 1;
                q.push(v);
            }
        }
    }
    return dist;
}

} // namespace

VesselTree rebalance_root(const VesselTree& tree) {
    tree.validate(VesselTree::RadiusPolicy::allow_zero);
    const int n = tree.size();
    if (n == 1) return tree;

    const Adjacency adj = build_adjacency(tree);

    // Eccentricity of every node from the two diameter endpoints: in a tree,
    // ecc(v) = max(dist(v, A), dist(v, B)) where A and B span a diameter.
    const std::vector<int> d0 = bfs_distances(adj, 0);
    const int a = static_cast<int>(std::max_element(d0.begin(), d0.end()) - d0.begin());
    const std::vector<int> da = bfs_distances(adj, a);
    const int b = static_cast<int>(std::max_element(da.begin(), da.end()) - da.begin());
    const std::vector<int> db = bfs_distances(adj, b);

    int best_depth = std::numeric_limits<int>::max();
    for (int i = 0; i < n; ++i) {
        const int depth = std::max(da[static_cast<std::size_t>(i)], db[static_cast<std::size_t>(i)]) + 1;
        best_depth = std::min(best_depth, depth);
    }

    int new_root = -1;
    int best_id = std::numeric_limits<int>::max();
    for (int i = 0; i < n; ++i) {
        const int depth = std::max(da[static_cast<std::size_t>(i)], db[static_cast<std::size_t>(i)]) + 1;
        if (depth != best_depth) continue;
        if (adj.neighbors[static_cast<std::size_t>(i)].size() > 2) continue; // would need 3 children
        if (tree.node(i).id < best_id) {
            best_id = tree.node(i).id;
            new_root = i;
        }
    }
    if (new_root < 0) {
        throw ValidationError(
            "no valid binary re-rooting: every depth-minimizing root has three neighbors");
    }
    if (new_root == tree.root()) return tree;

    // Rebuild with parent/child directions flowing away from the new root.
    std::vector<TreeNode> nodes(static_cast<std::size_t>(n));
    std::vector<int> old_to_new(static_cast<std::size_t>(n), -1);
    int next = 0;
    // (old index, parent old index)
    std::vector<std::pair<int, int>> stack{{new_root, -1}};
    // First pass assigns new indices in DFS order for a stable layout.
    std::vector<std::pair<int, int>> visit;
    while (!stack.empty()) {
        auto [u, parent] = stack.back();
        stack.pop_back();
        old_to_new[static_cast<std::size_t>(u)] = next++;
        visit.emplace_back(u, parent);
        for (int v : adj.neighbors[static_cast<std::size_t>(u)]) {
            if (v != parent) stack.emplace_back(v, u);
        }
    }
    for (auto [u, parent] : visit) {
        TreeNode nd;
        nd.id = tree.node(u).id;
        nd.features = tree.node(u).features;
        std::vector<int> children;
        for (int v : adj.neighbors[static_cast<std::size_t>(u)]) {
            if (v != parent) children.push_back(old_to_new[static_cast<std::size_t>(v)]);
        }
        if (children.size() > 2) {
            throw ValidationError("re-rooting produced a non-binary node");
        }
        if (children.size() == 1) {
            nd.right = children[0];
        } else if (children.size() == 2) {
            nd.left = children[0];
            nd.right = children[1];
        }
        nodes[static_cast<std::size_t>(old_to_new[static_cast<std::size_t>(u)])] = nd;
    }
    VesselTree out = VesselTree::from_records(std::move(nodes), 0);
    out.validate(VesselTree::RadiusPolicy::allow_zero);
    return out;
}

VesselTree trim_depth(const VesselTree& tree, int max_depth) {
    if (max_depth < 1) throw ValidationError("max_depth must be >= 1");
    tree.validate(VesselTree::RadiusPolicy::allow_zero);

    std::vector<TreeNode> nodes;
    std::vector<int> old_to_new(static_cast<std::size_t>(tree.size()), -1);
    // (old index, depth), pre-order so parents are emitted before children
    std::vector<std::pair<int, int>> stack{{tree.root(), 1}};
    std::vector<std::pair<int, int>> kept;
    while (!stack.empty()) {
        auto [i, depth] = stack.back();
        stack.pop_back();
        if (depth > max_depth) continue;
        old_to_new[static_cast<std::size_t>(i)] = static_cast<int>(kept.size());
        kept.emplace_back(i, depth);
        const TreeNode& nd = tree.node(i);
        if (nd.right != kNoChild) stack.emplace_back(nd.right, depth + 1);
        if (nd.left != kNoChild) stack.emplace_back(nd.left, depth + 1);
    }
    nodes.resize(kept.size());
    for (std::size_t k = 0; k < kept.size(); ++k) {
        const TreeNode& old = tree.node(kept[k].first);
        TreeNode nd;
        nd.id = old.id;
        nd.features = old.features;
        // children of a kept node are trimmed all-or-nothing (same depth),
        // so the right-slot invariant survives untouched
        if (old.left != kNoChild) nd.left = old_to_new[static_cast<std::size_t>(old.left)];
        if (old.right != kNoChild) nd.right = old_to_new[static_cast<std::size_t>(old.right)];
        nodes[k] = nd;
    }
    VesselTree out = VesselTree::from_records(std::move(nodes), 0);
    out.validate(VesselTree::RadiusPolicy::allow_zero);
    return out;
}

TreeStats compute_stats(const VesselTree& tree) {
    tree.validate(VesselTree::RadiusPolicy::allow_zero);
    TreeStats stats;
    const int n = tree.size();
    stats.node_count = n;
    stats.subtree_size.assign(static_cast<std::size_t>(n), 0);
    stats.class_label.assign(static_cast<std::size_t>(n), 0);

    for (int i : tree.postorder()) {
        const TreeNode& nd = tree.node(i);
        int size = 1;
        if (nd.left != kNoChild) size += stats.subtree_size[static_cast<std::size_t>(nd.left)];
        if (nd.right != kNoChild) size += stats.subtree_size[static_cast<std::size_t>(nd.right)];
        stats.subtree_size[static_cast<std::size_t>(i)] = size;
        stats.class_label[static_cast<std::size_t>(i)] = tree.num_children(i);
    }

    // depth by DFS with explicit levels
    std::vector<std::pair<int, int>> stack{{tree.root(), 1}};
    while (!stack.empty()) {
        auto [i, depth] = stack.back();
        stack.pop_back();
        stats.depth = std::max(stats.depth, depth);
        const TreeNode& nd = tree.node(i);
        if (nd.left != kNoChild) stack.emplace_back(nd.left, depth + 1);
        if (nd.right != kNoChild) stack.emplace_back(nd.right, depth + 1);
    }
    return stats;
}

} // namespace vsynth
