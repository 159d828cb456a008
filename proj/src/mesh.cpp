#include "vesselsynth/mesh.hpp"

#include "vesselsynth/common.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <unordered_map>

namespace vsynth {

namespace {

struct BranchGraphNode {
    Branch branch;
    std::vector<int> children; ///< indices into the graph
    bool root_branch = false;  ///< starts at the tree root (gets a start cap)
};

struct BranchGraph {
    std::vector<BranchGraphNode> nodes;
    std::vector<int> roots;
};

BranchPoint point_of(const VesselTree& tree, int index) {
    const NodeFeatures& f = tree.node(index).features;
    return {Vec3{f.x, f.y, f.z}, f.r};
}

BranchGraph build_branch_graph(const VesselTree& tree) {
    tree.validate(VesselTree::RadiusPolicy::allow_zero);
    BranchGraph graph;
    if (tree.empty()) return graph;

    struct Pending {
        int junction;   ///< shared start node, -1 when the branch begins at the tree root
        int first_step; ///< first node walked by this branch
        int parent_gb;  ///< parent graph index, -1 for root-level branches
    };
    std::vector<Pending> stack;

    const int root = tree.root();
    if (tree.num_children(root) == 2) {
        // no trunk segment: both children become root-level branches
        stack.push_back({root, tree.node(root).right, -1});
        stack.push_back({root, tree.node(root).left, -1});
    } else if (tree.num_children(root) == 1) {
        stack.push_back({-1, root, -1});
    }
    // a lone node yields no branch

    while (!stack.empty()) {
        const Pending p = stack.back();
        stack.pop_back();

        Branch branch;
        if (p.junction >= 0) branch.points.push_back(point_of(tree, p.junction));
        branch.points.push_back(point_of(tree, p.first_step));
        int cur = p.first_step;
        while (tree.num_children(cur) == 1) {
            cur = tree.node(cur).right;
            branch.points.push_back(point_of(tree, cur));
        }

        BranchGraphNode node;
        node.branch = std::move(branch);
        node.root_branch = p.parent_gb < 0;
        const int gb = static_cast<int>(graph.nodes.size());
        graph.nodes.push_back(std::move(node));
        if (p.parent_gb < 0) {
            graph.roots.push_back(gb);
        } else {
            graph.nodes[static_cast<std::size_t>(p.parent_gb)].children.push_back(gb);
        }
        if (tree.num_children(cur) == 2) {
            // push right first so the left branch is walked first
            stack.push_back({cur, tree.node(cur).right, gb});
            stack.push_back({cur, tree.node(cur).left, gb});
        }
    }
    return graph;
}

} // namespace

std::vector<Branch> extract_branches(const VesselTree& tree) {
    const BranchGraph graph = build_branch_graph(tree);
    std::vector<Branch> out;
    out.reserve(graph.nodes.size());
    for (const BranchGraphNode& n : graph.nodes) out.push_back(n.branch);
    return out;
}

ResampleParams default_resample_params(const VesselTree& tree) {
    std::vector<double> radii;
    radii.reserve(static_cast<std::size_t>(tree.size()));
    for (const TreeNode& n : tree.nodes()) radii.push_back(n.features.r);
    std::sort(radii.begin(), radii.end());
    const double median = radii.empty() ? 1.0 : radii[radii.size() / 2];
    ResampleParams p;
    p.min_step = 0.05 * median;
    p.max_step = 2.0 * median;
    return p;
}

namespace {

struct ArcTable {
    std::vector<double> s;     ///< cumulative arc length at each vertex
    std::vector<double> kappa; ///< discrete curvature at each vertex

    double total() const { return s.back(); }
};

ArcTable build_arc_table(const Branch& b) {
    const std::size_t m = b.points.size();
    ArcTable t;
    t.s.resize(m, 0.0);
    t.kappa.assign(m, 0.0);
    for (std::size_t i = 1; i < m; ++i) {
        t.s[i] = t.s[i - 1] + norm(b.points[i].position - b.points[i - 1].position);
    }
    for (std::size_t i = 1; i + 1 < m; ++i) {
        const Vec3 a = b.points[i].position - b.points[i - 1].position;
        const Vec3 c = b.points[i + 1].position - b.points[i].position;
        const double la = norm(a), lc = norm(c);
        if (la <= 0.0 || lc <= 0.0) continue;
        const double cosang = std::clamp(dot(a, c) / (la * lc), -1.0, 1.0);
        // turning angle over the mean adjacent segment length
        t.kappa[i] = std::acos(cosang) / (0.5 * (la + lc));
    }
    return t;
}

template <typename Getter>
double sample_field(const ArcTable& t, double s, Getter get) {
    const auto& cum = t.s;
    if (s <= 0.0) return get(0);
    if (s >= cum.back()) return get(cum.size() - 1);
    const auto it = std::upper_bound(cum.begin(), cum.end(), s);
    const std::size_t hi = static_cast<std::size_t>(it - cum.begin());
    const std::size_t lo = hi - 1;
    const double seg = cum[hi] - cum[lo];
    const double w = seg > 0.0 ? (s - cum[lo]) / seg : 0.0;
    return (1.0 - w) * get(lo) + w * get(hi);
}

Vec3 sample_position(const Branch& b, const ArcTable& t, double s) {
    return {sample_field(t, s, [&](std::size_t i) { return b.points[i].position.x; }),
            sample_field(t, s, [&](std::size_t i) { return b.points[i].position.y; }),
            sample_field(t, s, [&](std::size_t i) { return b.points[i].position.z; })};
}

} // namespace

Branch resample_branch(const Branch& branch, const ResampleParams& params) {
    if (branch.points.size() < 2) throw ValidationError("branch needs at least 2 points");
    if (!(params.min_step > 0.0) || params.min_step > params.max_step) {
        throw ValidationError("resample params: need 0 < min_step <= max_step");
    }
    if (!(params.step_radius_factor > 0.0) || params.curvature_gain < 0.0) {
        throw ValidationError("resample params: need k_r > 0 and k_c >= 0");
    }

    const ArcTable table = build_arc_table(branch);
    const double total = table.total();
    if (!(total > 0.0)) throw ValidationError("branch has zero length");

    auto radius_at = [&](double s) {
        return sample_field(table, s, [&](std::size_t i) { return branch.points[i].radius; });
    };
    auto kappa_at = [&](double s) {
        return sample_field(table, s, [&](std::size_t i) { return table.kappa[i]; });
    };

    Branch out;
    out.points.push_back(branch.points.front());
    double s = 0.0;
    while (true) {
        const double step = std::clamp(
            params.step_radius_factor * radius_at(s) /
                (1.0 + params.curvature_gain * kappa_at(s)),
            params.min_step, params.max_step);
        const double next = s + step;
        if (next >= total - 0.25 * step) break; // stretch the final step to the endpoint
        out.points.push_back({sample_position(branch, table, next), radius_at(next)});
        s = next;
    }
    out.points.push_back(branch.points.back());
    return out;
}

namespace {

Vec3 any_perpendicular(const Vec3& t) {
    const Vec3 trial = std::abs(t.x) < 0.8   ? Vec3{1, 0, 0}
                       : std::abs(t.y) < 0.8 ? Vec3{0, 1, 0}
                                             : Vec3{0, 0, 1};
    return normalized(trial - t * dot(trial, t));
}

std::vector<Vec3> branch_tangents(const std::vector<BranchPoint>& pts) {
    const std::size_t m = pts.size();
    std::vector<Vec3> t(m);
    for (std::size_t i = 0; i < m; ++i) {
        Vec3 d{0, 0, 0};
        if (i > 0) d += normalized(pts[i].position - pts[i - 1].position);
        if (i + 1 < m) d += normalized(pts[i + 1].position - pts[i].position);
        const double n = norm(d);
        if (n <= 1e-12) {
            throw RuntimeError("degenerate direction: zero-length segment after resampling");
        }
        t[i] = d / n;
    }
    return t;
}

/// Double-reflection rotation-minimizing frames; returns the normal at each
/// point, each re-orthogonalized against its tangent.
std::vector<Vec3> rmf_normals(const std::vector<BranchPoint>& pts,
                              const std::vector<Vec3>& tangents, const Vec3& first_normal) {
    std::vector<Vec3> n(pts.size());
    n[0] = first_normal;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const Vec3 v1 = pts[i + 1].position - pts[i].position;
        const double c1 = dot(v1, v1);
        if (c1 <= 1e-24) {
            throw RuntimeError("degenerate direction: zero-length segment after resampling");
        }
        const Vec3 rl = n[i] - v1 * (2.0 / c1 * dot(v1, n[i]));
        const Vec3 tl = tangents[i] - v1 * (2.0 / c1 * dot(v1, tangents[i]));
        const Vec3 v2 = tangents[i + 1] - tl;
        const double c2 = dot(v2, v2);
        Vec3 next = c2 <= 1e-24 ? rl : rl - v2 * (2.0 / c2 * dot(v2, rl));
        n[i + 1] = normalized(next - tangents[i + 1] * dot(next, tangents[i + 1]));
    }
    return n;
}

Vec3 quad_center(const QuadMesh& mesh, const std::array<int, 4>& f) {
    Vec3 c{0, 0, 0};
    for (int v : f) c += mesh.vertices[static_cast<std::size_t>(v)];
    return c / 4.0;
}

Vec3 quad_normal(const QuadMesh& mesh, const std::array<int, 4>& f) {
    const Vec3& a = mesh.vertices[static_cast<std::size_t>(f[0])];
    const Vec3& b = mesh.vertices[static_cast<std::size_t>(f[1])];
    const Vec3& c = mesh.vertices[static_cast<std::size_t>(f[2])];
    return normalized(cross(b - a, c - a));
}

/// A quad of existing vertex indices a child tube opens into.
struct WeldFace {
    std::array<int, 4> verts{};
    Vec3 center;
    Vec3 normal;
};

} // namespace

QuadMesh build_tube_mesh(const VesselTree& tree, const ResampleParams& params,
                         int ring_sides) {
    if (ring_sides != 4) {
        throw ValidationError("tube meshing uses quadrilateral cross-sections (ring_sides = 4)");
    }
    BranchGraph graph = build_branch_graph(tree);
    for (BranchGraphNode& n : graph.nodes) n.branch = resample_branch(n.branch, params);

    QuadMesh mesh;
    auto add_vertex = [&mesh](const Vec3& v) {
        mesh.vertices.push_back(v);
        return static_cast<int>(mesh.vertices.size()) - 1;
    };

    struct Job {
        int gb;
        bool has_weld = false;
        WeldFace weld; ///< valid when has_weld
    };
    std::vector<Job> stack;
    for (auto it = graph.roots.rbegin(); it != graph.roots.rend(); ++it) {
        stack.push_back({*it, false, {}});
    }

    while (!stack.empty()) {
        const Job job = stack.back();
        stack.pop_back();
        const BranchGraphNode& bn = graph.nodes[static_cast<std::size_t>(job.gb)];
        const std::vector<BranchPoint>& pts = bn.branch.points;

        // Tangents over the full point list; a welded branch places rings
        // only from its second point on (the junction is covered by the
        // weld face), but its first tangent still respects the junction.
        const std::vector<Vec3> all_tans = branch_tangents(pts);
        const std::size_t skip = job.has_weld ? 1 : 0;
        const std::vector<BranchPoint> centers(pts.begin() + static_cast<std::ptrdiff_t>(skip), pts.end());
        const std::vector<Vec3> tans(all_tans.begin() + static_cast<std::ptrdiff_t>(skip), all_tans.end());

        Vec3 n0;
        if (job.has_weld) {
            // start the frame aligned with the weld face to minimize twist
            const Vec3 toward =
                mesh.vertices[static_cast<std::size_t>(job.weld.verts[0])] - job.weld.center;
            const Vec3 proj = toward - tans[0] * dot(toward, tans[0]);
            n0 = norm(proj) > 1e-12 ? normalized(proj) : any_perpendicular(tans[0]);
        } else {
            n0 = any_perpendicular(tans[0]);
        }
        const std::vector<Vec3> normals = rmf_normals(centers, tans, n0);

        std::vector<std::array<int, 4>> rings(centers.size());
        for (std::size_t i = 0; i < centers.size(); ++i) {
            const Vec3 bi = cross(tans[i], normals[i]);
            for (int j = 0; j < 4; ++j) {
                const double ang = 1.5707963267948966 * j;
                rings[i][static_cast<std::size_t>(j)] = add_vertex(
                    centers[i].position +
                    (normals[i] * std::cos(ang) + bi * std::sin(ang)) * centers[i].radius);
            }
        }

        // candidate faces for child welds: the last ring-to-ring band, or
        // the junction bridge when the branch carries a single ring
        std::size_t candidates_begin = mesh.faces.size();

        if (job.has_weld) {
            // Pair the weld quad with ring 0 by the cyclic correspondence of
            // least total distance, then bridge with 4 quads.
            const auto& w = job.weld.verts;
            const auto& r0 = rings[0];
            int best_offset = 0, best_dir = 1;
            double best_cost = std::numeric_limits<double>::infinity();
            for (int dir : {1, -1}) {
                for (int off = 0; off < 4; ++off) {
                    double cost = 0.0;
                    for (int j = 0; j < 4; ++j) {
                        const int rj = ((off + dir * j) % 4 + 4) % 4;
                        cost += norm(mesh.vertices[static_cast<std::size_t>(w[static_cast<std::size_t>(j)])] -
                                     mesh.vertices[static_cast<std::size_t>(r0[static_cast<std::size_t>(rj)])]);
                    }
                    if (cost < best_cost) {
                        best_cost = cost;
                        best_offset = off;
                        best_dir = dir;
                    }
                }
            }
            auto ring_of = [&](int j) {
                return r0[static_cast<std::size_t>(((best_offset + best_dir * j) % 4 + 4) % 4)];
            };
            for (int j = 0; j < 4; ++j) {
                mesh.faces.push_back({w[static_cast<std::size_t>(j)],
                                      w[static_cast<std::size_t>((j + 1) % 4)],
                                      ring_of(j + 1), ring_of(j)});
            }
        } else {
            // root branches start closed
            mesh.faces.push_back({rings[0][3], rings[0][2], rings[0][1], rings[0][0]});
        }

        for (std::size_t i = 0; i + 1 < rings.size(); ++i) {
            candidates_begin = mesh.faces.size();
            for (int j = 0; j < 4; ++j) {
                mesh.faces.push_back({rings[i][static_cast<std::size_t>(j)],
                                      rings[i][static_cast<std::size_t>((j + 1) % 4)],
                                      rings[i + 1][static_cast<std::size_t>((j + 1) % 4)],
                                      rings[i + 1][static_cast<std::size_t>(j)]});
            }
        }
        if (!job.has_weld && rings.size() < 2) {
            throw RuntimeError("branch too short to mesh"); // unreachable for valid graphs
        }

        std::array<WeldFace, 4> candidates;
        for (int j = 0; j < 4; ++j) {
            const auto& f = mesh.faces[candidates_begin + static_cast<std::size_t>(j)];
            candidates[static_cast<std::size_t>(j)] =
                WeldFace{f, quad_center(mesh, f), quad_normal(mesh, f)};
        }

        // every branch end is capped; children open through side faces
        const auto& last = rings.back();
        mesh.faces.push_back({last[0], last[1], last[2], last[3]});

        if (!bn.children.empty()) {
            const Vec3 junction = pts.back().position;
            std::vector<int> taken;
            for (int child_gb : bn.children) {
                const BranchGraphNode& cb = graph.nodes[static_cast<std::size_t>(child_gb)];
                const Vec3 child_dir =
                    normalized(cb.branch.points[1].position - cb.branch.points[0].position);
                int best = -1;
                double best_score = -std::numeric_limits<double>::infinity();
                for (int j = 0; j < 4; ++j) {
                    if (std::find(taken.begin(), taken.end(), j) != taken.end()) continue;
                    const WeldFace& wf = candidates[static_cast<std::size_t>(j)];
                    const double score = dot(normalized(wf.center - junction), child_dir) +
                                         dot(wf.normal, child_dir);
                    if (score > best_score) {
                        best_score = score;
                        best = j;
                    }
                }
                taken.push_back(best);
                stack.push_back({child_gb, true, candidates[static_cast<std::size_t>(best)]});
            }
            // drop welded faces, highest position first so indices stay valid
            std::sort(taken.begin(), taken.end(), std::greater<int>());
            for (int j : taken) {
                mesh.faces.erase(mesh.faces.begin() +
                                 static_cast<std::ptrdiff_t>(candidates_begin) + j);
            }
        }
    }
    return mesh;
}

namespace {

std::uint64_t edge_key(int a, int b) {
    const std::uint64_t lo = static_cast<std::uint64_t>(std::min(a, b));
    const std::uint64_t hi = static_cast<std::uint64_t>(std::max(a, b));
    return (hi << 32) | lo;
}

} // namespace

QuadMesh catmull_clark(const QuadMesh& mesh, int iterations) {
    if (iterations < 0) throw ValidationError("iterations must be >= 0");
    QuadMesh cur = mesh;
    for (int iter = 0; iter < iterations; ++iter) {
        const std::size_t nv = cur.vertices.size();
        const std::size_t nf = cur.faces.size();

        std::vector<Vec3> face_point(nf);
        for (std::size_t f = 0; f < nf; ++f) face_point[f] = quad_center(cur, cur.faces[f]);

        struct EdgeInfo {
            int a, b;
            int f0 = -1, f1 = -1;
        };
        std::unordered_map<std::uint64_t, int> edge_index;
        std::vector<EdgeInfo> edges;
        edge_index.reserve(nf * 4);
        for (std::size_t f = 0; f < nf; ++f) {
            const auto& face = cur.faces[f];
            for (int k = 0; k < 4; ++k) {
                const int a = face[static_cast<std::size_t>(k)];
                const int b = face[static_cast<std::size_t>((k + 1) % 4)];
                const std::uint64_t key = edge_key(a, b);
                auto [it, inserted] = edge_index.try_emplace(key, static_cast<int>(edges.size()));
                if (inserted) {
                    edges.push_back({std::min(a, b), std::max(a, b), static_cast<int>(f), -1});
                } else {
                    EdgeInfo& e = edges[static_cast<std::size_t>(it->second)];
                    if (e.f1 != -1) {
                        throw ValidationError("non-manifold edge: more than 2 incident faces");
                    }
                    e.f1 = static_cast<int>(f);
                }
            }
        }
        for (const EdgeInfo& e : edges) {
            if (e.f1 == -1) throw ValidationError("boundary edge encountered: mesh not closed");
        }

        // edge point: mean of endpoints and both adjacent face points
        std::vector<Vec3> edge_point(edges.size());
        for (std::size_t e = 0; e < edges.size(); ++e) {
            const EdgeInfo& ei = edges[e];
            edge_point[e] = (cur.vertices[static_cast<std::size_t>(ei.a)] +
                             cur.vertices[static_cast<std::size_t>(ei.b)] +
                             face_point[static_cast<std::size_t>(ei.f0)] +
                             face_point[static_cast<std::size_t>(ei.f1)]) /
                            4.0;
        }

        // vertex rule: (F + 2R + (n-3)P) / n
        std::vector<Vec3> face_sum(nv, Vec3{});
        std::vector<int> face_cnt(nv, 0);
        for (std::size_t f = 0; f < nf; ++f) {
            for (int v : cur.faces[f]) {
                face_sum[static_cast<std::size_t>(v)] += face_point[f];
                face_cnt[static_cast<std::size_t>(v)] += 1;
            }
        }
        std::vector<Vec3> mid_sum(nv, Vec3{});
        std::vector<int> edge_cnt(nv, 0);
        for (const EdgeInfo& e : edges) {
            const Vec3 mid = (cur.vertices[static_cast<std::size_t>(e.a)] +
                              cur.vertices[static_cast<std::size_t>(e.b)]) / 2.0;
            mid_sum[static_cast<std::size_t>(e.a)] += mid;
            mid_sum[static_cast<std::size_t>(e.b)] += mid;
            edge_cnt[static_cast<std::size_t>(e.a)] += 1;
            edge_cnt[static_cast<std::size_t>(e.b)] += 1;
        }

        QuadMesh next;
        next.vertices.resize(nv + nf + edges.size());
        for (std::size_t v = 0; v < nv; ++v) {
            const double n = static_cast<double>(face_cnt[v]);
            if (n < 3.0) throw ValidationError("vertex with valence < 3 in a closed mesh");
            const Vec3 favg = face_sum[v] / n;
            const Vec3 ravg = mid_sum[v] / static_cast<double>(edge_cnt[v]);
            next.vertices[v] = (favg + ravg * 2.0 + cur.vertices[v] * (n - 3.0)) / n;
        }
        for (std::size_t f = 0; f < nf; ++f) next.vertices[nv + f] = face_point[f];
        for (std::size_t e = 0; e < edges.size(); ++e) next.vertices[nv + nf + e] = edge_point[e];

        next.faces.reserve(nf * 4);
        for (std::size_t f = 0; f < nf; ++f) {
            const auto& face = cur.faces[f];
            const int fp = static_cast<int>(nv + f);
            std::array<int, 4> ep{};
            for (int k = 0; k < 4; ++k) {
                const int a = face[static_cast<std::size_t>(k)];
                const int b = face[static_cast<std::size_t>((k + 1) % 4)];
                ep[static_cast<std::size_t>(k)] =
                    static_cast<int>(nv + nf) + edge_index.at(edge_key(a, b));
            }
            for (int k = 0; k < 4; ++k) {
                const int prev = (k + 3) % 4;
                next.faces.push_back({face[static_cast<std::size_t>(k)],
                                      ep[static_cast<std::size_t>(k)], fp,
                                      ep[static_cast<std::size_t>(prev)]});
            }
        }
        cur = std::move(next);
    }
    return cur;
}

std::string export_obj(const QuadMesh& mesh) {
    std::string out;
    out.reserve(mesh.vertices.size() * 40 + mesh.faces.size() * 24 + 64);
    out += "# quad surface mesh\n";

    char buf[64];
    auto append_double = [&](double v) {
        const auto res =
            std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 9);
        out.append(buf, res.ptr);
    };
    for (const Vec3& v : mesh.vertices) {
        out += "v ";
        append_double(v.x);
        out += ' ';
        append_double(v.y);
        out += ' ';
        append_double(v.z);
        out += '\n';
    }
    for (const auto& f : mesh.faces) {
        out += "f";
        for (int idx : f) {
            out += ' ';
            const auto res = std::to_chars(buf, buf + sizeof(buf), idx + 1);
            out.append(buf, res.ptr);
        }
        out += '\n';
    }
    return out;
}

MeshStats compute_mesh_stats(const QuadMesh& mesh) {
    MeshStats stats;
    stats.vertex_count = static_cast<int>(mesh.vertices.size());
    stats.face_count = static_cast<int>(mesh.faces.size());
    std::unordered_map<std::uint64_t, int> edge_faces;
    edge_faces.reserve(mesh.faces.size() * 4);
    for (const auto& f : mesh.faces) {
        for (int k = 0; k < 4; ++k) {
            edge_faces[edge_key(f[static_cast<std::size_t>(k)],
                                f[static_cast<std::size_t>((k + 1) % 4)])] += 1;
        }
    }
    stats.edge_count = static_cast<long long>(edge_faces.size());
    stats.euler_characteristic =
        static_cast<long long>(stats.vertex_count) - stats.edge_count + stats.face_count;
    stats.closed = true;
    for (const auto& [key, count] : edge_faces) {
        if (count != 2) {
            stats.closed = false;
            break;
        }
    }
    return stats;
}

} // namespace vsynth
