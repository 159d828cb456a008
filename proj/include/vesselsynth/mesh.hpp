#pragma once

#include "vesselsynth/vec3.hpp"
#include "vesselsynth/vessel_tree.hpp"

#include <array>
#include <string>
#include <vector>

namespace vsynth {

struct BranchPoint {
    Vec3 position;
    double radius = 0.0;
};

/// Maximal centerline chain between {root, bifurcation, leaf} nodes. The
/// junction node is the last point of the parent branch and the first point
/// of each child branch.
struct Branch {
    std::vector<BranchPoint> points;
};

/// Adaptive resampling: local step = clamp(k_r * r / (1 + k_c * kappa),
/// min_step, max_step) with kappa the discrete curvature.
struct ResampleParams {
    double step_radius_factor = 0.5; ///< k_r
    double curvature_gain = 2.0;     ///< k_c
    double min_step = 0.0;
    double max_step = 0.0;
};

/// min_step = 0.05 * median radius, max_step = 2 * median radius.
ResampleParams default_resample_params(const VesselTree& tree);

struct QuadMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 4>> faces;
};

/// Branches in depth-first order. Chains without a segment (a lone node, or
/// a root that bifurcates immediately) contribute no branch of their own.
std::vector<Branch> extract_branches(const VesselTree& tree);

/// Arc-length walk with the adaptive step rule; endpoints retained exactly,
/// radii and curvature interpolated linearly.
Branch resample_branch(const Branch& branch, const ResampleParams& params);

/// Sweep a square cross-section along every resampled branch with a
/// rotation-minimizing frame. Branch ends are capped; child tubes open into
/// the parent through the side face of the parent's last segment nearest the
/// child direction. The result is closed: every edge borders exactly 2 faces.
QuadMesh build_tube_mesh(const VesselTree& tree, const ResampleParams& params,
                         int ring_sides = 4);

/// Standard subdivision rules on a closed quad mesh; each iteration maps
/// F faces to 4F. Throws on boundary edges.
QuadMesh catmull_clark(const QuadMesh& mesh, int iterations);

/// Wavefront OBJ text, 9 significant digits, locale-independent.
std::string export_obj(const QuadMesh& mesh);

struct MeshStats {
    int vertex_count = 0;
    int face_count = 0;
    long long edge_count = 0;
    long long euler_characteristic = 0;
    bool closed = false; ///< every edge on exactly 2 faces
};

MeshStats compute_mesh_stats(const QuadMesh& mesh);

} // namespace vsynth
