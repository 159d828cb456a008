#include "vesselsynth/metrics.hpp"

#include "vesselsynth/common.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>

namespace vsynth {

namespace {
using ordered_json = nlohmann::ordered_json;
}

double tortuosity(const Branch& branch) {
    if (branch.points.size() < 2) throw ValidationError("branch needs at least 2 points");
    double arc = 0.0;
    for (std::size_t i = 1; i < branch.points.size(); ++i) {
        arc += norm(branch.points[i].position - branch.points[i - 1].position);
    }
    const double chord = norm(branch.points.back().position - branch.points.front().position);
    if (chord <= 0.0) {
        throw ValidationError("tortuosity undefined: branch endpoints coincide");
    }
    return arc / chord;
}

double total_length(const VesselTree& tree) {
    tree.validate(VesselTree::RadiusPolicy::allow_zero);
    double sum = 0.0;
    for (int i = 0; i < tree.size(); ++i) {
        const TreeNode& n = tree.node(i);
        const Vec3 p{n.features.x, n.features.y, n.features.z};
        for (int c : {n.left, n.right}) {
            if (c == kNoChild) continue;
            const NodeFeatures& f = tree.node(c).features;
            sum += norm(Vec3{f.x, f.y, f.z} - p);
        }
    }
    return sum;
}

double average_radius(const VesselTree& tree) {
    tree.validate(VesselTree::RadiusPolicy::allow_zero);
    double sum = 0.0;
    for (const TreeNode& n : tree.nodes()) sum += n.features.r;
    return sum / static_cast<double>(tree.size());
}

MetricHistogram build_histogram(const std::vector<double>& values, int bins,
                                double lo, double hi, std::string name) {
    if (bins < 1) throw ValidationError("bins must be >= 1");
    if (!(lo < hi)) throw ValidationError("histogram range requires lo < hi");
    MetricHistogram h;
    h.name = std::move(name);
    h.bin_edges.resize(static_cast<std::size_t>(bins) + 1);
    const double width = (hi - lo) / bins;
    for (int i = 0; i <= bins; ++i) {
        h.bin_edges[static_cast<std::size_t>(i)] = lo + width * i;
    }
    h.bin_edges.back() = hi;
    h.counts.assign(static_cast<std::size_t>(bins), 0);
    for (double v : values) {
        if (v < lo || v > hi) {
            h.overflow += 1;
            continue;
        }
        int idx = v >= hi ? bins - 1
                          : static_cast<int>(std::floor((v - lo) / width));
        idx = std::clamp(idx, 0, bins - 1);
        h.counts[static_cast<std::size_t>(idx)] += 1;
    }
    return h;
}

double cosine_similarity(const MetricHistogram& a, const MetricHistogram& b) {
    if (a.bin_edges != b.bin_edges) {
        throw ValidationError("cosine similarity requires identical bin edges");
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.counts.size(); ++i) {
        const double x = static_cast<double>(a.counts[i]);
        const double y = static_cast<double>(b.counts[i]);
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

namespace {

struct PopulationValues {
    std::vector<double> radius, length, tortuosity;
    int skipped_branches = 0;
};

PopulationValues collect_values(const std::vector<VesselTree>& trees) {
    PopulationValues out;
    out.radius.reserve(trees.size());
    out.length.reserve(trees.size());
    for (const VesselTree& t : trees) {
        out.radius.push_back(average_radius(t));
        out.length.push_back(total_length(t));
        for (const Branch& b : extract_branches(t)) {
            const double chord = norm(b.points.back().position - b.points.front().position);
            if (chord <= 0.0) {
                std::cerr << "warning: skipping branch with coincident endpoints\n";
                out.skipped_branches += 1;
                continue;
            }
            out.tortuosity.push_back(tortuosity(b));
        }
    }
    return out;
}

std::pair<double, double> pooled_range(const std::vector<double>& a,
                                       const std::vector<double>& b) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto* v : {&a, &b}) {
        for (double x : *v) {
            lo = std::min(lo, x);
            hi = std::max(hi, x);
        }
    }
    if (!(lo <= hi)) { // both empty
        lo = 0.0;
        hi = 1.0;
    }
    if (lo == hi) { // degenerate: widen so one shared bin captures everything
        lo -= 0.5;
        hi += 0.5;
    }
    return {lo, hi};
}

MetricComparison compare_metric(const std::vector<double>& real,
                                const std::vector<double>& synth, int bins,
                                const std::string& name) {
    const auto [lo, hi] = pooled_range(real, synth);
    MetricComparison cmp;
    cmp.real = build_histogram(real, bins, lo, hi, name);
    cmp.synth = build_histogram(synth, bins, lo, hi, name);
    cmp.similarity = cosine_similarity(cmp.real, cmp.synth);
    return cmp;
}

ordered_json comparison_to_json(const MetricComparison& cmp) {
    ordered_json j;
    j["bin_edges"] = cmp.real.bin_edges;
    j["counts_real"] = cmp.real.counts;
    j["counts_synth"] = cmp.synth.counts;
    j["overflow_real"] = cmp.real.overflow;
    j["overflow_synth"] = cmp.synth.overflow;
    j["cosine_similarity"] = cmp.similarity;
    return j;
}

} // namespace

std::string PopulationReport::to_json() const {
    ordered_json doc;
    doc["real_count"] = real_count;
    doc["synth_count"] = synth_count;
    doc["bins"] = bins;
    doc["tortuosity_pooling"] = "per-branch across all trees";
    doc["skipped_branches"] = skipped_branches;
    doc["metrics"]["radius"] = comparison_to_json(radius);
    doc["metrics"]["total_length"] = comparison_to_json(length);
    doc["metrics"]["tortuosity"] = comparison_to_json(tortuosity);
    return doc.dump(2) + "\n";
}

PopulationReport evaluate_populations(const std::vector<VesselTree>& real,
                                      const std::vector<VesselTree>& synth, int bins) {
    if (real.empty() || synth.empty()) throw ValidationError("empty population");
    const PopulationValues rv = collect_values(real);
    const PopulationValues sv = collect_values(synth);

    PopulationReport report;
    report.real_count = static_cast<int>(real.size());
    report.synth_count = static_cast<int>(synth.size());
    report.bins = bins;
    report.skipped_branches = rv.skipped_branches + sv.skipped_branches;
    report.radius = compare_metric(rv.radius, sv.radius, bins, "radius");
    report.length = compare_metric(rv.length, sv.length, bins, "total_length");
    report.tortuosity = compare_metric(rv.tortuosity, sv.tortuosity, bins, "tortuosity");
    return report;
}

} // namespace vsynth
