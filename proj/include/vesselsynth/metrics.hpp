#pragma once

#include "vesselsynth/mesh.hpp"
#include "vesselsynth/vessel_tree.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace vsynth {

/// Arc length over chord length; 1.0 for a straight branch. Throws
/// ValidationError when the endpoints coincide (undefined chord).
double tortuosity(const Branch& branch);

/// Sum of parent-child edge lengths.
double total_length(const VesselTree& tree);

/// Unweighted mean of node radii.
double average_radius(const VesselTree& tree);

struct MetricHistogram {
    std::string name;
    std::vector<double> bin_edges;   ///< bins + 1 increasing values
    std::vector<std::int64_t> counts;
    std::int64_t overflow = 0;       ///< values outside [lo, hi]
};

/// Uniform bins over [lo, hi]; right-open except the last bin, which is
/// closed. Out-of-range values land in the overflow tally.
MetricHistogram build_histogram(const std::vector<double>& values, int bins,
                                double lo, double hi, std::string name);

/// dot / (|a| |b|) over the count vectors; 0 when either histogram is empty.
/// Requires identical bin edges.
double cosine_similarity(const MetricHistogram& a, const MetricHistogram& b);

struct MetricComparison {
    MetricHistogram real;
    MetricHistogram synth;
    double similarity = 0.0;
};

struct PopulationReport {
    int real_count = 0;
    int synth_count = 0;
    int bins = 0;
    MetricComparison radius;      ///< per-tree average radius
    MetricComparison length;      ///< per-tree total centerline length
    MetricComparison tortuosity;  ///< pooled per-branch values
    int skipped_branches = 0;     ///< coincident-endpoint branches excluded

    std::string to_json() const;
};

/// Shared-range histograms over both populations and their cosine
/// similarities for radius, total length, and per-branch tortuosity.
PopulationReport evaluate_populations(const std::vector<VesselTree>& real,
                                      const std::vector<VesselTree>& synth, int bins);

} // namespace vsynth
