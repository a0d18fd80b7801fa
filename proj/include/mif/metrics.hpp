#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mif/geometry.hpp"
#include "mif/meshing.hpp"

namespace mif {

struct MetricParams {
    double sample_resolution = 0.02;  // m; expected one sample per resolution^2 of area
    double completion_trunc = 2.0;    // m
    double fscore_threshold = 0.10;   // m
    std::uint64_t seed = 1;
};

struct MetricsReport {
    double accuracy = 0.0;     // mean pred->gt distance (untruncated)
    double completion = 0.0;   // mean gt->pred distance, truncated
    double chamfer_l2 = 0.0;   // symmetric mean of squared distances (m^2)
    double chamfer_l1 = 0.0;   // (accuracy + completion) / 2 (m)
    double precision = 0.0;
    double recall = 0.0;
    double fscore = 0.0;
    std::size_t pred_samples = 0;
    std::size_t gt_samples = 0;
    MetricParams params;

    std::string to_json(std::uint64_t config_hash = 0) const;
    std::string to_csv(std::uint64_t config_hash = 0) const;
};

// Area-weighted uniform surface sampling; expected count = area / resolution^2.
std::vector<Point3> sample_mesh_uniform(const Mesh& mesh, double resolution, std::uint64_t seed);

// Exact nearest-neighbor distances from each query point to the target set.
std::vector<double> nearest_distances(const std::vector<Point3>& query,
                                      const std::vector<Point3>& target);

MetricsReport reconstruction_metrics(const Mesh& pred, const Mesh& gt,
                                     const MetricParams& params);

}  // namespace mif
