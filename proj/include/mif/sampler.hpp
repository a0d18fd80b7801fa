#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mif/geometry.hpp"
#include "mif/ingest.hpp"
#include "mif/rng.hpp"

namespace mif {

enum class Segment : std::uint8_t { Free = 0, Near = 1, Occluded = 2 };

struct SampleConfig {
    int m_free = 4;       // samples before the surface band
    int m_surf = 3;       // samples inside the +-eps band
    int m_occ = 2;        // samples behind the reading
    double eps = 0.05;    // near-surface half width (m)
    double gamma = 1.0;   // free-space segment length (m)
    double theta = 0.3;   // occluded segment length (m)
    std::uint64_t rng_seed = 1;

    void validate() const;
};

struct QuerySample {
    Point3 point;   // world frame, origin + t * direction
    double t = 0;   // ray parameter (m)
    double r = 0;   // residual tau - t (m), positive before the surface
    Segment segment = Segment::Near;
};

struct RaySamples {
    Ray ray;
    std::vector<QuerySample> samples;  // strictly sorted ascending by t
    Point3 surface_point;              // the raw reading, r = 0
    bool clamped = false;              // free segment start hit t = 0

    // Index in the merged (samples + reading) chain where the reading sits.
    std::size_t surface_chain_index() const;
};

struct TrainingSet {
    std::vector<RaySamples> rays;
    std::vector<Point3> surface_points;  // one per ray
    std::size_t clamped_rays = 0;        // rays shorter than gamma + eps

    void save(const std::string& path) const;
    static TrainingSet load(const std::string& path);
};

RaySamples sample_ray(const Ray& ray, const SampleConfig& cfg, Rng& rng);

// One RaySamples per retained reading; per-ray RNG streams are derived from
// (rng_seed, global ray index) so results are independent of evaluation order.
TrainingSet build_training_set(const ScanSet& scanset, const SampleConfig& cfg);

// Points used for octree allocation: readings plus samples within eps.
std::vector<Point3> near_surface_points(const TrainingSet& tset, double eps);

}  // namespace mif
