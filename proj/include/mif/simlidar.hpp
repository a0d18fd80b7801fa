#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mif/geometry.hpp"
#include "mif/ingest.hpp"

namespace mif {

struct SdfPrimitive {
    enum class Type { Sphere, Box, Plane };
    Type type = Type::Sphere;
    Point3 center;       // sphere, box
    double radius = 1.0; // sphere
    Vec3 half_extents;   // box
    Vec3 normal{0, 0, 1};  // plane (unit); solid occupies dot(n, p) >= offset
    double offset = 0.0;

    double sdf(const Point3& p) const;
};

// Union (min) of primitives; smooth_k > 0 switches to a polynomial smooth-min.
struct SdfScene {
    std::vector<SdfPrimitive> primitives;
    double smooth_k = 0.0;

    double sdf(const Point3& p) const;
};

inline double scene_sdf(const SdfScene& scene, const Point3& p) { return scene.sdf(p); }

struct ScannerSpec {
    int azimuth_count = 360;
    std::vector<double> elevations_deg;
    double max_range = 60.0;
    double noise_sigma = 0.0;
    std::uint64_t seed = 7;

    // Evenly spaced elevations, endpoints included.
    static std::vector<double> linear_elevations(double lo_deg, double hi_deg, int count);
};

// Sphere tracing; steps by the SDF value until |sdf| < 1e-6 (hit) or the
// accumulated distance exceeds max_range (miss).
std::optional<double> cast_ray(const SdfScene& scene, const Point3& origin, const Vec3& direction,
                               double max_range);

// Rays over the azimuth x elevation lattice; hits become sensor-frame points
// with seeded Gaussian range noise, misses are dropped.
Scan simulate_scan(const SdfScene& scene, const Pose& pose, const ScannerSpec& spec);

// Scene file: primitives + poses + scanner + meshing bounds, JSON.
struct SceneDescription {
    std::string name;
    SdfScene scene;
    std::vector<Pose> poses;
    ScannerSpec scanner;
    Aabb mesh_bounds;
    double reference_spacing = 0.02;

    static SceneDescription from_json_text(const std::string& text);
    static SceneDescription load(const std::string& path);
};

}  // namespace mif
