#include "mif/simlidar.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "mif/rng.hpp"

namespace mif {

using nlohmann::json;

double SdfPrimitive::sdf(const Point3& p) const {
    switch (type) {
        case Type::Sphere:
            return norm(p - center) - radius;
        case Type::Box: {
            Vec3 d = p - center;
            Vec3 q{std::abs(d.x) - half_extents.x, std::abs(d.y) - half_extents.y,
                   std::abs(d.z) - half_extents.z};
            Vec3 outside{std::max(q.x, 0.0), std::max(q.y, 0.0), std::max(q.z, 0.0)};
            return norm(outside) + std::min(std::max(q.x, std::max(q.y, q.z)), 0.0);
        }
        case Type::Plane:
            return offset - dot(normal, p);
    }
    return 0.0;
}

double SdfScene::sdf(const Point3& p) const {
    if (primitives.empty()) throw std::runtime_error("scene has no primitives");
    double d = primitives.front().sdf(p);
    for (std::size_t i = 1; i < primitives.size(); ++i) {
        double b = primitives[i].sdf(p);
        if (smooth_k > 0.0) {
            double h = std::clamp(0.5 + 0.5 * (b - d) / smooth_k, 0.0, 1.0);
            d = b + (d - b) * h - smooth_k * h * (1.0 - h);
        } else {
            d = std::min(d, b);
        }
    }
    return d;
}

std::vector<double> ScannerSpec::linear_elevations(double lo_deg, double hi_deg, int count) {
    std::vector<double> out;
    out.reserve(std::size_t(count));
    if (count == 1) {
        out.push_back(0.5 * (lo_deg + hi_deg));
        return out;
    }
    for (int i = 0; i < count; ++i)
        out.push_back(lo_deg + (hi_deg - lo_deg) * double(i) / double(count - 1));
    return out;
}

std::optional<double> cast_ray(const SdfScene& scene, const Point3& origin, const Vec3& direction,
                               double max_range) {
    constexpr double kHitTol = 1e-6;
    constexpr int kMaxSteps = 4096;
    double t = 0.0;
    for (int step = 0; step < kMaxSteps && t <= max_range; ++step) {
        double d = scene.sdf(origin + direction * t);
        if (std::abs(d) < kHitTol) return t;
        t += std::max(d, kHitTol);  // never stalls on grazing hits
    }
    return std::nullopt;
}

Scan simulate_scan(const SdfScene& scene, const Pose& pose, const ScannerSpec& spec) {
    if (spec.azimuth_count < 1 || spec.elevations_deg.empty())
        throw std::invalid_argument("scanner needs at least one azimuth and elevation");
    if (spec.max_range <= 0) throw std::invalid_argument("max_range must be > 0");

    Scan scan;
    scan.pose = pose;
    scan.sensor_origin = pose.translation;
    scan.points.reserve(std::size_t(spec.azimuth_count) * spec.elevations_deg.size());

    std::uint64_t ray_index = 0;
    for (double elev_deg : spec.elevations_deg) {
        double elev = elev_deg * M_PI / 180.0;
        double ce = std::cos(elev), se = std::sin(elev);
        for (int a = 0; a < spec.azimuth_count; ++a, ++ray_index) {
            double az = 2.0 * M_PI * double(a) / double(spec.azimuth_count);
            Vec3 dir_sensor{ce * std::cos(az), ce * std::sin(az), se};
            Vec3 dir_world = pose.rotation * dir_sensor;
            auto hit = cast_ray(scene, pose.translation, dir_world, spec.max_range);
            if (!hit) continue;
            double depth = *hit;
            if (spec.noise_sigma > 0.0) {
                Rng rng(derive_seed(spec.seed, ray_index));
                depth = std::max(1e-6, depth + rng.gaussian(0.0, spec.noise_sigma));
            }
            scan.points.push_back(dir_sensor * depth);
        }
    }
    return scan;
}

namespace {

Point3 point_from_json(const json& j) {
    if (!j.is_array() || j.size() != 3)
        throw std::runtime_error("format-error: expected [x, y, z]");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace

SceneDescription SceneDescription::from_json_text(const std::string& text) {
    json j = json::parse(text);
    SceneDescription desc;
    desc.name = j.value("name", "scene");

    for (const auto& pj : j.at("primitives")) {
        SdfPrimitive prim;
        std::string type = pj.at("type").get<std::string>();
        if (type == "sphere") {
            prim.type = SdfPrimitive::Type::Sphere;
            prim.center = point_from_json(pj.at("center"));
            prim.radius = pj.at("radius").get<double>();
        } else if (type == "box") {
            prim.type = SdfPrimitive::Type::Box;
            prim.center = point_from_json(pj.at("center"));
            prim.half_extents = point_from_json(pj.at("half_extents"));
        } else if (type == "plane") {
            prim.type = SdfPrimitive::Type::Plane;
            prim.normal = normalized(point_from_json(pj.at("normal")));
            prim.offset = pj.at("offset").get<double>();
        } else {
            throw std::runtime_error("format-error: unknown primitive type '" + type + "'");
        }
        desc.scene.primitives.push_back(prim);
    }
    desc.scene.smooth_k = j.value("smooth_union_k", 0.0);

    for (const auto& pj : j.at("poses")) {
        Pose pose;
        pose.translation = point_from_json(pj.at("position"));
        if (pj.contains("rotation")) {
            const auto& r = pj.at("rotation");
            if (!r.is_array() || r.size() != 9)
                throw std::runtime_error("format-error: rotation must be 9 numbers, row-major");
            for (int i = 0; i < 9; ++i) pose.rotation.m[std::size_t(i)] = r[i].get<double>();
            if (!pose.valid(1e-6))
                throw std::runtime_error("non-rigid-error: scene pose rotation");
        }
        desc.poses.push_back(pose);
    }

    const auto& sj = j.at("scanner");
    desc.scanner.azimuth_count = sj.at("azimuth_count").get<int>();
    if (sj.contains("elevations_deg")) {
        for (const auto& e : sj.at("elevations_deg"))
            desc.scanner.elevations_deg.push_back(e.get<double>());
    } else {
        desc.scanner.elevations_deg = ScannerSpec::linear_elevations(
            sj.at("elevation_min_deg").get<double>(), sj.at("elevation_max_deg").get<double>(),
            sj.at("elevation_count").get<int>());
    }
    desc.scanner.max_range = sj.value("max_range", 60.0);
    desc.scanner.noise_sigma = sj.value("noise_sigma", 0.0);
    desc.scanner.seed = sj.value("seed", std::uint64_t(7));

    const auto& bj = j.at("mesh_bounds");
    desc.mesh_bounds.min = point_from_json(bj.at("min"));
    desc.mesh_bounds.max = point_from_json(bj.at("max"));
    desc.reference_spacing = j.value("reference_spacing", 0.02);
    return desc;
}

SceneDescription SceneDescription::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("io-error: cannot open scene " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

}  // namespace mif
