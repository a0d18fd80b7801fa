#include <doctest.h>

#include "helpers.hpp"
#include "mif/simlidar.hpp"

using namespace mif;

namespace {

SdfScene unit_sphere_scene() {
    SdfPrimitive s;
    s.type = SdfPrimitive::Type::Sphere;
    s.center = {0, 0, 0};
    s.radius = 1.0;
    SdfScene scene;
    scene.primitives.push_back(s);
    return scene;
}

// Closed-form ray/sphere intersection, the oracle for sphere tracing.
std::optional<double> sphere_hit(const Point3& o, const Vec3& d, double radius) {
    double b = dot(o, d);
    double c = dot(o, o) - radius * radius;
    double disc = b * b - c;
    if (disc < 0) return std::nullopt;
    double t = -b - std::sqrt(disc);
    if (t < 0) return std::nullopt;
    return t;
}

}  // namespace

TEST_CASE("scene_sdf primitives") {
    SdfScene sphere = unit_sphere_scene();
    CHECK(scene_sdf(sphere, {2, 0, 0}) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(scene_sdf(sphere, {0, 0, 0}) == doctest::Approx(-1.0).epsilon(1e-12));

    SdfPrimitive box;
    box.type = SdfPrimitive::Type::Box;
    box.center = {0, 0, 0};
    box.half_extents = {1, 1, 1};
    SdfScene bscene;
    bscene.primitives.push_back(box);
    CHECK(scene_sdf(bscene, {2, 2, 0}) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
    CHECK(scene_sdf(bscene, {0, 0, 0}) == doctest::Approx(-1.0).epsilon(1e-12));

    SdfPrimitive plane;
    plane.type = SdfPrimitive::Type::Plane;
    plane.normal = {1, 0, 0};
    plane.offset = 2.0;  // solid where x >= 2
    SdfScene pscene;
    pscene.primitives.push_back(plane);
    CHECK(scene_sdf(pscene, {0, 5, 5}) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(scene_sdf(pscene, {3, 0, 0}) == doctest::Approx(-1.0).epsilon(1e-12));

    // Union takes the min.
    SdfScene both;
    both.primitives = {sphere.primitives[0], plane};
    CHECK(scene_sdf(both, {1.9, 0, 0}) == doctest::Approx(0.1).epsilon(1e-9));
}

TEST_CASE("cast_ray basics") {
    SdfScene scene = unit_sphere_scene();
    auto hit = cast_ray(scene, {3, 0, 0}, {-1, 0, 0}, 10.0);
    REQUIRE(hit.has_value());
    CHECK(std::abs(*hit - 2.0) < 1e-5);
    CHECK(!cast_ray(scene, {3, 0, 0}, {0, 0, 1}, 10.0).has_value());
}

TEST_CASE("cast_ray agrees with the quadratic-formula oracle") {
    SdfScene scene = unit_sphere_scene();
    Rng rng(31);
    int hits = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        Point3 o{rng.uniform(-4, 4), rng.uniform(-4, 4), rng.uniform(-4, 4)};
        if (norm(o) < 1.5) continue;  // start outside
        // Aim at a point well inside to bound the incidence angle.
        Point3 target{rng.uniform(-0.7, 0.7), rng.uniform(-0.7, 0.7), rng.uniform(-0.7, 0.7)};
        Vec3 d = normalized(target - o);
        auto got = cast_ray(scene, o, d, 20.0);
        auto want = sphere_hit(o, d, 1.0);
        REQUIRE(got.has_value() == want.has_value());
        if (got) {
            CHECK(std::abs(*got - *want) < 1e-4);
            ++hits;
        }
    }
    CHECK(hits > 500);
}

TEST_CASE("simulate_scan: enclosure, zero-noise surface property, determinism") {
    // Sensor inside a closed box room: every ray hits.
    SdfScene room;
    for (int axis = 0; axis < 3; ++axis)
        for (int sign = -1; sign <= 1; sign += 2) {
            SdfPrimitive wall;
            wall.type = SdfPrimitive::Type::Plane;
            wall.normal = {axis == 0 ? double(sign) : 0.0, axis == 1 ? double(sign) : 0.0,
                           axis == 2 ? double(sign) : 0.0};
            wall.offset = 2.0;
            room.primitives.push_back(wall);
        }

    ScannerSpec spec;
    spec.azimuth_count = 32;
    spec.elevations_deg = ScannerSpec::linear_elevations(-60, 60, 8);
    spec.max_range = 50.0;
    spec.seed = 9;

    Scan scan = simulate_scan(room, Pose::identity(), spec);
    CHECK(scan.points.size() == 32 * 8);  // enclosure: no misses

    for (const auto& p : scan.points) CHECK(std::abs(room.sdf(p)) < 1e-4);

    Scan again = simulate_scan(room, Pose::identity(), spec);
    REQUIRE(scan.points.size() == again.points.size());
    for (std::size_t i = 0; i < scan.points.size(); ++i)
        CHECK(norm(scan.points[i] - again.points[i]) == 0.0);

    // With noise the returns scatter around the wall but stay seeded.
    ScannerSpec noisy = spec;
    noisy.noise_sigma = 0.02;
    Scan n1 = simulate_scan(room, Pose::identity(), noisy);
    Scan n2 = simulate_scan(room, Pose::identity(), noisy);
    REQUIRE(n1.points.size() == n2.points.size());
    for (std::size_t i = 0; i < n1.points.size(); ++i)
        CHECK(norm(n1.points[i] - n2.points[i]) == 0.0);
}

TEST_CASE("ray depths invariant under a joint rigid motion") {
    SdfScene sphere = unit_sphere_scene();
    Rng rng(41);
    Pose motion = testutil::random_pose(rng);

    // Moved scene: transform the primitive center.
    SdfScene moved = sphere;
    moved.primitives[0].center = transform_point(motion, sphere.primitives[0].center);

    ScannerSpec spec;
    spec.azimuth_count = 16;
    spec.elevations_deg = {-5.0, 0.0, 5.0};
    spec.max_range = 20.0;

    Pose base;
    base.translation = {3, 0, 0};
    Scan s1 = simulate_scan(sphere, base, spec);
    Scan s2 = simulate_scan(moved, compose(motion, base), spec);
    REQUIRE(s1.points.size() == s2.points.size());
    for (std::size_t i = 0; i < s1.points.size(); ++i)
        CHECK(std::abs(norm(s1.points[i]) - norm(s2.points[i])) < 1e-6);
}

TEST_CASE("scene description json round trip") {
    const char* text = R"({
        "name": "demo",
        "primitives": [
            {"type": "sphere", "center": [0, 0, 0], "radius": 1.0},
            {"type": "plane", "normal": [0, 0, 1], "offset": -2.0}
        ],
        "poses": [{"position": [2.5, 0, 0]}],
        "scanner": {"azimuth_count": 64, "elevation_min_deg": -30,
                    "elevation_max_deg": 30, "elevation_count": 8,
                    "max_range": 30.0, "seed": 3},
        "mesh_bounds": {"min": [-3, -3, -3], "max": [3, 3, 3]}
    })";
    SceneDescription desc = SceneDescription::from_json_text(text);
    CHECK(desc.name == "demo");
    CHECK(desc.scene.primitives.size() == 2);
    CHECK(desc.poses.size() == 1);
    CHECK(desc.scanner.elevations_deg.size() == 8);
    CHECK(desc.mesh_bounds.contains({0, 0, 0}));
}
