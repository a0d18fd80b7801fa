#include <doctest.h>

#include "helpers.hpp"
#include "mif/kdtree.hpp"
#include "mif/metrics.hpp"

using namespace mif;

namespace {

Mesh unit_square() {
    Mesh m;
    m.vertices = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}};
    m.triangles = {{0, 1, 2}, {0, 2, 3}};
    return m;
}

Mesh translated(const Mesh& m, const Vec3& t) {
    Mesh out = m;
    for (auto& v : out.vertices) v += t;
    return out;
}

Mesh icosphere(double radius, int subdivisions);

// Octahedron-based sphere approximation, good enough for metric checks.
Mesh icosphere(double radius, int subdivisions) {
    Mesh m;
    m.vertices = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
    m.triangles = {{0, 2, 4}, {2, 1, 4}, {1, 3, 4}, {3, 0, 4},
                   {2, 0, 5}, {1, 2, 5}, {3, 1, 5}, {0, 3, 5}};
    for (int s = 0; s < subdivisions; ++s) {
        Mesh next;
        next.vertices = m.vertices;
        auto midpoint = [&](std::uint32_t a, std::uint32_t b) {
            Point3 mid = (m.vertices[a] + m.vertices[b]) / 2.0;
            next.vertices.push_back(mid);
            return std::uint32_t(next.vertices.size() - 1);
        };
        for (const auto& t : m.triangles) {
            std::uint32_t ab = midpoint(t[0], t[1]);
            std::uint32_t bc = midpoint(t[1], t[2]);
            std::uint32_t ca = midpoint(t[2], t[0]);
            next.triangles.push_back({t[0], ab, ca});
            next.triangles.push_back({t[1], bc, ab});
            next.triangles.push_back({t[2], ca, bc});
            next.triangles.push_back({ab, bc, ca});
        }
        m = std::move(next);
    }
    for (auto& v : m.vertices) v = normalized(v) * radius;
    return m;
}

}  // namespace

TEST_CASE("kd-tree equals brute force") {
    Rng rng(21);
    std::vector<Point3> target, query;
    for (int i = 0; i < 200; ++i)
        target.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)});
    for (int i = 0; i < 200; ++i)
        query.push_back({rng.uniform(-1.2, 1.2), rng.uniform(-1.2, 1.2), rng.uniform(-1.2, 1.2)});

    auto got = nearest_distances(query, target);
    for (std::size_t i = 0; i < query.size(); ++i) {
        double best = std::numeric_limits<double>::max();
        for (const auto& t : target) best = std::min(best, norm(query[i] - t));
        CHECK(got[i] == best);  // exact, same arithmetic
    }

    // kNN vs brute force.
    KdTree3 tree(target);
    for (int i = 0; i < 50; ++i) {
        auto nn = tree.knn(query[std::size_t(i)], 5);
        std::vector<double> brute;
        for (const auto& t : target) brute.push_back(squared_norm(query[std::size_t(i)] - t));
        std::sort(brute.begin(), brute.end());
        REQUIRE(nn.size() == 5);
        for (int k = 0; k < 5; ++k) CHECK(nn[std::size_t(k)].second == brute[std::size_t(k)]);
    }
}

TEST_CASE("nearest_distances trivial cases") {
    std::vector<Point3> pts{{1, 0, 0}, {0, 2, 0}};
    auto self = nearest_distances(pts, pts);
    CHECK(self[0] == 0.0);
    CHECK(self[1] == 0.0);
    auto one = nearest_distances({{0, 0, 0}}, pts);
    CHECK(one[0] == 1.0);
    CHECK_THROWS(nearest_distances(pts, {}));
}

TEST_CASE("sample_mesh_uniform counts, planarity, determinism") {
    Mesh square = unit_square();
    auto pts = sample_mesh_uniform(square, 0.1, 5);
    CHECK(pts.size() == 100);  // area 1 / 0.01
    for (const auto& p : pts) {
        CHECK(std::abs(p.z) < 1e-9);  // on the z=0 plane
        CHECK(p.x >= -1e-9);
        CHECK(p.x <= 1 + 1e-9);
    }
    auto again = sample_mesh_uniform(square, 0.1, 5);
    for (std::size_t i = 0; i < pts.size(); ++i) CHECK(norm(pts[i] - again[i]) == 0.0);

    CHECK_THROWS(sample_mesh_uniform(Mesh{}, 0.1, 1));
    Mesh degenerate;
    degenerate.vertices = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
    degenerate.triangles = {{0, 1, 2}};
    CHECK_THROWS_WITH_AS(sample_mesh_uniform(degenerate, 0.1, 1),
                         doctest::Contains("zero-area"), std::invalid_argument);
}

TEST_CASE("reconstruction_metrics identity and translation") {
    Mesh sphere = icosphere(1.0, 4);
    MetricParams params;
    params.sample_resolution = 0.05;

    MetricsReport same = reconstruction_metrics(sphere, sphere, params);
    CHECK(same.accuracy == 0.0);
    CHECK(same.completion == 0.0);
    CHECK(same.precision == 1.0);
    CHECK(same.recall == 1.0);
    CHECK(same.fscore == 1.0);

    // 5 m translation: completion fully truncated, F = 0.
    MetricsReport far = reconstruction_metrics(translated(sphere, {5, 0, 0}), sphere, params);
    CHECK(far.completion == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(far.fscore == 0.0);
}

TEST_CASE("plane offset by 5 cm reads as ~5 cm accuracy, full precision") {
    // Fine sampling keeps the point-to-point discretization bias well under
    // the 10 cm threshold, so precision/recall saturate exactly.
    Mesh plane;
    plane.vertices = {{-2, -2, 0}, {2, -2, 0}, {2, 2, 0}, {-2, 2, 0}};
    plane.triangles = {{0, 1, 2}, {0, 2, 3}};
    Mesh shifted = translated(plane, {0, 0, 0.05});

    MetricParams params;
    params.sample_resolution = 0.02;
    MetricsReport rep = reconstruction_metrics(shifted, plane, params);
    CHECK(rep.accuracy == doctest::Approx(0.05).epsilon(0.10));
    CHECK(rep.completion == doctest::Approx(0.05).epsilon(0.10));
    CHECK(rep.precision == 1.0);
    CHECK(rep.recall == 1.0);
    CHECK(rep.fscore == 1.0);
}

TEST_CASE("metric invariants: F bounds, truncation, directional asymmetry") {
    Mesh sphere = icosphere(1.0, 3);
    // Half sphere: keep triangles with all vertices z >= 0.
    Mesh half;
    half.vertices = sphere.vertices;
    for (const auto& t : sphere.triangles) {
        if (sphere.vertices[t[0]].z >= -1e-12 && sphere.vertices[t[1]].z >= -1e-12 &&
            sphere.vertices[t[2]].z >= -1e-12)
            half.triangles.push_back(t);
    }
    MetricParams params;
    params.sample_resolution = 0.02;
    MetricsReport rep = reconstruction_metrics(half, sphere, params);

    // Prediction is a subset of the reference: high precision, weak recall.
    CHECK(rep.accuracy < 0.02);
    CHECK(rep.completion > 0.1);
    CHECK(rep.precision > 0.95);
    CHECK(rep.recall < 0.8);
    CHECK(rep.completion <= params.completion_trunc);
    CHECK(rep.fscore <= 2 * std::min(rep.precision, rep.recall));

    // Rigid motion of both meshes moves the metrics only within sampling noise.
    Rng rng(77);
    Pose pose = testutil::random_pose(rng);
    auto moved = [&](const Mesh& m) {
        Mesh out = m;
        for (auto& v : out.vertices) v = transform_point(pose, v);
        return out;
    };
    MetricsReport moved_rep = reconstruction_metrics(moved(half), moved(sphere), params);
    CHECK(std::abs(moved_rep.fscore - rep.fscore) < 0.02);
    CHECK(std::abs(moved_rep.completion - rep.completion) < 0.02 * (1 + rep.completion));
}
