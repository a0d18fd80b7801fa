#include <doctest.h>

#include "helpers.hpp"
#include "mif/meshing.hpp"

using namespace mif;

namespace {

ScalarGrid sphere_grid(double radius, double spacing, double scale = 1.0) {
    ScalarGrid grid;
    double half = radius + 2 * spacing;
    grid.origin = {-half, -half, -half};
    grid.spacing = spacing;
    grid.nx = grid.ny = grid.nz = int(std::floor(2 * half / spacing + 1e-9)) + 1;
    grid.values.resize(std::size_t(grid.nx) * std::size_t(grid.ny) * std::size_t(grid.nz));
    for (int k = 0; k < grid.nz; ++k)
        for (int j = 0; j < grid.ny; ++j)
            for (int i = 0; i < grid.nx; ++i)
                grid.values[grid.node_index(i, j, k)] =
                    scale * (norm(grid.node_position(i, j, k)) - radius);
    return grid;
}

}  // namespace

TEST_CASE("marching cubes on trivial grids") {
    ScalarGrid grid;
    grid.origin = {0, 0, 0};
    grid.spacing = 1.0;
    grid.nx = grid.ny = grid.nz = 2;
    grid.values.assign(8, 1.0);
    CHECK(marching_cubes(grid).empty());  // all positive, no crossing

    // One negative corner: canonical case 1 emits a single triangle.
    grid.values[grid.node_index(0, 0, 0)] = -1.0;
    Mesh mesh = marching_cubes(grid);
    CHECK(mesh.triangles.size() == 1);
    CHECK(mesh.vertices.size() == 3);
    for (const auto& v : mesh.vertices) {
        // Midpoints of the three edges at the origin corner.
        CHECK(norm(v) == doctest::Approx(0.5).epsilon(1e-12));
    }
}

TEST_CASE("marching cubes sphere oracle: radii and area") {
    double radius = 1.0, spacing = 0.05;
    Mesh mesh = marching_cubes(sphere_grid(radius, spacing));
    REQUIRE(!mesh.empty());
    for (const auto& v : mesh.vertices) {
        double r = norm(v);
        CHECK(r > radius - spacing);
        CHECK(r < radius + spacing);
    }
    double area = mesh.area();
    CHECK(std::abs(area - 4 * M_PI * radius * radius) < 0.05 * 4 * M_PI);

    // Interpolation parameter stays on the edge: every vertex sits between
    // nodes with straddling values (radii already imply this; also check
    // shared vertices are reused).
    CHECK(mesh.vertices.size() < 3 * mesh.triangles.size());
}

TEST_CASE("level-set invariance under positive scaling") {
    Mesh a = marching_cubes(sphere_grid(0.8, 0.1, 1.0));
    Mesh b = marching_cubes(sphere_grid(0.8, 0.1, 2.0));
    REQUIRE(a.vertices.size() == b.vertices.size());
    REQUIRE(a.triangles.size() == b.triangles.size());
    for (std::size_t i = 0; i < a.vertices.size(); ++i)
        CHECK(norm(a.vertices[i] - b.vertices[i]) < 1e-9);
}

TEST_CASE("masked cells emit no geometry") {
    ScalarGrid grid = sphere_grid(0.8, 0.1);
    grid.cell_mask.assign(grid.num_cells(), 0);
    CHECK(marching_cubes(grid).empty());
    grid.cell_mask.assign(grid.num_cells(), 1);
    CHECK(!marching_cubes(grid).empty());
}

TEST_CASE("marching_cubes_function matches the grid path") {
    auto f = [](const Point3& p) { return norm(p) - 0.7; };
    Aabb bounds;
    bounds.expand({-1, -1, -1});
    bounds.expand({1, 1, 1});
    Mesh streamed = marching_cubes_function(f, bounds, 0.1);

    ScalarGrid grid;
    grid.origin = bounds.min;
    grid.spacing = 0.1;
    grid.nx = grid.ny = grid.nz = 21;
    grid.values.resize(std::size_t(21 * 21 * 21));
    for (int k = 0; k < 21; ++k)
        for (int j = 0; j < 21; ++j)
            for (int i = 0; i < 21; ++i)
                grid.values[grid.node_index(i, j, k)] = f(grid.node_position(i, j, k));
    Mesh dense = marching_cubes(grid);

    REQUIRE(streamed.vertices.size() == dense.vertices.size());
    REQUIRE(streamed.triangles.size() == dense.triangles.size());
    for (std::size_t i = 0; i < dense.vertices.size(); ++i)
        CHECK(norm(streamed.vertices[i] - dense.vertices[i]) < 1e-12);
}

TEST_CASE("evaluate_grid over a trained-like model") {
    FieldModel model = testutil::make_tiny_model(71);
    Aabb bounds;
    bounds.expand({-1, -1, -1});
    bounds.expand({1, 1, 1});

    GridOptions opts;
    opts.masked = false;
    ScalarGrid grid = evaluate_grid(model, bounds, 0.25, opts);
    CHECK(grid.nx == 9);
    CHECK(grid.ny == 9);
    CHECK(grid.nz == 9);
    // Values match per-point decode.
    Point3 p = grid.node_position(2, 3, 4);
    CHECK(grid.at(2, 3, 4) == doctest::Approx(decode_forward(model, p)).epsilon(1e-12));

    // Budget enforcement.
    GridOptions small = opts;
    small.cell_budget = 10;
    CHECK_THROWS_WITH_AS(evaluate_grid(model, bounds, 0.25, small),
                         doctest::Contains("grid-too-large"), std::runtime_error);

    // Constant field: zero the gains, set output bias.
    for (auto& layer : model.decoder.layers) layer.g.setZero();
    model.decoder.layers.back().b(0) = 2.0;
    model.decoder.refresh_weights();
    ScalarGrid cgrid = evaluate_grid(model, bounds, 0.5, opts);
    for (double v : cgrid.values) CHECK(v == 2.0);

    // Masked evaluation: cells far from allocated leaves carry the fill value.
    GridOptions masked;
    masked.masked = true;
    ScalarGrid mgrid = evaluate_grid(model, bounds, 0.25, masked);
    CHECK(!mgrid.cell_mask.empty());
}

TEST_CASE("grid dims follow spacing over a unit cube") {
    FieldModel model = testutil::make_tiny_model(72);
    Aabb bounds;
    bounds.expand({0, 0, 0});
    bounds.expand({1, 1, 1});
    GridOptions opts;
    opts.masked = false;
    ScalarGrid grid = evaluate_grid(model, bounds, 0.1, opts);
    CHECK(grid.nx == 11);
    CHECK(grid.ny == 11);
    CHECK(grid.nz == 11);
}
