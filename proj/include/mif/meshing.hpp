#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mif/decoder.hpp"
#include "mif/geometry.hpp"

namespace mif {

namespace mc {
extern const int kEdgeTable[256];
extern const int kTriTable[256][16];
}  // namespace mc

struct Mesh {
    std::vector<Point3> vertices;
    std::vector<std::array<std::uint32_t, 3>> triangles;

    bool empty() const { return triangles.empty(); }
    double area() const;
};

// Dense scalar samples over a node lattice; values[node] = f(origin + spacing*(i,j,k)),
// x fastest. cell_mask (empty = all cells active) marks which cells may emit
// geometry during extraction.
struct ScalarGrid {
    Point3 origin;
    double spacing = 0.1;
    int nx = 0, ny = 0, nz = 0;
    std::vector<double> values;
    std::vector<std::uint8_t> cell_mask;

    std::size_t node_index(int i, int j, int k) const {
        return (std::size_t(k) * std::size_t(ny) + std::size_t(j)) * std::size_t(nx) +
               std::size_t(i);
    }
    std::size_t cell_index(int i, int j, int k) const {
        return (std::size_t(k) * std::size_t(ny - 1) + std::size_t(j)) * std::size_t(nx - 1) +
               std::size_t(i);
    }
    double at(int i, int j, int k) const { return values[node_index(i, j, k)]; }
    Point3 node_position(int i, int j, int k) const {
        return origin + Point3{double(i), double(j), double(k)} * spacing;
    }
    std::size_t num_cells() const {
        return std::size_t(nx - 1) * std::size_t(ny - 1) * std::size_t(nz - 1);
    }
};

struct GridOptions {
    bool masked = true;
    double mask_dilation_voxels = 1.0;       // in octree leaf voxels
    std::size_t cell_budget = std::size_t(1) << 27;
    double fill_value = 1.0;                 // unevaluated nodes read "outside"
    int threads = 1;
};

// Samples the field over bounds. When masked, only cells within the dilation
// radius of an allocated octree leaf are active and get their nodes evaluated.
ScalarGrid evaluate_grid(const FieldModel& model, const Aabb& bounds, double spacing,
                         const GridOptions& options = {});

// Classic 256-case lookup-table marching cubes with linear edge interpolation.
// Shared edge vertices are emitted once; masked-off cells produce no geometry.
Mesh marching_cubes(const ScalarGrid& grid, double iso = 0.0);

// Streaming variant for analytic fields: evaluates two z-slabs at a time so
// fine-resolution reference meshes never materialize a full grid.
Mesh marching_cubes_function(const std::function<double(const Point3&)>& field,
                             const Aabb& bounds, double spacing, double iso = 0.0);

// Batched field evaluation (read-only model; parallel over chunks).
std::vector<double> field_values(const FieldModel& model, const std::vector<Point3>& points,
                                 int threads = 1);

// Mesh I/O. OBJ is ASCII v/f 1-based; PLY is binary little-endian. The comment
// string lands in the header of either format.
void write_mesh_obj(const Mesh& mesh, const std::string& path, const std::string& comment = "");
void write_mesh_ply(const Mesh& mesh, const std::string& path, const std::string& comment = "");
void write_mesh(const Mesh& mesh, const std::string& path, const std::string& comment = "");
Mesh read_mesh(const std::string& path);  // by extension: .obj, .ply

}  // namespace mif
