#include "mif/meshing.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>
#include <unordered_map>

namespace mif {

double Mesh::area() const {
    double a = 0.0;
    for (const auto& t : triangles) {
        Vec3 e1 = vertices[t[1]] - vertices[t[0]];
        Vec3 e2 = vertices[t[2]] - vertices[t[0]];
        a += 0.5 * norm(cross(e1, e2));
    }
    return a;
}

namespace {

int axis_dim(const Aabb& bounds, double spacing, int axis) {
    double len = bounds.max[axis] - bounds.min[axis];
    int n = int(std::floor(len / spacing + 1e-9)) + 1;
    return std::max(n, 2);
}

// Edge key: owning node id * 4 + axis. Node ids stay below 2^61.
std::uint64_t edge_key(std::uint64_t node, int axis) { return node * 4 + std::uint64_t(axis); }

struct CellCorners {
    // Lorensen-Cline corner order relative to (i,j,k).
    static constexpr int offs[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                                       {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};
    // For each of the 12 edges: canonical owner corner offset and axis.
    static constexpr int edge_owner[12][4] = {
        {0, 0, 0, 0}, {1, 0, 0, 1}, {0, 1, 0, 0}, {0, 0, 0, 1},
        {0, 0, 1, 0}, {1, 0, 1, 1}, {0, 1, 1, 0}, {0, 0, 1, 1},
        {0, 0, 0, 2}, {1, 0, 0, 2}, {1, 1, 0, 2}, {0, 1, 0, 2}};
    // Edge endpoints as corner indices, in canonical +axis order.
    static constexpr int edge_corners[12][2] = {{0, 1}, {1, 2}, {3, 2}, {0, 3},
                                                {4, 5}, {5, 6}, {7, 6}, {4, 7},
                                                {0, 4}, {1, 5}, {2, 6}, {3, 7}};
};

class VertexPool {
public:
    explicit VertexPool(Mesh& mesh) : mesh_(mesh) {}

    std::uint32_t vertex_on_edge(std::uint64_t node_id, int axis, const Point3& base,
                                 double spacing, double va, double vb, double iso) {
        auto [it, inserted] = map_.try_emplace(edge_key(node_id, axis), 0);
        if (!inserted) return it->second;
        double t = (iso - va) / (vb - va);
        Point3 p = base;
        if (axis == 0) p.x += t * spacing;
        if (axis == 1) p.y += t * spacing;
        if (axis == 2) p.z += t * spacing;
        auto id = std::uint32_t(mesh_.vertices.size());
        mesh_.vertices.push_back(p);
        it->second = id;
        return id;
    }

private:
    Mesh& mesh_;
    std::unordered_map<std::uint64_t, std::uint32_t> map_;
};

// Polygonizes one cell given its 8 corner values. node_id(i,j,k) must be a
// globally unique, consistent id so shared edge vertices deduplicate.
template <typename NodeId>
void polygonize_cell(int i, int j, int k, const double corner_vals[8], const Point3& cell_origin,
                     double spacing, double iso, VertexPool& pool, NodeId&& node_id,
                     std::vector<std::array<std::uint32_t, 3>>& triangles) {
    int cubeindex = 0;
    for (int c = 0; c < 8; ++c)
        if (corner_vals[c] < iso) cubeindex |= (1 << c);
    if (mc::kEdgeTable[cubeindex] == 0) return;

    std::uint32_t edge_vertex[12];
    for (int e = 0; e < 12; ++e) {
        if (!(mc::kEdgeTable[cubeindex] & (1 << e))) continue;
        const int* own = CellCorners::edge_owner[e];
        int axis = own[3];
        Point3 base = cell_origin + Point3{double(own[0]), double(own[1]), double(own[2])} *
                                        spacing;
        edge_vertex[e] = pool.vertex_on_edge(node_id(i + own[0], j + own[1], k + own[2]), axis,
                                             base, spacing,
                                             corner_vals[CellCorners::edge_corners[e][0]],
                                             corner_vals[CellCorners::edge_corners[e][1]], iso);
    }

    const int* tris = mc::kTriTable[cubeindex];
    for (int t = 0; tris[t] != -1; t += 3) {
        std::array<std::uint32_t, 3> tri{edge_vertex[tris[t]], edge_vertex[tris[t + 1]],
                                         edge_vertex[tris[t + 2]]};
        if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2]) continue;  // degenerate
        triangles.push_back(tri);
    }
}

void eval_chunk(const FieldModel& model, const std::vector<Point3>& points, std::size_t begin,
                std::size_t end, std::vector<double>& out) {
    constexpr std::size_t kBlock = 1024;
    const int in_w = model.posenc.width() + model.tree.latent_dim();
    Eigen::MatrixXd input(in_w, Eigen::Index(std::min(kBlock, end - begin)));
    DecoderTape tape;
    InterpRecord rec;
    for (std::size_t b = begin; b < end; b += kBlock) {
        std::size_t n = std::min(kBlock, end - b);
        if (Eigen::Index(n) != input.cols()) input.resize(in_w, Eigen::Index(n));
        for (std::size_t c = 0; c < n; ++c) {
            positional_encode(points[b + c], model.posenc, model.bounds,
                              input.col(Eigen::Index(c)).data());
            input.col(Eigen::Index(c)).tail(model.tree.latent_dim()) =
                model.tree.query(points[b + c], rec);
        }
        Eigen::RowVectorXd vals = decoder_forward(model.decoder, input, tape);
        for (std::size_t c = 0; c < n; ++c) out[b + c] = vals(Eigen::Index(c));
    }
}

}  // namespace

std::vector<double> field_values(const FieldModel& model, const std::vector<Point3>& points,
                                 int threads) {
    std::vector<double> out(points.size());
    if (points.empty()) return out;
    int n_threads = std::max(1, threads);
    if (n_threads == 1 || points.size() < 4096) {
        eval_chunk(model, points, 0, points.size(), out);
        return out;
    }
    std::vector<std::thread> workers;
    std::size_t per = (points.size() + std::size_t(n_threads) - 1) / std::size_t(n_threads);
    for (int t = 0; t < n_threads; ++t) {
        std::size_t begin = std::size_t(t) * per;
        std::size_t end = std::min(points.size(), begin + per);
        if (begin >= end) break;
        workers.emplace_back(
            [&, begin, end]() { eval_chunk(model, points, begin, end, out); });
    }
    for (auto& w : workers) w.join();
    return out;
}

ScalarGrid evaluate_grid(const FieldModel& model, const Aabb& bounds, double spacing,
                         const GridOptions& options) {
    if (spacing <= 0.0) throw std::invalid_argument("spacing must be > 0");
    if (bounds.empty()) throw std::invalid_argument("bounds must be nonempty");

    ScalarGrid grid;
    grid.origin = bounds.min;
    grid.spacing = spacing;
    grid.nx = axis_dim(bounds, spacing, 0);
    grid.ny = axis_dim(bounds, spacing, 1);
    grid.nz = axis_dim(bounds, spacing, 2);
    if (grid.num_cells() > options.cell_budget)
        throw std::runtime_error("grid-too-large: " + std::to_string(grid.num_cells()) +
                                 " cells exceed budget " + std::to_string(options.cell_budget));

    const std::size_t num_nodes =
        std::size_t(grid.nx) * std::size_t(grid.ny) * std::size_t(grid.nz);

    std::vector<std::uint8_t> node_needed;
    if (options.masked) {
        grid.cell_mask.assign(grid.num_cells(), 0);
        node_needed.assign(num_nodes, 0);
        double dilation = options.mask_dilation_voxels * model.tree.leaf_voxel();
        for (const Aabb& leaf : model.tree.leaf_voxel_bounds()) {
            Aabb box = leaf.inflated(dilation);
            int i0 = std::max(0, int(std::floor((box.min.x - grid.origin.x) / spacing)));
            int j0 = std::max(0, int(std::floor((box.min.y - grid.origin.y) / spacing)));
            int k0 = std::max(0, int(std::floor((box.min.z - grid.origin.z) / spacing)));
            int i1 = std::min(grid.nx - 2, int(std::floor((box.max.x - grid.origin.x) / spacing)));
            int j1 = std::min(grid.ny - 2, int(std::floor((box.max.y - grid.origin.y) / spacing)));
            int k1 = std::min(grid.nz - 2, int(std::floor((box.max.z - grid.origin.z) / spacing)));
            for (int k = k0; k <= k1; ++k)
                for (int j = j0; j <= j1; ++j)
                    for (int i = i0; i <= i1; ++i) {
                        grid.cell_mask[grid.cell_index(i, j, k)] = 1;
                        for (int c = 0; c < 8; ++c)
                            node_needed[grid.node_index(i + CellCorners::offs[c][0],
                                                        j + CellCorners::offs[c][1],
                                                        k + CellCorners::offs[c][2])] = 1;
                    }
        }
    }

    std::vector<Point3> to_eval;
    std::vector<std::size_t> eval_slot;
    grid.values.assign(num_nodes, options.fill_value);
    for (int k = 0; k < grid.nz; ++k)
        for (int j = 0; j < grid.ny; ++j)
            for (int i = 0; i < grid.nx; ++i) {
                std::size_t node = grid.node_index(i, j, k);
                if (options.masked && !node_needed[node]) continue;
                to_eval.push_back(grid.node_position(i, j, k));
                eval_slot.push_back(node);
            }

    std::vector<double> vals = field_values(model, to_eval, options.threads);
    for (std::size_t i = 0; i < vals.size(); ++i) grid.values[eval_slot[i]] = vals[i];
    return grid;
}

Mesh marching_cubes(const ScalarGrid& grid, double iso) {
    if (grid.nx < 2 || grid.ny < 2 || grid.nz < 2)
        throw std::invalid_argument("grid needs at least 2 nodes per axis");

    Mesh mesh;
    VertexPool pool(mesh);
    auto node_id = [&](int i, int j, int k) { return std::uint64_t(grid.node_index(i, j, k)); };
    const bool masked = !grid.cell_mask.empty();

    double corner_vals[8];
    for (int k = 0; k + 1 < grid.nz; ++k)
        for (int j = 0; j + 1 < grid.ny; ++j)
            for (int i = 0; i + 1 < grid.nx; ++i) {
                if (masked && !grid.cell_mask[grid.cell_index(i, j, k)]) continue;
                for (int c = 0; c < 8; ++c)
                    corner_vals[c] = grid.at(i + CellCorners::offs[c][0],
                                             j + CellCorners::offs[c][1],
                                             k + CellCorners::offs[c][2]);
                polygonize_cell(i, j, k, corner_vals, grid.node_position(i, j, k), grid.spacing,
                                iso, pool, node_id, mesh.triangles);
            }
    return mesh;
}

Mesh marching_cubes_function(const std::function<double(const Point3&)>& field,
                             const Aabb& bounds, double spacing, double iso) {
    int nx = axis_dim(bounds, spacing, 0);
    int ny = axis_dim(bounds, spacing, 1);
    int nz = axis_dim(bounds, spacing, 2);

    Mesh mesh;
    VertexPool pool(mesh);
    auto node_id = [&](int i, int j, int k) {
        return (std::uint64_t(k) * std::uint64_t(ny) + std::uint64_t(j)) * std::uint64_t(nx) +
               std::uint64_t(i);
    };
    auto node_pos = [&](int i, int j, int k) {
        return bounds.min + Point3{double(i), double(j), double(k)} * spacing;
    };

    // Two z-slabs in flight.
    std::vector<double> slab_lo(std::size_t(nx) * std::size_t(ny));
    std::vector<double> slab_hi(std::size_t(nx) * std::size_t(ny));
    auto fill_slab = [&](int k, std::vector<double>& slab) {
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i)
                slab[std::size_t(j) * std::size_t(nx) + std::size_t(i)] =
                    field(node_pos(i, j, k));
    };
    fill_slab(0, slab_lo);

    double corner_vals[8];
    for (int k = 0; k + 1 < nz; ++k) {
        fill_slab(k + 1, slab_hi);
        for (int j = 0; j + 1 < ny; ++j)
            for (int i = 0; i + 1 < nx; ++i) {
                for (int c = 0; c < 8; ++c) {
                    const int* o = CellCorners::offs[c];
                    const auto& slab = o[2] ? slab_hi : slab_lo;
                    corner_vals[c] =
                        slab[std::size_t(j + o[1]) * std::size_t(nx) + std::size_t(i + o[0])];
                }
                polygonize_cell(i, j, k, corner_vals, node_pos(i, j, k), spacing, iso, pool,
                                node_id, mesh.triangles);
            }
        std::swap(slab_lo, slab_hi);
    }
    return mesh;
}

}  // namespace mif
