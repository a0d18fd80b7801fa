#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "mif/geometry.hpp"

namespace mif {

// 63-bit Morton code, 21 bits per axis. x occupies bits 0,3,6,...; y 1,4,7,...;
// z 2,5,8,...
std::uint64_t morton_encode(std::uint32_t i, std::uint32_t j, std::uint32_t k);
void morton_decode(std::uint64_t code, std::uint32_t& i, std::uint32_t& j, std::uint32_t& k);

constexpr std::uint32_t kMortonAxisBits = 21;
constexpr std::uint32_t kMortonAxisMax = (1u << kMortonAxisBits) - 1;

struct MortonKey {
    std::uint32_t level = 0;
    std::uint64_t code = 0;
    bool operator==(const MortonKey&) const = default;
};

// Per-query interpolation state: everything needed to backprop into latents and
// to form the spatial Jacobian without re-walking the hash tables.
struct InterpRecord {
    static constexpr std::size_t kMissing = SIZE_MAX;
    struct Level {
        std::array<std::size_t, 8> corner{};  // feature row or kMissing
        std::array<double, 8> weight{};       // trilinear weights, sum to 1
        double u = 0, v = 0, w = 0;           // fractional coordinates in [0,1]
        double cell_size = 0;                 // voxel edge length at this level
    };
    std::vector<Level> levels;
};

// Sparse multi-level corner-feature grid. Level 0 is the finest (leaf_voxel);
// level l has voxel size leaf_voxel * 2^l. Features live on the corner lattice
// of each level and are shared between adjacent voxels, which keeps trilinear
// queries continuous across faces. Structure is frozen after build; feature
// values are the optimizable state.
class LatentOctree {
public:
    LatentOctree() = default;
    LatentOctree(const Point3& origin, double leaf_voxel, int num_levels, int latent_dim);

    // Allocates the 8 corner features of every voxel containing one of the
    // points, at every level. Corners are deduplicated by Morton key.
    void allocate(const std::vector<Point3>& near_surface_points);

    // Aggregated latent (sum over levels of the trilinear interpolation) plus
    // the record needed for gradients. Missing corners read as zero.
    Eigen::VectorXd query(const Point3& p, InterpRecord& rec) const;
    Eigen::VectorXd query(const Point3& p) const {
        InterpRecord rec;
        return query(p, rec);
    }

    // d(latent)/d(p): 3 x d, summed over levels.
    Eigen::Matrix<double, 3, Eigen::Dynamic> spatial_jacobian(const InterpRecord& rec) const;

    // grad_store layout matches features(): one matrix per level.
    void accumulate_grads(const InterpRecord& rec, const Eigen::VectorXd& upstream,
                          std::vector<Eigen::MatrixXd>& grad_store) const;

    // Backprop through the spatial Jacobian: adds d(dir . J^T u)/d(feature_c)
    // = (dir . grad w_c) * u to each touched feature row.
    void accumulate_spatial_grads(const InterpRecord& rec, const Eigen::Vector3d& dir,
                                  const Eigen::VectorXd& u,
                                  std::vector<Eigen::MatrixXd>& grad_store) const;

    int num_levels() const { return num_levels_; }
    int latent_dim() const { return latent_dim_; }
    double leaf_voxel() const { return leaf_voxel_; }
    double level_voxel(int level) const { return leaf_voxel_ * double(1u << level); }
    const Point3& origin() const { return origin_; }

    Eigen::MatrixXd& features(int level) { return features_[std::size_t(level)]; }
    const Eigen::MatrixXd& features(int level) const { return features_[std::size_t(level)]; }
    std::size_t feature_count(int level) const { return std::size_t(features_[std::size_t(level)].rows()); }
    std::size_t total_features() const;

    // Leaf-level voxel AABBs of every allocated voxel (meshing mask support).
    std::vector<Aabb> leaf_voxel_bounds() const;

    // Lookup count bookkeeping for the O(H*8) query-cost check.
    std::uint64_t lookup_count() const { return lookups_; }
    void reset_lookup_count() { lookups_ = 0; }

    void save(class BinWriter& w) const;
    static LatentOctree load(class BinReader& r);

    bool grid_coords(const Point3& p, int level, std::int64_t idx[3], double frac[3]) const;

private:
    struct KeyHash {
        std::size_t operator()(std::uint64_t k) const {
            k ^= k >> 33;
            k *= 0xff51afd7ed558ccdull;
            k ^= k >> 33;
            return std::size_t(k);
        }
    };

    Point3 origin_;
    double leaf_voxel_ = 0.2;
    int num_levels_ = 3;
    int latent_dim_ = 8;
    // level -> (corner Morton code -> feature row)
    std::vector<std::unordered_map<std::uint64_t, std::size_t, KeyHash>> tables_;
    std::vector<Eigen::MatrixXd> features_;
    std::vector<std::vector<std::uint64_t>> leaf_keys_;  // allocated voxel keys, level 0
    mutable std::uint64_t lookups_ = 0;
};

}  // namespace mif
