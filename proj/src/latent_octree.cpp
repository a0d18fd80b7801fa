#include "mif/latent_octree.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mif/binio.hpp"

namespace mif {

namespace {

std::uint64_t spread_bits21(std::uint64_t x) {
    x &= 0x1fffffull;
    x = (x | x << 32) & 0x1f00000000ffffull;
    x = (x | x << 16) & 0x1f0000ff0000ffull;
    x = (x | x << 8) & 0x100f00f00f00f00full;
    x = (x | x << 4) & 0x10c30c30c30c30c3ull;
    x = (x | x << 2) & 0x1249249249249249ull;
    return x;
}

std::uint32_t compact_bits21(std::uint64_t x) {
    x &= 0x1249249249249249ull;
    x = (x ^ (x >> 2)) & 0x10c30c30c30c30c3ull;
    x = (x ^ (x >> 4)) & 0x100f00f00f00f00full;
    x = (x ^ (x >> 8)) & 0x1f0000ff0000ffull;
    x = (x ^ (x >> 16)) & 0x1f00000000ffffull;
    x = (x ^ (x >> 32)) & 0x1fffffull;
    return std::uint32_t(x);
}

}  // namespace

std::uint64_t morton_encode(std::uint32_t i, std::uint32_t j, std::uint32_t k) {
    if (i > kMortonAxisMax || j > kMortonAxisMax || k > kMortonAxisMax)
        throw std::out_of_range("index-overflow: morton index exceeds 21 bits");
    return spread_bits21(i) | (spread_bits21(j) << 1) | (spread_bits21(k) << 2);
}

void morton_decode(std::uint64_t code, std::uint32_t& i, std::uint32_t& j, std::uint32_t& k) {
    i = compact_bits21(code);
    j = compact_bits21(code >> 1);
    k = compact_bits21(code >> 2);
}

LatentOctree::LatentOctree(const Point3& origin, double leaf_voxel, int num_levels, int latent_dim)
    : origin_(origin), leaf_voxel_(leaf_voxel), num_levels_(num_levels), latent_dim_(latent_dim) {
    if (leaf_voxel <= 0.0) throw std::invalid_argument("leaf_voxel must be > 0");
    if (num_levels < 1) throw std::invalid_argument("num_levels must be >= 1");
    if (latent_dim < 1) throw std::invalid_argument("latent_dim must be >= 1");
    tables_.resize(std::size_t(num_levels));
    features_.resize(std::size_t(num_levels));
    leaf_keys_.resize(1);
    for (auto& f : features_) f.resize(0, latent_dim);
}

bool LatentOctree::grid_coords(const Point3& p, int level, std::int64_t idx[3],
                               double frac[3]) const {
    double size = level_voxel(level);
    bool in_range = true;
    for (int a = 0; a < 3; ++a) {
        double c = (p[a] - origin_[a]) / size;
        double f = std::floor(c);
        idx[a] = std::int64_t(f);
        frac[a] = c - f;
        if (idx[a] < 0 || idx[a] + 1 > std::int64_t(kMortonAxisMax)) in_range = false;
    }
    return in_range;
}

void LatentOctree::allocate(const std::vector<Point3>& points) {
    if (points.empty()) throw std::invalid_argument("empty-input: no points to allocate");

    for (const Point3& p : points) {
        for (int level = 0; level < num_levels_; ++level) {
            std::int64_t idx[3];
            double frac[3];
            if (!grid_coords(p, level, idx, frac))
                throw std::out_of_range("index-overflow: point outside octree address range");
            if (level == 0) {
                leaf_keys_[0].push_back(morton_encode(
                    std::uint32_t(idx[0]), std::uint32_t(idx[1]), std::uint32_t(idx[2])));
            }
            auto& table = tables_[std::size_t(level)];
            for (int c = 0; c < 8; ++c) {
                std::uint32_t ci = std::uint32_t(idx[0] + ((c >> 0) & 1));
                std::uint32_t cj = std::uint32_t(idx[1] + ((c >> 1) & 1));
                std::uint32_t ck = std::uint32_t(idx[2] + ((c >> 2) & 1));
                std::uint64_t key = morton_encode(ci, cj, ck);
                table.emplace(key, table.size());
            }
        }
    }
    std::sort(leaf_keys_[0].begin(), leaf_keys_[0].end());
    leaf_keys_[0].erase(std::unique(leaf_keys_[0].begin(), leaf_keys_[0].end()),
                        leaf_keys_[0].end());

    for (int level = 0; level < num_levels_; ++level) {
        auto& f = features_[std::size_t(level)];
        f = Eigen::MatrixXd::Zero(Eigen::Index(tables_[std::size_t(level)].size()), latent_dim_);
    }
}

Eigen::VectorXd LatentOctree::query(const Point3& p, InterpRecord& rec) const {
    Eigen::VectorXd latent = Eigen::VectorXd::Zero(latent_dim_);
    rec.levels.clear();
    rec.levels.resize(std::size_t(num_levels_));

    for (int level = 0; level < num_levels_; ++level) {
        auto& lrec = rec.levels[std::size_t(level)];
        lrec.cell_size = level_voxel(level);

        std::int64_t idx[3];
        double frac[3];
        bool in_range = grid_coords(p, level, idx, frac);
        lrec.u = frac[0];
        lrec.v = frac[1];
        lrec.w = frac[2];

        const auto& table = tables_[std::size_t(level)];
        const auto& feats = features_[std::size_t(level)];
        for (int c = 0; c < 8; ++c) {
            double wx = ((c >> 0) & 1) ? frac[0] : 1.0 - frac[0];
            double wy = ((c >> 1) & 1) ? frac[1] : 1.0 - frac[1];
            double wz = ((c >> 2) & 1) ? frac[2] : 1.0 - frac[2];
            double weight = wx * wy * wz;
            lrec.weight[std::size_t(c)] = weight;
            lrec.corner[std::size_t(c)] = InterpRecord::kMissing;
            if (!in_range) continue;

            std::uint64_t key = morton_encode(std::uint32_t(idx[0] + ((c >> 0) & 1)),
                                              std::uint32_t(idx[1] + ((c >> 1) & 1)),
                                              std::uint32_t(idx[2] + ((c >> 2) & 1)));
            ++lookups_;
            auto it = table.find(key);
            if (it == table.end()) continue;  // missing corner reads as zero
            lrec.corner[std::size_t(c)] = it->second;
            latent.noalias() += weight * feats.row(Eigen::Index(it->second)).transpose();
        }
    }
    return latent;
}

Eigen::Matrix<double, 3, Eigen::Dynamic> LatentOctree::spatial_jacobian(
    const InterpRecord& rec) const {
    Eigen::Matrix<double, 3, Eigen::Dynamic> jac =
        Eigen::MatrixXd::Zero(3, latent_dim_);

    for (std::size_t level = 0; level < rec.levels.size(); ++level) {
        const auto& lrec = rec.levels[level];
        const auto& feats = features_[level];
        double inv = 1.0 / lrec.cell_size;
        for (int c = 0; c < 8; ++c) {
            std::size_t row = lrec.corner[std::size_t(c)];
            if (row == InterpRecord::kMissing) continue;
            double sx = ((c >> 0) & 1) ? 1.0 : -1.0;
            double sy = ((c >> 1) & 1) ? 1.0 : -1.0;
            double sz = ((c >> 2) & 1) ? 1.0 : -1.0;
            double fx = ((c >> 0) & 1) ? lrec.u : 1.0 - lrec.u;
            double fy = ((c >> 1) & 1) ? lrec.v : 1.0 - lrec.v;
            double fz = ((c >> 2) & 1) ? lrec.w : 1.0 - lrec.w;
            // d w_c / d p = (sign * product of the other two factors) / cell
            Eigen::RowVectorXd f = feats.row(Eigen::Index(row));
            jac.row(0).noalias() += (sx * fy * fz * inv) * f;
            jac.row(1).noalias() += (fx * sy * fz * inv) * f;
            jac.row(2).noalias() += (fx * fy * sz * inv) * f;
        }
    }
    return jac;
}

void LatentOctree::accumulate_grads(const InterpRecord& rec, const Eigen::VectorXd& upstream,
                                    std::vector<Eigen::MatrixXd>& grad_store) const {
    for (std::size_t level = 0; level < rec.levels.size(); ++level) {
        const auto& lrec = rec.levels[level];
        auto& store = grad_store[level];
        for (int c = 0; c < 8; ++c) {
            std::size_t row = lrec.corner[std::size_t(c)];
            if (row == InterpRecord::kMissing) continue;
            store.row(Eigen::Index(row)).noalias() +=
                lrec.weight[std::size_t(c)] * upstream.transpose();
        }
    }
}

void LatentOctree::accumulate_spatial_grads(const InterpRecord& rec, const Eigen::Vector3d& dir,
                                            const Eigen::VectorXd& u,
                                            std::vector<Eigen::MatrixXd>& grad_store) const {
    for (std::size_t level = 0; level < rec.levels.size(); ++level) {
        const auto& lrec = rec.levels[level];
        auto& store = grad_store[level];
        double inv = 1.0 / lrec.cell_size;
        for (int c = 0; c < 8; ++c) {
            std::size_t row = lrec.corner[std::size_t(c)];
            if (row == InterpRecord::kMissing) continue;
            double sx = ((c >> 0) & 1) ? 1.0 : -1.0;
            double sy = ((c >> 1) & 1) ? 1.0 : -1.0;
            double sz = ((c >> 2) & 1) ? 1.0 : -1.0;
            double fx = ((c >> 0) & 1) ? lrec.u : 1.0 - lrec.u;
            double fy = ((c >> 1) & 1) ? lrec.v : 1.0 - lrec.v;
            double fz = ((c >> 2) & 1) ? lrec.w : 1.0 - lrec.w;
            double coeff = inv * (dir.x() * sx * fy * fz + dir.y() * fx * sy * fz +
                                  dir.z() * fx * fy * sz);
            store.row(Eigen::Index(row)).noalias() += coeff * u.transpose();
        }
    }
}

std::size_t LatentOctree::total_features() const {
    std::size_t n = 0;
    for (const auto& f : features_) n += std::size_t(f.rows());
    return n;
}

std::vector<Aabb> LatentOctree::leaf_voxel_bounds() const {
    std::vector<Aabb> out;
    out.reserve(leaf_keys_[0].size());
    for (std::uint64_t key : leaf_keys_[0]) {
        std::uint32_t i, j, k;
        morton_decode(key, i, j, k);
        Point3 lo = origin_ + Point3{double(i), double(j), double(k)} * leaf_voxel_;
        Aabb box;
        box.expand(lo);
        box.expand(lo + Point3{leaf_voxel_, leaf_voxel_, leaf_voxel_});
        out.push_back(box);
    }
    return out;
}

void LatentOctree::save(BinWriter& w) const {
    w.write_magic("MIFOCT1");
    w.write<double>(origin_.x);
    w.write<double>(origin_.y);
    w.write<double>(origin_.z);
    w.write<double>(leaf_voxel_);
    w.write<std::uint32_t>(std::uint32_t(num_levels_));
    w.write<std::uint32_t>(std::uint32_t(latent_dim_));

    for (int level = 0; level < num_levels_; ++level) {
        const auto& table = tables_[std::size_t(level)];
        std::vector<std::pair<std::uint64_t, std::size_t>> entries(table.begin(), table.end());
        std::sort(entries.begin(), entries.end());
        w.write<std::uint64_t>(entries.size());
        for (const auto& [key, row] : entries) w.write<std::uint64_t>(key);
        const auto& feats = features_[std::size_t(level)];
        for (const auto& [key, row] : entries)
            for (int d = 0; d < latent_dim_; ++d)
                w.write<double>(feats(Eigen::Index(row), d));
    }
    w.write<std::uint64_t>(leaf_keys_[0].size());
    for (std::uint64_t key : leaf_keys_[0]) w.write<std::uint64_t>(key);
}

LatentOctree LatentOctree::load(BinReader& r) {
    r.expect_magic("MIFOCT1", "latent octree");
    Point3 origin{r.read<double>(), r.read<double>(), r.read<double>()};
    double leaf = r.read<double>();
    auto levels = r.read<std::uint32_t>();
    auto dim = r.read<std::uint32_t>();
    LatentOctree tree(origin, leaf, int(levels), int(dim));

    for (std::uint32_t level = 0; level < levels; ++level) {
        auto count = r.read<std::uint64_t>();
        std::vector<std::uint64_t> keys(count);
        for (auto& k : keys) k = r.read<std::uint64_t>();
        auto& table = tree.tables_[level];
        table.reserve(count);
        for (std::size_t i = 0; i < count; ++i) table.emplace(keys[i], i);
        auto& feats = tree.features_[level];
        feats.resize(Eigen::Index(count), Eigen::Index(dim));
        for (Eigen::Index row = 0; row < feats.rows(); ++row)
            for (Eigen::Index d = 0; d < feats.cols(); ++d) feats(row, d) = r.read<double>();
    }
    auto leaf_count = r.read<std::uint64_t>();
    tree.leaf_keys_[0].resize(leaf_count);
    for (auto& k : tree.leaf_keys_[0]) k = r.read<std::uint64_t>();
    return tree;
}

}  // namespace mif
