#pragma once

#include <string>
#include <vector>

#include "mif/geometry.hpp"

namespace mif {

class BinWriter;
class BinReader;

enum class ScanFormat { XyzText, PlyAscii, PlyBinaryLE, KittiBin };
enum class PoseFormat { Kitti3x4Rows, Matrix4x4Blocks };

ScanFormat scan_format_from_string(const std::string& s);
PoseFormat pose_format_from_string(const std::string& s);

// Points stay in the sensor frame; world coordinates are derived through the
// pose on demand.
struct Scan {
    std::vector<Point3> points;
    Pose pose;
    Point3 sensor_origin;  // world frame; equals pose.translation

    Point3 world_point(std::size_t i) const { return transform_point(pose, points[i]); }
};

struct ScanSet {
    std::vector<Scan> scans;
    Aabb world_bounds;

    std::size_t total_points() const {
        std::size_t n = 0;
        for (const auto& s : scans) n += s.points.size();
        return n;
    }

    void save(BinWriter& w, std::uint64_t config_hash = 0) const;
    static ScanSet load(BinReader& r, std::uint64_t* config_hash = nullptr);
};

std::vector<Point3> load_scan(const std::string& path, ScanFormat format);
std::vector<Pose> load_poses(const std::string& path, PoseFormat format);

std::vector<Point3> range_filter(const std::vector<Point3>& points, double min_r, double max_r);
std::vector<Point3> voxel_downsample(const std::vector<Point3>& points, double voxel);

// Statistical outlier removal: points whose mean distance to their k nearest
// neighbors exceeds mu + sigma_mult * sigma of that statistic are dropped.
// Inputs of size <= k pass through unchanged.
std::vector<Point3> remove_statistical_outliers(const std::vector<Point3>& points, std::size_t k,
                                                double sigma_mult);

struct PreprocessConfig {
    double min_range = 1.5;
    double max_range = 50.0;
    double voxel = 0.05;
    std::size_t outlier_k = 25;
    double outlier_sigma = 2.5;
};

ScanSet preprocess_scanset(const std::vector<std::vector<Point3>>& raw_scans,
                           const std::vector<Pose>& poses, const PreprocessConfig& config);

}  // namespace mif
