#include "mif/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "mif/binio.hpp"
#include "mif/kdtree.hpp"

namespace mif {

ScanFormat scan_format_from_string(const std::string& s) {
    if (s == "xyz-text") return ScanFormat::XyzText;
    if (s == "ply-ascii") return ScanFormat::PlyAscii;
    if (s == "ply-binary-little-endian" || s == "ply") return ScanFormat::PlyBinaryLE;
    if (s == "kitti-bin") return ScanFormat::KittiBin;
    throw std::invalid_argument("format-error: unknown scan format '" + s + "'");
}

PoseFormat pose_format_from_string(const std::string& s) {
    if (s == "kitti-3x4-rows" || s == "kitti") return PoseFormat::Kitti3x4Rows;
    if (s == "matrix-4x4-blocks" || s == "4x4") return PoseFormat::Matrix4x4Blocks;
    throw std::invalid_argument("format-error: unknown pose format '" + s + "'");
}

namespace {

std::vector<Point3> load_xyz_text(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("io-error: cannot open " + path);
    std::vector<Point3> points;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        Point3 p;
        if (!(ss >> p.x >> p.y >> p.z))
            throw std::runtime_error("format-error: bad xyz record at line " +
                                     std::to_string(lineno));
        points.push_back(p);
    }
    return points;
}

std::vector<Point3> load_kitti_bin(const std::string& path) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw std::runtime_error("io-error: cannot open " + path);
    auto bytes = std::size_t(in.tellg());
    if (bytes % 16 != 0)
        throw std::runtime_error("format-error: kitti-bin size not a multiple of 16 bytes");
    in.seekg(0);
    std::size_t n = bytes / 16;
    std::vector<float> raw(n * 4);
    in.read(reinterpret_cast<char*>(raw.data()), std::streamsize(bytes));
    if (!in) throw std::runtime_error("io-error: short read on " + path);
    if (!detail::host_little_endian())
        for (auto& f : raw) f = detail::byteswap(f);
    std::vector<Point3> points(n);
    for (std::size_t i = 0; i < n; ++i)
        points[i] = {double(raw[4 * i]), double(raw[4 * i + 1]), double(raw[4 * i + 2])};
    return points;
}

struct PlyProperty {
    std::string type;  // scalar type, or "list"
    std::string name;
    std::string count_type, item_type;  // for lists
};
struct PlyElement {
    std::string name;
    std::size_t count = 0;
    std::vector<PlyProperty> props;
};

std::size_t ply_type_size(const std::string& t) {
    if (t == "char" || t == "uchar" || t == "int8" || t == "uint8") return 1;
    if (t == "short" || t == "ushort" || t == "int16" || t == "uint16") return 2;
    if (t == "int" || t == "uint" || t == "int32" || t == "uint32" || t == "float" ||
        t == "float32")
        return 4;
    if (t == "double" || t == "float64" || t == "int64" || t == "uint64") return 8;
    throw std::runtime_error("format-error: unknown ply type '" + t + "'");
}

double ply_read_scalar(const unsigned char* p, const std::string& t) {
    auto load = [&](auto v) {
        std::memcpy(&v, p, sizeof(v));
        if (!detail::host_little_endian()) v = detail::byteswap(v);
        return double(v);
    };
    if (t == "float" || t == "float32") return load(float{});
    if (t == "double" || t == "float64") return load(double{});
    if (t == "char" || t == "int8") return load(std::int8_t{});
    if (t == "uchar" || t == "uint8") return load(std::uint8_t{});
    if (t == "short" || t == "int16") return load(std::int16_t{});
    if (t == "ushort" || t == "uint16") return load(std::uint16_t{});
    if (t == "int" || t == "int32") return load(std::int32_t{});
    if (t == "uint" || t == "uint32") return load(std::uint32_t{});
    throw std::runtime_error("format-error: unsupported ply scalar '" + t + "'");
}

struct PlyHeader {
    bool binary = false;
    std::vector<PlyElement> elements;
    std::streampos data_start;
};

PlyHeader parse_ply_header(std::ifstream& in, const std::string& path) {
    PlyHeader hdr;
    std::string line;
    if (!std::getline(in, line) || line.substr(0, 3) != "ply")
        throw std::runtime_error("format-error: not a ply file: " + path);
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream ss(line);
        std::string tok;
        ss >> tok;
        if (tok == "comment" || tok == "obj_info") continue;
        if (tok == "format") {
            std::string fmt;
            ss >> fmt;
            if (fmt == "binary_little_endian") hdr.binary = true;
            else if (fmt == "ascii") hdr.binary = false;
            else throw std::runtime_error("format-error: unsupported ply format " + fmt);
        } else if (tok == "element") {
            PlyElement el;
            ss >> el.name >> el.count;
            hdr.elements.push_back(el);
        } else if (tok == "property") {
            if (hdr.elements.empty())
                throw std::runtime_error("format-error: property before element");
            PlyProperty prop;
            ss >> prop.type;
            if (prop.type == "list") {
                ss >> prop.count_type >> prop.item_type >> prop.name;
            } else {
                ss >> prop.name;
            }
            hdr.elements.back().props.push_back(prop);
        } else if (tok == "end_header") {
            hdr.data_start = in.tellg();
            return hdr;
        }
    }
    throw std::runtime_error("format-error: ply header without end_header");
}

std::vector<Point3> load_ply_points(const std::string& path, bool expect_binary) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("io-error: cannot open " + path);
    PlyHeader hdr = parse_ply_header(in, path);
    if (hdr.binary != expect_binary)
        throw std::runtime_error("format-error: ply encoding does not match declared format");

    const PlyElement* vertex = nullptr;
    for (const auto& el : hdr.elements) {
        if (el.name == "vertex") {
            vertex = &el;
            break;
        }
        if (hdr.binary) {
            // Elements before vertex must have a fixed record size to skip.
            std::size_t rec = 0;
            for (const auto& p : el.props) {
                if (p.type == "list")
                    throw std::runtime_error(
                        "format-error: list element precedes vertex in binary ply");
                rec += ply_type_size(p.type);
            }
            in.seekg(std::streamoff(rec * el.count), std::ios::cur);
        } else {
            std::string skip;
            for (std::size_t i = 0; i < el.count; ++i) std::getline(in, skip);
        }
    }
    if (!vertex) throw std::runtime_error("format-error: ply has no vertex element");
    if (vertex->count == 0) throw std::runtime_error("format-error: empty cloud");

    int xi = -1, yi = -1, zi = -1;
    for (std::size_t i = 0; i < vertex->props.size(); ++i) {
        if (vertex->props[i].type == "list")
            throw std::runtime_error("format-error: list property in vertex element");
        if (vertex->props[i].name == "x") xi = int(i);
        if (vertex->props[i].name == "y") yi = int(i);
        if (vertex->props[i].name == "z") zi = int(i);
    }
    if (xi < 0 || yi < 0 || zi < 0)
        throw std::runtime_error("format-error: ply vertex lacks x/y/z");

    std::vector<Point3> points(vertex->count);
    if (hdr.binary) {
        std::size_t rec = 0;
        std::vector<std::size_t> offsets(vertex->props.size());
        for (std::size_t i = 0; i < vertex->props.size(); ++i) {
            offsets[i] = rec;
            rec += ply_type_size(vertex->props[i].type);
        }
        std::vector<unsigned char> buf(rec);
        for (std::size_t i = 0; i < vertex->count; ++i) {
            in.read(reinterpret_cast<char*>(buf.data()), std::streamsize(rec));
            if (!in)
                throw std::runtime_error("format-error: truncated vertex record " +
                                         std::to_string(i));
            points[i].x = ply_read_scalar(buf.data() + offsets[std::size_t(xi)],
                                          vertex->props[std::size_t(xi)].type);
            points[i].y = ply_read_scalar(buf.data() + offsets[std::size_t(yi)],
                                          vertex->props[std::size_t(yi)].type);
            points[i].z = ply_read_scalar(buf.data() + offsets[std::size_t(zi)],
                                          vertex->props[std::size_t(zi)].type);
        }
    } else {
        std::string line;
        for (std::size_t i = 0; i < vertex->count; ++i) {
            if (!std::getline(in, line))
                throw std::runtime_error("format-error: truncated vertex record " +
                                         std::to_string(i));
            std::istringstream ss(line);
            std::vector<double> vals(vertex->props.size());
            for (auto& v : vals)
                if (!(ss >> v))
                    throw std::runtime_error("format-error: bad vertex record " +
                                             std::to_string(i));
            points[i] = {vals[std::size_t(xi)], vals[std::size_t(yi)], vals[std::size_t(zi)]};
        }
    }
    return points;
}

Pose pose_from_rt(const Eigen::Matrix3d& rot, const Point3& t, std::size_t record) {
    Eigen::Matrix3d gram = rot.transpose() * rot - Eigen::Matrix3d::Identity();
    double dev = std::max(gram.cwiseAbs().maxCoeff(), std::abs(rot.determinant() - 1.0));
    Eigen::Matrix3d r = rot;
    if (dev >= 1e-3)
        throw std::runtime_error("non-rigid-error: pose record " + std::to_string(record) +
                                 " deviates from a rotation by " + std::to_string(dev));
    if (dev > 0) {
        Eigen::JacobiSVD<Eigen::Matrix3d> svd(rot, Eigen::ComputeFullU | Eigen::ComputeFullV);
        Eigen::Matrix3d u = svd.matrixU();
        if ((u * svd.matrixV().transpose()).determinant() < 0) u.col(2) *= -1.0;
        r = u * svd.matrixV().transpose();
    }
    Pose pose;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) pose.rotation(i, j) = r(i, j);
    pose.translation = t;
    return pose;
}

}  // namespace

std::vector<Point3> load_scan(const std::string& path, ScanFormat format) {
    std::vector<Point3> points;
    switch (format) {
        case ScanFormat::XyzText: points = load_xyz_text(path); break;
        case ScanFormat::PlyAscii: points = load_ply_points(path, false); break;
        case ScanFormat::PlyBinaryLE: points = load_ply_points(path, true); break;
        case ScanFormat::KittiBin: points = load_kitti_bin(path); break;
    }
    for (std::size_t i = 0; i < points.size(); ++i)
        if (!points[i].finite())
            throw std::runtime_error("format-error: non-finite point at record " +
                                     std::to_string(i));
    return points;
}

std::vector<Pose> load_poses(const std::string& path, PoseFormat format) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("io-error: cannot open " + path);
    std::vector<Pose> poses;

    if (format == PoseFormat::Kitti3x4Rows) {
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty() || line[0] == '#') continue;
            std::istringstream ss(line);
            double v[12];
            for (int i = 0; i < 12; ++i)
                if (!(ss >> v[i]))
                    throw std::runtime_error("format-error: pose line " + std::to_string(lineno) +
                                             " needs 12 values");
            Eigen::Matrix3d rot;
            rot << v[0], v[1], v[2], v[4], v[5], v[6], v[8], v[9], v[10];
            poses.push_back(pose_from_rt(rot, {v[3], v[7], v[11]}, poses.size()));
        }
    } else {
        std::vector<double> vals;
        double v;
        while (in >> v) vals.push_back(v);
        if (vals.size() % 16 != 0)
            throw std::runtime_error("format-error: 4x4 pose stream not a multiple of 16 values");
        for (std::size_t b = 0; b < vals.size(); b += 16) {
            const double* m = vals.data() + b;
            if (std::abs(m[12]) > 1e-6 || std::abs(m[13]) > 1e-6 || std::abs(m[14]) > 1e-6 ||
                std::abs(m[15] - 1.0) > 1e-6)
                throw std::runtime_error("format-error: pose block " + std::to_string(b / 16) +
                                         " bottom row is not (0 0 0 1)");
            Eigen::Matrix3d rot;
            rot << m[0], m[1], m[2], m[4], m[5], m[6], m[8], m[9], m[10];
            poses.push_back(pose_from_rt(rot, {m[3], m[7], m[11]}, poses.size()));
        }
    }
    return poses;
}

std::vector<Point3> range_filter(const std::vector<Point3>& points, double min_r, double max_r) {
    if (min_r < 0.0 || min_r >= max_r)
        throw std::invalid_argument("invalid-range: need 0 <= min_r < max_r");
    std::vector<Point3> out;
    out.reserve(points.size());
    for (const auto& p : points) {
        double r = norm(p);
        if (r >= min_r && r <= max_r) out.push_back(p);  // inclusive boundaries
    }
    return out;
}

std::vector<Point3> voxel_downsample(const std::vector<Point3>& points, double voxel) {
    if (voxel <= 0.0) throw std::invalid_argument("invalid-voxel: voxel size must be > 0");

    struct Cell {
        Point3 sum{0, 0, 0};
        std::size_t count = 0;
    };
    struct KeyHash {
        std::size_t operator()(const std::array<std::int64_t, 3>& k) const {
            std::uint64_t h = 0xcbf29ce484222325ull;
            for (auto v : k) {
                h ^= std::uint64_t(v);
                h *= 0x100000001b3ull;
            }
            return std::size_t(h);
        }
    };
    std::unordered_map<std::array<std::int64_t, 3>, Cell, KeyHash> cells;
    std::vector<std::array<std::int64_t, 3>> order;  // first-appearance order
    cells.reserve(points.size());

    for (const auto& p : points) {
        std::array<std::int64_t, 3> key{std::int64_t(std::floor(p.x / voxel)),
                                        std::int64_t(std::floor(p.y / voxel)),
                                        std::int64_t(std::floor(p.z / voxel))};
        auto [it, inserted] = cells.try_emplace(key);
        if (inserted) order.push_back(key);
        it->second.sum += p;
        it->second.count += 1;
    }

    std::vector<Point3> out;
    out.reserve(order.size());
    for (const auto& key : order) {
        const Cell& c = cells[key];
        out.push_back(c.sum / double(c.count));
    }
    return out;
}

std::vector<Point3> remove_statistical_outliers(const std::vector<Point3>& points, std::size_t k,
                                                double sigma_mult) {
    if (k < 1) throw std::invalid_argument("outlier filter needs k >= 1");
    if (points.size() <= k) return points;

    KdTree3 tree(points);
    std::vector<double> mean_dist(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        auto nn = tree.knn(points[i], k, i);
        double sum = 0.0;
        for (const auto& [idx, d2] : nn) sum += std::sqrt(d2);
        mean_dist[i] = sum / double(nn.size());
    }

    double mu = 0.0;
    for (double d : mean_dist) mu += d;
    mu /= double(mean_dist.size());
    double var = 0.0;
    for (double d : mean_dist) var += (d - mu) * (d - mu);
    double sigma = std::sqrt(var / double(mean_dist.size()));

    double cutoff = mu + sigma_mult * sigma;
    std::vector<Point3> out;
    out.reserve(points.size());
    for (std::size_t i = 0; i < points.size(); ++i)
        if (mean_dist[i] <= cutoff) out.push_back(points[i]);
    return out;
}

ScanSet preprocess_scanset(const std::vector<std::vector<Point3>>& raw_scans,
                           const std::vector<Pose>& poses, const PreprocessConfig& config) {
    if (raw_scans.size() != poses.size())
        throw std::invalid_argument("count-mismatch: " + std::to_string(raw_scans.size()) +
                                    " scans vs " + std::to_string(poses.size()) + " poses");
    if (raw_scans.empty()) throw std::invalid_argument("empty-scanset: no scans");

    ScanSet set;
    for (std::size_t i = 0; i < raw_scans.size(); ++i) {
        auto pts = range_filter(raw_scans[i], config.min_range, config.max_range);
        pts = voxel_downsample(pts, config.voxel);
        pts = remove_statistical_outliers(pts, config.outlier_k, config.outlier_sigma);
        if (pts.empty())
            throw std::runtime_error("empty-after-filter: scan " + std::to_string(i) +
                                     " has no points left");
        Scan scan;
        scan.points = std::move(pts);
        scan.pose = poses[i];
        scan.sensor_origin = poses[i].translation;
        for (std::size_t j = 0; j < scan.points.size(); ++j)
            set.world_bounds.expand(scan.world_point(j));
        set.scans.push_back(std::move(scan));
    }
    return set;
}

void ScanSet::save(BinWriter& w, std::uint64_t config_hash) const {
    w.write_magic("MIFSS1\0");
    w.write<std::uint32_t>(1);  // version
    w.write<std::uint64_t>(config_hash);
    w.write<double>(world_bounds.min.x);
    w.write<double>(world_bounds.min.y);
    w.write<double>(world_bounds.min.z);
    w.write<double>(world_bounds.max.x);
    w.write<double>(world_bounds.max.y);
    w.write<double>(world_bounds.max.z);
    w.write<std::uint64_t>(scans.size());
    for (const auto& scan : scans) {
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) w.write<double>(scan.pose.rotation(i, j));
        w.write<double>(scan.pose.translation.x);
        w.write<double>(scan.pose.translation.y);
        w.write<double>(scan.pose.translation.z);
        w.write<std::uint64_t>(scan.points.size());
        for (const auto& p : scan.points) {
            w.write<double>(p.x);
            w.write<double>(p.y);
            w.write<double>(p.z);
        }
    }
}

ScanSet ScanSet::load(BinReader& r, std::uint64_t* config_hash) {
    r.expect_magic("MIFSS1\0", "scan set");
    auto version = r.read<std::uint32_t>();
    if (version != 1) throw std::runtime_error("format-error: unsupported scan set version");
    auto hash = r.read<std::uint64_t>();
    if (config_hash) *config_hash = hash;
    ScanSet set;
    set.world_bounds.min = {r.read<double>(), r.read<double>(), r.read<double>()};
    set.world_bounds.max = {r.read<double>(), r.read<double>(), r.read<double>()};
    auto count = r.read<std::uint64_t>();
    set.scans.resize(count);
    for (auto& scan : set.scans) {
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) scan.pose.rotation(i, j) = r.read<double>();
        scan.pose.translation = {r.read<double>(), r.read<double>(), r.read<double>()};
        scan.sensor_origin = scan.pose.translation;
        auto n = r.read<std::uint64_t>();
        scan.points.resize(n);
        for (auto& p : scan.points) p = {r.read<double>(), r.read<double>(), r.read<double>()};
    }
    return set;
}

}  // namespace mif
