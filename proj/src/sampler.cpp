#include "mif/sampler.hpp"

#include <algorithm>
#include <stdexcept>

#include "mif/binio.hpp"

namespace mif {

void SampleConfig::validate() const {
    if (m_free < 0 || m_surf < 0 || m_occ < 0)
        throw std::invalid_argument("sample counts must be >= 0");
    if (m_free + m_surf + m_occ < 1)
        throw std::invalid_argument("at least one sample count must be positive");
    if (eps <= 0 || gamma <= 0 || theta <= 0)
        throw std::invalid_argument("eps, gamma, theta must be > 0");
}

std::size_t RaySamples::surface_chain_index() const {
    std::size_t i = 0;
    while (i < samples.size() && samples[i].t < ray.depth) ++i;
    return i;
}

RaySamples sample_ray(const Ray& ray, const SampleConfig& cfg, Rng& rng) {
    const double tau = ray.depth;

    RaySamples out;
    out.ray = ray;
    out.surface_point = ray.at(tau);
    out.samples.reserve(std::size_t(cfg.m_free + cfg.m_surf + cfg.m_occ));

    // Segment supports; a short ray clamps the free segment start to 0.
    out.clamped = tau - cfg.gamma - cfg.eps < 0.0;
    double free_lo = std::max(0.0, tau - cfg.gamma - cfg.eps);
    double free_hi = std::max(free_lo, tau - cfg.eps);
    double near_lo = std::max(0.0, tau - cfg.eps);

    auto draw = [&](int count, double lo, double hi, Segment seg) {
        for (int m = 0; m < count; ++m) {
            QuerySample s;
            s.t = rng.uniform(lo, hi);
            s.r = tau - s.t;
            s.point = ray.at(s.t);
            s.segment = seg;
            out.samples.push_back(s);
        }
    };
    draw(cfg.m_free, free_lo, free_hi, Segment::Free);
    draw(cfg.m_surf, near_lo, tau + cfg.eps, Segment::Near);
    draw(cfg.m_occ, tau + cfg.eps, tau + cfg.eps + cfg.theta, Segment::Occluded);

    std::stable_sort(out.samples.begin(), out.samples.end(),
                     [](const QuerySample& a, const QuerySample& b) { return a.t < b.t; });
    // Enforce strict ordering; exact ties get a 1e-9 nudge.
    for (std::size_t i = 1; i < out.samples.size(); ++i) {
        if (out.samples[i].t <= out.samples[i - 1].t) {
            out.samples[i].t = out.samples[i - 1].t + 1e-9;
            out.samples[i].r = tau - out.samples[i].t;
            out.samples[i].point = ray.at(out.samples[i].t);
        }
    }
    return out;
}

TrainingSet build_training_set(const ScanSet& scanset, const SampleConfig& cfg) {
    cfg.validate();
    if (scanset.scans.empty()) throw std::invalid_argument("empty-scanset");

    TrainingSet tset;
    std::size_t ray_index = 0;
    for (const auto& scan : scanset.scans) {
        for (std::size_t i = 0; i < scan.points.size(); ++i) {
            // tau equals the sensor-frame norm; rotation preserves it.
            double tau = norm(scan.points[i]);
            if (tau <= 0) continue;
            Point3 world = scan.world_point(i);
            Ray ray;
            ray.origin = scan.sensor_origin;
            ray.direction = (world - scan.sensor_origin) / tau;
            ray.depth = tau;

            Rng rng(derive_seed(cfg.rng_seed, ray_index));
            tset.rays.push_back(sample_ray(ray, cfg, rng));
            if (tset.rays.back().clamped) ++tset.clamped_rays;
            tset.surface_points.push_back(tset.rays.back().surface_point);
            ++ray_index;
        }
    }
    if (tset.rays.empty()) throw std::invalid_argument("empty-scanset: no usable readings");
    return tset;
}

std::vector<Point3> near_surface_points(const TrainingSet& tset, double eps) {
    std::vector<Point3> pts;
    pts.reserve(tset.rays.size() * 4);
    for (const auto& ray : tset.rays) {
        pts.push_back(ray.surface_point);
        for (const auto& s : ray.samples)
            if (std::abs(s.r) <= eps) pts.push_back(s.point);
    }
    return pts;
}

void TrainingSet::save(const std::string& path) const {
    BinWriter w(path);
    w.write_magic("MIFTS1\0");
    w.write<std::uint32_t>(1);  // version
    w.write<std::uint64_t>(rays.size());
    for (const auto& rs : rays) {
        w.write<double>(rs.ray.origin.x);
        w.write<double>(rs.ray.origin.y);
        w.write<double>(rs.ray.origin.z);
        w.write<double>(rs.ray.direction.x);
        w.write<double>(rs.ray.direction.y);
        w.write<double>(rs.ray.direction.z);
        w.write<double>(rs.ray.depth);
        w.write<std::uint32_t>(std::uint32_t(rs.samples.size()));
        for (const auto& s : rs.samples) {
            w.write<double>(s.t);
            w.write<std::uint8_t>(std::uint8_t(s.segment));
        }
    }
    w.close();
}

TrainingSet TrainingSet::load(const std::string& path) {
    BinReader r(path);
    r.expect_magic("MIFTS1\0", "training set");
    auto version = r.read<std::uint32_t>();
    if (version != 1) throw std::runtime_error("format-error: unsupported training set version");
    TrainingSet tset;
    auto count = r.read<std::uint64_t>();
    tset.rays.resize(count);
    tset.surface_points.reserve(count);
    for (auto& rs : tset.rays) {
        rs.ray.origin = {r.read<double>(), r.read<double>(), r.read<double>()};
        rs.ray.direction = {r.read<double>(), r.read<double>(), r.read<double>()};
        rs.ray.depth = r.read<double>();
        rs.surface_point = rs.ray.at(rs.ray.depth);
        auto n = r.read<std::uint32_t>();
        rs.samples.resize(n);
        for (auto& s : rs.samples) {
            s.t = r.read<double>();
            s.segment = Segment(r.read<std::uint8_t>());
            s.r = rs.ray.depth - s.t;
            s.point = rs.ray.at(s.t);
        }
        tset.surface_points.push_back(rs.surface_point);
    }
    return tset;
}

}  // namespace mif
