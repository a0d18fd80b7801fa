#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "mif/decoder.hpp"
#include "mif/rng.hpp"
#include "mif/sampler.hpp"
#include "mif/training.hpp"

namespace mif::testutil {

inline Pose random_pose(Rng& rng) {
    // Rotation from a random axis-angle via Rodrigues.
    Vec3 axis = normalized({rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)});
    double angle = rng.uniform(0, 2 * M_PI);
    double c = std::cos(angle), s = std::sin(angle), t = 1 - c;
    Pose pose;
    pose.rotation(0, 0) = t * axis.x * axis.x + c;
    pose.rotation(0, 1) = t * axis.x * axis.y - s * axis.z;
    pose.rotation(0, 2) = t * axis.x * axis.z + s * axis.y;
    pose.rotation(1, 0) = t * axis.x * axis.y + s * axis.z;
    pose.rotation(1, 1) = t * axis.y * axis.y + c;
    pose.rotation(1, 2) = t * axis.y * axis.z - s * axis.x;
    pose.rotation(2, 0) = t * axis.x * axis.z - s * axis.y;
    pose.rotation(2, 1) = t * axis.y * axis.z + s * axis.x;
    pose.rotation(2, 2) = t * axis.z * axis.z + c;
    pose.translation = {rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5)};
    return pose;
}

struct TinyModelOptions {
    int hidden_width = 16;
    int hidden_layers = 2;
    int posenc_freqs = 3;
    int levels = 2;
    int latent_dim = 4;
    double leaf_voxel = 0.4;
    double feature_scale = 0.3;
};

// Small randomized field model over [-1,1]^3 with features allocated around
// a handful of anchor points.
inline FieldModel make_tiny_model(std::uint64_t seed, const TinyModelOptions& opts = {}) {
    Rng rng(seed);
    FieldModel model;
    model.bounds.expand({-1, -1, -1});
    model.bounds.expand({1, 1, 1});
    model.posenc.num_frequencies = opts.posenc_freqs;
    model.posenc.include_raw = true;
    model.alpha = 100.0;

    model.tree = LatentOctree({-1.3, -1.3, -1.3}, opts.leaf_voxel, opts.levels, opts.latent_dim);
    std::vector<Point3> anchors;
    for (int i = 0; i < 12; ++i)
        anchors.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)});
    model.tree.allocate(anchors);
    for (int l = 0; l < model.tree.num_levels(); ++l) {
        auto& f = model.tree.features(l);
        for (Eigen::Index i = 0; i < f.rows(); ++i)
            for (Eigen::Index j = 0; j < f.cols(); ++j)
                f(i, j) = rng.uniform(-opts.feature_scale, opts.feature_scale);
    }

    model.decoder = DecoderParams::init(model.posenc.width() + opts.latent_dim,
                                        opts.hidden_width, opts.hidden_layers, rng, 0.1);
    // Decouple gains from the initial row norms so the weight-norm chain rule
    // is exercised away from the g = ||V|| special case.
    for (auto& layer : model.decoder.layers) {
        for (Eigen::Index i = 0; i < layer.g.size(); ++i) layer.g(i) *= rng.uniform(0.6, 1.4);
        for (Eigen::Index i = 0; i < layer.b.size(); ++i) layer.b(i) += rng.uniform(-0.05, 0.05);
    }
    model.decoder.refresh_weights();
    return model;
}

// Synthetic batch of rays through the model domain.
inline std::vector<RaySamples> make_rays(std::uint64_t seed, int count,
                                         const SampleConfig& cfg_in = {}) {
    SampleConfig cfg = cfg_in;
    cfg.eps = 0.05;
    cfg.gamma = 0.4;
    cfg.theta = 0.2;
    Rng rng(seed);
    std::vector<RaySamples> rays;
    for (int i = 0; i < count; ++i) {
        Ray ray;
        ray.origin = {rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3)};
        ray.direction =
            normalized({rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)});
        ray.depth = rng.uniform(0.6, 0.9);
        Rng rrng(derive_seed(seed, std::uint64_t(i) + 77));
        rays.push_back(sample_ray(ray, cfg, rrng));
    }
    return rays;
}

inline std::vector<const RaySamples*> ray_ptrs(const std::vector<RaySamples>& rays) {
    std::vector<const RaySamples*> ptrs;
    for (const auto& r : rays) ptrs.push_back(&r);
    return ptrs;
}

// Central difference through an arbitrary evaluator; the slot is restored.
inline double fd_central(const std::function<double()>& eval, double* slot, double h) {
    double orig = *slot;
    *slot = orig + h;
    double fp = eval();
    *slot = orig - h;
    double fm = eval();
    *slot = orig;
    return (fp - fm) / (2.0 * h);
}

inline double rel_err(double got, double want, double abs_floor = 1e-7) {
    double denom = std::max(std::abs(want), abs_floor);
    return std::abs(got - want) / denom;
}

// ReLU/|f|/eikonal kink guard: finite differences are only valid when the
// batch stays inside one linear region.
inline bool batch_is_fd_safe(const FieldModel& model,
                             const std::vector<const RaySamples*>& batch, double margin) {
    for (const auto* rs : batch) {
        std::vector<Point3> pts;
        pts.push_back(rs->surface_point);
        for (const auto& s : rs->samples) pts.push_back(s.point);
        for (const auto& p : pts) {
            FieldTape tape;
            double f = decode_forward(model, p, tape);
            for (const auto& pre : tape.dtape.pre)
                if (pre.cwiseAbs().minCoeff() < margin) return false;
            if (std::abs(f) < margin) return false;  // |f| kink at surface term
        }
        FieldTape tape;
        decode_forward(model, rs->surface_point, tape);
        if (field_spatial_gradient(model, tape).norm() < 1e-2) return false;
    }
    return true;
}

}  // namespace mif::testutil
