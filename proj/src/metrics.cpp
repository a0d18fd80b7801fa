#include "mif/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "mif/kdtree.hpp"
#include "mif/rng.hpp"

namespace mif {

std::vector<Point3> sample_mesh_uniform(const Mesh& mesh, double resolution, std::uint64_t seed) {
    if (mesh.empty()) throw std::invalid_argument("empty-mesh: nothing to sample");
    if (resolution <= 0.0) throw std::invalid_argument("sample resolution must be > 0");

    std::vector<double> cum_area(mesh.triangles.size());
    double total = 0.0;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const auto& tri = mesh.triangles[t];
        Vec3 e1 = mesh.vertices[tri[1]] - mesh.vertices[tri[0]];
        Vec3 e2 = mesh.vertices[tri[2]] - mesh.vertices[tri[0]];
        total += 0.5 * norm(cross(e1, e2));
        cum_area[t] = total;
    }
    if (total <= 0.0) throw std::invalid_argument("zero-area: mesh has no surface");

    auto count = std::size_t(std::llround(total / (resolution * resolution)));
    count = std::max<std::size_t>(count, 1);

    Rng rng(seed);
    std::vector<Point3> samples;
    samples.reserve(count);
    for (std::size_t s = 0; s < count; ++s) {
        double pick = rng.uniform() * total;
        auto it = std::lower_bound(cum_area.begin(), cum_area.end(), pick);
        std::size_t t = std::min(std::size_t(it - cum_area.begin()), mesh.triangles.size() - 1);
        const auto& tri = mesh.triangles[t];
        // Uniform barycentric draw via the sqrt trick.
        double su = std::sqrt(rng.uniform());
        double v = rng.uniform();
        double a = 1.0 - su, b = su * (1.0 - v), c = su * v;
        samples.push_back(mesh.vertices[tri[0]] * a + mesh.vertices[tri[1]] * b +
                          mesh.vertices[tri[2]] * c);
    }
    return samples;
}

std::vector<double> nearest_distances(const std::vector<Point3>& query,
                                      const std::vector<Point3>& target) {
    if (target.empty()) throw std::invalid_argument("empty-target");
    KdTree3 tree(target);
    std::vector<double> out(query.size());
    for (std::size_t i = 0; i < query.size(); ++i) out[i] = tree.nearest_distance(query[i]);
    return out;
}

MetricsReport reconstruction_metrics(const Mesh& pred, const Mesh& gt,
                                     const MetricParams& params) {
    // Both meshes sample from the same stream so identical meshes measure
    // exactly zero.
    auto pred_pts = sample_mesh_uniform(pred, params.sample_resolution, params.seed);
    auto gt_pts = sample_mesh_uniform(gt, params.sample_resolution, params.seed);

    auto d_pred = nearest_distances(pred_pts, gt_pts);  // pred -> gt
    auto d_gt = nearest_distances(gt_pts, pred_pts);    // gt -> pred

    MetricsReport rep;
    rep.params = params;
    rep.pred_samples = pred_pts.size();
    rep.gt_samples = gt_pts.size();

    double acc = 0.0, acc_sq = 0.0;
    std::size_t within_pred = 0;
    for (double d : d_pred) {
        acc += d;
        acc_sq += d * d;
        if (d <= params.fscore_threshold) ++within_pred;
    }
    rep.accuracy = acc / double(d_pred.size());
    rep.precision = double(within_pred) / double(d_pred.size());

    double comp = 0.0, comp_sq = 0.0;
    std::size_t within_gt = 0;
    for (double d : d_gt) {
        double dt = std::min(d, params.completion_trunc);
        comp += dt;
        comp_sq += dt * dt;
        if (d <= params.fscore_threshold) ++within_gt;
    }
    rep.completion = comp / double(d_gt.size());
    rep.recall = double(within_gt) / double(d_gt.size());

    rep.chamfer_l2 = 0.5 * (acc_sq / double(d_pred.size()) + comp_sq / double(d_gt.size()));
    rep.chamfer_l1 = 0.5 * (rep.accuracy + rep.completion);
    rep.fscore = (rep.precision + rep.recall) > 0.0
                     ? 2.0 * rep.precision * rep.recall / (rep.precision + rep.recall)
                     : 0.0;
    return rep;
}

std::string MetricsReport::to_json(std::uint64_t config_hash) const {
    char buf[1024];
    std::snprintf(
        buf, sizeof(buf),
        "{\n"
        "  \"accuracy\": %.9g,\n"
        "  \"completion\": %.9g,\n"
        "  \"chamfer_l2\": %.9g,\n"
        "  \"chamfer_l1\": %.9g,\n"
        "  \"precision\": %.9g,\n"
        "  \"recall\": %.9g,\n"
        "  \"fscore\": %.9g,\n"
        "  \"pred_samples\": %zu,\n"
        "  \"gt_samples\": %zu,\n"
        "  \"params\": {\"sample_resolution\": %.9g, \"completion_trunc\": %.9g, "
        "\"fscore_threshold\": %.9g, \"seed\": %llu},\n"
        "  \"config_hash\": \"%016llx\"\n"
        "}\n",
        accuracy, completion, chamfer_l2, chamfer_l1, precision, recall, fscore, pred_samples,
        gt_samples, params.sample_resolution, params.completion_trunc, params.fscore_threshold,
        (unsigned long long)params.seed, (unsigned long long)config_hash);
    return buf;
}

std::string MetricsReport::to_csv(std::uint64_t config_hash) const {
    char buf[1024];
    std::snprintf(buf, sizeof(buf),
                  "accuracy,completion,chamfer_l2,chamfer_l1,precision,recall,fscore,"
                  "pred_samples,gt_samples,sample_resolution,completion_trunc,fscore_threshold,"
                  "seed,config_hash\n"
                  "%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%zu,%zu,%.9g,%.9g,%.9g,%llu,%016llx\n",
                  accuracy, completion, chamfer_l2, chamfer_l1, precision, recall, fscore,
                  pred_samples, gt_samples, params.sample_resolution, params.completion_trunc,
                  params.fscore_threshold, (unsigned long long)params.seed,
                  (unsigned long long)config_hash);
    return buf;
}

}  // namespace mif
