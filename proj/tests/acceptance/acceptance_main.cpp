// Acceptance suite: one pass/fail line per criterion. Usage:
//   mif_acceptance [criterion ...] [data_dir]
// With no criterion arguments, all run in order.
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "../helpers.hpp"
#include "mif/kdtree.hpp"
#include "mif/meshing.hpp"
#include "mif/metrics.hpp"
#include "mif/pipeline.hpp"
#include "mif/training.hpp"

using namespace mif;
using namespace mif::testutil;
namespace fs = std::filesystem;

namespace {

struct Check {
    int failures = 0;
    void expect(bool ok, const std::string& what) {
        if (!ok) {
            std::printf("       FAILED: %s\n", what.c_str());
            ++failures;
        }
    }
};

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string scratch_dir(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("mif_acceptance_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p.string();
}

std::vector<char> slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("missing file: " + path);
    return std::vector<char>(std::istreambuf_iterator<char>(in),
                             std::istreambuf_iterator<char>());
}

double median3(double a, double b, double c) {
    return std::max(std::min(a, b), std::min(std::max(a, b), c));
}

// --- criterion 1: analytic vs finite-difference gradients ------------------

int criterion_gradients() {
    auto start = std::chrono::steady_clock::now();
    Check check;
    LossWeights weights;  // defaults: 0.1 / 1 / 1, surface on

    TinyModelOptions opts;
    opts.hidden_width = 16;
    opts.hidden_layers = 2;
    opts.posenc_freqs = 2;
    opts.levels = 2;
    opts.latent_dim = 4;

    const double kRelTol = 1e-4;
    const double kAbsFloor = 1e-7;
    // Richardson-extrapolated central differences: the large base step keeps
    // roundoff out of the small-magnitude gradients and the extrapolation
    // cancels the tanh(alpha .) truncation term. The kink margin keeps every
    // ReLU mask frozen across +-h.
    const double h = 1e-4;
    auto fd_rich = [&](const std::function<double()>& eval, double* slot) {
        double coarse = fd_central(eval, slot, h);
        double fine = fd_central(eval, slot, h / 2);
        return (4.0 * fine - coarse) / 3.0;
    };
    int done = 0;
    std::uint64_t seed = 10000;
    int attempts = 0;
    double worst = 0.0;

    while (done < 50 && attempts < 1500) {
        ++attempts;
        ++seed;
        FieldModel model = make_tiny_model(seed, opts);
        auto rays = make_rays(seed * 31 + 7, 2);
        auto batch = ray_ptrs(rays);
        if (!batch_is_fd_safe(model, batch, 8e-4)) continue;
        ++done;

        ModelGrads grads(model);
        compute_loss_and_grads(model, batch, weights, grads);
        DecoderParamGrads pg = weight_norm_chain(model.decoder, grads.decoder);

        auto eval = [&]() {
            model.decoder.refresh_weights();
            return total_loss(compute_loss(model, batch, weights), weights);
        };
        auto record = [&](double got, double want, const char* what) {
            double err = rel_err(got, want, kAbsFloor);
            worst = std::max(worst, err);
            if (err > kRelTol)
                check.expect(false, std::string(what) + " rel err " + std::to_string(err));
        };

        // Every decoder parameter.
        for (std::size_t l = 0; l < model.decoder.layers.size(); ++l) {
            auto& layer = model.decoder.layers[l];
            for (Eigen::Index i = 0; i < layer.V.rows(); ++i)
                for (Eigen::Index j = 0; j < layer.V.cols(); ++j)
                    record(pg.dV[l](i, j), fd_rich(eval, &layer.V(i, j)), "V");
            for (Eigen::Index i = 0; i < layer.g.size(); ++i)
                record(pg.dg[l](i), fd_rich(eval, &layer.g(i)), "g");
            for (Eigen::Index i = 0; i < layer.b.size(); ++i)
                record(pg.db[l](i), fd_rich(eval, &layer.b(i)), "b");
        }
        model.decoder.refresh_weights();

        // Touched latents (bounded per problem to keep the suite fast).
        auto eval_plain = [&]() {
            return total_loss(compute_loss(model, batch, weights), weights);
        };
        int rows_checked = 0;
        for (int lvl = 0; lvl < model.tree.num_levels() && rows_checked < 24; ++lvl) {
            for (std::size_t row : grads.touched[std::size_t(lvl)]) {
                if (rows_checked++ >= 24) break;
                for (int d = 0; d < model.tree.latent_dim(); ++d) {
                    double* slot = &model.tree.features(lvl)(Eigen::Index(row), d);
                    record(grads.latents[std::size_t(lvl)](Eigen::Index(row), d),
                           fd_rich(eval_plain, slot), "latent");
                }
            }
        }

        // Spatial coordinates: full-field gradient at the surface points.
        for (const auto* rs : batch) {
            FieldTape tape;
            decode_forward(model, rs->surface_point, tape);
            Eigen::Vector3d g = field_spatial_gradient(model, tape);
            for (int axis = 0; axis < 3; ++axis) {
                Point3 pp = rs->surface_point, pm = rs->surface_point;
                const double hs = 1e-5;
                if (axis == 0) { pp.x += hs; pm.x -= hs; }
                if (axis == 1) { pp.y += hs; pm.y -= hs; }
                if (axis == 2) { pp.z += hs; pm.z -= hs; }
                double fd = (decode_forward(model, pp) - decode_forward(model, pm)) / (2 * hs);
                record(g(axis), fd, "spatial");
            }
        }
    }
    check.expect(done == 50, "collected only " + std::to_string(done) + " FD-safe problems");
    double elapsed = seconds_since(start);
    check.expect(elapsed < 60.0, "runtime " + std::to_string(elapsed) + "s exceeds 1 min");
    std::printf("       50 micro-problems, worst rel err %.3g, %.1fs\n", worst, elapsed);
    return check.failures;
}

// --- criterion 2: structural oracles ----------------------------------------

std::uint64_t morton_loop_oracle(std::uint32_t i, std::uint32_t j, std::uint32_t k) {
    std::uint64_t code = 0;
    for (int b = 0; b < 21; ++b) {
        code |= (std::uint64_t(i >> b) & 1) << (3 * b);
        code |= (std::uint64_t(j >> b) & 1) << (3 * b + 1);
        code |= (std::uint64_t(k >> b) & 1) << (3 * b + 2);
    }
    return code;
}

int criterion_oracles() {
    auto start = std::chrono::steady_clock::now();
    Check check;

    // Morton round trip, 10^6 cases against the loop oracle.
    Rng rng(2024);
    for (int trial = 0; trial < 1000000; ++trial) {
        std::uint32_t i = std::uint32_t(rng.next_u64() & kMortonAxisMax);
        std::uint32_t j = std::uint32_t(rng.next_u64() & kMortonAxisMax);
        std::uint32_t k = std::uint32_t(rng.next_u64() & kMortonAxisMax);
        std::uint64_t code = morton_encode(i, j, k);
        if (code != morton_loop_oracle(i, j, k)) {
            check.expect(false, "morton encode mismatch");
            break;
        }
        std::uint32_t a, b, c;
        morton_decode(code, a, b, c);
        if (a != i || b != j || c != k) {
            check.expect(false, "morton decode mismatch");
            break;
        }
    }

    // Trilinear identities.
    {
        LatentOctree tree({0, 0, 0}, 0.5, 1, 4);
        tree.allocate({{0.25, 0.25, 0.25}});
        auto& f = tree.features(0);
        for (Eigen::Index i = 0; i < f.rows(); ++i)
            for (Eigen::Index j = 0; j < f.cols(); ++j) f(i, j) = rng.uniform(-1, 1);
        InterpRecord rec;
        Eigen::VectorXd at_node = tree.query({0, 0, 0}, rec);
        std::size_t row = rec.levels[0].corner[0];
        check.expect(row != InterpRecord::kMissing, "corner lookup failed");
        check.expect((at_node - f.row(Eigen::Index(row)).transpose()).norm() < 1e-12,
                     "corner identity");
        tree.query({0.25, 0.25, 0.25}, rec);
        for (double w : rec.levels[0].weight)
            check.expect(std::abs(w - 0.125) < 1e-12, "center weight");
    }

    // kd-tree vs brute force, exact.
    {
        std::vector<Point3> target, query;
        for (int i = 0; i < 400; ++i)
            target.push_back({rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)});
        for (int i = 0; i < 400; ++i)
            query.push_back({rng.uniform(-2.4, 2.4), rng.uniform(-2.4, 2.4),
                             rng.uniform(-2.4, 2.4)});
        KdTree3 tree(target);
        for (const auto& q : query) {
            auto [idx, d2] = tree.nearest(q);
            double best = std::numeric_limits<double>::max();
            for (const auto& t : target)
                best = std::min(best, (q.x - t.x) * (q.x - t.x) + (q.y - t.y) * (q.y - t.y) +
                                          (q.z - t.z) * (q.z - t.z));
            check.expect(d2 == best, "kd-tree vs brute force");
        }
    }

    // Marching cubes on the analytic unit sphere at 5 cm.
    {
        double radius = 1.0, spacing = 0.05;
        Aabb bounds;
        bounds.expand({-1.15, -1.15, -1.15});
        bounds.expand({1.15, 1.15, 1.15});
        Mesh mesh = marching_cubes_function(
            [&](const Point3& p) { return norm(p) - radius; }, bounds, spacing);
        check.expect(!mesh.empty(), "sphere mesh nonempty");
        for (const auto& v : mesh.vertices) {
            double r = norm(v);
            if (r <= radius - spacing || r >= radius + spacing) {
                check.expect(false, "vertex radius outside one grid spacing");
                break;
            }
        }
        double area = mesh.area();
        check.expect(std::abs(area - 4 * M_PI) < 0.05 * 4 * M_PI,
                     "sphere area within 5% of 4*pi, got " + std::to_string(area));
    }

    double elapsed = seconds_since(start);
    check.expect(elapsed < 120.0, "runtime " + std::to_string(elapsed) + "s exceeds 2 min");
    std::printf("       morton/trilinear/kd/mc oracles, %.1fs\n", elapsed);
    return check.failures;
}

// --- criterion 3: loss definitions ------------------------------------------

int criterion_loss_definitions() {
    Check check;
    const double alpha = 100.0;
    const double t5 = std::tanh(5.0);
    auto approx = [](double a, double b, double tol) { return std::abs(a - b) <= tol; };

    check.expect(loss_surface({0, 0, 0}) == 0.0, "loss_surface zeros");
    check.expect(loss_surface({1, -1}) == 1.0, "loss_surface mean abs");

    check.expect(approx(loss_sign({0.05}, {0.05}, alpha), 1 - t5 * t5, 1e-12),
                 "loss_sign saturated match");
    check.expect(loss_sign({0.0}, {0.37}, alpha) == 1.0, "loss_sign zero field");
    check.expect(loss_sign({0.0}, {-2.0}, alpha) == 1.0, "loss_sign zero field (neg r)");
    check.expect(approx(loss_sign({0.05}, {-0.05}, alpha), 2 - (1 - t5 * t5), 2e-4),
                 "loss_sign mismatch penalty");

    check.expect(approx(loss_mono({{1, 0, -1}}, alpha), 0.0, 1e-12), "loss_mono saturated");
    check.expect(loss_mono({{0, 0}}, alpha) == 1.0, "loss_mono flat pair");
    check.expect(approx(loss_mono({{-1, 1}}, alpha), 2.0, 1e-12), "loss_mono violation");

    using V = Eigen::Vector3d;
    check.expect(loss_eikonal({V(1, 0, 0)}) == 0.0, "eikonal unit");
    check.expect(loss_eikonal({V(0, 0, 0)}) == 1.0, "eikonal zero");
    check.expect(loss_eikonal({V(2, 0, 0)}) == 1.0, "eikonal two");

    check.expect(approx(total_loss({1, 1, 1, 1}, LossWeights{0.1, 1, 1, 1.0}), 3.1, 1e-12),
                 "total_loss arithmetic");
    check.expect(total_loss({1, 1, 1, 1}, LossWeights{0, 0, 0, 1.0}) == 1.0,
                 "total_loss zero weights");

    // loss_surface subgradient via finite differences.
    {
        std::vector<double> vals{0.4, -0.9};
        auto perturbed = vals;
        const double h = 1e-6;
        perturbed[0] += h;
        double fp = loss_surface(perturbed);
        perturbed[0] -= 2 * h;
        double fm = loss_surface(perturbed);
        check.expect(approx((fp - fm) / (2 * h), 0.5, 1e-6), "loss_surface gradient");
    }

    // total_loss gradient is the weighted sum of part gradients (linearity).
    {
        FieldModel model = make_tiny_model(777);
        auto rays = make_rays(778, 2);
        auto batch = ray_ptrs(rays);
        LossWeights mix{0.3, 0.7, 1.3, 1.0};
        ModelGrads gm(model);
        compute_loss_and_grads(model, batch, mix, gm);

        auto grads_for = [&](LossWeights w) {
            ModelGrads g(model);
            compute_loss_and_grads(model, batch, w, g);
            return g.decoder.dW[0];
        };
        Eigen::MatrixXd surf_only = grads_for(LossWeights{0, 0, 0, 1.0});
        Eigen::MatrixXd eik_only = grads_for(LossWeights{1, 0, 0, 0.0});
        Eigen::MatrixXd sign_only = grads_for(LossWeights{0, 1, 0, 0.0});
        Eigen::MatrixXd mono_only = grads_for(LossWeights{0, 0, 1, 0.0});
        Eigen::MatrixXd combo =
            surf_only + 0.3 * eik_only + 0.7 * sign_only + 1.3 * mono_only;
        check.expect((gm.decoder.dW[0] - combo).norm() < 1e-10 * (1 + combo.norm()),
                     "total gradient linearity");
    }

    // AdamW examples.
    {
        AdamWConfig cfg;
        cfg.lr = 0.01;
        cfg.eps = 1e-15;
        cfg.weight_decay = 0.0;
        Eigen::MatrixXd p(1, 1), g(1, 1);
        p(0, 0) = 1.0;
        g(0, 0) = 1.0;
        AdamTensorState st;
        st.init(1, 1);
        adamw_step(p, g, st, 1, cfg, cfg.lr);
        check.expect(approx(p(0, 0), 0.99, 1e-9), "adamw first step");

        Eigen::MatrixXd p2(1, 1), z(1, 1);
        p2(0, 0) = 2.0;
        z(0, 0) = 0.0;
        AdamTensorState st2;
        st2.init(1, 1);
        adamw_step(p2, z, st2, 1, cfg, cfg.lr);
        check.expect(p2(0, 0) == 2.0, "adamw zero grad");

        cfg.weight_decay = 1e-7;
        Eigen::MatrixXd p3(1, 1);
        p3(0, 0) = 3.0;
        AdamTensorState st3;
        st3.init(1, 1);
        adamw_step(p3, z, st3, 1, cfg, cfg.lr);
        check.expect(approx(p3(0, 0), 3.0 * (1 - 0.01 * 1e-7), 1e-15), "adamw decoupled decay");
    }

    // train(): sanity decrease, bitwise determinism, 1-ray overfit.
    {
        auto run = [](std::uint64_t seed) {
            FieldModel model = make_tiny_model(881);
            auto rays = make_rays(882, 24);
            TrainingSet tset;
            tset.rays = rays;
            for (const auto& r : rays) tset.surface_points.push_back(r.surface_point);
            TrainConfig cfg;
            cfg.batch_rays = 8;
            cfg.iterations = 500;
            cfg.weights = LossWeights{0.0, 1.0, 1.0, 1.0};
            cfg.seed = seed;
            cfg.log_every = 0;
            TrainHistory h = train(model, tset, cfg);
            return h;
        };
        TrainHistory h1 = run(5);
        check.expect(h1.records.back().total < h1.records.front().total,
                     "train loss decreases over 500 iterations");
        TrainHistory h2 = run(5);
        bool identical = h1.records.size() == h2.records.size();
        for (std::size_t i = 0; identical && i < h1.records.size(); ++i)
            identical = h1.records[i].total == h2.records[i].total;
        check.expect(identical, "identical seeds give bitwise-identical loss history");

        TinyModelOptions overfit_opts;
        overfit_opts.hidden_width = 32;
        FieldModel model = make_tiny_model(883, overfit_opts);
        auto rays = make_rays(884, 1);
        TrainingSet tset;
        tset.rays = rays;
        tset.surface_points = {rays[0].surface_point};
        TrainConfig cfg;
        cfg.batch_rays = 1;
        cfg.iterations = 2000;
        cfg.weights = LossWeights{0.0, 0.0, 0.0, 1.0};
        cfg.seed = 9;
        cfg.log_every = 0;
        train(model, tset, cfg);
        check.expect(std::abs(decode_forward(model, rays[0].surface_point)) < 1e-3,
                     "1-ray overfit drives |f| below 1e-3");
    }
    std::printf("       loss/optimizer/train examples verified\n");
    return check.failures;
}

// --- criterion 4: end-to-end sphere room ------------------------------------

int criterion_end_to_end(const std::string& data_dir) {
    auto start = std::chrono::steady_clock::now();
    Check check;
    RunConfig cfg;  // defaults, the published configuration
    cfg.seed = 1;
    cfg.threads = 1;
    cfg.train.log_every = 1000;

    std::string out = scratch_dir("e2e");
    PipelineResult res = cmd_pipeline(data_dir + "/sphere_room.json", cfg, out);

    std::printf("       fscore %.4f acc %.4f comp %.4f chamfer_l1 %.4f chamfer_l2 %.6f mono %.4f\n",
                res.metrics.fscore, res.metrics.accuracy, res.metrics.completion,
                res.metrics.chamfer_l1, res.metrics.chamfer_l2, res.mono_rate);
    check.expect(res.metrics.fscore >= 0.90, "F-score >= 0.90");
    check.expect(res.metrics.chamfer_l1 <= 0.05, "chamfer_l1 <= 0.05 m");
    check.expect(res.metrics.chamfer_l2 <= 0.05, "chamfer_l2 <= 0.05");
    check.expect(res.mono_rate >= 0.95, "monotone on >= 95% of held-out chains");

    double elapsed = seconds_since(start);
    std::printf("       wall time %.1fs\n", elapsed);
    check.expect(elapsed < 1200.0, "runtime exceeds 20 min");
    return check.failures;
}

// --- criterion 5: ablation echo ---------------------------------------------

int criterion_ablation(const std::string& data_dir) {
    Check check;
    std::string out = scratch_dir("ablation");

    // Shared scene artifacts: one simulation + preprocessing for all runs.
    RunConfig base;
    base.threads = 1;
    base.decoder.hidden_width = 64;
    base.train.batch_rays = 16;
    base.train.iterations = 1500;
    base.train.log_every = 0;
    base.metrics.sample_resolution = 0.04;

    SimulateResult sim = cmd_simulate(data_dir + "/sphere_room.json", out + "/sim", base);
    std::string scanset = cmd_preprocess(sim.scan_files, "kitti-bin", sim.poses_file,
                                         "kitti-3x4-rows", base, out + "/pre");

    struct Variant {
        const char* name;
        LossWeights weights;
    };
    // Each variant zeroes one term of the default weighting. The whole study
    // runs without the eikonal term, whose surface-point anchor would mask
    // the contribution of the other losses.
    LossWeights full_w, no_surf_w, no_sign_w, no_mono_w;
    full_w.lambda_eik = 0.0;
    no_surf_w = full_w;
    no_surf_w.lambda_surf = 0.0;
    no_sign_w = full_w;
    no_sign_w.lambda_sign = 0.0;
    no_mono_w = full_w;
    no_mono_w.lambda_mono = 0.0;
    std::vector<Variant> variants{
        {"full", full_w},
        {"no_surf", no_surf_w},
        {"no_sign", no_sign_w},
        {"no_mono", no_mono_w},
    };

    std::vector<std::vector<MetricsReport>> reports(variants.size());
    for (std::size_t v = 0; v < variants.size(); ++v) {
        for (std::uint64_t seed = 1; seed <= 3; ++seed) {
            RunConfig cfg = base;
            cfg.seed = seed;
            cfg.train.weights = variants[v].weights;
            std::string run_dir = out + "/" + variants[v].name + "_s" + std::to_string(seed);
            TrainResult tr = cmd_train(scanset, cfg, run_dir);
            std::string mesh_file = run_dir + "/mesh.ply";
            cmd_mesh(tr.checkpoint_file, cfg.mesh.spacing, mesh_file, cfg);
            MetricsReport rep =
                cmd_eval(mesh_file, sim.reference_mesh_file, cfg, run_dir + "/eval");
            std::printf("       %-8s seed %llu: acc %.4f comp %.4f chamfer %.4f f %.4f\n",
                        variants[v].name, (unsigned long long)seed, rep.accuracy,
                        rep.completion, rep.chamfer_l1, rep.fscore);
            reports[v].push_back(rep);
        }
    }

    auto med = [&](std::size_t v, auto field) {
        return median3(reports[v][0].*field, reports[v][1].*field, reports[v][2].*field);
    };
    double full_chamfer = med(0, &MetricsReport::chamfer_l1);
    double nosurf_chamfer = med(1, &MetricsReport::chamfer_l1);
    double full_comp = med(0, &MetricsReport::completion);
    double nosign_comp = med(2, &MetricsReport::completion);
    double full_acc = med(0, &MetricsReport::accuracy);
    double nomono_acc = med(3, &MetricsReport::accuracy);

    std::printf("       medians: chamfer full %.4f no_surf %.4f | comp full %.4f no_sign %.4f"
                " | acc full %.4f no_mono %.4f\n",
                full_chamfer, nosurf_chamfer, full_comp, nosign_comp, full_acc, nomono_acc);
    check.expect(nosurf_chamfer >= 3.0 * full_chamfer,
                 "dropping the surface term fails reconstruction (chamfer >= 3x)");
    check.expect(nosign_comp > full_comp, "dropping the sign term worsens completion");
    check.expect(nomono_acc > full_acc, "dropping the monotonicity term worsens accuracy");
    return check.failures;
}

// --- criterion 6: determinism -----------------------------------------------

int criterion_determinism() {
    Check check;
    std::string out = scratch_dir("determinism");

    // Small scene keeps two full pipeline runs cheap.
    const std::string scene_text = R"({
        "name": "det",
        "primitives": [
            {"type": "sphere", "center": [0, 0, 0], "radius": 1.0},
            {"type": "plane", "normal": [0, 0, -1], "offset": 2.0}
        ],
        "poses": [{"position": [3.0, 0.0, 0.4]}, {"position": [-3.0, 0.0, 0.4]},
                  {"position": [0.0, 3.0, 0.4]}],
        "scanner": {"azimuth_count": 256, "elevation_min_deg": -50,
                    "elevation_max_deg": 25, "elevation_count": 24,
                    "max_range": 25.0, "seed": 11},
        "mesh_bounds": {"min": [-4.3, -4.3, -2.1], "max": [4.3, 4.3, 1.6]},
        "reference_spacing": 0.05
    })";
    write_text_file(out + "/scene.json", scene_text);

    RunConfig cfg;
    cfg.seed = 9;
    cfg.threads = 1;
    cfg.preprocess.min_range = 0.5;
    cfg.octree.leaf_voxel = 0.25;
    cfg.decoder.hidden_width = 32;
    cfg.train.batch_rays = 8;
    cfg.train.iterations = 80;
    cfg.train.log_every = 0;
    cfg.mesh.spacing = 0.15;
    cfg.metrics.sample_resolution = 0.05;

    cmd_pipeline(out + "/scene.json", cfg, out + "/run1");
    cmd_pipeline(out + "/scene.json", cfg, out + "/run2");

    for (const char* rel :
         {"/train/checkpoint.mifckpt", "/mesh.ply", "/eval/metrics.json", "/eval/metrics.csv",
          "/monotonicity.json", "/train/loss_history.csv"}) {
        auto a = slurp(out + "/run1" + rel);
        auto b = slurp(out + "/run2" + rel);
        check.expect(a == b, std::string("bitwise-identical ") + rel);
    }
    std::printf("       two pipeline runs byte-compared\n");
    return check.failures;
}

// --- criterion 7: level-set invariance --------------------------------------

int criterion_level_set() {
    Check check;
    FieldModel model = make_tiny_model(4242);
    Aabb bounds;
    bounds.expand({-1, -1, -1});
    bounds.expand({1, 1, 1});
    GridOptions opts;
    opts.masked = false;
    ScalarGrid grid = evaluate_grid(model, bounds, 0.1, opts);

    Mesh before = marching_cubes(grid, 0.0);
    for (auto& v : grid.values) v *= 2.0;
    Mesh after = marching_cubes(grid, 0.0);

    check.expect(before.vertices.size() == after.vertices.size(), "vertex count unchanged");
    check.expect(before.triangles.size() == after.triangles.size(), "triangle count unchanged");
    check.expect(!before.empty(), "field has a zero level-set to extract");
    for (std::size_t i = 0; i < std::min(before.vertices.size(), after.vertices.size()); ++i) {
        if (norm(before.vertices[i] - after.vertices[i]) > 1e-9) {
            check.expect(false, "vertex moved under positive scaling");
            break;
        }
    }
    std::printf("       doubled field values, %zu vertices identical\n",
                before.vertices.size());
    return check.failures;
}

}  // namespace

int run_criterion(int which, const std::string& data_dir) {
    static const char* names[] = {
        "",
        "gradient suite (analytic vs central differences)",
        "oracle suite (morton / trilinear / kd-tree / marching cubes)",
        "loss-definition suite",
        "end-to-end sphere room (F >= 0.90, chamfer <= 0.05, mono >= 95%)",
        "ablation echo (surface / sign / monotonicity terms)",
        "determinism (bitwise-identical pipeline reruns)",
        "level-set invariance under positive scaling",
    };
    std::printf("[ RUN] criterion %d: %s\n", which, names[which]);
    std::fflush(stdout);
    int failures = 0;
    try {
        switch (which) {
            case 1: failures = criterion_gradients(); break;
            case 2: failures = criterion_oracles(); break;
            case 3: failures = criterion_loss_definitions(); break;
            case 4: failures = criterion_end_to_end(data_dir); break;
            case 5: failures = criterion_ablation(data_dir); break;
            case 6: failures = criterion_determinism(); break;
            case 7: failures = criterion_level_set(); break;
            default:
                std::printf("[FAIL] criterion %d: unknown\n", which);
                return 1;
        }
    } catch (const std::exception& e) {
        std::printf("[FAIL] criterion %d: exception: %s\n", which, e.what());
        return 1;
    }
    std::printf("[%s] criterion %d: %s\n", failures == 0 ? "PASS" : "FAIL", which, names[which]);
    std::fflush(stdout);
    return failures;
}

int main(int argc, char** argv) {
    std::vector<int> which;
    std::string data_dir = "data";
    for (int i = 1; i < argc; ++i) {
        if (std::isdigit(argv[i][0]) && std::strlen(argv[i]) == 1)
            which.push_back(argv[i][0] - '0');
        else
            data_dir = argv[i];
    }
    if (which.empty()) which = {1, 2, 3, 4, 5, 6, 7};

    int failed = 0;
    for (int c : which) failed += run_criterion(c, data_dir) == 0 ? 0 : 1;
    if (failed > 0) std::printf("%d criterion(s) failed\n", failed);
    return failed == 0 ? 0 : 1;
}
