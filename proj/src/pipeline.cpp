#include "mif/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mif/binio.hpp"
#include "mif/meshing.hpp"

namespace mif {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int log_level() {
    const char* env = std::getenv("MIF_LOG");
    if (!env) return 1;
    std::string v(env);
    if (v == "off" || v == "0") return 0;
    if (v == "debug" || v == "2") return 2;
    return 1;
}

void log_info(const std::string& msg) {
    if (log_level() >= 1) std::fprintf(stderr, "[mifmap] %s\n", msg.c_str());
}

void write_manifest(const std::string& out_dir, const std::string& command,
                    const RunConfig& cfg, const json& inputs, const json& outputs) {
    json m;
    m["command"] = command;
    m["config"] = json::parse(cfg.to_json_text());
    char hash[32];
    std::snprintf(hash, sizeof(hash), "%016llx", (unsigned long long)cfg.hash());
    m["config_hash"] = hash;
    m["inputs"] = inputs;
    m["outputs"] = outputs;
    write_text_file(out_dir + "/manifest.json", m.dump(2) + "\n");
}

std::string hash_hex(const RunConfig& cfg) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx", (unsigned long long)cfg.hash());
    return buf;
}

void write_kitti_bin(const std::string& path, const std::vector<Point3>& points) {
    BinWriter w(path);
    for (const auto& p : points) {
        w.write<float>(float(p.x));
        w.write<float>(float(p.y));
        w.write<float>(float(p.z));
        w.write<float>(0.0f);  // intensity placeholder
    }
    w.close();
}

void write_kitti_poses(const std::string& path, const std::vector<Pose>& poses) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("io-error: cannot write " + path);
    char buf[512];
    for (const auto& pose : poses) {
        const auto& R = pose.rotation;
        const auto& t = pose.translation;
        std::snprintf(buf, sizeof(buf),
                      "%.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g\n",
                      R(0, 0), R(0, 1), R(0, 2), t.x, R(1, 0), R(1, 1), R(1, 2), t.y, R(2, 0),
                      R(2, 1), R(2, 2), t.z);
        out << buf;
    }
}

FieldModel build_model(const ScanSet& scanset, const TrainingSet& tset, const RunConfig& cfg) {
    // Octree addressing must cover every sample the training set can query.
    double margin = cfg.sampler.gamma + cfg.sampler.eps + cfg.sampler.theta +
                    2.0 * cfg.octree.leaf_voxel;
    Point3 origin = scanset.world_bounds.min - Point3{margin, margin, margin};

    FieldModel model;
    model.tree = LatentOctree(origin, cfg.octree.leaf_voxel, cfg.octree.levels,
                              cfg.octree.latent_dim);
    model.tree.allocate(near_surface_points(tset, cfg.sampler.eps));
    model.posenc.num_frequencies = cfg.decoder.posenc_frequencies;
    model.posenc.include_raw = cfg.decoder.posenc_include_raw;
    model.alpha = cfg.decoder.alpha;
    model.bounds = scanset.world_bounds;

    Rng init_rng(derive_seed(cfg.seed, 0xDEC0DE));
    model.decoder = DecoderParams::init(model.posenc.width() + cfg.octree.latent_dim,
                                        cfg.decoder.hidden_width, cfg.decoder.hidden_layers,
                                        init_rng, cfg.decoder.output_bias);
    return model;
}

TrainConfig to_train_config(const RunConfig& cfg, const std::string& checkpoint_dir) {
    TrainConfig tc;
    tc.batch_rays = cfg.train.batch_rays;
    tc.iterations = cfg.train.iterations;
    tc.weights = cfg.train.weights;
    tc.adamw = cfg.train.adamw;
    tc.seed = cfg.seed;
    tc.checkpoint_every = cfg.train.checkpoint_every;
    tc.checkpoint_dir = checkpoint_dir;
    tc.config_hash = cfg.hash();
    tc.log_every = cfg.train.log_every;
    return tc;
}

GridOptions to_grid_options(const RunConfig& cfg) {
    GridOptions g;
    g.masked = cfg.mesh.masked;
    g.mask_dilation_voxels = cfg.mesh.mask_dilation_voxels;
    g.cell_budget = cfg.mesh.cell_budget;
    g.threads = cfg.threads;
    return g;
}

}  // namespace

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("io-error: cannot write " + path);
    out << text;
    if (!out) throw std::runtime_error("io-error: write failed for " + path);
}

SimulateResult cmd_simulate(const std::string& scene_path, const std::string& out_dir,
                            const RunConfig& cfg) {
    SceneDescription desc = SceneDescription::load(scene_path);
    fs::create_directories(out_dir + "/scans");

    SimulateResult result;
    std::vector<Pose> poses;
    for (std::size_t i = 0; i < desc.poses.size(); ++i) {
        ScannerSpec spec = desc.scanner;
        spec.seed = derive_seed(desc.scanner.seed, i);
        Scan scan = simulate_scan(desc.scene, desc.poses[i], spec);
        char stem[32];
        std::snprintf(stem, sizeof(stem), "%06zu.bin", i);
        std::string name = out_dir + "/scans/" + stem;
        write_kitti_bin(name, scan.points);
        result.scan_files.push_back(name);
        poses.push_back(desc.poses[i]);
        log_info("simulated scan " + std::to_string(i) + ": " +
                 std::to_string(scan.points.size()) + " returns");
    }
    result.poses_file = out_dir + "/poses.txt";
    write_kitti_poses(result.poses_file, poses);

    log_info("extracting reference mesh at " + std::to_string(desc.reference_spacing) + " m");
    Mesh ref = marching_cubes_function([&](const Point3& p) { return desc.scene.sdf(p); },
                                       desc.mesh_bounds, desc.reference_spacing);
    result.reference_mesh_file = out_dir + "/reference_mesh.ply";
    write_mesh_ply(ref, result.reference_mesh_file, "config " + hash_hex(cfg));

    std::ifstream src(scene_path);
    std::stringstream ss;
    ss << src.rdbuf();
    write_text_file(out_dir + "/scene.json", ss.str());

    write_manifest(out_dir, "simulate", cfg, {{"scene", scene_path}},
                   {{"scans", result.scan_files.size()},
                    {"poses", result.poses_file},
                    {"reference_mesh", result.reference_mesh_file}});
    return result;
}

std::string cmd_preprocess(const std::vector<std::string>& scan_files,
                           const std::string& scan_format, const std::string& poses_file,
                           const std::string& pose_format, const RunConfig& cfg,
                           const std::string& out_dir) {
    fs::create_directories(out_dir);
    auto poses = load_poses(poses_file, pose_format_from_string(pose_format));
    std::vector<std::vector<Point3>> raw;
    raw.reserve(scan_files.size());
    for (const auto& f : scan_files)
        raw.push_back(load_scan(f, scan_format_from_string(scan_format)));

    ScanSet set = preprocess_scanset(raw, poses, cfg.preprocess);
    std::size_t kept = set.total_points();
    std::size_t total = 0;
    for (const auto& s : raw) total += s.size();
    log_info("preprocess kept " + std::to_string(kept) + " of " + std::to_string(total) +
             " points");

    std::string out_path = out_dir + "/scanset.mifss";
    BinWriter w(out_path);
    set.save(w, cfg.hash());
    w.close();
    write_manifest(out_dir, "preprocess", cfg,
                   {{"scans", scan_files}, {"poses", poses_file}},
                   {{"scanset", out_path}, {"points", kept}});
    return out_path;
}

TrainResult cmd_train(const std::string& scanset_file, const RunConfig& cfg,
                      const std::string& out_dir) {
    cfg.validate();
    fs::create_directories(out_dir);
    BinReader r(scanset_file);
    ScanSet scanset = ScanSet::load(r);

    SampleConfig scfg = cfg.sampler;
    scfg.rng_seed = derive_seed(cfg.seed, 0x5A3B1E);
    TrainingSet tset = build_training_set(scanset, scfg);
    log_info("training set: " + std::to_string(tset.rays.size()) + " rays");
    if (tset.clamped_rays > 0)
        log_info("warning: " + std::to_string(tset.clamped_rays) +
                 " rays shorter than gamma + eps were clamped at t = 0");

    FieldModel model = build_model(scanset, tset, cfg);
    log_info("octree features: " + std::to_string(model.tree.total_features()));

    TrainConfig tc = to_train_config(cfg, out_dir);
    OptState opt;
    TrainHistory history = train(model, tset, tc, &opt);

    TrainResult result;
    result.checkpoint_file = out_dir + "/checkpoint.mifckpt";
    save_checkpoint(result.checkpoint_file, model, &opt, cfg.hash());
    result.loss_csv_file = out_dir + "/loss_history.csv";
    history.save_csv(result.loss_csv_file, cfg.hash());
    result.final_total = history.records.back().total;

    write_manifest(out_dir, "train", cfg, {{"scanset", scanset_file}},
                   {{"checkpoint", result.checkpoint_file},
                    {"loss_history", result.loss_csv_file},
                    {"final_total", result.final_total}});
    return result;
}

std::string cmd_mesh(const std::string& checkpoint_file, double spacing,
                     const std::string& out_mesh, const RunConfig& cfg) {
    Checkpoint ck = load_checkpoint(checkpoint_file);
    double pad = (cfg.mesh.mask_dilation_voxels + 1.0) * ck.model.tree.leaf_voxel();
    Aabb bounds = ck.model.bounds.inflated(pad);
    ScalarGrid grid = evaluate_grid(ck.model, bounds, spacing, to_grid_options(cfg));
    Mesh mesh = marching_cubes(grid, cfg.mesh.iso);
    log_info("extracted mesh: " + std::to_string(mesh.vertices.size()) + " vertices, " +
             std::to_string(mesh.triangles.size()) + " triangles");
    write_mesh(mesh, out_mesh, "config " + hash_hex(cfg));
    return out_mesh;
}

MetricsReport cmd_eval(const std::string& pred_mesh, const std::string& gt_mesh,
                       const RunConfig& cfg, const std::string& out_dir) {
    fs::create_directories(out_dir);
    Mesh pred = read_mesh(pred_mesh);
    Mesh gt = read_mesh(gt_mesh);
    MetricParams params = cfg.metrics;
    params.seed = derive_seed(cfg.seed, 0xE7A1);
    MetricsReport rep = reconstruction_metrics(pred, gt, params);
    write_text_file(out_dir + "/metrics.json", rep.to_json(cfg.hash()));
    write_text_file(out_dir + "/metrics.csv", rep.to_csv(cfg.hash()));
    write_manifest(out_dir, "eval", cfg, {{"pred", pred_mesh}, {"gt", gt_mesh}},
                   {{"metrics_json", out_dir + "/metrics.json"}});
    return rep;
}

double held_out_mono_rate(const FieldModel& model, const SceneDescription& desc,
                          const RunConfig& cfg, std::size_t max_rays) {
    // Yaw-offset rescan: half an azimuth step so held-out rays interleave the
    // training lattice; sparser elevation set keeps it cheap.
    ScanSet held;
    double half_step = M_PI / double(desc.scanner.azimuth_count);
    for (std::size_t i = 0; i < desc.poses.size(); ++i) {
        Pose pose = desc.poses[i];
        Mat3 yaw;
        yaw(0, 0) = std::cos(half_step);
        yaw(0, 1) = -std::sin(half_step);
        yaw(1, 0) = std::sin(half_step);
        yaw(1, 1) = std::cos(half_step);
        pose.rotation = pose.rotation * yaw;

        ScannerSpec spec = desc.scanner;
        spec.seed = derive_seed(desc.scanner.seed, 1000 + i);
        std::vector<double> sparse;
        for (std::size_t e = 0; e < spec.elevations_deg.size(); e += 4)
            sparse.push_back(spec.elevations_deg[e]);
        spec.elevations_deg = sparse;
        spec.azimuth_count = std::max(1, spec.azimuth_count / 4);
        Scan scan = simulate_scan(desc.scene, pose, spec);

        // Range filter only; chains need no voxel statistics.
        scan.points = range_filter(scan.points, cfg.preprocess.min_range,
                                   cfg.preprocess.max_range);
        if (!scan.points.empty()) held.scans.push_back(std::move(scan));
    }
    if (held.scans.empty()) throw std::runtime_error("held-out rescan produced no rays");
    for (auto& scan : held.scans)
        for (std::size_t j = 0; j < scan.points.size(); ++j)
            held.world_bounds.expand(scan.world_point(j));

    SampleConfig scfg = cfg.sampler;
    scfg.rng_seed = derive_seed(cfg.seed, 0x4E1D);
    TrainingSet chains = build_training_set(held, scfg);
    if (chains.rays.size() > max_rays) {
        // Deterministic stride subsample.
        TrainingSet sub;
        std::size_t stride = (chains.rays.size() + max_rays - 1) / max_rays;
        for (std::size_t i = 0; i < chains.rays.size(); i += stride) {
            sub.rays.push_back(chains.rays[i]);
            sub.surface_points.push_back(chains.surface_points[i]);
        }
        chains = std::move(sub);
    }
    return monotone_chain_fraction(model, chains);
}

PipelineResult cmd_pipeline_scans(const std::vector<std::string>& scan_files,
                                  const std::string& scan_format, const std::string& poses_file,
                                  const std::string& pose_format, const std::string& gt_mesh,
                                  const RunConfig& cfg, const std::string& out_dir) {
    cfg.validate();
    fs::create_directories(out_dir);

    log_info("pipeline stage 1/4: preprocess");
    std::string scanset_file = cmd_preprocess(scan_files, scan_format, poses_file, pose_format,
                                              cfg, out_dir + "/pre");
    log_info("pipeline stage 2/4: train");
    TrainResult tr = cmd_train(scanset_file, cfg, out_dir + "/train");
    log_info("pipeline stage 3/4: mesh");
    std::string mesh_file =
        cmd_mesh(tr.checkpoint_file, cfg.mesh.spacing, out_dir + "/mesh.ply", cfg);

    PipelineResult result;
    result.mesh_file = mesh_file;
    result.checkpoint_file = tr.checkpoint_file;
    result.has_metrics = !gt_mesh.empty();
    json outputs{{"mesh", mesh_file}, {"checkpoint", tr.checkpoint_file}};
    if (result.has_metrics) {
        log_info("pipeline stage 4/4: eval");
        result.metrics = cmd_eval(mesh_file, gt_mesh, cfg, out_dir + "/eval");
        outputs["metrics"] = out_dir + "/eval/metrics.json";
    }
    write_manifest(out_dir, "pipeline", cfg,
                   {{"scans", scan_files}, {"poses", poses_file}, {"gt", gt_mesh}}, outputs);
    return result;
}

PipelineResult cmd_pipeline(const std::string& scene_path, const RunConfig& cfg,
                            const std::string& out_dir) {
    cfg.validate();
    fs::create_directories(out_dir);

    log_info("pipeline stage 1/5: simulate");
    SimulateResult sim = cmd_simulate(scene_path, out_dir + "/sim", cfg);

    log_info("pipeline stage 2/5: preprocess");
    std::string scanset_file = cmd_preprocess(sim.scan_files, "kitti-bin", sim.poses_file,
                                              "kitti-3x4-rows", cfg, out_dir + "/pre");

    log_info("pipeline stage 3/5: train");
    TrainResult tr = cmd_train(scanset_file, cfg, out_dir + "/train");

    log_info("pipeline stage 4/5: mesh");
    std::string mesh_file =
        cmd_mesh(tr.checkpoint_file, cfg.mesh.spacing, out_dir + "/mesh.ply", cfg);

    log_info("pipeline stage 5/5: eval");
    MetricsReport rep =
        cmd_eval(mesh_file, sim.reference_mesh_file, cfg, out_dir + "/eval");

    Checkpoint ck = load_checkpoint(tr.checkpoint_file);
    SceneDescription desc = SceneDescription::load(scene_path);
    double mono = held_out_mono_rate(ck.model, desc, cfg);

    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "{\n  \"mono_rate\": %.9g,\n  \"config_hash\": \"%s\"\n}\n", mono,
                  hash_hex(cfg).c_str());
    write_text_file(out_dir + "/monotonicity.json", buf);

    write_manifest(out_dir, "pipeline", cfg, {{"scene", scene_path}},
                   {{"mesh", mesh_file},
                    {"checkpoint", tr.checkpoint_file},
                    {"metrics", out_dir + "/eval/metrics.json"},
                    {"mono_rate", mono}});

    PipelineResult result;
    result.metrics = rep;
    result.mono_rate = mono;
    result.mesh_file = mesh_file;
    result.checkpoint_file = tr.checkpoint_file;
    return result;
}

}  // namespace mif
