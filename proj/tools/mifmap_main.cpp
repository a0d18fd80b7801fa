#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mif/pipeline.hpp"

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out = "run";
    std::uint64_t seed = 0;
    int threads = 0;
    bool seed_set = false, threads_set = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "JSON config file");
    cmd->add_option("--out", opts.out, "output directory");
    cmd->add_option("--seed", opts.seed, "RNG seed (overrides config)")
        ->each([&](const std::string&) { opts.seed_set = true; });
    cmd->add_option("--threads", opts.threads, "worker threads; 1 = bitwise-reproducible")
        ->each([&](const std::string&) { opts.threads_set = true; });
}

mif::RunConfig effective_config(const CommonOpts& opts) {
    mif::RunConfig cfg = mif::RunConfig::load(opts.config_path);
    if (opts.seed_set) cfg.seed = opts.seed;
    if (opts.threads_set) cfg.threads = opts.threads;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mifmap: monotonic implicit field mapping for LiDAR scans"};
    app.require_subcommand(1);

    CommonOpts sim_opts, pre_opts, train_opts, mesh_opts, eval_opts, pipe_opts;

    auto* sim = app.add_subcommand("simulate", "cast synthetic scans from a scene description");
    std::string scene_path;
    sim->add_option("scene", scene_path, "scene JSON")->required();
    add_common(sim, sim_opts);

    auto* pre = app.add_subcommand("preprocess", "filter scans and build a cached scan set");
    std::vector<std::string> scan_files;
    std::string scan_format = "kitti-bin", poses_file, pose_format = "kitti-3x4-rows";
    pre->add_option("--scans", scan_files, "scan files in order")->required();
    pre->add_option("--scan-format", scan_format,
                    "xyz-text | ply-ascii | ply-binary-little-endian | kitti-bin");
    pre->add_option("--poses", poses_file, "pose file")->required();
    pre->add_option("--pose-format", pose_format, "kitti-3x4-rows | matrix-4x4-blocks");
    add_common(pre, pre_opts);

    auto* trn = app.add_subcommand("train", "fit the implicit field to a cached scan set");
    std::string scanset_file;
    trn->add_option("scanset", scanset_file, "scanset.mifss from preprocess")->required();
    add_common(trn, train_opts);

    auto* msh = app.add_subcommand("mesh", "extract the zero level-set from a checkpoint");
    std::string checkpoint_file, mesh_out = "mesh.ply";
    double mesh_spacing = 0.0;
    msh->add_option("checkpoint", checkpoint_file, "checkpoint.mifckpt")->required();
    msh->add_option("--spacing", mesh_spacing, "grid spacing in meters (default from config)");
    msh->add_option("--mesh-out", mesh_out, "output mesh (.obj or .ply)");
    add_common(msh, mesh_opts);

    auto* evl = app.add_subcommand("eval", "compare a predicted mesh against a reference");
    std::string pred_mesh, gt_mesh;
    evl->add_option("pred", pred_mesh, "predicted mesh")->required();
    evl->add_option("gt", gt_mesh, "reference mesh")->required();
    add_common(evl, eval_opts);

    auto* pipe = app.add_subcommand("pipeline",
                                    "simulate + preprocess + train + mesh + eval in one run");
    std::string pipe_scene;
    std::vector<std::string> pipe_scans;
    std::string pipe_scan_format = "kitti-bin", pipe_poses, pipe_pose_format = "kitti-3x4-rows";
    std::string pipe_gt;
    pipe->add_option("scene", pipe_scene, "scene JSON (omit when using --scans)");
    pipe->add_option("--scans", pipe_scans, "scan files instead of a synthetic scene");
    pipe->add_option("--scan-format", pipe_scan_format,
                     "xyz-text | ply-ascii | ply-binary-little-endian | kitti-bin");
    pipe->add_option("--poses", pipe_poses, "pose file (with --scans)");
    pipe->add_option("--pose-format", pipe_pose_format, "kitti-3x4-rows | matrix-4x4-blocks");
    pipe->add_option("--gt", pipe_gt, "reference mesh to evaluate against (with --scans)");
    add_common(pipe, pipe_opts);

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) {
            mif::cmd_simulate(scene_path, sim_opts.out, effective_config(sim_opts));
        } else if (pre->parsed()) {
            mif::cmd_preprocess(scan_files, scan_format, poses_file, pose_format,
                                effective_config(pre_opts), pre_opts.out);
        } else if (trn->parsed()) {
            mif::cmd_train(scanset_file, effective_config(train_opts), train_opts.out);
        } else if (msh->parsed()) {
            mif::RunConfig cfg = effective_config(mesh_opts);
            double spacing = mesh_spacing > 0.0 ? mesh_spacing : cfg.mesh.spacing;
            mif::cmd_mesh(checkpoint_file, spacing, mesh_out, cfg);
        } else if (evl->parsed()) {
            mif::MetricsReport rep =
                mif::cmd_eval(pred_mesh, gt_mesh, effective_config(eval_opts), eval_opts.out);
            std::fputs(rep.to_json(effective_config(eval_opts).hash()).c_str(), stdout);
        } else if (pipe->parsed()) {
            if (!pipe_scans.empty()) {
                if (pipe_poses.empty())
                    throw std::invalid_argument("pipeline with --scans requires --poses");
                mif::PipelineResult res = mif::cmd_pipeline_scans(
                    pipe_scans, pipe_scan_format, pipe_poses, pipe_pose_format, pipe_gt,
                    effective_config(pipe_opts), pipe_opts.out);
                if (res.has_metrics)
                    std::printf("fscore %.6f chamfer_l1 %.6f\n", res.metrics.fscore,
                                res.metrics.chamfer_l1);
                else
                    std::printf("mesh %s\n", res.mesh_file.c_str());
            } else if (pipe_scene.empty()) {
                throw std::invalid_argument("pipeline needs a scene JSON or --scans/--poses");
            } else {
                mif::PipelineResult res =
                    mif::cmd_pipeline(pipe_scene, effective_config(pipe_opts), pipe_opts.out);
                std::printf("fscore %.6f chamfer_l1 %.6f mono_rate %.6f\n", res.metrics.fscore,
                            res.metrics.chamfer_l1, res.mono_rate);
            }
        }
    } catch (const std::exception& e) {
        // One machine-readable error line on stderr.
        std::string what = e.what();
        for (auto& c : what)
            if (c == '"') c = '\'';
        std::fprintf(stderr, "error: {\"message\": \"%s\"}\n", what.c_str());
        return 1;
    }
    return 0;
}
