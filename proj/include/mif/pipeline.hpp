#pragma once

#include <string>
#include <vector>

#include "mif/metrics.hpp"
#include "mif/runconfig.hpp"
#include "mif/simlidar.hpp"

namespace mif {

// Batch commands behind the CLI. Each writes a manifest.json with the full
// effective config, seeds and the config hash into its output directory.

struct SimulateResult {
    std::vector<std::string> scan_files;
    std::string poses_file;
    std::string reference_mesh_file;
};
SimulateResult cmd_simulate(const std::string& scene_path, const std::string& out_dir,
                            const RunConfig& cfg);

std::string cmd_preprocess(const std::vector<std::string>& scan_files,
                           const std::string& scan_format, const std::string& poses_file,
                           const std::string& pose_format, const RunConfig& cfg,
                           const std::string& out_dir);

struct TrainResult {
    std::string checkpoint_file;
    std::string loss_csv_file;
    double final_total = 0.0;
};
TrainResult cmd_train(const std::string& scanset_file, const RunConfig& cfg,
                      const std::string& out_dir);

std::string cmd_mesh(const std::string& checkpoint_file, double spacing,
                     const std::string& out_mesh, const RunConfig& cfg);

MetricsReport cmd_eval(const std::string& pred_mesh, const std::string& gt_mesh,
                       const RunConfig& cfg, const std::string& out_dir);

struct PipelineResult {
    MetricsReport metrics;
    bool has_metrics = true;
    double mono_rate = 0.0;  // held-out monotone chain fraction
    std::string mesh_file;
    std::string checkpoint_file;
};
PipelineResult cmd_pipeline(const std::string& scene_path, const RunConfig& cfg,
                            const std::string& out_dir);

// Pipeline over user-supplied scans instead of a synthetic scene. Evaluation
// runs only when a reference mesh is given; the held-out monotonicity rate is
// skipped (there is no scene to rescan).
PipelineResult cmd_pipeline_scans(const std::vector<std::string>& scan_files,
                                  const std::string& scan_format, const std::string& poses_file,
                                  const std::string& pose_format, const std::string& gt_mesh,
                                  const RunConfig& cfg, const std::string& out_dir);

// Fraction of held-out chains non-increasing under the checkpointed field;
// rays come from a yaw-offset rescan of the scene.
double held_out_mono_rate(const FieldModel& model, const SceneDescription& desc,
                          const RunConfig& cfg, std::size_t max_rays = 4000);

void write_text_file(const std::string& path, const std::string& text);

}  // namespace mif
