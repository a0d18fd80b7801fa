#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mif/latent_octree.hpp"
#include "mif/meshing.hpp"
#include "mif/metrics.hpp"
#include "mif/pipeline.hpp"
#include "mif/simlidar.hpp"
#include "mif/training.hpp"

namespace py = pybind11;
using namespace mif;

namespace {

std::vector<Point3> points_from_array(const py::array_t<double>& arr) {
    auto buf = arr.unchecked<2>();
    if (buf.shape(1) != 3) throw std::invalid_argument("expected an (N, 3) array");
    std::vector<Point3> pts(std::size_t(buf.shape(0)));
    for (py::ssize_t i = 0; i < buf.shape(0); ++i)
        pts[std::size_t(i)] = {buf(i, 0), buf(i, 1), buf(i, 2)};
    return pts;
}

py::array_t<double> array_from_points(const std::vector<Point3>& pts) {
    py::array_t<double> arr({py::ssize_t(pts.size()), py::ssize_t(3)});
    auto buf = arr.mutable_unchecked<2>();
    for (std::size_t i = 0; i < pts.size(); ++i) {
        buf(py::ssize_t(i), 0) = pts[i].x;
        buf(py::ssize_t(i), 1) = pts[i].y;
        buf(py::ssize_t(i), 2) = pts[i].z;
    }
    return arr;
}

py::dict report_to_dict(const MetricsReport& rep) {
    py::dict d;
    d["accuracy"] = rep.accuracy;
    d["completion"] = rep.completion;
    d["chamfer_l2"] = rep.chamfer_l2;
    d["chamfer_l1"] = rep.chamfer_l1;
    d["precision"] = rep.precision;
    d["recall"] = rep.recall;
    d["fscore"] = rep.fscore;
    d["pred_samples"] = rep.pred_samples;
    d["gt_samples"] = rep.gt_samples;
    return d;
}

RunConfig config_from_arg(const std::string& config_json, std::uint64_t seed, int threads) {
    RunConfig cfg = config_json.empty() ? RunConfig{} : RunConfig::from_json_text(config_json);
    if (seed != 0) cfg.seed = seed;
    if (threads != 0) cfg.threads = threads;
    return cfg;
}

}  // namespace

PYBIND11_MODULE(_mifmap, m) {
    m.doc() = "monotonic implicit field mapping: C++ core bindings";

    m.def("morton_encode", &morton_encode, py::arg("i"), py::arg("j"), py::arg("k"));
    m.def("morton_decode", [](std::uint64_t code) {
        std::uint32_t i, j, k;
        morton_decode(code, i, j, k);
        return py::make_tuple(i, j, k);
    });

    m.def("sigmoid_alpha", &sigmoid_alpha, py::arg("x"), py::arg("alpha"));
    m.def("loss_surface", &loss_surface);
    m.def("loss_sign", &loss_sign, py::arg("values"), py::arg("residuals"), py::arg("alpha"));
    m.def("loss_mono", &loss_mono, py::arg("ray_values"), py::arg("alpha"));
    m.def("loss_eikonal", [](const py::array_t<double>& grads) {
        auto buf = grads.unchecked<2>();
        if (buf.shape(1) != 3) throw std::invalid_argument("expected an (N, 3) array");
        std::vector<Eigen::Vector3d> g(std::size_t(buf.shape(0)));
        for (py::ssize_t i = 0; i < buf.shape(0); ++i)
            g[std::size_t(i)] = {buf(i, 0), buf(i, 1), buf(i, 2)};
        return loss_eikonal(g);
    });

    m.def(
        "marching_cubes",
        [](const py::array_t<double>& values, const py::array_t<double>& origin, double spacing,
           double iso) {
            auto vals = values.unchecked<3>();
            auto org = origin.unchecked<1>();
            ScalarGrid grid;
            grid.origin = {org(0), org(1), org(2)};
            grid.spacing = spacing;
            // numpy axis order (x, y, z) -> flat x-fastest layout
            grid.nx = int(vals.shape(0));
            grid.ny = int(vals.shape(1));
            grid.nz = int(vals.shape(2));
            grid.values.resize(std::size_t(grid.nx) * std::size_t(grid.ny) *
                               std::size_t(grid.nz));
            for (int k = 0; k < grid.nz; ++k)
                for (int j = 0; j < grid.ny; ++j)
                    for (int i = 0; i < grid.nx; ++i)
                        grid.values[grid.node_index(i, j, k)] = vals(i, j, k);
            Mesh mesh = marching_cubes(grid, iso);
            py::array_t<std::uint32_t> tris({py::ssize_t(mesh.triangles.size()), py::ssize_t(3)});
            auto tbuf = tris.mutable_unchecked<2>();
            for (std::size_t t = 0; t < mesh.triangles.size(); ++t)
                for (int c = 0; c < 3; ++c)
                    tbuf(py::ssize_t(t), c) = mesh.triangles[t][std::size_t(c)];
            return py::make_tuple(array_from_points(mesh.vertices), tris);
        },
        py::arg("values"), py::arg("origin"), py::arg("spacing"), py::arg("iso") = 0.0);

    m.def(
        "scene_sdf",
        [](const std::string& scene_json, const py::array_t<double>& pts) {
            SceneDescription desc = SceneDescription::from_json_text(scene_json);
            auto points = points_from_array(pts);
            py::array_t<double> out(py::ssize_t(points.size()));
            auto buf = out.mutable_unchecked<1>();
            for (std::size_t i = 0; i < points.size(); ++i)
                buf(py::ssize_t(i)) = desc.scene.sdf(points[i]);
            return out;
        },
        py::arg("scene_json"), py::arg("points"));

    m.def(
        "voxel_downsample",
        [](const py::array_t<double>& pts, double voxel) {
            return array_from_points(voxel_downsample(points_from_array(pts), voxel));
        },
        py::arg("points"), py::arg("voxel"));

    m.def(
        "nearest_distances",
        [](const py::array_t<double>& query, const py::array_t<double>& target) {
            auto d = nearest_distances(points_from_array(query), points_from_array(target));
            return py::array_t<double>(py::ssize_t(d.size()), d.data());
        },
        py::arg("query"), py::arg("target"));

    m.def(
        "evaluate_checkpoint",
        [](const std::string& checkpoint_path, const py::array_t<double>& pts) {
            Checkpoint ck = load_checkpoint(checkpoint_path);
            auto values = field_values(ck.model, points_from_array(pts));
            return py::array_t<double>(py::ssize_t(values.size()), values.data());
        },
        py::arg("checkpoint"), py::arg("points"));

    m.def(
        "simulate",
        [](const std::string& scene_path, const std::string& out_dir,
           const std::string& config_json, std::uint64_t seed, int threads) {
            auto r = cmd_simulate(scene_path, out_dir, config_from_arg(config_json, seed, threads));
            py::dict d;
            d["scan_files"] = r.scan_files;
            d["poses_file"] = r.poses_file;
            d["reference_mesh_file"] = r.reference_mesh_file;
            return d;
        },
        py::arg("scene"), py::arg("out_dir"), py::arg("config_json") = "", py::arg("seed") = 0,
        py::arg("threads") = 0);

    m.def(
        "preprocess",
        [](const std::vector<std::string>& scans, const std::string& scan_format,
           const std::string& poses, const std::string& pose_format, const std::string& out_dir,
           const std::string& config_json, std::uint64_t seed, int threads) {
            return cmd_preprocess(scans, scan_format, poses, pose_format,
                                  config_from_arg(config_json, seed, threads), out_dir);
        },
        py::arg("scans"), py::arg("scan_format"), py::arg("poses"), py::arg("pose_format"),
        py::arg("out_dir"), py::arg("config_json") = "", py::arg("seed") = 0,
        py::arg("threads") = 0);

    m.def(
        "train",
        [](const std::string& scanset, const std::string& out_dir,
           const std::string& config_json, std::uint64_t seed, int threads) {
            auto r = cmd_train(scanset, config_from_arg(config_json, seed, threads), out_dir);
            py::dict d;
            d["checkpoint_file"] = r.checkpoint_file;
            d["loss_csv_file"] = r.loss_csv_file;
            d["final_total"] = r.final_total;
            return d;
        },
        py::arg("scanset"), py::arg("out_dir"), py::arg("config_json") = "", py::arg("seed") = 0,
        py::arg("threads") = 0);

    m.def(
        "mesh",
        [](const std::string& checkpoint, double spacing, const std::string& out_mesh,
           const std::string& config_json, int threads) {
            RunConfig cfg = config_from_arg(config_json, 0, threads);
            if (spacing <= 0) spacing = cfg.mesh.spacing;
            return cmd_mesh(checkpoint, spacing, out_mesh, cfg);
        },
        py::arg("checkpoint"), py::arg("spacing"), py::arg("out_mesh"),
        py::arg("config_json") = "", py::arg("threads") = 0);

    m.def(
        "evaluate",
        [](const std::string& pred, const std::string& gt, const std::string& out_dir,
           const std::string& config_json, std::uint64_t seed) {
            return report_to_dict(
                cmd_eval(pred, gt, config_from_arg(config_json, seed, 0), out_dir));
        },
        py::arg("pred"), py::arg("gt"), py::arg("out_dir"), py::arg("config_json") = "",
        py::arg("seed") = 0);

    m.def(
        "pipeline",
        [](const std::string& scene, const std::string& out_dir, const std::string& config_json,
           std::uint64_t seed, int threads) {
            auto r = cmd_pipeline(scene, config_from_arg(config_json, seed, threads), out_dir);
            py::dict d = report_to_dict(r.metrics);
            d["mono_rate"] = r.mono_rate;
            d["mesh_file"] = r.mesh_file;
            d["checkpoint_file"] = r.checkpoint_file;
            return d;
        },
        py::arg("scene"), py::arg("out_dir"), py::arg("config_json") = "", py::arg("seed") = 0,
        py::arg("threads") = 0);

    m.def(
        "pipeline_scans",
        [](const std::vector<std::string>& scans, const std::string& scan_format,
           const std::string& poses, const std::string& pose_format, const std::string& gt_mesh,
           const std::string& out_dir, const std::string& config_json, std::uint64_t seed,
           int threads) {
            auto r = cmd_pipeline_scans(scans, scan_format, poses, pose_format, gt_mesh,
                                        config_from_arg(config_json, seed, threads), out_dir);
            py::dict d;
            if (r.has_metrics) d = report_to_dict(r.metrics);
            d["mesh_file"] = r.mesh_file;
            d["checkpoint_file"] = r.checkpoint_file;
            return d;
        },
        py::arg("scans"), py::arg("scan_format"), py::arg("poses"), py::arg("pose_format"),
        py::arg("gt_mesh") = "", py::arg("out_dir") = "run", py::arg("config_json") = "",
        py::arg("seed") = 0, py::arg("threads") = 0);

    m.def("default_config_json", []() { return RunConfig{}.to_json_text(); });
}
