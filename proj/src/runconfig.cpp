#include "mif/runconfig.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace mif {

using nlohmann::json;

namespace {

template <typename T>
void get_if(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

std::string RunConfig::to_json_text() const {
    json j;
    j["seed"] = seed;
    j["threads"] = threads;
    j["preprocess"] = {{"min_range", preprocess.min_range},
                       {"max_range", preprocess.max_range},
                       {"voxel", preprocess.voxel},
                       {"outlier_k", preprocess.outlier_k},
                       {"outlier_sigma", preprocess.outlier_sigma}};
    j["sampler"] = {{"m_free", sampler.m_free}, {"m_surf", sampler.m_surf},
                    {"m_occ", sampler.m_occ},   {"eps", sampler.eps},
                    {"gamma", sampler.gamma},   {"theta", sampler.theta}};
    j["octree"] = {{"leaf_voxel", octree.leaf_voxel},
                   {"levels", octree.levels},
                   {"latent_dim", octree.latent_dim}};
    j["decoder"] = {{"posenc_frequencies", decoder.posenc_frequencies},
                    {"posenc_include_raw", decoder.posenc_include_raw},
                    {"hidden_width", decoder.hidden_width},
                    {"hidden_layers", decoder.hidden_layers},
                    {"alpha", decoder.alpha},
                    {"output_bias", decoder.output_bias}};
    j["train"] = {{"batch_rays", train.batch_rays},
                  {"iterations", train.iterations},
                  {"lambda_surf", train.weights.lambda_surf},
                  {"lambda_eik", train.weights.lambda_eik},
                  {"lambda_sign", train.weights.lambda_sign},
                  {"lambda_mono", train.weights.lambda_mono},
                  {"lr", train.adamw.lr},
                  {"beta1", train.adamw.beta1},
                  {"beta2", train.adamw.beta2},
                  {"eps", train.adamw.eps},
                  {"weight_decay", train.adamw.weight_decay},
                  {"lr_milestones", train.adamw.milestones},
                  {"lr_decay", train.adamw.decay_factor},
                  {"checkpoint_every", train.checkpoint_every},
                  {"log_every", train.log_every}};
    j["mesh"] = {{"spacing", mesh.spacing},
                 {"masked", mesh.masked},
                 {"mask_dilation_voxels", mesh.mask_dilation_voxels},
                 {"cell_budget", mesh.cell_budget},
                 {"iso", mesh.iso}};
    j["metrics"] = {{"sample_resolution", metrics.sample_resolution},
                    {"completion_trunc", metrics.completion_trunc},
                    {"fscore_threshold", metrics.fscore_threshold}};
    return j.dump(2) + "\n";
}

RunConfig RunConfig::from_json_text(const std::string& text) {
    json j = json::parse(text);
    RunConfig c;
    get_if(j, "seed", c.seed);
    get_if(j, "threads", c.threads);
    if (j.contains("preprocess")) {
        const auto& p = j["preprocess"];
        get_if(p, "min_range", c.preprocess.min_range);
        get_if(p, "max_range", c.preprocess.max_range);
        get_if(p, "voxel", c.preprocess.voxel);
        get_if(p, "outlier_k", c.preprocess.outlier_k);
        get_if(p, "outlier_sigma", c.preprocess.outlier_sigma);
    }
    if (j.contains("sampler")) {
        const auto& p = j["sampler"];
        get_if(p, "m_free", c.sampler.m_free);
        get_if(p, "m_surf", c.sampler.m_surf);
        get_if(p, "m_occ", c.sampler.m_occ);
        get_if(p, "eps", c.sampler.eps);
        get_if(p, "gamma", c.sampler.gamma);
        get_if(p, "theta", c.sampler.theta);
    }
    if (j.contains("octree")) {
        const auto& p = j["octree"];
        get_if(p, "leaf_voxel", c.octree.leaf_voxel);
        get_if(p, "levels", c.octree.levels);
        get_if(p, "latent_dim", c.octree.latent_dim);
    }
    if (j.contains("decoder")) {
        const auto& p = j["decoder"];
        get_if(p, "posenc_frequencies", c.decoder.posenc_frequencies);
        get_if(p, "posenc_include_raw", c.decoder.posenc_include_raw);
        get_if(p, "hidden_width", c.decoder.hidden_width);
        get_if(p, "hidden_layers", c.decoder.hidden_layers);
        get_if(p, "alpha", c.decoder.alpha);
        get_if(p, "output_bias", c.decoder.output_bias);
    }
    if (j.contains("train")) {
        const auto& p = j["train"];
        get_if(p, "batch_rays", c.train.batch_rays);
        get_if(p, "iterations", c.train.iterations);
        get_if(p, "lambda_surf", c.train.weights.lambda_surf);
        get_if(p, "lambda_eik", c.train.weights.lambda_eik);
        get_if(p, "lambda_sign", c.train.weights.lambda_sign);
        get_if(p, "lambda_mono", c.train.weights.lambda_mono);
        get_if(p, "lr", c.train.adamw.lr);
        get_if(p, "beta1", c.train.adamw.beta1);
        get_if(p, "beta2", c.train.adamw.beta2);
        get_if(p, "eps", c.train.adamw.eps);
        get_if(p, "weight_decay", c.train.adamw.weight_decay);
        get_if(p, "lr_milestones", c.train.adamw.milestones);
        get_if(p, "lr_decay", c.train.adamw.decay_factor);
        get_if(p, "checkpoint_every", c.train.checkpoint_every);
        get_if(p, "log_every", c.train.log_every);
    }
    if (j.contains("mesh")) {
        const auto& p = j["mesh"];
        get_if(p, "spacing", c.mesh.spacing);
        get_if(p, "masked", c.mesh.masked);
        get_if(p, "mask_dilation_voxels", c.mesh.mask_dilation_voxels);
        get_if(p, "cell_budget", c.mesh.cell_budget);
        get_if(p, "iso", c.mesh.iso);
    }
    if (j.contains("metrics")) {
        const auto& p = j["metrics"];
        get_if(p, "sample_resolution", c.metrics.sample_resolution);
        get_if(p, "completion_trunc", c.metrics.completion_trunc);
        get_if(p, "fscore_threshold", c.metrics.fscore_threshold);
    }
    return c;
}

RunConfig RunConfig::load(const std::string& path) {
    if (path.empty()) return RunConfig{};
    std::ifstream in(path);
    if (!in) throw std::runtime_error("io-error: cannot open config " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

std::uint64_t RunConfig::hash() const {
    // FNV-1a over the canonical (sorted-key) dump.
    std::string text = to_json_text();
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

void RunConfig::validate() const {
    if (train.iterations < 1) throw std::invalid_argument("config: iterations >= 1");
    if (train.batch_rays < 1) throw std::invalid_argument("config: batch_rays >= 1");
    if (threads < 1) throw std::invalid_argument("config: threads >= 1");
    if (mesh.spacing <= 0) throw std::invalid_argument("config: mesh.spacing > 0");
    if (octree.levels < 1 || octree.latent_dim < 1)
        throw std::invalid_argument("config: octree levels/latent_dim >= 1");
    if (decoder.hidden_width < 1 || decoder.hidden_layers < 1)
        throw std::invalid_argument("config: decoder width/layers >= 1");
    if (metrics.sample_resolution <= 0 || metrics.completion_trunc <= 0 ||
        metrics.fscore_threshold <= 0)
        throw std::invalid_argument("config: metric parameters > 0");
    sampler.validate();
}

}  // namespace mif
