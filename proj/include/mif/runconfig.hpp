#pragma once

#include <cstdint>
#include <string>

#include "mif/ingest.hpp"
#include "mif/metrics.hpp"
#include "mif/sampler.hpp"
#include "mif/training.hpp"

namespace mif {

struct OctreeConfig {
    double leaf_voxel = 0.2;
    int levels = 3;     // H finest levels
    int latent_dim = 8; // d
};

struct DecoderConfig {
    int posenc_frequencies = 10;
    bool posenc_include_raw = true;
    int hidden_width = 256;
    int hidden_layers = 3;  // plus the linear output layer = 4 weight layers
    double alpha = 100.0;
    double output_bias = 0.1;
};

struct TrainSection {
    int batch_rays = 32;
    std::uint64_t iterations = 5000;
    LossWeights weights;
    AdamWConfig adamw;
    std::uint64_t checkpoint_every = 0;
    std::uint64_t log_every = 500;
};

struct MeshSection {
    double spacing = 0.10;
    bool masked = true;
    double mask_dilation_voxels = 1.0;
    std::uint64_t cell_budget = std::uint64_t(1) << 27;
    double iso = 0.0;
};

// Full effective configuration of a run; every field has a JSON key and CLI
// flags override file values. The hash of the canonical JSON dump is embedded
// in every artifact a command writes.
struct RunConfig {
    std::uint64_t seed = 1;
    int threads = 1;
    PreprocessConfig preprocess;
    SampleConfig sampler;
    OctreeConfig octree;
    DecoderConfig decoder;
    TrainSection train;
    MeshSection mesh;
    MetricParams metrics;

    std::string to_json_text() const;
    static RunConfig from_json_text(const std::string& text);
    static RunConfig load(const std::string& path);  // empty path = defaults

    std::uint64_t hash() const;  // FNV-1a over the canonical dump
    void validate() const;
};

}  // namespace mif
