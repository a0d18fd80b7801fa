#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mif/decoder.hpp"
#include "mif/sampler.hpp"

namespace mif {

struct LossWeights {
    double lambda_eik = 0.1;
    double lambda_sign = 1.0;
    double lambda_mono = 2.0;
    // The combined loss keeps the surface term unweighted; this switch exists
    // for ablation runs only.
    double lambda_surf = 1.0;
};

struct LossParts {
    double surface = 0.0;
    double sign = 0.0;
    double mono = 0.0;
    double eikonal = 0.0;
};

// L_surf: mean |f| over surface points.
double loss_surface(const std::vector<double>& values);

// L_sign: mean(1 - tanh(alpha f) tanh(alpha r)).
double loss_sign(const std::vector<double>& values, const std::vector<double>& residuals,
                 double alpha);

// L_mono over per-ray chains sorted ascending by t: per-ray mean of
// (1 - tanh(alpha (f_m - f_{m+1}))), then mean over rays. Chains shorter than
// two points contribute nothing; all-short input is an error.
double loss_mono(const std::vector<std::vector<double>>& ray_values, double alpha);

// L_eik: mean (||grad|| - 1)^2 over surface-point spatial gradients.
double loss_eikonal(const std::vector<Eigen::Vector3d>& gradients);

// L_surf + lambda_eik L_eik + lambda_sign L_sign + lambda_mono L_mono.
double total_loss(const LossParts& parts, const LossWeights& weights);

struct AdamWConfig {
    double lr = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-15;
    double weight_decay = 1e-7;
    std::vector<std::uint64_t> milestones{10000, 50000};
    double decay_factor = 0.1;
};

// base_lr * decay^(milestones passed); a milestone counts once iteration > m.
double effective_lr(const AdamWConfig& cfg, std::uint64_t iteration);

struct AdamTensorState {
    Eigen::MatrixXd m, v;
    void init(Eigen::Index rows, Eigen::Index cols) {
        m = Eigen::MatrixXd::Zero(rows, cols);
        v = Eigen::MatrixXd::Zero(rows, cols);
    }
};

// One AdamW update with bias correction and decoupled weight decay.
void adamw_step(Eigen::MatrixXd& param, const Eigen::MatrixXd& grad, AdamTensorState& state,
                std::uint64_t step, const AdamWConfig& cfg, double lr);
void adamw_step(Eigen::VectorXd& param, const Eigen::VectorXd& grad, AdamTensorState& state,
                std::uint64_t step, const AdamWConfig& cfg, double lr);

// Row-sparse variant: only the listed rows are updated (touched latents).
void adamw_step_rows(Eigen::MatrixXd& param, const Eigen::MatrixXd& grad, AdamTensorState& state,
                     const std::vector<std::size_t>& rows, std::uint64_t step,
                     const AdamWConfig& cfg, double lr);

struct OptState {
    AdamWConfig config;
    std::uint64_t step = 0;
    // decoder tensors per layer
    std::vector<AdamTensorState> sV, sg, sb;
    // octree features per level
    std::vector<AdamTensorState> slat;

    static OptState init(const FieldModel& model, const AdamWConfig& cfg);
    void save(BinWriter& w) const;
    static OptState load(BinReader& r, const FieldModel& model);
};

// Accumulated gradients for everything the optimizer touches.
struct ModelGrads {
    DecoderGrads decoder;                          // dW/db form
    std::vector<Eigen::MatrixXd> latents;          // per level
    std::vector<std::vector<std::size_t>> touched; // per level, sorted unique rows

    explicit ModelGrads(const FieldModel& model);
    void set_zero();
    void finalize_touched();
};

// Forward + all four losses + full backward over one batch of rays. Chains
// include the raw reading merged at its t position. Returns unweighted parts;
// gradients are of the weighted total.
LossParts compute_loss_and_grads(const FieldModel& model,
                                 const std::vector<const RaySamples*>& batch,
                                 const LossWeights& weights, ModelGrads& grads);

// Value-only variant (finite-difference oracles).
LossParts compute_loss(const FieldModel& model, const std::vector<const RaySamples*>& batch,
                       const LossWeights& weights);

struct TrainConfig {
    int batch_rays = 32;
    std::uint64_t iterations = 5000;
    LossWeights weights;
    AdamWConfig adamw;
    std::uint64_t seed = 1;
    std::uint64_t checkpoint_every = 0;   // 0 = no periodic checkpoints
    std::string checkpoint_dir;           // used when checkpoint_every > 0
    std::uint64_t config_hash = 0;        // embedded in emitted checkpoints
    std::uint64_t log_every = 500;        // stderr progress cadence; 0 = quiet
};

struct TrainRecord {
    std::uint64_t iteration;
    LossParts parts;
    double total;
    double lr;
};

struct TrainHistory {
    std::vector<TrainRecord> records;
    void save_csv(const std::string& path, std::uint64_t config_hash = 0) const;
};

TrainHistory train(FieldModel& model, const TrainingSet& tset, const TrainConfig& cfg,
                   OptState* final_opt = nullptr);

// Fraction of rays whose merged chain of field values is non-increasing
// within tol (MIF condition (c) on held-out chains).
double monotone_chain_fraction(const FieldModel& model, const TrainingSet& tset,
                               double tol = 1e-9);

struct Checkpoint {
    FieldModel model;
    OptState opt;
    bool has_opt = false;
    std::uint64_t config_hash = 0;
};

void save_checkpoint(const std::string& path, const FieldModel& model, const OptState* opt,
                     std::uint64_t config_hash);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace mif
