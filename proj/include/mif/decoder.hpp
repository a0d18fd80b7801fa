#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "mif/geometry.hpp"
#include "mif/latent_octree.hpp"
#include "mif/rng.hpp"

namespace mif {

class BinWriter;
class BinReader;

// tanh(alpha * x); the one soft-sign nonlinearity shared by the sign and
// monotonicity losses.
inline double sigmoid_alpha(double x, double alpha) { return std::tanh(alpha * x); }
inline double sigmoid_alpha_deriv(double x, double alpha) {
    double t = std::tanh(alpha * x);
    return alpha * (1.0 - t * t);
}

struct PosEncConfig {
    int num_frequencies = 10;  // sin/cos pairs per axis
    bool include_raw = true;

    int width() const { return 3 * ((include_raw ? 1 : 0) + 2 * num_frequencies); }
};

// NeRF-style encoding of a point whose coordinates are first mapped to [-1,1]
// by the scene bounds. Layout per axis: [raw] sin(2^0 pi x) cos(2^0 pi x) ...
void positional_encode(const Point3& p, const PosEncConfig& cfg, const Aabb& bounds,
                       double* out);
Eigen::VectorXd positional_encode(const Point3& p, const PosEncConfig& cfg, const Aabb& bounds);

// d(encoding)/d(p), width x 3.
void positional_encode_jacobian(const Point3& p, const PosEncConfig& cfg, const Aabb& bounds,
                                Eigen::MatrixXd& jac);

// Weight-normalized affine layer: W = diag(g) * V / ||V_row||. The normalized
// weights are cached and must be refreshed after any update to V or g.
struct WnLayer {
    Eigen::MatrixXd V;  // direction, rows x cols
    Eigen::VectorXd g;  // per-row gain
    Eigen::VectorXd b;
    Eigen::MatrixXd W;  // cached g * V / ||V||

    void refresh();
};

struct DecoderParams {
    std::vector<WnLayer> layers;  // hidden layers with ReLU, then linear output

    int input_width() const { return int(layers.front().V.cols()); }
    int hidden_width() const { return int(layers.front().V.rows()); }
    int num_weight_layers() const { return int(layers.size()); }

    // V rows uniform in +-1/sqrt(fan_in), g set to the initial row norms (so
    // W = V at start), biases zero except a small positive output bias that
    // makes the untrained field read "outside" everywhere.
    static DecoderParams init(int input_width, int hidden_width, int num_hidden, Rng& rng,
                              double output_bias = 0.1);

    void refresh_weights();
    void save(BinWriter& w) const;
    static DecoderParams load(BinReader& r);
};

// Forward cache for a batch of points stored as columns.
struct DecoderTape {
    Eigen::MatrixXd input;                // in x N
    std::vector<Eigen::MatrixXd> pre;     // pre-activations per hidden layer
    std::vector<Eigen::MatrixXd> post;    // ReLU outputs per hidden layer
    Eigen::Index cols() const { return input.cols(); }
};

struct DecoderGrads {
    std::vector<Eigen::MatrixXd> dW;
    std::vector<Eigen::VectorXd> db;

    explicit DecoderGrads(const DecoderParams& params);
    void set_zero();
};

// Gradients w.r.t. the stored parameterization, derived from dW via the
// weight-norm chain rule.
struct DecoderParamGrads {
    std::vector<Eigen::MatrixXd> dV;
    std::vector<Eigen::VectorXd> dg;
    std::vector<Eigen::VectorXd> db;
};

Eigen::RowVectorXd decoder_forward(const DecoderParams& params, const Eigen::MatrixXd& input,
                                   DecoderTape& tape);

// Accumulates dW/db into grads; optionally emits d(loss)/d(input).
void decoder_backward(const DecoderParams& params, const DecoderTape& tape,
                      const Eigen::RowVectorXd& upstream, DecoderGrads& grads,
                      Eigen::MatrixXd* input_grads = nullptr);

// Per-column gradient of the scalar output w.r.t. the input vector, plus the
// masked backward deltas (reused by the eikonal second-order pass).
struct BackwardDeltas {
    std::vector<Eigen::MatrixXd> delta;  // one per hidden layer
};
Eigen::MatrixXd decoder_input_gradients(const DecoderParams& params, const DecoderTape& tape,
                                        BackwardDeltas* deltas = nullptr);

// Exact (a.e.) parameter gradient of sum_n seed_n^T grad_input(f_n) for a ReLU
// network with activation masks frozen from the tape. Column n of `seeds`
// carries any per-point scaling. Biases receive no gradient on this path.
void decoder_grad_input_param_grads(const DecoderParams& params, const DecoderTape& tape,
                                    const BackwardDeltas& deltas, const Eigen::MatrixXd& seeds,
                                    DecoderGrads& grads);

DecoderParamGrads weight_norm_chain(const DecoderParams& params, const DecoderGrads& grads);

// Decoder + latent octree + positional encoding; evaluable as f(x).
struct FieldModel {
    DecoderParams decoder;
    LatentOctree tree;
    PosEncConfig posenc;
    double alpha = 100.0;  // sigmoid flatness, shared by all soft-sign uses
    Aabb bounds;           // posenc normalization domain (preprocessed world bounds)

    int latent_dim() const { return tree.latent_dim(); }
    Eigen::VectorXd assemble_input(const Point3& p, InterpRecord& rec) const;
};

struct FieldTape {
    InterpRecord rec;
    DecoderTape dtape;  // batch of one
    Point3 point;
};

struct FieldGrads {
    DecoderParamGrads params;
    Eigen::VectorXd latent;  // d/d(aggregated latent); scatter via the record
    Eigen::Vector3d point;
};

double decode_forward(const FieldModel& model, const Point3& p, FieldTape& tape);
double decode_forward(const FieldModel& model, const Point3& p);

// Exact reverse-mode gradients; point gradient chains through both the
// positional encoding and the trilinear latent dependence.
FieldGrads decode_backward(const FieldModel& model, const FieldTape& tape, double upstream);

// Spatial gradient of the full field at p (posenc + latent chains).
Eigen::Vector3d field_spatial_gradient(const FieldModel& model, const FieldTape& tape);

}  // namespace mif
