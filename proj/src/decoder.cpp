#include "mif/decoder.hpp"

#include <cmath>
#include <stdexcept>

#include "mif/binio.hpp"

namespace mif {

namespace {

// Normalized coordinate and its derivative: x_hat = 2(x - lo)/(hi - lo) - 1.
inline void normalize_axis(double x, double lo, double hi, double& xn, double& dxn) {
    double ext = hi - lo;
    if (ext < 1e-12) ext = 1e-12;
    xn = 2.0 * (x - lo) / ext - 1.0;
    dxn = 2.0 / ext;
}

}  // namespace

void positional_encode(const Point3& p, const PosEncConfig& cfg, const Aabb& bounds,
                       double* out) {
    int o = 0;
    for (int axis = 0; axis < 3; ++axis) {
        double xn, dxn;
        normalize_axis(p[axis], bounds.min[axis], bounds.max[axis], xn, dxn);
        if (cfg.include_raw) out[o++] = xn;
        double freq = M_PI;
        for (int k = 0; k < cfg.num_frequencies; ++k) {
            out[o++] = std::sin(freq * xn);
            out[o++] = std::cos(freq * xn);
            freq *= 2.0;
        }
    }
}

Eigen::VectorXd positional_encode(const Point3& p, const PosEncConfig& cfg, const Aabb& bounds) {
    Eigen::VectorXd out(cfg.width());
    positional_encode(p, cfg, bounds, out.data());
    return out;
}

void positional_encode_jacobian(const Point3& p, const PosEncConfig& cfg, const Aabb& bounds,
                                Eigen::MatrixXd& jac) {
    jac.setZero(cfg.width(), 3);
    int o = 0;
    for (int axis = 0; axis < 3; ++axis) {
        double xn, dxn;
        normalize_axis(p[axis], bounds.min[axis], bounds.max[axis], xn, dxn);
        if (cfg.include_raw) jac(o++, axis) = dxn;
        double freq = M_PI;
        for (int k = 0; k < cfg.num_frequencies; ++k) {
            jac(o++, axis) = freq * std::cos(freq * xn) * dxn;
            jac(o++, axis) = -freq * std::sin(freq * xn) * dxn;
            freq *= 2.0;
        }
    }
}

void WnLayer::refresh() {
    W.resize(V.rows(), V.cols());
    for (Eigen::Index i = 0; i < V.rows(); ++i) {
        double n = V.row(i).norm();
        if (n < 1e-12) throw std::runtime_error("non-finite-parameters: V row norm underflow");
        W.row(i) = (g(i) / n) * V.row(i);
    }
}

DecoderParams DecoderParams::init(int input_width, int hidden_width, int num_hidden, Rng& rng,
                                  double output_bias) {
    if (num_hidden < 1) throw std::invalid_argument("decoder needs at least one hidden layer");
    DecoderParams params;
    int in = input_width;
    for (int l = 0; l < num_hidden + 1; ++l) {
        int out = (l == num_hidden) ? 1 : hidden_width;
        WnLayer layer;
        layer.V.resize(out, in);
        double scale = 1.0 / std::sqrt(double(in));
        for (Eigen::Index i = 0; i < layer.V.rows(); ++i)
            for (Eigen::Index j = 0; j < layer.V.cols(); ++j)
                layer.V(i, j) = rng.uniform(-scale, scale);
        layer.g.resize(out);
        for (Eigen::Index i = 0; i < out; ++i) layer.g(i) = layer.V.row(i).norm();
        layer.b = Eigen::VectorXd::Zero(out);
        if (l == num_hidden) layer.b(0) = output_bias;
        params.layers.push_back(std::move(layer));
        in = out;
    }
    params.refresh_weights();
    return params;
}

void DecoderParams::refresh_weights() {
    for (auto& layer : layers) layer.refresh();
}

DecoderGrads::DecoderGrads(const DecoderParams& params) {
    dW.reserve(params.layers.size());
    db.reserve(params.layers.size());
    for (const auto& layer : params.layers) {
        dW.emplace_back(Eigen::MatrixXd::Zero(layer.V.rows(), layer.V.cols()));
        db.emplace_back(Eigen::VectorXd::Zero(layer.V.rows()));
    }
}

void DecoderGrads::set_zero() {
    for (auto& m : dW) m.setZero();
    for (auto& v : db) v.setZero();
}

Eigen::RowVectorXd decoder_forward(const DecoderParams& params, const Eigen::MatrixXd& input,
                                   DecoderTape& tape) {
    const std::size_t num_hidden = params.layers.size() - 1;
    tape.input = input;
    tape.pre.resize(num_hidden);
    tape.post.resize(num_hidden);

    const Eigen::MatrixXd* x = &tape.input;
    for (std::size_t l = 0; l < num_hidden; ++l) {
        const auto& layer = params.layers[l];
        tape.pre[l].noalias() = layer.W * (*x);
        tape.pre[l].colwise() += layer.b;
        tape.post[l] = tape.pre[l].cwiseMax(0.0);
        x = &tape.post[l];
    }
    const auto& out = params.layers.back();
    Eigen::RowVectorXd y = out.W * (*x);
    y.array() += out.b(0);
    return y;
}

void decoder_backward(const DecoderParams& params, const DecoderTape& tape,
                      const Eigen::RowVectorXd& upstream, DecoderGrads& grads,
                      Eigen::MatrixXd* input_grads) {
    const std::size_t num_hidden = params.layers.size() - 1;
    const std::size_t out_l = num_hidden;

    const Eigen::MatrixXd& last_h = num_hidden > 0 ? tape.post[num_hidden - 1] : tape.input;
    grads.dW[out_l].noalias() += upstream * last_h.transpose();
    grads.db[out_l](0) += upstream.sum();

    // G carries d(loss)/d(pre-activation) while walking back.
    Eigen::MatrixXd G = params.layers[out_l].W.transpose() * upstream;
    for (std::size_t l = num_hidden; l-- > 0;) {
        G = (tape.pre[l].array() > 0.0).select(G, 0.0);
        const Eigen::MatrixXd& below = l > 0 ? tape.post[l - 1] : tape.input;
        grads.dW[l].noalias() += G * below.transpose();
        grads.db[l].noalias() += G.rowwise().sum();
        if (l > 0 || input_grads) {
            Eigen::MatrixXd next = params.layers[l].W.transpose() * G;
            if (l == 0) {
                *input_grads = std::move(next);
            } else {
                G = std::move(next);
            }
        }
    }
}

Eigen::MatrixXd decoder_input_gradients(const DecoderParams& params, const DecoderTape& tape,
                                        BackwardDeltas* deltas) {
    const std::size_t num_hidden = params.layers.size() - 1;
    const Eigen::Index n = tape.cols();
    if (deltas) deltas->delta.resize(num_hidden);

    // Upstream is one for every column.
    Eigen::MatrixXd G = params.layers[num_hidden].W.transpose().replicate(1, n);
    for (std::size_t l = num_hidden; l-- > 0;) {
        G = (tape.pre[l].array() > 0.0).select(G, 0.0);
        if (deltas) deltas->delta[l] = G;
        G = params.layers[l].W.transpose() * G;
    }
    return G;  // in x N
}

void decoder_grad_input_param_grads(const DecoderParams& params, const DecoderTape& tape,
                                    const BackwardDeltas& deltas, const Eigen::MatrixXd& seeds,
                                    DecoderGrads& grads) {
    const std::size_t num_hidden = params.layers.size() - 1;

    // Forward JVP of the mask-frozen (piecewise-linear) network along `seeds`.
    // With phi_n = seed_n . grad_input(f_n):  d phi / dW_l = delta_l t_{l-1}^T,
    // where t are the JVP intermediates and delta the cached backward deltas.
    Eigen::MatrixXd t = seeds;
    for (std::size_t l = 0; l < num_hidden; ++l) {
        grads.dW[l].noalias() += deltas.delta[l] * t.transpose();
        Eigen::MatrixXd tn = params.layers[l].W * t;
        t = (tape.pre[l].array() > 0.0).select(tn, 0.0);
    }
    grads.dW[num_hidden].noalias() += t.rowwise().sum().transpose();
}

DecoderParamGrads weight_norm_chain(const DecoderParams& params, const DecoderGrads& grads) {
    DecoderParamGrads out;
    out.dV.reserve(params.layers.size());
    out.dg.reserve(params.layers.size());
    out.db = grads.db;
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        const auto& layer = params.layers[l];
        const auto& dW = grads.dW[l];
        Eigen::MatrixXd dV(layer.V.rows(), layer.V.cols());
        Eigen::VectorXd dg(layer.V.rows());
        for (Eigen::Index i = 0; i < layer.V.rows(); ++i) {
            double n = layer.V.row(i).norm();
            Eigen::RowVectorXd vhat = layer.V.row(i) / n;
            double along = dW.row(i).dot(vhat);
            dg(i) = along;
            dV.row(i) = (layer.g(i) / n) * (dW.row(i) - along * vhat);
        }
        out.dV.push_back(std::move(dV));
        out.dg.push_back(std::move(dg));
    }
    return out;
}

Eigen::VectorXd FieldModel::assemble_input(const Point3& p, InterpRecord& rec) const {
    Eigen::VectorXd input(posenc.width() + tree.latent_dim());
    positional_encode(p, posenc, bounds, input.data());
    input.tail(tree.latent_dim()) = tree.query(p, rec);
    return input;
}

double decode_forward(const FieldModel& model, const Point3& p, FieldTape& tape) {
    tape.point = p;
    Eigen::VectorXd input = model.assemble_input(p, tape.rec);
    Eigen::RowVectorXd y = decoder_forward(model.decoder, input, tape.dtape);
    return y(0);
}

double decode_forward(const FieldModel& model, const Point3& p) {
    FieldTape tape;
    return decode_forward(model, p, tape);
}

FieldGrads decode_backward(const FieldModel& model, const FieldTape& tape, double upstream) {
    FieldGrads out;
    DecoderGrads dgrads(model.decoder);
    Eigen::MatrixXd input_grads;
    Eigen::RowVectorXd up(1);
    up(0) = upstream;
    decoder_backward(model.decoder, tape.dtape, up, dgrads, &input_grads);
    out.params = weight_norm_chain(model.decoder, dgrads);

    const int enc_w = model.posenc.width();
    const int d = model.tree.latent_dim();
    out.latent = input_grads.col(0).tail(d);

    Eigen::MatrixXd enc_jac;
    positional_encode_jacobian(tape.point, model.posenc, model.bounds, enc_jac);
    Eigen::Vector3d pg = enc_jac.transpose() * input_grads.col(0).head(enc_w);
    pg += model.tree.spatial_jacobian(tape.rec) * out.latent;
    out.point = pg;
    return out;
}

Eigen::Vector3d field_spatial_gradient(const FieldModel& model, const FieldTape& tape) {
    Eigen::MatrixXd u = decoder_input_gradients(model.decoder, tape.dtape);
    const int enc_w = model.posenc.width();
    const int d = model.tree.latent_dim();

    Eigen::MatrixXd enc_jac;
    positional_encode_jacobian(tape.point, model.posenc, model.bounds, enc_jac);
    Eigen::Vector3d g = enc_jac.transpose() * u.col(0).head(enc_w);
    g += model.tree.spatial_jacobian(tape.rec) * Eigen::VectorXd(u.col(0).tail(d));
    return g;
}

void DecoderParams::save(BinWriter& w) const {
    w.write_magic("MIFDEC1");
    w.write<std::uint32_t>(std::uint32_t(layers.size()));
    for (const auto& layer : layers) {
        w.write<std::uint32_t>(std::uint32_t(layer.V.rows()));
        w.write<std::uint32_t>(std::uint32_t(layer.V.cols()));
        for (Eigen::Index i = 0; i < layer.V.rows(); ++i)
            for (Eigen::Index j = 0; j < layer.V.cols(); ++j) w.write<double>(layer.V(i, j));
        for (Eigen::Index i = 0; i < layer.g.size(); ++i) w.write<double>(layer.g(i));
        for (Eigen::Index i = 0; i < layer.b.size(); ++i) w.write<double>(layer.b(i));
    }
}

DecoderParams DecoderParams::load(BinReader& r) {
    r.expect_magic("MIFDEC1", "decoder");
    auto count = r.read<std::uint32_t>();
    DecoderParams params;
    for (std::uint32_t l = 0; l < count; ++l) {
        WnLayer layer;
        auto rows = r.read<std::uint32_t>();
        auto cols = r.read<std::uint32_t>();
        layer.V.resize(rows, cols);
        for (Eigen::Index i = 0; i < layer.V.rows(); ++i)
            for (Eigen::Index j = 0; j < layer.V.cols(); ++j) layer.V(i, j) = r.read<double>();
        layer.g.resize(rows);
        for (Eigen::Index i = 0; i < rows; ++i) layer.g(i) = r.read<double>();
        layer.b.resize(rows);
        for (Eigen::Index i = 0; i < rows; ++i) layer.b(i) = r.read<double>();
        params.layers.push_back(std::move(layer));
    }
    params.refresh_weights();
    return params;
}

}  // namespace mif
