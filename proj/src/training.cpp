#include "mif/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "mif/binio.hpp"

namespace mif {

double loss_surface(const std::vector<double>& values) {
    if (values.empty()) throw std::invalid_argument("empty-input: loss_surface");
    double sum = 0.0;
    for (double v : values) sum += std::abs(v);
    return sum / double(values.size());
}

double loss_sign(const std::vector<double>& values, const std::vector<double>& residuals,
                 double alpha) {
    if (values.size() != residuals.size())
        throw std::invalid_argument("length-mismatch: loss_sign");
    if (values.empty()) throw std::invalid_argument("empty-input: loss_sign");
    double sum = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i)
        sum += 1.0 - sigmoid_alpha(values[i], alpha) * sigmoid_alpha(residuals[i], alpha);
    return sum / double(values.size());
}

double loss_mono(const std::vector<std::vector<double>>& ray_values, double alpha) {
    double sum = 0.0;
    std::size_t rays = 0;
    for (const auto& chain : ray_values) {
        if (chain.size() < 2) continue;
        double ray_sum = 0.0;
        for (std::size_t m = 0; m + 1 < chain.size(); ++m)
            ray_sum += 1.0 - sigmoid_alpha(chain[m] - chain[m + 1], alpha);
        sum += ray_sum / double(chain.size() - 1);
        ++rays;
    }
    if (rays == 0) throw std::invalid_argument("ray-too-short: no chain has two samples");
    return sum / double(rays);
}

double loss_eikonal(const std::vector<Eigen::Vector3d>& gradients) {
    if (gradients.empty()) throw std::invalid_argument("empty-input: loss_eikonal");
    double sum = 0.0;
    for (const auto& g : gradients) {
        double d = g.norm() - 1.0;
        sum += d * d;
    }
    return sum / double(gradients.size());
}

double total_loss(const LossParts& parts, const LossWeights& weights) {
    double total = weights.lambda_surf * parts.surface + weights.lambda_eik * parts.eikonal +
                   weights.lambda_sign * parts.sign + weights.lambda_mono * parts.mono;
    if (!std::isfinite(total))
        throw std::runtime_error("non-finite-loss: surf=" + std::to_string(parts.surface) +
                                 " sign=" + std::to_string(parts.sign) +
                                 " mono=" + std::to_string(parts.mono) +
                                 " eik=" + std::to_string(parts.eikonal));
    return total;
}

double effective_lr(const AdamWConfig& cfg, std::uint64_t iteration) {
    double lr = cfg.lr;
    for (auto m : cfg.milestones)
        if (iteration > m) lr *= cfg.decay_factor;
    return lr;
}

namespace {
void adamw_step_impl(Eigen::Map<Eigen::MatrixXd> param,
                     Eigen::Map<const Eigen::MatrixXd> grad, AdamTensorState& state,
                     std::uint64_t step, const AdamWConfig& cfg, double lr) {
    if (!grad.allFinite()) throw std::runtime_error("non-finite-gradient");
    const double bc1 = 1.0 - std::pow(cfg.beta1, double(step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, double(step));
    state.m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * grad;
    state.v = cfg.beta2 * state.v.array().matrix() +
              (1.0 - cfg.beta2) * grad.array().square().matrix();
    param.array() -=
        lr * ((state.m.array() / bc1) / ((state.v.array() / bc2).sqrt() + cfg.eps) +
              cfg.weight_decay * param.array());
}
}  // namespace

void adamw_step(Eigen::MatrixXd& param, const Eigen::MatrixXd& grad, AdamTensorState& state,
                std::uint64_t step, const AdamWConfig& cfg, double lr) {
    adamw_step_impl(Eigen::Map<Eigen::MatrixXd>(param.data(), param.rows(), param.cols()),
                    Eigen::Map<const Eigen::MatrixXd>(grad.data(), grad.rows(), grad.cols()),
                    state, step, cfg, lr);
}

void adamw_step(Eigen::VectorXd& param, const Eigen::VectorXd& grad, AdamTensorState& state,
                std::uint64_t step, const AdamWConfig& cfg, double lr) {
    adamw_step_impl(Eigen::Map<Eigen::MatrixXd>(param.data(), param.size(), 1),
                    Eigen::Map<const Eigen::MatrixXd>(grad.data(), grad.size(), 1), state, step,
                    cfg, lr);
}

void adamw_step_rows(Eigen::MatrixXd& param, const Eigen::MatrixXd& grad, AdamTensorState& state,
                     const std::vector<std::size_t>& rows, std::uint64_t step,
                     const AdamWConfig& cfg, double lr) {
    const double bc1 = 1.0 - std::pow(cfg.beta1, double(step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, double(step));
    for (std::size_t r : rows) {
        auto i = Eigen::Index(r);
        if (!grad.row(i).allFinite()) throw std::runtime_error("non-finite-gradient: latent row");
        state.m.row(i) = cfg.beta1 * state.m.row(i) + (1.0 - cfg.beta1) * grad.row(i);
        state.v.row(i) = cfg.beta2 * state.v.row(i).array().matrix() +
                         (1.0 - cfg.beta2) * grad.row(i).array().square().matrix();
        param.row(i).array() -=
            lr * ((state.m.row(i).array() / bc1) / ((state.v.row(i).array() / bc2).sqrt() +
                                                    cfg.eps) +
                  cfg.weight_decay * param.row(i).array());
    }
}

OptState OptState::init(const FieldModel& model, const AdamWConfig& cfg) {
    OptState s;
    s.config = cfg;
    for (const auto& layer : model.decoder.layers) {
        AdamTensorState tv, tg, tb;
        tv.init(layer.V.rows(), layer.V.cols());
        tg.init(layer.g.size(), 1);
        tb.init(layer.b.size(), 1);
        s.sV.push_back(std::move(tv));
        s.sg.push_back(std::move(tg));
        s.sb.push_back(std::move(tb));
    }
    for (int l = 0; l < model.tree.num_levels(); ++l) {
        AdamTensorState t;
        t.init(model.tree.features(l).rows(), model.tree.features(l).cols());
        s.slat.push_back(std::move(t));
    }
    return s;
}

ModelGrads::ModelGrads(const FieldModel& model) : decoder(model.decoder) {
    for (int l = 0; l < model.tree.num_levels(); ++l) {
        latents.emplace_back(
            Eigen::MatrixXd::Zero(model.tree.features(l).rows(), model.tree.latent_dim()));
        touched.emplace_back();
    }
}

void ModelGrads::set_zero() {
    decoder.set_zero();
    for (std::size_t l = 0; l < latents.size(); ++l) {
        // Only previously-touched rows can be nonzero.
        for (std::size_t r : touched[l]) latents[l].row(Eigen::Index(r)).setZero();
        touched[l].clear();
    }
}

void ModelGrads::finalize_touched() {
    for (auto& rows : touched) {
        std::sort(rows.begin(), rows.end());
        rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
    }
}

namespace {

struct BatchLayout {
    Eigen::MatrixXd input;                 // in x N
    std::vector<InterpRecord> recs;        // per column
    std::vector<Point3> points;            // per column
    std::vector<double> residuals;         // per column (0 at readings)
    std::vector<std::uint8_t> is_surface;  // per column
    std::vector<std::size_t> ray_start;    // chain offsets
    std::vector<std::size_t> ray_count;
    std::vector<std::size_t> surface_cols;
};

void assemble_batch(const FieldModel& model, const std::vector<const RaySamples*>& batch,
                    BatchLayout& lay) {
    std::size_t total = 0;
    for (const auto* rs : batch) total += rs->samples.size() + 1;

    const int in_w = model.posenc.width() + model.tree.latent_dim();
    lay.input.resize(in_w, Eigen::Index(total));
    lay.recs.resize(total);
    lay.points.resize(total);
    lay.residuals.resize(total);
    lay.is_surface.assign(total, 0);
    lay.ray_start.clear();
    lay.ray_count.clear();
    lay.surface_cols.clear();

    std::size_t col = 0;
    for (const auto* rs : batch) {
        lay.ray_start.push_back(col);
        std::size_t surf_at = rs->surface_chain_index();
        std::size_t chain_len = rs->samples.size() + 1;
        lay.ray_count.push_back(chain_len);
        for (std::size_t m = 0; m < chain_len; ++m) {
            bool surface = (m == surf_at);
            const Point3 p =
                surface ? rs->surface_point : rs->samples[m < surf_at ? m : m - 1].point;
            lay.points[col] = p;
            lay.residuals[col] = surface ? 0.0 : rs->samples[m < surf_at ? m : m - 1].r;
            lay.is_surface[col] = surface ? 1 : 0;
            if (surface) lay.surface_cols.push_back(col);
            lay.input.col(Eigen::Index(col)) = model.assemble_input(p, lay.recs[col]);
            ++col;
        }
    }
}

struct EikonalEval {
    double loss = 0.0;
    std::vector<Eigen::Vector3d> gradients;   // per surface point
    std::vector<Eigen::MatrixXd> enc_jacs;    // per surface point
    Eigen::MatrixXd input_grads;              // in x B
    DecoderTape tape;
    BackwardDeltas deltas;
};

// Spatial gradients at the surface columns; needs its own tape restricted to
// those columns so the eikonal second-order pass has matching masks.
void eval_eikonal(const FieldModel& model, const BatchLayout& lay, bool want_backward,
                  EikonalEval& out) {
    const std::size_t B = lay.surface_cols.size();
    const int enc_w = model.posenc.width();
    const int d = model.tree.latent_dim();

    Eigen::MatrixXd x_surf(lay.input.rows(), Eigen::Index(B));
    for (std::size_t i = 0; i < B; ++i)
        x_surf.col(Eigen::Index(i)) = lay.input.col(Eigen::Index(lay.surface_cols[i]));

    decoder_forward(model.decoder, x_surf, out.tape);
    out.input_grads =
        decoder_input_gradients(model.decoder, out.tape, want_backward ? &out.deltas : nullptr);

    out.gradients.resize(B);
    out.enc_jacs.resize(B);
    for (std::size_t i = 0; i < B; ++i) {
        std::size_t col = lay.surface_cols[i];
        positional_encode_jacobian(lay.points[col], model.posenc, model.bounds, out.enc_jacs[i]);
        Eigen::VectorXd u = out.input_grads.col(Eigen::Index(i));
        Eigen::Vector3d g = out.enc_jacs[i].transpose() * u.head(enc_w);
        g += model.tree.spatial_jacobian(lay.recs[col]) * Eigen::VectorXd(u.tail(d));
        out.gradients[i] = g;
    }
    out.loss = loss_eikonal(out.gradients);
}

LossParts batch_losses(const FieldModel& model, const std::vector<const RaySamples*>& batch,
                       const LossWeights& weights, BatchLayout& lay,
                       Eigen::RowVectorXd& values_out, DecoderTape& tape,
                       Eigen::RowVectorXd* upstream_out) {
    if (batch.empty()) throw std::invalid_argument("empty-input: batch has no rays");
    assemble_batch(model, batch, lay);
    values_out = decoder_forward(model.decoder, lay.input, tape);

    const std::size_t N = std::size_t(values_out.cols());
    const double alpha = model.alpha;

    std::vector<double> surf_vals;
    std::vector<double> sign_vals, sign_res;
    std::vector<std::vector<double>> chains(batch.size());
    surf_vals.reserve(lay.surface_cols.size());
    sign_vals.reserve(N);
    sign_res.reserve(N);
    for (std::size_t ray = 0; ray < batch.size(); ++ray) {
        auto& chain = chains[ray];
        chain.resize(lay.ray_count[ray]);
        for (std::size_t m = 0; m < lay.ray_count[ray]; ++m) {
            std::size_t col = lay.ray_start[ray] + m;
            chain[m] = values_out(Eigen::Index(col));
            if (lay.is_surface[col]) {
                surf_vals.push_back(chain[m]);
            } else {
                sign_vals.push_back(chain[m]);
                sign_res.push_back(lay.residuals[col]);
            }
        }
    }

    LossParts parts;
    parts.surface = loss_surface(surf_vals);
    parts.sign = sign_vals.empty() ? 0.0 : loss_sign(sign_vals, sign_res, alpha);
    parts.mono = loss_mono(chains, alpha);

    if (upstream_out) {
        Eigen::RowVectorXd& up = *upstream_out;
        up = Eigen::RowVectorXd::Zero(Eigen::Index(N));

        const double n_surf = double(surf_vals.size());
        const double n_sign = double(sign_vals.size());
        std::size_t chains_used = 0;
        for (const auto& chain : chains)
            if (chain.size() >= 2) ++chains_used;

        for (std::size_t ray = 0; ray < batch.size(); ++ray) {
            std::size_t start = lay.ray_start[ray];
            std::size_t count = lay.ray_count[ray];
            for (std::size_t m = 0; m < count; ++m) {
                std::size_t col = start + m;
                double f = values_out(Eigen::Index(col));
                if (lay.is_surface[col]) {
                    double s = f > 0.0 ? 1.0 : (f < 0.0 ? -1.0 : 0.0);
                    up(Eigen::Index(col)) += weights.lambda_surf * s / n_surf;
                } else {
                    // d/df (1 - tanh(af) tanh(ar)) = -a (1-tanh^2(af)) tanh(ar)
                    up(Eigen::Index(col)) += weights.lambda_sign *
                                             (-sigmoid_alpha_deriv(f, alpha) *
                                              sigmoid_alpha(lay.residuals[col], alpha)) /
                                             n_sign;
                }
            }
            if (count >= 2) {
                double pair_scale =
                    weights.lambda_mono / (double(count - 1) * double(chains_used));
                for (std::size_t m = 0; m + 1 < count; ++m) {
                    double delta = values_out(Eigen::Index(start + m)) -
                                   values_out(Eigen::Index(start + m + 1));
                    double dterm = -sigmoid_alpha_deriv(delta, alpha) * pair_scale;
                    up(Eigen::Index(start + m)) += dterm;
                    up(Eigen::Index(start + m + 1)) -= dterm;
                }
            }
        }
    }
    return parts;
}

}  // namespace

LossParts compute_loss_and_grads(const FieldModel& model,
                                 const std::vector<const RaySamples*>& batch,
                                 const LossWeights& weights, ModelGrads& grads) {
    BatchLayout lay;
    Eigen::RowVectorXd values;
    DecoderTape tape;
    Eigen::RowVectorXd upstream;
    LossParts parts = batch_losses(model, batch, weights, lay, values, tape, &upstream);

    Eigen::MatrixXd input_grads;
    decoder_backward(model.decoder, tape, upstream, grads.decoder, &input_grads);

    const int d = model.tree.latent_dim();
    for (std::size_t col = 0; col < lay.recs.size(); ++col) {
        Eigen::VectorXd g_lat = input_grads.col(Eigen::Index(col)).tail(d);
        model.tree.accumulate_grads(lay.recs[col], g_lat, grads.latents);
        const auto& levels = lay.recs[col].levels;
        for (std::size_t lvl = 0; lvl < levels.size(); ++lvl)
            for (std::size_t c = 0; c < 8; ++c)
                if (levels[lvl].corner[c] != InterpRecord::kMissing)
                    grads.touched[lvl].push_back(levels[lvl].corner[c]);
    }

    // Eikonal term: value plus exact second-order parameter/latent gradients
    // under frozen ReLU masks.
    EikonalEval eik;
    eval_eikonal(model, lay, true, eik);
    parts.eikonal = eik.loss;

    const std::size_t B = lay.surface_cols.size();
    const int enc_w = model.posenc.width();
    Eigen::MatrixXd seeds = Eigen::MatrixXd::Zero(lay.input.rows(), Eigen::Index(B));
    for (std::size_t i = 0; i < B; ++i) {
        const Eigen::Vector3d& g = eik.gradients[i];
        double n = g.norm();
        if (n < 1e-12) continue;
        Eigen::Vector3d c = weights.lambda_eik * (2.0 * (n - 1.0) / (n * double(B))) * g;
        std::size_t col = lay.surface_cols[i];
        seeds.col(Eigen::Index(i)).head(enc_w) = eik.enc_jacs[i] * c;
        seeds.col(Eigen::Index(i)).tail(d) =
            model.tree.spatial_jacobian(lay.recs[col]).transpose() * c;
        // latent dependence through the Jacobian itself
        Eigen::VectorXd u_z = eik.input_grads.col(Eigen::Index(i)).tail(d);
        model.tree.accumulate_spatial_grads(lay.recs[col], c, u_z, grads.latents);
    }
    decoder_grad_input_param_grads(model.decoder, eik.tape, eik.deltas, seeds, grads.decoder);

    grads.finalize_touched();
    return parts;
}

LossParts compute_loss(const FieldModel& model, const std::vector<const RaySamples*>& batch,
                       const LossWeights& weights) {
    BatchLayout lay;
    Eigen::RowVectorXd values;
    DecoderTape tape;
    LossParts parts = batch_losses(model, batch, weights, lay, values, tape, nullptr);
    EikonalEval eik;
    eval_eikonal(model, lay, false, eik);
    parts.eikonal = eik.loss;
    return parts;
}

TrainHistory train(FieldModel& model, const TrainingSet& tset, const TrainConfig& cfg,
                   OptState* final_opt) {
    if (cfg.iterations < 1) throw std::invalid_argument("iterations >= 1 required");
    if (cfg.batch_rays < 1) throw std::invalid_argument("batch_rays >= 1 required");
    if (tset.rays.empty()) throw std::invalid_argument("empty-scanset: no training rays");

    OptState opt = OptState::init(model, cfg.adamw);
    ModelGrads grads(model);
    TrainHistory history;
    history.records.reserve(cfg.iterations);
    Rng batch_rng(derive_seed(cfg.seed, 0x42617463ull));  // batch stream

    std::vector<const RaySamples*> batch(std::size_t(cfg.batch_rays));
    for (std::uint64_t iter = 1; iter <= cfg.iterations; ++iter) {
        for (auto& slot : batch)
            slot = &tset.rays[std::size_t(batch_rng.uniform_index(tset.rays.size()))];

        grads.set_zero();
        LossParts parts;
        try {
            parts = compute_loss_and_grads(model, batch, cfg.weights, grads);
        } catch (const std::runtime_error& e) {
            throw std::runtime_error(std::string(e.what()) + " at iteration " +
                                     std::to_string(iter));
        }
        double total = total_loss(parts, cfg.weights);
        double lr = effective_lr(cfg.adamw, iter);

        opt.step += 1;
        DecoderParamGrads pg = weight_norm_chain(model.decoder, grads.decoder);
        for (std::size_t l = 0; l < model.decoder.layers.size(); ++l) {
            auto& layer = model.decoder.layers[l];
            adamw_step(layer.V, pg.dV[l], opt.sV[l], opt.step, cfg.adamw, lr);
            adamw_step(layer.g, pg.dg[l], opt.sg[l], opt.step, cfg.adamw, lr);
            adamw_step(layer.b, pg.db[l], opt.sb[l], opt.step, cfg.adamw, lr);
        }
        for (int lvl = 0; lvl < model.tree.num_levels(); ++lvl)
            adamw_step_rows(model.tree.features(lvl), grads.latents[std::size_t(lvl)],
                            opt.slat[std::size_t(lvl)], grads.touched[std::size_t(lvl)],
                            opt.step, cfg.adamw, lr);
        model.decoder.refresh_weights();

        history.records.push_back({iter, parts, total, lr});
        if (cfg.log_every > 0 && (iter % cfg.log_every == 0 || iter == 1))
            std::fprintf(stderr, "[train] iter %llu total %.6f surf %.6f sign %.6f mono %.6f eik %.6f\n",
                         (unsigned long long)iter, total, parts.surface, parts.sign, parts.mono,
                         parts.eikonal);

        if (cfg.checkpoint_every > 0 && !cfg.checkpoint_dir.empty() &&
            iter % cfg.checkpoint_every == 0 && iter != cfg.iterations) {
            save_checkpoint(cfg.checkpoint_dir + "/checkpoint_" + std::to_string(iter) + ".mifckpt",
                            model, &opt, cfg.config_hash);
        }
    }
    if (final_opt) *final_opt = std::move(opt);
    return history;
}

double monotone_chain_fraction(const FieldModel& model, const TrainingSet& tset, double tol) {
    if (tset.rays.empty()) throw std::invalid_argument("empty-scanset");
    std::size_t monotone = 0;
    BatchLayout lay;
    DecoderTape tape;
    for (const auto& rs : tset.rays) {
        std::vector<const RaySamples*> one{&rs};
        assemble_batch(model, one, lay);
        Eigen::RowVectorXd values = decoder_forward(model.decoder, lay.input, tape);
        bool ok = true;
        for (Eigen::Index m = 0; m + 1 < values.cols(); ++m)
            if (values(m + 1) > values(m) + tol) {
                ok = false;
                break;
            }
        if (ok) ++monotone;
    }
    return double(monotone) / double(tset.rays.size());
}

void TrainHistory::save_csv(const std::string& path, std::uint64_t config_hash) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("io-error: cannot write " + path);
    char hash[40];
    std::snprintf(hash, sizeof(hash), "# config %016llx\n", (unsigned long long)config_hash);
    out << hash;
    out << "iteration,L_surf,L_sign,L_mono,L_eik,total,lr\n";
    char buf[256];
    for (const auto& rec : records) {
        std::snprintf(buf, sizeof(buf), "%llu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                      (unsigned long long)rec.iteration, rec.parts.surface, rec.parts.sign,
                      rec.parts.mono, rec.parts.eikonal, rec.total, rec.lr);
        out << buf;
    }
}

void OptState::save(BinWriter& w) const {
    w.write_magic("MIFOPT1");
    w.write<double>(config.lr);
    w.write<double>(config.beta1);
    w.write<double>(config.beta2);
    w.write<double>(config.eps);
    w.write<double>(config.weight_decay);
    w.write<double>(config.decay_factor);
    w.write<std::uint32_t>(std::uint32_t(config.milestones.size()));
    for (auto m : config.milestones) w.write<std::uint64_t>(m);
    w.write<std::uint64_t>(step);
    auto write_state = [&](const AdamTensorState& s) {
        w.write<std::uint64_t>(std::uint64_t(s.m.rows()));
        w.write<std::uint64_t>(std::uint64_t(s.m.cols()));
        w.write_f64_array(s.m.data(), std::size_t(s.m.size()));
        w.write_f64_array(s.v.data(), std::size_t(s.v.size()));
    };
    w.write<std::uint32_t>(std::uint32_t(sV.size()));
    for (std::size_t l = 0; l < sV.size(); ++l) {
        write_state(sV[l]);
        write_state(sg[l]);
        write_state(sb[l]);
    }
    w.write<std::uint32_t>(std::uint32_t(slat.size()));
    for (const auto& s : slat) write_state(s);
}

OptState OptState::load(BinReader& r, const FieldModel&) {
    r.expect_magic("MIFOPT1", "optimizer state");
    OptState s;
    s.config.lr = r.read<double>();
    s.config.beta1 = r.read<double>();
    s.config.beta2 = r.read<double>();
    s.config.eps = r.read<double>();
    s.config.weight_decay = r.read<double>();
    s.config.decay_factor = r.read<double>();
    auto mcount = r.read<std::uint32_t>();
    s.config.milestones.resize(mcount);
    for (auto& m : s.config.milestones) m = r.read<std::uint64_t>();
    s.step = r.read<std::uint64_t>();
    auto read_state = [&]() {
        AdamTensorState st;
        auto rows = r.read<std::uint64_t>();
        auto cols = r.read<std::uint64_t>();
        st.m.resize(Eigen::Index(rows), Eigen::Index(cols));
        st.v.resize(Eigen::Index(rows), Eigen::Index(cols));
        r.read_f64_array(st.m.data(), std::size_t(st.m.size()));
        r.read_f64_array(st.v.data(), std::size_t(st.v.size()));
        return st;
    };
    auto layers = r.read<std::uint32_t>();
    for (std::uint32_t l = 0; l < layers; ++l) {
        s.sV.push_back(read_state());
        s.sg.push_back(read_state());
        s.sb.push_back(read_state());
    }
    auto levels = r.read<std::uint32_t>();
    for (std::uint32_t l = 0; l < levels; ++l) s.slat.push_back(read_state());
    return s;
}

void save_checkpoint(const std::string& path, const FieldModel& model, const OptState* opt,
                     std::uint64_t config_hash) {
    BinWriter w(path);
    w.write_magic("MIFCKP1");
    w.write<std::uint32_t>(1);  // version
    w.write<std::uint64_t>(config_hash);
    w.write<std::uint8_t>(opt ? 1 : 0);
    model.tree.save(w);
    model.decoder.save(w);
    w.write<std::uint32_t>(std::uint32_t(model.posenc.num_frequencies));
    w.write<std::uint8_t>(model.posenc.include_raw ? 1 : 0);
    w.write<double>(model.alpha);
    w.write<double>(model.bounds.min.x);
    w.write<double>(model.bounds.min.y);
    w.write<double>(model.bounds.min.z);
    w.write<double>(model.bounds.max.x);
    w.write<double>(model.bounds.max.y);
    w.write<double>(model.bounds.max.z);
    if (opt) opt->save(w);
    w.close();
}

Checkpoint load_checkpoint(const std::string& path) {
    BinReader r(path);
    r.expect_magic("MIFCKP1", "checkpoint");
    auto version = r.read<std::uint32_t>();
    if (version != 1) throw std::runtime_error("format-error: unsupported checkpoint version");
    Checkpoint ck;
    ck.config_hash = r.read<std::uint64_t>();
    bool has_opt = r.read<std::uint8_t>() != 0;
    ck.model.tree = LatentOctree::load(r);
    ck.model.decoder = DecoderParams::load(r);
    ck.model.posenc.num_frequencies = int(r.read<std::uint32_t>());
    ck.model.posenc.include_raw = r.read<std::uint8_t>() != 0;
    ck.model.alpha = r.read<double>();
    ck.model.bounds.min = {r.read<double>(), r.read<double>(), r.read<double>()};
    ck.model.bounds.max = {r.read<double>(), r.read<double>(), r.read<double>()};
    if (has_opt) {
        ck.opt = OptState::load(r, ck.model);
        ck.has_opt = true;
    }
    return ck;
}

}  // namespace mif
