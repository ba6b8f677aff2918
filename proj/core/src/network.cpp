#include "mobdemo/network.hpp"

#include "mobdemo/error.hpp"

#include <cmath>
#include <numeric>

namespace mobdemo {

namespace {

using ConstMap = Eigen::Map<const RowMatrix>;
using MutMap = Eigen::Map<RowMatrix>;
using ConstVec = Eigen::Map<const Eigen::RowVectorXd>;
using MutVec = Eigen::Map<Eigen::RowVectorXd>;

double uniform01(Rng &rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

} // namespace

NetworkShape multitask_shape(std::size_t input_dim, bool layer_norm, double dropout) {
    return {input_dim, {kMtHidden1, kMtHidden2}, {6, 3, 5, 4}, layer_norm, dropout};
}

NetworkShape single_task_shape(std::size_t input_dim, int classes, bool layer_norm, double dropout) {
    return {input_dim, {kStHidden1, kStHidden2}, {classes}, layer_norm, dropout};
}

std::size_t Network::add_tensor(std::string name, std::size_t rows, std::size_t cols) {
    std::size_t offset = params_.size();
    tensors_.push_back({std::move(name), offset, rows, cols});
    params_.resize(offset + rows * cols, 0.0);
    return offset;
}

Network::Network(NetworkShape shape) : shape_{std::move(shape)} {
    if (shape_.input_dim == 0 || shape_.hidden.empty() || shape_.head_classes.empty()) {
        throw Error("bad_shape", "network needs an input, at least one hidden layer and one head");
    }
    if (shape_.dropout < 0.0 || shape_.dropout >= 1.0) {
        throw Error("bad_shape", "dropout rate must lie in [0, 1)");
    }
    std::size_t in = shape_.input_dim;
    for (std::size_t l = 0; l < shape_.hidden.size(); ++l) {
        Layer layer;
        layer.in = in;
        layer.out = shape_.hidden[l];
        layer.w = add_tensor("trunk" + std::to_string(l) + ".weight", layer.out, in);
        layer.b = add_tensor("trunk" + std::to_string(l) + ".bias", 1, layer.out);
        layers_.push_back(layer);
        in = layer.out;
    }
    for (std::size_t t = 0; t < shape_.head_classes.size(); ++t) {
        if (shape_.head_classes[t] < 2) {
            throw Error("bad_shape", "every head needs at least two classes");
        }
        Head head;
        head.classes = static_cast<std::size_t>(shape_.head_classes[t]);
        const auto prefix = "head" + std::to_string(t);
        if (shape_.layer_norm) {
            head.gain = add_tensor(prefix + ".ln_gain", 1, in);
            head.bias = add_tensor(prefix + ".ln_bias", 1, in);
        }
        head.w = add_tensor(prefix + ".weight", head.classes, in);
        head.b = add_tensor(prefix + ".bias", 1, head.classes);
        head_layout_.push_back(head);
    }
}

void Network::initialize(std::uint64_t seed) {
    Rng rng{seed};
    std::fill(params_.begin(), params_.end(), 0.0);
    auto fill_uniform = [&](std::size_t offset, std::size_t count, std::size_t fan_in) {
        const double limit = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (std::size_t i = 0; i < count; ++i) {
            params_[offset + i] = (2.0 * uniform01(rng) - 1.0) * limit;
        }
    };
    for (const auto &layer : layers_) {
        fill_uniform(layer.w, layer.out * layer.in, layer.in);
    }
    const std::size_t width = shape_.hidden.back();
    for (const auto &head : head_layout_) {
        if (shape_.layer_norm) {
            std::fill_n(params_.begin() + static_cast<std::ptrdiff_t>(head.gain), width, 1.0);
        }
        fill_uniform(head.w, head.classes * width, width);
    }
}

ForwardCache Network::forward(const RowMatrix &x, Mode mode, Rng *rng) const {
    if (static_cast<std::size_t>(x.cols()) != shape_.input_dim) {
        throw Error("dimension_mismatch", "input has " + std::to_string(x.cols()) + " columns, network expects " +
                                              std::to_string(shape_.input_dim));
    }
    const bool training = mode == Mode::Train && shape_.dropout > 0.0;
    if (training && rng == nullptr) {
        throw Error("missing_rng", "training-mode forward needs a dropout generator");
    }
    const auto rows = x.rows();
    ForwardCache cache;
    cache.training = training;
    cache.input = x;

    const RowMatrix *in = &cache.input;
    const double keep_scale = 1.0 / (1.0 - shape_.dropout);
    for (const auto &layer : layers_) {
        ConstMap w(params_.data() + layer.w, static_cast<Eigen::Index>(layer.out), static_cast<Eigen::Index>(layer.in));
        ConstVec b(params_.data() + layer.b, static_cast<Eigen::Index>(layer.out));
        RowMatrix z = (*in) * w.transpose();
        z.rowwise() += b;
        RowMatrix a = z.cwiseMax(0.0);
        if (training) {
            RowMatrix mask(rows, z.cols());
            for (Eigen::Index i = 0; i < mask.size(); ++i) {
                mask.data()[i] = uniform01(*rng) < shape_.dropout ? 0.0 : keep_scale;
            }
            a.array() *= mask.array();
            cache.mask.push_back(std::move(mask));
        }
        cache.pre.push_back(std::move(z));
        cache.act.push_back(std::move(a));
        in = &cache.act.back();
    }

    const RowMatrix &rep = cache.act.back();
    const auto width = rep.cols();
    for (const auto &head : head_layout_) {
        HeadCache hc;
        if (shape_.layer_norm) {
            ConstVec gain(params_.data() + head.gain, width);
            ConstVec bias(params_.data() + head.bias, width);
            hc.normalized.resize(rows, width);
            hc.inv_std.resize(rows);
            for (Eigen::Index i = 0; i < rows; ++i) {
                double mu = rep.row(i).mean();
                double var = (rep.row(i).array() - mu).square().mean();
                double inv = 1.0 / std::sqrt(var + kLayerNormEpsilon);
                hc.inv_std(i) = inv;
                hc.normalized.row(i) = (rep.row(i).array() - mu) * inv;
            }
            hc.features = hc.normalized.array().rowwise() * gain.array();
            hc.features.rowwise() += bias;
        } else {
            hc.features = rep;
        }
        ConstMap w(params_.data() + head.w, static_cast<Eigen::Index>(head.classes), width);
        ConstVec b(params_.data() + head.b, static_cast<Eigen::Index>(head.classes));
        RowMatrix logits = hc.features * w.transpose();
        logits.rowwise() += b;
        hc.log_probs.resize(rows, logits.cols());
        hc.probs.resize(rows, logits.cols());
        for (Eigen::Index i = 0; i < rows; ++i) {
            double peak = logits.row(i).maxCoeff();
            double lse = peak + std::log((logits.row(i).array() - peak).exp().sum());
            hc.log_probs.row(i) = logits.row(i).array() - lse;
            hc.probs.row(i) = hc.log_probs.row(i).array().exp();
            hc.probs.row(i) /= hc.probs.row(i).sum();
        }
        cache.heads.push_back(std::move(hc));
    }
    return cache;
}

std::vector<RowMatrix> Network::predict(const RowMatrix &x) const {
    auto cache = forward(x, Mode::Eval);
    std::vector<RowMatrix> out;
    for (auto &h : cache.heads) {
        out.push_back(std::move(h.probs));
    }
    return out;
}

LossValue Network::loss(const ForwardCache &cache, const HeadTargets &targets, std::span<const double> task_weights,
                        double weight_decay) const {
    if (targets.size() != heads() || task_weights.size() != heads()) {
        throw Error("dimension_mismatch", "targets and task weights must have one entry per head");
    }
    LossValue v;
    v.task_loss.assign(heads(), 0.0);
    v.task_count.assign(heads(), 0);
    bool any = false;
    for (std::size_t t = 0; t < heads(); ++t) {
        const auto &y = targets[t];
        if (y.size() != static_cast<std::size_t>(cache.input.rows())) {
            throw Error("dimension_mismatch", "target length differs from batch size");
        }
        double sum = 0.0;
        std::size_t count = 0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            if (y[i] < 0) {
                continue;
            }
            if (static_cast<std::size_t>(y[i]) >= head_layout_[t].classes) {
                throw Error("bad_label", "class index out of range for head " + std::to_string(t));
            }
            sum -= cache.heads[t].log_probs(static_cast<Eigen::Index>(i), y[i]);
            ++count;
        }
        if (count > 0) {
            v.task_loss[t] = sum / static_cast<double>(count);
            any = true;
        }
        v.task_count[t] = count;
        v.data += task_weights[t] * v.task_loss[t];
    }
    if (!any) {
        throw Error("empty_batch", "every task label in the batch is masked");
    }
    double sq = std::inner_product(params_.begin(), params_.end(), params_.begin(), 0.0);
    v.regularization = 0.5 * weight_decay * sq;
    return v;
}

LossValue Network::loss_and_gradients(const ForwardCache &cache, const HeadTargets &targets,
                                      std::span<const double> task_weights, double weight_decay,
                                      ParamVector &gradient) const {
    auto v = loss(cache, targets, task_weights, weight_decay);
    gradient.assign(params_.size(), 0.0);

    const auto rows = cache.input.rows();
    const RowMatrix &rep = cache.act.back();
    const auto width = rep.cols();
    RowMatrix d_rep = RowMatrix::Zero(rows, width);

    for (std::size_t t = 0; t < heads(); ++t) {
        if (v.task_count[t] == 0) {
            continue;
        }
        const auto &head = head_layout_[t];
        const auto &hc = cache.heads[t];
        const double scale = task_weights[t] / static_cast<double>(v.task_count[t]);
        RowMatrix d_logits = RowMatrix::Zero(rows, static_cast<Eigen::Index>(head.classes));
        for (Eigen::Index i = 0; i < rows; ++i) {
            int y = targets[t][static_cast<std::size_t>(i)];
            if (y < 0) {
                continue;
            }
            d_logits.row(i) = hc.probs.row(i) * scale;
            d_logits(i, y) -= scale;
        }
        MutMap gw(gradient.data() + head.w, static_cast<Eigen::Index>(head.classes), width);
        MutVec gb(gradient.data() + head.b, static_cast<Eigen::Index>(head.classes));
        gw.noalias() += d_logits.transpose() * hc.features;
        gb += d_logits.colwise().sum();

        ConstMap w(params_.data() + head.w, static_cast<Eigen::Index>(head.classes), width);
        RowMatrix d_features = d_logits * w;
        if (shape_.layer_norm) {
            ConstVec gain(params_.data() + head.gain, width);
            MutVec g_gain(gradient.data() + head.gain, width);
            MutVec g_bias(gradient.data() + head.bias, width);
            g_gain += (d_features.array() * hc.normalized.array()).colwise().sum().matrix();
            g_bias += d_features.colwise().sum();
            RowMatrix d_norm = d_features.array().rowwise() * gain.array();
            for (Eigen::Index i = 0; i < rows; ++i) {
                double mean_d = d_norm.row(i).mean();
                double mean_dx = d_norm.row(i).dot(hc.normalized.row(i)) / static_cast<double>(width);
                d_rep.row(i).array() += hc.inv_std(i) * (d_norm.row(i).array() - mean_d -
                                                         hc.normalized.row(i).array() * mean_dx);
            }
        } else {
            d_rep += d_features;
        }
    }

    RowMatrix d_act = std::move(d_rep);
    for (std::size_t l = layers_.size(); l-- > 0;) {
        const auto &layer = layers_[l];
        RowMatrix d_pre = d_act;
        if (cache.training) {
            d_pre.array() *= cache.mask[l].array();
        }
        d_pre.array() *= (cache.pre[l].array() > 0.0).cast<double>();
        const RowMatrix &in = l == 0 ? cache.input : cache.act[l - 1];
        MutMap gw(gradient.data() + layer.w, static_cast<Eigen::Index>(layer.out), static_cast<Eigen::Index>(layer.in));
        MutVec gb(gradient.data() + layer.b, static_cast<Eigen::Index>(layer.out));
        gw.noalias() += d_pre.transpose() * in;
        gb += d_pre.colwise().sum();
        if (l > 0) {
            ConstMap w(params_.data() + layer.w, static_cast<Eigen::Index>(layer.out),
                       static_cast<Eigen::Index>(layer.in));
            d_act = d_pre * w;
        }
    }

    if (weight_decay != 0.0) {
        for (std::size_t i = 0; i < params_.size(); ++i) {
            gradient[i] += weight_decay * params_[i];
        }
    }
    return v;
}

} // namespace mobdemo
