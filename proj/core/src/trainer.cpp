#include "mobdemo/trainer.hpp"

#include "mobdemo/csv.hpp"
#include "mobdemo/error.hpp"
#include "mobdemo/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

namespace mobdemo {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
    return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

/// Fisher-Yates with raw generator output so permutations do not depend
/// on the standard library's distribution implementations.
void seeded_shuffle(std::vector<std::size_t> &v, Rng &rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(v[i - 1], v[j]);
    }
}

std::vector<double> weights_for(const Network &network, const TrainConfig &config) {
    if (config.task_weights.empty()) {
        return std::vector<double>(network.heads(), 1.0);
    }
    if (config.task_weights.size() != network.heads()) {
        throw Error("bad_config", "task_weights must have one entry per head");
    }
    return config.task_weights;
}

bool has_any_label(const Dataset &d, std::span<const std::size_t> rows) {
    for (const auto &head : d.y) {
        for (auto r : rows) {
            if (head[r] >= 0) {
                return true;
            }
        }
    }
    return false;
}

} // namespace

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0) || batch_size == 0 || weight_decay < 0.0 || max_epochs <= 0 || patience < 0 ||
        dropout < 0.0 || dropout >= 1.0) {
        throw Error("bad_config", "training configuration out of range");
    }
    for (double w : task_weights) {
        if (!(w > 0.0)) {
            throw Error("bad_config", "task weights must be positive");
        }
    }
}

bool TrainConfig::in_grid() const noexcept {
    auto has = [](const auto &grid, auto v) { return std::find(grid.begin(), grid.end(), v) != grid.end(); };
    return has(kLearningRateGrid, learning_rate) && has(kBatchSizeGrid, batch_size) &&
           has(kWeightDecayGrid, weight_decay);
}

std::string TrainConfig::canonical() const {
    std::ostringstream s;
    s << "lr=" << format_double(learning_rate) << ";batch=" << batch_size << ";wd=" << format_double(weight_decay)
      << ";max_epochs=" << max_epochs << ";patience=" << patience << ";dropout=" << format_double(dropout)
      << ";layer_norm=" << (layer_norm ? 1 : 0) << ";seed=" << seed << ";w=";
    for (double w : task_weights) {
        s << format_double(w) << ',';
    }
    return s.str();
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
    Dataset out;
    out.x.resize(static_cast<Eigen::Index>(rows.size()), x.cols());
    out.y.assign(y.size(), std::vector<int>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.x.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(rows[i]));
        for (std::size_t t = 0; t < y.size(); ++t) {
            out.y[t][i] = y[t][rows[i]];
        }
    }
    return out;
}

LossValue evaluate_loss(const Network &network, const Dataset &data, std::span<const double> task_weights) {
    auto cache = network.forward(data.x, Network::Mode::Eval);
    return network.loss(cache, data.y, task_weights, 0.0);
}

TrainResult train(Network &network, const Dataset &train_set, const Dataset &val_set, const TrainConfig &config) {
    config.validate();
    if (train_set.rows() == 0 || val_set.rows() == 0) {
        throw Error("empty_split", "training and validation splits must be non-empty");
    }
    const auto weights = weights_for(network, config);
    auto &params = network.params();
    const std::size_t n_params = params.size();

    Rng shuffle_rng{derive_seed(config.seed, "shuffle")};
    Rng dropout_rng{derive_seed(config.seed, "dropout")};

    constexpr double beta1 = 0.9;
    constexpr double beta2 = 0.999;
    constexpr double eps = 1e-8;
    std::vector<double> m(n_params, 0.0);
    std::vector<double> v(n_params, 0.0);
    ParamVector grad;
    long step = 0;

    std::vector<std::size_t> order(train_set.rows());
    std::iota(order.begin(), order.end(), 0);

    TrainResult result;
    ParamVector best_params = params;
    double best_val = std::numeric_limits<double>::infinity();
    int stale = 0;
    const int stop_after = std::max(config.patience, 1);
    const auto started = Clock::now();

    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
        const auto epoch_start = Clock::now();
        seeded_shuffle(order, shuffle_rng);
        double loss_sum = 0.0;
        int batches = 0;
        for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
            std::size_t end = std::min(order.size(), begin + config.batch_size);
            std::span<const std::size_t> rows{order.data() + begin, end - begin};
            if (!has_any_label(train_set, rows)) {
                continue; // nothing to learn from; the loss would reject it
            }
            auto batch = train_set.subset(rows);
            auto cache = network.forward(batch.x, Network::Mode::Train, &dropout_rng);
            auto value = network.loss_and_gradients(cache, batch.y, weights, config.weight_decay, grad);
            loss_sum += value.total();
            ++batches;

            ++step;
            const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
            const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
            for (std::size_t i = 0; i < n_params; ++i) {
                m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
                v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
                params[i] -= config.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
            }
        }

        auto val = evaluate_loss(network, val_set, weights);
        EpochLog entry;
        entry.epoch = epoch;
        entry.train_loss = batches > 0 ? loss_sum / batches : 0.0;
        entry.val_task_loss = val.task_loss;
        entry.val_loss = val.data;
        entry.wall_ms = elapsed_ms(epoch_start);
        result.log.push_back(std::move(entry));

        if (val.data < best_val) {
            best_val = val.data;
            best_params = params;
            result.best_epoch = epoch;
            stale = 0;
        } else if (++stale >= stop_after) {
            break;
        }
    }
    params = std::move(best_params);
    result.best_val_loss = best_val;
    result.wall_ms = elapsed_ms(started);
    return result;
}

std::vector<std::size_t> subsample_indices(std::size_t n, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0) || fraction > 1.0) {
        throw Error("bad_fraction", "subsample fraction must lie in (0, 1]");
    }
    auto keep = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
    if (keep == 0) {
        throw Error("empty_subsample", "fraction " + format_double(fraction) + " of " + std::to_string(n) +
                                           " rows keeps nothing");
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    if (keep == n) {
        return order;
    }
    Rng rng{seed};
    seeded_shuffle(order, rng);
    order.resize(keep);
    return order;
}

Dataset subsample_training(const Dataset &data, double fraction, std::uint64_t seed) {
    auto rows = subsample_indices(data.rows(), fraction, seed);
    return data.subset(rows);
}

void write_training_log(std::ostream &out, const TrainResult &result, std::span<const std::string> head_names) {
    out << "epoch,train_loss";
    for (const auto &name : head_names) {
        out << ",val_loss_" << name;
    }
    out << ",val_loss,wall_ms\n";
    for (const auto &e : result.log) {
        out << e.epoch << ',' << format_double(e.train_loss);
        for (double l : e.val_task_loss) {
            out << ',' << format_double(l);
        }
        out << ',' << format_double(e.val_loss) << ',' << format_double(e.wall_ms) << '\n';
    }
}

} // namespace mobdemo
