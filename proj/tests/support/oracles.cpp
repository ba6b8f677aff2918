#include "oracles.hpp"

#include <algorithm>
#include <limits>
#include <random>
#include <set>
#include <stdexcept>

namespace mobdemo::testing {

Trip make_trip(const PipelineConfig &config, std::string_view origin, std::string_view dest,
               std::initializer_list<std::string_view> modes, int depart_min, int hh, int nonhh, Day day) {
    Trip t;
    t.person_id = "p1";
    t.household_id = "h1";
    t.wave = 2019;
    t.day = day;
    t.origin = config.purposes.index_of(origin);
    t.dest = config.purposes.index_of(dest);
    for (auto m : modes) {
        t.modes |= std::uint64_t{1} << config.modes.index_of(m);
    }
    t.depart_min = depart_min;
    t.arrive_min = depart_min + 20;
    t.duration_min = 20.0;
    t.distance_km = 5.0;
    t.n_hh_companions = hh;
    t.n_nonhh_companions = nonhh;
    return t;
}

std::vector<Trip> worked_day(const PipelineConfig &c) {
    return {
        make_trip(c, "home", "work", {"walk", "transit"}, 7 * 60),
        make_trip(c, "work", "leisure", {"walk"}, 12 * 60, 0, 2),
        make_trip(c, "leisure", "work", {"walk"}, 13 * 60, 0, 2),
        make_trip(c, "work", "errand", {"transit"}, 17 * 60),
        make_trip(c, "errand", "home", {"transit", "walk"}, 18 * 60),
        make_trip(c, "home", "gym", {"drive"}, 19 * 60, 1, 0),
        make_trip(c, "gym", "home", {"drive"}, 21 * 60),
    };
}

TripletCount enumerate_triplets(const Adjacency &adj) {
    const std::size_t n = adj.size();
    TripletCount out;
    out.local.assign(n, 0.0);
    for (std::size_t v = 0; v < n; ++v) {
        long pairs = 0;
        long closed = 0;
        for (std::size_t a = 0; a < n; ++a) {
            for (std::size_t b = a + 1; b < n; ++b) {
                if (a == v || b == v || !adj[v][a] || !adj[v][b]) {
                    continue;
                }
                ++pairs;
                if (adj[a][b]) {
                    ++closed;
                }
            }
        }
        out.triplets += pairs;
        out.closed += closed;
        out.local[v] = pairs == 0 ? 0.0 : static_cast<double>(closed) / static_cast<double>(pairs);
    }
    return out;
}

double oracle_global_clustering(const Adjacency &adj) {
    auto t = enumerate_triplets(adj);
    return t.triplets == 0 ? 0.0 : static_cast<double>(t.closed) / static_cast<double>(t.triplets);
}

double oracle_mean_local_clustering(const Adjacency &adj) {
    auto t = enumerate_triplets(adj);
    if (t.local.empty()) {
        return 0.0;
    }
    double sum = 0.0;
    for (double v : t.local) {
        sum += v;
    }
    return sum / static_cast<double>(t.local.size());
}

namespace {

using Walk = std::vector<std::size_t>;

/// Relabels nodes by order of first appearance.
Walk canonical(const Walk &w) {
    std::map<std::size_t, std::size_t> ids;
    Walk out;
    for (auto v : w) {
        auto it = ids.emplace(v, ids.size()).first;
        out.push_back(it->second);
    }
    return out;
}

Walk fresh(std::size_t &next, std::size_t count) {
    Walk out;
    for (std::size_t i = 0; i < count; ++i) {
        out.push_back(next++);
    }
    return out;
}

void append(Walk &w, const Walk &tail) { w.insert(w.end(), tail.begin(), tail.end()); }

// Longest segment the templates need to cover.
constexpr std::size_t kMaxNodes = 9;

std::map<Walk, Motif> build_templates() {
    std::map<Walk, Motif> table;
    auto add = [&](Walk w, Motif m) {
        if (w.size() <= kMaxNodes) {
            table.emplace(canonical(w), m);
        }
    };
    // Paths from the start node.
    for (std::size_t k = 1; k < kMaxNodes; ++k) {
        std::size_t next = 0;
        add(fresh(next, k + 1), k == 1 ? Motif::SingleNoReturn : Motif::Chain);
    }
    add({0, 1, 0}, Motif::OutAndBack);
    // Simple cycles through the start node.
    for (std::size_t k = 2; k < kMaxNodes; ++k) {
        std::size_t next = 0;
        auto w = fresh(next, k + 1);
        w.push_back(0);
        add(w, Motif::SingleCycle);
    }
    // Two loops glued at v: 0 -P-> v -C-> v -R-> 0, each loop a cycle
    // (>= 3 edges) or an out-and-back (2 edges).
    for (std::size_t a = 0; a < kMaxNodes; ++a) {
        for (std::size_t b = 0; a + b < kMaxNodes; ++b) {
            for (std::size_t m = 1; a + b + m < kMaxNodes; ++m) {
                std::size_t next = 1;
                Walk w{0};
                append(w, fresh(next, a));
                const std::size_t v = next++;
                w.push_back(v);
                append(w, fresh(next, m));
                w.push_back(v);
                append(w, fresh(next, b));
                w.push_back(0);
                const bool outer_cycle = a + b + 2 >= 3;
                const bool inner_cycle = m + 1 >= 3;
                if (outer_cycle && inner_cycle) {
                    add(w, Motif::DoubleCycle);
                } else if (outer_cycle != inner_cycle) {
                    add(w, Motif::CycleChain);
                }
            }
        }
    }
    // Open: pendant path 0 -P-> v, then a cycle back to v where the day ends.
    for (std::size_t a = 0; a < kMaxNodes; ++a) {
        for (std::size_t m = 2; a + m < kMaxNodes; ++m) {
            std::size_t next = 1;
            Walk w{0};
            append(w, fresh(next, a));
            const std::size_t v = next++;
            w.push_back(v);
            append(w, fresh(next, m));
            w.push_back(v);
            add(w, Motif::CycleChain);
        }
    }
    return table;
}

} // namespace

Motif oracle_motif(const std::vector<std::size_t> &segment) {
    static const auto templates = build_templates();
    auto it = templates.find(canonical(segment));
    return it == templates.end() ? Motif::Other : it->second;
}

std::array<long, kCanonicalMotifs + 1> oracle_walk_tally(const std::vector<std::size_t> &walk) {
    std::array<long, kCanonicalMotifs + 1> tally{};
    if (walk.size() < 2) {
        return tally;
    }
    std::size_t start = 0;
    for (std::size_t i = 1; i < walk.size(); ++i) {
        const bool cut = walk[i] == walk[0];
        const bool last = i + 1 == walk.size();
        if (cut || last) {
            Walk piece(walk.begin() + static_cast<std::ptrdiff_t>(start),
                       walk.begin() + static_cast<std::ptrdiff_t>(i) + 1);
            ++tally[static_cast<std::size_t>(oracle_motif(piece))];
            start = i;
        }
    }
    return tally;
}

double pairwise_auc(const std::vector<double> &scores, const std::vector<bool> &positive) {
    double wins = 0.0;
    long pairs = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!positive[i]) {
            continue;
        }
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (positive[j]) {
                continue;
            }
            ++pairs;
            if (scores[i] > scores[j]) {
                wins += 1.0;
            } else if (scores[i] == scores[j]) {
                wins += 0.5;
            }
        }
    }
    return wins / static_cast<double>(pairs);
}

double pairwise_macro_auc(const PredictionBatch &batch) {
    double sum = 0.0;
    int eligible = 0;
    for (int k = 0; k < batch.classes(); ++k) {
        std::vector<double> scores;
        std::vector<bool> positive;
        for (std::size_t i = 0; i < batch.size(); ++i) {
            scores.push_back(batch.probs(static_cast<Eigen::Index>(i), k));
            positive.push_back(batch.labels[i] == k);
        }
        const auto pos = std::count(positive.begin(), positive.end(), true);
        if (pos == 0 || pos == static_cast<long>(positive.size())) {
            continue;
        }
        sum += pairwise_auc(scores, positive);
        ++eligible;
    }
    return eligible == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / eligible;
}

} // namespace mobdemo::testing

namespace mobdemo::testing {

namespace {

bool away_from_kinks(const ForwardCache &cache, double margin) {
    for (const auto &pre : cache.pre) {
        if ((pre.array().abs() < margin).any()) {
            return false;
        }
    }
    return true;
}

std::vector<Eigen::ArrayXXd> relu_pattern(const ForwardCache &cache) {
    std::vector<Eigen::ArrayXXd> out;
    for (const auto &pre : cache.pre) {
        out.push_back((pre.array() > 0.0).cast<double>());
    }
    return out;
}

/// Loss at the case's parameters; throws if a ReLU changed side relative to
/// `pattern`, since the finite difference would then straddle a kink.
double total_loss(const GradientCase &c, const std::vector<Eigen::ArrayXXd> &pattern) {
    Rng dropout{c.dropout_seed};
    auto cache = c.network.forward(c.x, Network::Mode::Train, &dropout);
    auto now = relu_pattern(cache);
    for (std::size_t l = 0; l < now.size(); ++l) {
        if (!(now[l] == pattern[l]).all()) {
            throw std::logic_error("finite-difference probe crossed a ReLU kink");
        }
    }
    return c.network.loss(cache, c.y, c.weights, c.weight_decay).total();
}

} // namespace

GradientCase random_gradient_case(Rng &rng, double margin) {
    std::uniform_int_distribution<int> width(2, 7);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (;;) {
        NetworkShape shape;
        shape.input_dim = static_cast<std::size_t>(width(rng));
        const int layers = 1 + static_cast<int>(rng() % 2);
        for (int l = 0; l < layers; ++l) {
            shape.hidden.push_back(static_cast<std::size_t>(width(rng)));
        }
        const int heads = 1 + static_cast<int>(rng() % 4);
        for (int h = 0; h < heads; ++h) {
            shape.head_classes.push_back(2 + static_cast<int>(rng() % 5));
        }
        shape.layer_norm = rng() % 2 == 0;
        shape.dropout = rng() % 3 == 0 ? 0.25 : 0.0;

        GradientCase c;
        c.network = Network{shape};
        c.network.initialize(rng());
        // Perturb layer-norm gains and all biases so nothing sits at its init.
        for (auto &p : c.network.params()) {
            p += 0.1 * unit(rng);
        }
        const auto rows = static_cast<Eigen::Index>(1 + rng() % 6);
        c.x.resize(rows, static_cast<Eigen::Index>(shape.input_dim));
        for (Eigen::Index i = 0; i < c.x.size(); ++i) {
            c.x.data()[i] = 2.0 * unit(rng);
        }
        c.y.assign(static_cast<std::size_t>(heads), std::vector<int>(static_cast<std::size_t>(rows)));
        for (std::size_t h = 0; h < c.y.size(); ++h) {
            for (auto &v : c.y[h]) {
                v = rng() % 4 == 0 ? -1 : static_cast<int>(rng() % static_cast<std::uint64_t>(shape.head_classes[h]));
            }
        }
        c.y[0][0] = 0; // at least one label
        for (int h = 0; h < heads; ++h) {
            c.weights.push_back(0.5 + (unit(rng) + 1.0));
        }
        c.weight_decay = rng() % 2 == 0 ? 0.0 : 1e-2;
        c.dropout_seed = rng();

        Rng dropout{c.dropout_seed};
        if (away_from_kinks(c.network.forward(c.x, Network::Mode::Train, &dropout), margin)) {
            return c;
        }
    }
}

double max_relative_gradient_error(const GradientCase &c, double h, double floor) {
    Rng dropout{c.dropout_seed};
    auto cache = c.network.forward(c.x, Network::Mode::Train, &dropout);
    ParamVector analytic;
    c.network.loss_and_gradients(cache, c.y, c.weights, c.weight_decay, analytic);
    const auto pattern = relu_pattern(cache);

    GradientCase probe = c;
    double worst = 0.0;
    for (std::size_t i = 0; i < probe.network.params().size(); ++i) {
        auto &p = probe.network.params()[i];
        const double saved = p;
        auto at = [&](double offset) {
            p = saved + offset;
            return total_loss(probe, pattern);
        };
        // Fourth-order central stencil: truncation O(h^4), so h can be large
        // enough that rounding noise stays far below tiny gradients.
        const double numeric = (8.0 * (at(h) - at(-h)) - (at(2.0 * h) - at(-2.0 * h))) / (12.0 * h);
        p = saved;
        const double scale = std::max({std::abs(analytic[i]), std::abs(numeric), floor});
        worst = std::max(worst, std::abs(analytic[i] - numeric) / scale);
    }
    return worst;
}

} // namespace mobdemo::testing
