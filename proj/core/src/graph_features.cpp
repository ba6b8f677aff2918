#include "mobdemo/graph_features.hpp"

#include "mobdemo/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mobdemo {

void MobilityGraph::add_trip(std::size_t origin, std::size_t dest, int count) {
    nodes_.insert(origin);
    nodes_.insert(dest);
    edges_[{origin, dest}] += count;
    total_ += count;
}

std::vector<double> MobilityGraph::count_vector() const {
    std::vector<double> out;
    out.reserve(edges_.size());
    for (const auto &[_, count] : edges_) {
        out.push_back(static_cast<double>(count));
    }
    return out;
}

MobilityGraph build_graph(std::span<const Trip> trips) {
    if (trips.empty()) {
        throw Error("empty_person", "cannot build a mobility graph without trips");
    }
    MobilityGraph graph;
    for (const auto &trip : trips) {
        graph.add_trip(trip.origin, trip.dest);
    }
    return graph;
}

double shannon_entropy_bits(std::span<const double> counts) {
    double total = std::accumulate(counts.begin(), counts.end(), 0.0);
    if (total <= 0.0) {
        return 0.0;
    }
    double h = 0.0;
    for (double x : counts) {
        if (x > 0.0) {
            double p = x / total;
            h -= p * std::log2(p);
        }
    }
    // -0.0 for a single category
    return h == 0.0 ? 0.0 : h;
}

double gini_coefficient(std::span<const double> counts) {
    if (counts.empty()) {
        return 0.0;
    }
    std::vector<double> sorted(counts.begin(), counts.end());
    std::sort(sorted.begin(), sorted.end());
    double n = static_cast<double>(sorted.size());
    double total = std::accumulate(sorted.begin(), sorted.end(), 0.0);
    if (total <= 0.0) {
        return 0.0;
    }
    double cumulative = 0.0;
    double sum_cumulative = 0.0;
    for (double x : sorted) {
        cumulative += x;
        sum_cumulative += cumulative;
    }
    return 1.0 + 1.0 / n - 2.0 * sum_cumulative / (n * total);
}

double trip_entropy(const MobilityGraph &graph) {
    auto counts = graph.count_vector();
    return shannon_entropy_bits(counts);
}

double trip_gini(const MobilityGraph &graph) {
    auto counts = graph.count_vector();
    return gini_coefficient(counts);
}

UndirectedProjection::UndirectedProjection(const MobilityGraph &graph) {
    std::vector<std::size_t> ids(graph.nodes().begin(), graph.nodes().end());
    auto dense = [&](std::size_t purpose) {
        return static_cast<std::size_t>(std::lower_bound(ids.begin(), ids.end(), purpose) - ids.begin());
    };
    adjacency_.assign(ids.size(), std::vector<bool>(ids.size(), false));
    for (const auto &[pair, _] : graph.edge_counts()) {
        auto a = dense(pair.first);
        auto b = dense(pair.second);
        if (a != b) {
            adjacency_[a][b] = true;
            adjacency_[b][a] = true;
        }
    }
    finalize();
}

UndirectedProjection::UndirectedProjection(std::size_t node_count, std::span<const OdPair> edges) {
    adjacency_.assign(node_count, std::vector<bool>(node_count, false));
    for (const auto &[a, b] : edges) {
        if (a != b) {
            adjacency_.at(a).at(b) = true;
            adjacency_.at(b).at(a) = true;
        }
    }
    finalize();
}

void UndirectedProjection::finalize() {
    auto n = adjacency_.size();
    degree_.assign(n, 0);
    triangles_.assign(n, 0);
    wedges_ = 0;
    for (std::size_t v = 0; v < n; ++v) {
        degree_[v] = static_cast<int>(std::count(adjacency_[v].begin(), adjacency_[v].end(), true));
        wedges_ += static_cast<long>(degree_[v]) * (degree_[v] - 1) / 2;
        for (std::size_t a = 0; a < n; ++a) {
            if (!adjacency_[v][a]) {
                continue;
            }
            for (std::size_t b = a + 1; b < n; ++b) {
                if (adjacency_[v][b] && adjacency_[a][b]) {
                    ++triangles_[v];
                }
            }
        }
    }
    triangle_total_ = std::accumulate(triangles_.begin(), triangles_.end(), 0L) / 3;
}

double global_clustering(const UndirectedProjection &projection) {
    if (projection.wedges() == 0) {
        return 0.0;
    }
    return 3.0 * static_cast<double>(projection.triangles()) / static_cast<double>(projection.wedges());
}

double mean_local_clustering(const UndirectedProjection &projection) {
    auto n = projection.node_count();
    if (n == 0) {
        return 0.0;
    }
    double sum = 0.0;
    for (std::size_t v = 0; v < n; ++v) {
        double k = projection.degree(v);
        if (k >= 2.0) {
            sum += 2.0 * static_cast<double>(projection.triangles_at(v)) / (k * (k - 1.0));
        }
    }
    return sum / static_cast<double>(n);
}

} // namespace mobdemo
