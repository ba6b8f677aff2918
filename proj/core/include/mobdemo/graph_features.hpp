#pragma once

#include "mobdemo/types.hpp"

#include <cstddef>
#include <map>
#include <set>
#include <span>
#include <utility>
#include <vector>

namespace mobdemo {

using OdPair = std::pair<std::size_t, std::size_t>;

/// Directed purpose multigraph of one person: trip counts per OD purpose
/// pair accumulated over the whole observation period.
class MobilityGraph {
public:
    void add_trip(std::size_t origin, std::size_t dest, int count = 1);

    const std::set<std::size_t> &nodes() const noexcept { return nodes_; }
    const std::map<OdPair, int> &edge_counts() const noexcept { return edges_; }
    /// Number of distinct OD purpose pairs.
    std::size_t distinct_pairs() const noexcept { return edges_.size(); }
    /// Total trip count.
    long total_trips() const noexcept { return total_; }
    /// Edge counts as doubles, in OD-key order.
    std::vector<double> count_vector() const;

private:
    std::set<std::size_t> nodes_;
    std::map<OdPair, int> edges_;
    long total_ = 0;
};

/// Throws Error("empty_person") for an empty trip list.
MobilityGraph build_graph(std::span<const Trip> trips);

/// Shannon entropy in bits of a count vector; zero entries are ignored.
double shannon_entropy_bits(std::span<const double> counts);
/// Gini coefficient G = 1 + 1/N - 2/(N T) sum_k C_k over ascending counts.
double gini_coefficient(std::span<const double> counts);

double trip_entropy(const MobilityGraph &graph);
double trip_gini(const MobilityGraph &graph);

/// Simple undirected view of a mobility graph: directions and multiplicity
/// collapsed, self-loops dropped. Nodes are dense indices 0..n-1.
class UndirectedProjection {
public:
    explicit UndirectedProjection(const MobilityGraph &graph);
    UndirectedProjection(std::size_t node_count, std::span<const OdPair> edges);

    std::size_t node_count() const noexcept { return adjacency_.size(); }
    bool connected(std::size_t a, std::size_t b) const { return adjacency_[a][b]; }
    int degree(std::size_t v) const { return degree_[v]; }
    /// Triangles through node v.
    long triangles_at(std::size_t v) const { return triangles_[v]; }
    /// Connected triplets (wedges), sum over v of k_v (k_v - 1) / 2.
    long wedges() const noexcept { return wedges_; }
    /// Closed triplets counted once per triangle.
    long triangles() const noexcept { return triangle_total_; }

private:
    void finalize();

    std::vector<std::vector<bool>> adjacency_;
    std::vector<int> degree_;
    std::vector<long> triangles_;
    long wedges_ = 0;
    long triangle_total_ = 0;
};

/// 3 * triangles / wedges; 0 when there are no wedges.
double global_clustering(const UndirectedProjection &projection);
/// Mean over all nodes of 2 t_v / (k_v (k_v - 1)), with 0 for k_v < 2.
double mean_local_clustering(const UndirectedProjection &projection);

} // namespace mobdemo
