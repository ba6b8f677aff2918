#pragma once

// Brute-force reference implementations shared by the unit and acceptance
// suites. They are deliberately naive and share no code with the library.

#include "mobdemo/config.hpp"
#include "mobdemo/metrics.hpp"
#include "mobdemo/trip_descriptors.hpp"
#include "mobdemo/types.hpp"

#include <array>
#include <initializer_list>
#include <map>
#include <string>
#include <vector>

namespace mobdemo::testing {

/// Builds one cleaned trip. Modes are names from the default vocabulary.
Trip make_trip(const PipelineConfig &config, std::string_view origin, std::string_view dest,
               std::initializer_list<std::string_view> modes, int depart_min, int hh = 0, int nonhh = 0,
               Day day = Day{std::chrono::year{2019} / 4 / 16});

/// The worked single-day example: seven trips in four tours, two of them
/// multimodal and three trips with companions.
std::vector<Trip> worked_day(const PipelineConfig &config);

/// Adjacency matrix of a simple undirected graph.
using Adjacency = std::vector<std::vector<bool>>;

/// Every unordered pair of neighbours of every centre, closed or not.
struct TripletCount {
    long triplets = 0;
    long closed = 0;
    std::vector<double> local; ///< per node, 0 below two neighbours
};
TripletCount enumerate_triplets(const Adjacency &adj);
double oracle_global_clustering(const Adjacency &adj);
double oracle_mean_local_clustering(const Adjacency &adj);

/// Motif of one segment by matching it against walks generated from the
/// motif definitions (paths and cycles glued at one node).
Motif oracle_motif(const std::vector<std::size_t> &segment);

/// Tally of a collapsed walk: cut at every return to the first node and
/// classify each piece with oracle_motif.
std::array<long, kCanonicalMotifs + 1> oracle_walk_tally(const std::vector<std::size_t> &walk);

/// Binary AUC by counting positive/negative pairs; ties count one half.
double pairwise_auc(const std::vector<double> &scores, const std::vector<bool> &positive);

/// Macro one-vs-rest AUC over classes with both positives and negatives;
/// NaN when no class qualifies.
double pairwise_macro_auc(const PredictionBatch &batch);

} // namespace mobdemo::testing

#include "mobdemo/network.hpp"

namespace mobdemo::testing {

/// A random small network with inputs and labels whose hidden
/// pre-activations all stay at least `margin` away from the ReLU kink.
struct GradientCase {
    Network network{NetworkShape{1, {1}, {2}, false, 0.0}};
    RowMatrix x;
    HeadTargets y;
    std::vector<double> weights;
    double weight_decay = 0.0;
    std::uint64_t dropout_seed = 0;
};

GradientCase random_gradient_case(Rng &rng, double margin = 1e-2);

/// Largest |analytic - numeric| / max(|analytic|, |numeric|, floor) over all
/// parameters, using the four-point central difference with step h. The
/// default margin keeps every probe (at most 2h away) on one side of each
/// ReLU kink.
double max_relative_gradient_error(const GradientCase &c, double h = 1e-4, double floor = 1e-6);

} // namespace mobdemo::testing
