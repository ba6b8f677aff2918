#include "mobdemo/descriptors.hpp"

#include "mobdemo/graph_features.hpp"

namespace mobdemo {

PersonDescriptors compute_descriptors(std::span<const Trip> trips, const PipelineConfig &config) {
    PersonDescriptors d;
    auto graph = build_graph(trips);

    const double n = static_cast<double>(trips.size());
    d.n_trips = n;
    d.purpose_shares.assign(config.purposes.size(), 0.0);
    d.mode_shares.assign(config.modes.size(), 0.0);
    for (const auto &trip : trips) {
        d.purpose_shares[trip.dest] += 1.0 / n;
        const double weight = 1.0 / (n * trip.mode_count());
        for (std::size_t m = 0; m < config.modes.size(); ++m) {
            if (trip.uses_mode(m)) {
                d.mode_shares[m] += weight;
            }
        }
    }

    auto tours = extract_tours(trips, config);
    d.n_tour = static_cast<double>(closed_tour_count(tours));
    d.anchor_tour_shares = anchor_shares(tours, config);
    d.multimodal_fraction = multimodal_fraction(tours);

    d.spatiotemporal = spatiotemporal_stats(trips, config);

    d.trip_entropy = trip_entropy(graph);
    d.trip_gini = trip_gini(graph);
    UndirectedProjection projection{graph};
    d.global_clustering = global_clustering(projection);
    d.mean_local_clustering = mean_local_clustering(projection);

    d.motifs = motif_tally(trips);
    d.motif_entropy = motif_entropy(d.motifs);

    d.cotravel = cotravel_fractions(trips);
    return d;
}

} // namespace mobdemo
