#pragma once

#include "mobdemo/config.hpp"
#include "mobdemo/trip_descriptors.hpp"
#include "mobdemo/types.hpp"

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace mobdemo {

/// Every descriptor computed for one person, before family selection.
struct PersonDescriptors {
    // Classical
    std::vector<double> purpose_shares; ///< by destination purpose, full vocabulary
    std::vector<double> mode_shares;    ///< each trip split evenly over its modes
    double n_trips = 0.0;
    double n_tour = 0.0;
    std::vector<OptionalValue> anchor_tour_shares;

    SpatioTemporalStats spatiotemporal;

    // Diversity
    double trip_entropy = 0.0;
    double trip_gini = 0.0;
    double global_clustering = 0.0;
    double mean_local_clustering = 0.0;
    OptionalValue multimodal_fraction;

    // Motifs
    MotifTally motifs;
    OptionalValue motif_entropy;

    CoTravel cotravel;
};

/// Runs graph, tour, motif, co-travel and spatiotemporal extraction.
/// Throws Error("empty_person") for a person without trips.
PersonDescriptors compute_descriptors(std::span<const Trip> trips, const PipelineConfig &config);

} // namespace mobdemo
