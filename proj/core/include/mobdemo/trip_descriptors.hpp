#pragma once

#include "mobdemo/config.hpp"
#include "mobdemo/types.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace mobdemo {

// ---------------------------------------------------------------------------
// Spatiotemporal statistics

struct SpatioTemporalStats {
    double f_rush = 0.0;
    double f_weekend = 0.0;
    double depart_first = 0.0; ///< minutes since midnight
    double depart_mean = 0.0;
    double depart_last = 0.0;
    double duration_mean = 0.0; ///< minutes
    double duration_max = 0.0;
    double speed_mean = 0.0; ///< km/h
    double speed_max = 0.0;
    double distance_mean = 0.0; ///< km
    double distance_max = 0.0;
};

/// Peak share uses the configured windows; all statistics are pooled over
/// every trip rather than averaged per day. Requires at least one trip.
SpatioTemporalStats spatiotemporal_stats(std::span<const Trip> trips, const PipelineConfig &config);

// ---------------------------------------------------------------------------
// Daily purpose walks

struct WalkStep {
    std::uint64_t modes = 0;
    int hh_companions = 0;
    int nonhh_companions = 0;
    std::vector<std::size_t> trips; ///< indices into the day's trip span
};

/// A day's purpose walk s0..sn with consecutive duplicates merged.
struct DaySequence {
    Day day{};
    std::vector<std::size_t> walk;
    std::vector<WalkStep> steps; ///< steps[i] joins walk[i] -> walk[i+1]

    std::size_t edges() const noexcept { return walk.empty() ? 0 : walk.size() - 1; }
};

/// Merges consecutive duplicate purposes. Origins that do not match the
/// previous destination are spliced into the walk.
DaySequence collapse_day(std::span<const Trip> day_trips);

/// Splits time-ordered trips into per-day spans.
std::vector<std::span<const Trip>> split_days(std::span<const Trip> trips);

// ---------------------------------------------------------------------------
// Motifs

enum class Motif : int {
    SingleNoReturn = 0,
    OutAndBack = 1,
    Chain = 2,
    SingleCycle = 3,
    DoubleCycle = 4,
    CycleChain = 5,
    Other = 6,
};
inline constexpr std::size_t kCanonicalMotifs = 6;
inline constexpr std::array<Motif, kCanonicalMotifs> kCanonicalMotifList{
    Motif::SingleNoReturn, Motif::OutAndBack,  Motif::Chain,
    Motif::SingleCycle,    Motif::DoubleCycle, Motif::CycleChain};

std::string_view motif_name(Motif motif) noexcept;

/// Cuts a collapsed walk at every return to its first node. Consecutive
/// segments share their boundary node.
std::vector<std::vector<std::size_t>> segment_walk(std::span<const std::size_t> walk);

/// Decision table over one segment (first node = day's first node):
///   open, 1 edge                                   -> single-no-return
///   closed, 2 distinct nodes                       -> out-and-back
///   open, >=2 edges, all nodes distinct            -> chain
///   closed, >=3 distinct nodes, none repeated      -> single-cycle
///   closed, one node revisited, both loops cycles  -> double-cycle
///   one cycle plus one pendant path                -> cycle-chain
///   anything else                                  -> other
Motif classify_segment(std::span<const std::size_t> segment);

struct MotifTally {
    std::array<long, kCanonicalMotifs> counts{};
    long other = 0;

    void add(Motif motif) noexcept;
    /// Sum over the six canonical motifs ("other" excluded).
    long total() const noexcept;
    /// m_j / M; all zeros when M = 0.
    std::array<double, kCanonicalMotifs> fractions() const noexcept;
    long count(Motif motif) const noexcept { return counts[static_cast<std::size_t>(motif)]; }
};

/// Adds the motifs of one collapsed day to the tally.
void segment_and_classify_motifs(const DaySequence &day, MotifTally &tally);
/// Tally over every day of a person's trips.
MotifTally motif_tally(std::span<const Trip> trips);

/// A descriptor value that may be undefined for a person (flagged missing).
struct OptionalValue {
    double value = 0.0;
    bool missing = false;
};

/// Entropy in bits over canonical motif counts; M = 0 gives 0 flagged missing.
OptionalValue motif_entropy(const MotifTally &tally);

// ---------------------------------------------------------------------------
// Tours

struct Tour {
    std::size_t anchor = 0;
    std::size_t first_trip = 0;
    std::size_t last_trip = 0;
    std::uint64_t modes = 0;
    bool closed = false;

    bool multimodal() const noexcept;
};

/// Tours open on a departure from an anchor and end at the first later
/// arrival at any anchor. Tours do not span diary days; one still open at
/// the end of a day is recorded with closed = false.
std::vector<Tour> extract_tours(std::span<const Trip> trips, const PipelineConfig &config);

std::size_t closed_tour_count(std::span<const Tour> tours) noexcept;

/// Share of closed tours anchored at each configured anchor, in anchor
/// order. Missing when there are no closed tours.
std::vector<OptionalValue> anchor_shares(std::span<const Tour> tours, const PipelineConfig &config);

/// Closed tours with at least two distinct modes over closed tours.
OptionalValue multimodal_fraction(std::span<const Tour> tours);

// ---------------------------------------------------------------------------
// Co-travel

struct CoTravel {
    double f_solo = 0.0;
    double f_hh = 0.0;
    double f_nonhh = 0.0;
    double f_comp = 0.0;
};

/// Each trip is solo, household (any hh companion, even with others too),
/// or non-household. Requires at least one trip.
CoTravel cotravel_fractions(std::span<const Trip> trips);

} // namespace mobdemo
