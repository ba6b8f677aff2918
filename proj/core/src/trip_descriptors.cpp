#include "mobdemo/trip_descriptors.hpp"

#include "mobdemo/error.hpp"
#include "mobdemo/graph_features.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>

namespace mobdemo {

SpatioTemporalStats spatiotemporal_stats(std::span<const Trip> trips, const PipelineConfig &config) {
    if (trips.empty()) {
        throw Error("empty_person", "spatiotemporal statistics need at least one trip");
    }
    SpatioTemporalStats s;
    s.depart_first = trips.front().depart_min;
    s.depart_last = trips.front().depart_min;
    double rush = 0.0;
    double weekend = 0.0;
    for (const auto &trip : trips) {
        bool peak = std::any_of(config.peak_windows.begin(), config.peak_windows.end(),
                                [&](const TimeWindow &w) { return w.contains(trip.depart_min); });
        rush += peak ? 1.0 : 0.0;
        weekend += trip.on_weekend() ? 1.0 : 0.0;

        double depart = trip.depart_min;
        s.depart_first = std::min(s.depart_first, depart);
        s.depart_last = std::max(s.depart_last, depart);
        s.depart_mean += depart;

        double speed = trip.distance_km / (trip.duration_min / 60.0);
        s.duration_mean += trip.duration_min;
        s.duration_max = std::max(s.duration_max, trip.duration_min);
        s.speed_mean += speed;
        s.speed_max = std::max(s.speed_max, speed);
        s.distance_mean += trip.distance_km;
        s.distance_max = std::max(s.distance_max, trip.distance_km);
    }
    double n = static_cast<double>(trips.size());
    s.f_rush = rush / n;
    s.f_weekend = weekend / n;
    s.depart_mean /= n;
    s.duration_mean /= n;
    s.speed_mean /= n;
    s.distance_mean /= n;
    return s;
}

DaySequence collapse_day(std::span<const Trip> day_trips) {
    DaySequence seq;
    if (day_trips.empty()) {
        return seq;
    }
    seq.day = day_trips.front().day;
    std::vector<std::size_t> pending; // self-loop trips seen before any step exists

    for (std::size_t i = 0; i < day_trips.size(); ++i) {
        const auto &trip = day_trips[i];
        if (seq.walk.empty()) {
            seq.walk.push_back(trip.origin);
        } else if (trip.origin != seq.walk.back()) {
            // Unobserved movement between the previous destination and this origin.
            seq.walk.push_back(trip.origin);
            seq.steps.emplace_back();
        }
        if (trip.dest == seq.walk.back()) {
            if (seq.steps.empty()) {
                pending.push_back(i);
            } else {
                auto &step = seq.steps.back();
                step.modes |= trip.modes;
                step.trips.push_back(i);
            }
            continue;
        }
        seq.walk.push_back(trip.dest);
        WalkStep step;
        step.modes = trip.modes;
        step.hh_companions = trip.n_hh_companions;
        step.nonhh_companions = trip.n_nonhh_companions;
        for (auto p : pending) {
            step.modes |= day_trips[p].modes;
            step.trips.push_back(p);
        }
        pending.clear();
        step.trips.push_back(i);
        seq.steps.push_back(std::move(step));
    }
    return seq;
}

std::vector<std::span<const Trip>> split_days(std::span<const Trip> trips) {
    std::vector<std::span<const Trip>> days;
    std::size_t start = 0;
    for (std::size_t i = 1; i <= trips.size(); ++i) {
        if (i == trips.size() || trips[i].day != trips[start].day) {
            days.push_back(trips.subspan(start, i - start));
            start = i;
        }
    }
    if (trips.empty()) {
        days.clear();
    }
    return days;
}

std::string_view motif_name(Motif motif) noexcept {
    switch (motif) {
    case Motif::SingleNoReturn:
        return "single_no_return";
    case Motif::OutAndBack:
        return "out_and_back";
    case Motif::Chain:
        return "chain";
    case Motif::SingleCycle:
        return "single_cycle";
    case Motif::DoubleCycle:
        return "double_cycle";
    case Motif::CycleChain:
        return "cycle_chain";
    case Motif::Other:
        return "other";
    }
    return "other";
}

std::vector<std::vector<std::size_t>> segment_walk(std::span<const std::size_t> walk) {
    std::vector<std::vector<std::size_t>> segments;
    if (walk.size() < 2) {
        return segments;
    }
    std::vector<std::size_t> current{walk.front()};
    for (std::size_t i = 1; i < walk.size(); ++i) {
        current.push_back(walk[i]);
        if (walk[i] == walk.front()) {
            segments.push_back(std::move(current));
            current = {walk.front()};
        }
    }
    if (current.size() > 1) {
        segments.push_back(std::move(current));
    }
    return segments;
}

Motif classify_segment(std::span<const std::size_t> segment) {
    const std::size_t n = segment.size();
    if (n < 2) {
        return Motif::Other;
    }
    const std::size_t edges = n - 1;
    const bool closed = n >= 3 && segment.back() == segment.front();
    const std::size_t last_intermediate = closed ? n - 2 : n - 1;

    // Occurrence positions of every intermediate node.
    std::map<std::size_t, std::vector<std::size_t>> positions;
    for (std::size_t i = 1; i <= last_intermediate; ++i) {
        if (segment[i] == segment[i - 1]) {
            return Motif::Other; // not collapsed
        }
        positions[segment[i]].push_back(i);
    }
    if (positions.contains(segment.front())) {
        return Motif::Other; // segment revisits its start without closing
    }

    std::vector<const std::vector<std::size_t> *> repeated;
    for (const auto &[_, where] : positions) {
        if (where.size() > 1) {
            repeated.push_back(&where);
        }
    }

    if (repeated.empty()) {
        if (closed) {
            return edges == 2 ? Motif::OutAndBack : Motif::SingleCycle;
        }
        return edges == 1 ? Motif::SingleNoReturn : Motif::Chain;
    }
    if (repeated.size() != 1 || repeated.front()->size() != 2) {
        return Motif::Other;
    }

    const std::size_t first = (*repeated.front())[0];
    const std::size_t second = (*repeated.front())[1];
    const std::size_t inner_edges = second - first;
    const bool inner_cycle = inner_edges >= 3;

    if (closed) {
        const bool outer_cycle = edges - inner_edges >= 3;
        if (inner_cycle && outer_cycle) {
            return Motif::DoubleCycle;
        }
        if (inner_cycle != outer_cycle) {
            return Motif::CycleChain;
        }
        return Motif::Other;
    }
    // Open: a pendant path from s0 ending in a loop back to the revisited node.
    if (inner_cycle && second == n - 1) {
        return Motif::CycleChain;
    }
    return Motif::Other;
}

void MotifTally::add(Motif motif) noexcept {
    if (motif == Motif::Other) {
        ++other;
    } else {
        ++counts[static_cast<std::size_t>(motif)];
    }
}

long MotifTally::total() const noexcept {
    long sum = 0;
    for (auto c : counts) {
        sum += c;
    }
    return sum;
}

std::array<double, kCanonicalMotifs> MotifTally::fractions() const noexcept {
    std::array<double, kCanonicalMotifs> out{};
    auto m = total();
    if (m == 0) {
        return out;
    }
    for (std::size_t j = 0; j < kCanonicalMotifs; ++j) {
        out[j] = static_cast<double>(counts[j]) / static_cast<double>(m);
    }
    return out;
}

void segment_and_classify_motifs(const DaySequence &day, MotifTally &tally) {
    for (const auto &segment : segment_walk(day.walk)) {
        tally.add(classify_segment(segment));
    }
}

MotifTally motif_tally(std::span<const Trip> trips) {
    MotifTally tally;
    for (auto day : split_days(trips)) {
        segment_and_classify_motifs(collapse_day(day), tally);
    }
    return tally;
}

OptionalValue motif_entropy(const MotifTally &tally) {
    if (tally.total() == 0) {
        return {0.0, true};
    }
    std::array<double, kCanonicalMotifs> counts{};
    for (std::size_t j = 0; j < kCanonicalMotifs; ++j) {
        counts[j] = static_cast<double>(tally.counts[j]);
    }
    return {shannon_entropy_bits(counts), false};
}

bool Tour::multimodal() const noexcept { return std::popcount(modes) >= 2; }

std::vector<Tour> extract_tours(std::span<const Trip> trips, const PipelineConfig &config) {
    std::vector<Tour> tours;
    std::size_t offset = 0;
    for (auto day : split_days(trips)) {
        std::optional<Tour> open;
        for (std::size_t k = 0; k < day.size(); ++k) {
            const auto &trip = day[k];
            const std::size_t index = offset + k;
            if (!open) {
                if (!config.is_anchor(trip.origin)) {
                    continue;
                }
                open = Tour{trip.origin, index, index, 0, false};
            }
            open->modes |= trip.modes;
            open->last_trip = index;
            if (config.is_anchor(trip.dest)) {
                open->closed = true;
                tours.push_back(*open);
                open.reset();
            }
        }
        if (open) {
            tours.push_back(*open);
        }
        offset += day.size();
    }
    return tours;
}

std::size_t closed_tour_count(std::span<const Tour> tours) noexcept {
    return static_cast<std::size_t>(std::count_if(tours.begin(), tours.end(), [](const Tour &t) { return t.closed; }));
}

std::vector<OptionalValue> anchor_shares(std::span<const Tour> tours, const PipelineConfig &config) {
    std::vector<OptionalValue> shares(config.anchors.size());
    auto closed = closed_tour_count(tours);
    if (closed == 0) {
        for (auto &s : shares) {
            s = {0.0, true};
        }
        return shares;
    }
    for (const auto &tour : tours) {
        if (!tour.closed) {
            continue;
        }
        for (std::size_t a = 0; a < config.anchors.size(); ++a) {
            if (config.anchors[a] == tour.anchor) {
                shares[a].value += 1.0;
            }
        }
    }
    for (auto &s : shares) {
        s.value /= static_cast<double>(closed);
    }
    return shares;
}

OptionalValue multimodal_fraction(std::span<const Tour> tours) {
    auto closed = closed_tour_count(tours);
    if (closed == 0) {
        return {0.0, true};
    }
    auto mm = std::count_if(tours.begin(), tours.end(), [](const Tour &t) { return t.closed && t.multimodal(); });
    return {static_cast<double>(mm) / static_cast<double>(closed), false};
}

CoTravel cotravel_fractions(std::span<const Trip> trips) {
    if (trips.empty()) {
        throw Error("empty_person", "co-travel fractions need at least one trip");
    }
    long solo = 0;
    long hh = 0;
    long nonhh = 0;
    for (const auto &trip : trips) {
        if (trip.n_hh_companions > 0) {
            ++hh;
        } else if (trip.n_nonhh_companions > 0) {
            ++nonhh;
        } else {
            ++solo;
        }
    }
    double n = static_cast<double>(trips.size());
    CoTravel out;
    out.f_solo = static_cast<double>(solo) / n;
    out.f_hh = static_cast<double>(hh) / n;
    out.f_nonhh = static_cast<double>(nonhh) / n;
    out.f_comp = static_cast<double>(hh + nonhh) / n;
    return out;
}

} // namespace mobdemo
