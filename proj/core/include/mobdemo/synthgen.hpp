#pragma once

#include "mobdemo/ingest.hpp"
#include "mobdemo/types.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace mobdemo {

/// Per-task class probabilities (age 6, gender 3, income 5, children 4).
using LabelMarginals = std::array<std::vector<double>, kNumTasks>;

/// Default label marginals of one survey wave.
LabelMarginals reference_marginals(int wave);

struct WaveSpec {
    int wave = 0;
    double weight = 1.0; ///< relative share of households
    LabelMarginals marginals;
    Day field_start{};
    int field_days = 60;
    /// Knob shifts for this wave. "weekend" is a relative change of the
    /// weekend-day probability (0.3 = +30%); every other knob is additive.
    std::map<std::string, double> shift;
    double effect_scale = 1.0; ///< multiplies every label effect in this wave
};

/// Knob values before label effects and person noise.
struct BehaviorParams {
    std::map<std::string, double> knobs;
    double weekend_probability = 2.0 / 7.0;
    double effect_scale = 1.0;
};

struct CohortSpec {
    std::size_t n_households = 1000;
    std::uint64_t seed = 1;
    /// Scales person-level heterogeneity around the planted effects.
    double noise = 1.0;
    /// Equicorrelation of the latent label variables (Gaussian copula).
    double label_correlation = 0.0;
    int diary_days = 3;
    std::vector<WaveSpec> waves;
    std::map<std::string, double> baseline;
    /// (label, knob) -> coefficient on the label score in [-1, 1].
    std::map<std::pair<Task, std::string>, double> effects;
    /// Exclusion category -> fraction of trip rows corrupted to trigger it.
    std::map<std::string, double> dirty;
    std::array<double, kNumTasks> missing_labels{};

    /// Throws Error("bad_spec") for marginals that do not sum to 1, unknown
    /// knobs or categories, or out-of-range fractions.
    void validate() const;

    /// Reference waves and marginals, default baselines and the default
    /// effect table.
    static CohortSpec defaults();
};

/// Every knob the generator understands.
std::vector<std::string> known_knobs();
std::map<std::string, double> default_baseline();
std::map<std::pair<Task, std::string>, double> default_effects();

/// INI / flat-TOML text:
///   [cohort] n_households, seed, noise, label_correlation, diary_days,
///            effects = default|none
///   [waves] tags, weights
///   [marginals.<wave>] age, gender, income, children
///   [baseline] <knob> = value
///   [effects] <label>.<knob> = coefficient
///   [wave_shift.<wave>] <knob> = shift, effect_scale
///   [dirty] <category> = fraction
///   [missing_labels] <task> = fraction
CohortSpec parse_cohort_spec(std::istream &in);
CohortSpec load_cohort_spec(const std::filesystem::path &path);

/// Behavior parameters for households of one wave.
BehaviorParams wave_shift(const CohortSpec &spec, int wave);

struct GeneratedCohort {
    std::vector<TripRow> trips;
    std::vector<PersonRow> persons;
    std::map<std::string, std::size_t> dirty_counts;
    std::map<std::string, std::size_t> missing_label_counts;
};

/// Deterministic per seed; each household draws from its own derived seed.
/// Purposes and modes use the default vocabulary codes.
GeneratedCohort generate(const CohortSpec &spec);

void write_trips_csv(std::ostream &out, const std::vector<TripRow> &trips);
void write_persons_csv(std::ostream &out, const std::vector<PersonRow> &persons);

/// Writes trips.csv, persons.csv and manifest.json (spec echo, planted
/// effects, corruption counts). A non-empty run_id is stamped into each
/// file as a "# run_id:" comment line / JSON field.
void write_cohort(const std::filesystem::path &dir, const CohortSpec &spec, const GeneratedCohort &cohort,
                  const std::string &run_id = {});

} // namespace mobdemo
