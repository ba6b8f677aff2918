#pragma once

#include "mobdemo/config.hpp"
#include "mobdemo/types.hpp"

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mobdemo {

inline const std::vector<std::string> kTripColumns{
    "person_id",  "household_id", "wave",         "day",          "origin_purpose",
    "dest_purpose", "modes",      "depart_hhmm",  "arrive_hhmm",  "duration_min",
    "distance_km", "n_hh_companions", "n_nonhh_companions"};
inline const std::vector<std::string> kPersonColumns{
    "person_id", "household_id", "wave", "age_years", "gender", "income", "n_children"};

/// A parsed but not yet validated trips.csv record. Purposes and modes stay
/// as raw strings; vocabulary resolution happens during cleaning.
struct TripRow {
    std::size_t line = 0;
    std::string person_id;
    std::string household_id;
    int wave = 0;
    Day day{};
    std::string origin_purpose;
    std::string dest_purpose;
    std::vector<std::string> modes;
    int depart_min = 0;
    int arrive_min = 0;
    double duration_min = 0.0;
    /// nullopt when blank or NaN (treated as un-geocodable).
    std::optional<double> distance_km;
    int n_hh_companions = 0;
    int n_nonhh_companions = 0;
};

struct RawPersonAttributes {
    std::optional<double> age_years;
    std::string gender;
    std::string income;
    std::optional<int> n_children;
};

struct PersonRow {
    std::size_t line = 0;
    std::string person_id;
    std::string household_id;
    int wave = 0;
    RawPersonAttributes attributes;
    Labels labels;
};

struct Reject {
    std::string table;
    std::size_t line = 0;
    std::string reason;
};

struct RawTables {
    std::vector<TripRow> trips;
    std::vector<PersonRow> persons;
    std::vector<Reject> rejects;
    std::vector<std::string> warnings;
};

/// Parses trips.csv / persons.csv. A missing required column throws
/// DataError("missing_column"); unparseable rows are appended to rejects
/// and parsing continues. Unknown extra columns produce a warning.
RawTables load_tables(const std::filesystem::path &trips_path,
                      const std::filesystem::path &persons_path);
void read_trip_rows(std::istream &in, RawTables &out);
void read_person_rows(std::istream &in, RawTables &out);

/// Exclusion categories, checked in this order; the first match wins.
inline constexpr std::array<std::string_view, 4> kExclusionCategories{
    "invalid_purpose", "blank_mode", "zero_or_missing_spatial", "negative_duration"};

struct CleaningReport {
    std::size_t input_rows = 0;
    std::size_t retained = 0;
    std::map<std::string, std::size_t> excluded;
    std::size_t persons_without_trips = 0;
    std::size_t trips_without_person = 0;
    std::vector<std::string> dropped_persons;

    std::size_t excluded_total() const noexcept;
};

struct CleanResult {
    std::vector<Trip> trips;
    CleaningReport report;
};

/// Applies the exclusion rules: missing/unknown origin or destination
/// purpose, blank or unknown mode, zero or missing distance, non-positive
/// duration. Retained rows become Trips in input order.
CleanResult clean_trips(std::span<const TripRow> rows, const PipelineConfig &config);

/// Re-expresses a cleaned trip as a row (used to check idempotence).
TripRow to_row(const Trip &trip, const PipelineConfig &config);

/// Bins raw attributes into the label classes. Negative age throws
/// Error("negative_age"); out-of-range or unparseable values give a
/// missing label.
Labels bin_labels(const RawPersonAttributes &raw);

std::optional<int> bin_age(double years);
std::optional<int> bin_income(std::string_view raw);
std::optional<int> bin_gender(std::string_view raw);
std::optional<int> bin_children(int count);

/// Groups trips under their persons, sorts by (day, depart), derives
/// household sizes, and drops persons without surviving trips (recorded
/// in the report).
std::vector<PersonRecord> assemble_persons(std::vector<Trip> trips, std::span<const PersonRow> persons,
                                           CleaningReport &report);

/// load_tables + clean_trips + assemble_persons.
struct IngestResult {
    std::vector<PersonRecord> persons;
    CleaningReport report;
    std::vector<Reject> rejects;
    std::vector<std::string> warnings;
};
IngestResult ingest_directory(const std::filesystem::path &dir, const PipelineConfig &config);

} // namespace mobdemo
