#include "mobdemo/ingest.hpp"

#include "mobdemo/csv.hpp"
#include "mobdemo/error.hpp"

#include <boost/tokenizer.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <tuple>
#include <unordered_map>

namespace mobdemo {

namespace {

std::string trim(std::string_view text) {
    auto begin = text.find_first_not_of(" \t\r");
    if (begin == std::string_view::npos) {
        return {};
    }
    auto end = text.find_last_not_of(" \t\r");
    return std::string{text.substr(begin, end - begin + 1)};
}

template <typename T>
std::optional<T> parse_number(std::string_view text) {
    auto value = trim(text);
    if (value.empty()) {
        return std::nullopt;
    }
    T out{};
    const char *begin = value.data();
    if (*begin == '+') {
        ++begin;
    }
    auto [ptr, ec] = std::from_chars(begin, value.data() + value.size(), out);
    if (ec != std::errc{} || ptr != value.data() + value.size()) {
        return std::nullopt;
    }
    return out;
}

bool is_blank_or_nan(std::string_view text) {
    auto value = to_lower_trimmed(text);
    return value.empty() || value == "nan" || value == "na" || value == "null";
}

/// Maps required column names to positions; throws on a missing column and
/// warns about extra ones.
std::vector<std::size_t> resolve_columns(const CsvReader &reader, const std::vector<std::string> &required,
                                         const std::string &table, std::vector<std::string> &warnings) {
    std::vector<std::size_t> positions;
    for (const auto &name : required) {
        auto pos = reader.column(name);
        if (!pos) {
            throw DataError("missing_column", table + " lacks required column '" + name + "'");
        }
        positions.push_back(*pos);
    }
    for (const auto &name : reader.header()) {
        if (std::find(required.begin(), required.end(), name) == required.end()) {
            warnings.push_back(table + ": unknown column '" + name + "' ignored");
        }
    }
    return positions;
}

std::size_t required_width(const std::vector<std::size_t> &positions) {
    return *std::max_element(positions.begin(), positions.end()) + 1;
}

} // namespace

void read_trip_rows(std::istream &in, RawTables &out) {
    CsvReader reader{in};
    auto col = resolve_columns(reader, kTripColumns, "trips", out.warnings);
    auto width = required_width(col);

    std::vector<std::string> fields;
    while (true) {
        try {
            if (!reader.next(fields)) {
                break;
            }
        } catch (const boost::escaped_list_error &) {
            out.rejects.push_back({"trips", reader.line_number(), "malformed_record"});
            continue;
        }
        auto reject = [&](std::string reason) {
            out.rejects.push_back({"trips", reader.line_number(), std::move(reason)});
        };
        if (fields.size() < width) {
            reject("wrong_field_count");
            continue;
        }
        auto field = [&](std::size_t i) -> const std::string & { return fields[col[i]]; };

        TripRow row;
        row.line = reader.line_number();
        row.person_id = trim(field(0));
        row.household_id = trim(field(1));
        if (row.person_id.empty() || row.household_id.empty()) {
            reject("missing_id");
            continue;
        }
        auto wave = parse_number<int>(field(2));
        if (!wave) {
            reject("bad_wave");
            continue;
        }
        row.wave = *wave;
        auto day = parse_date(trim(field(3)));
        if (!day) {
            reject("bad_day");
            continue;
        }
        row.day = *day;
        row.origin_purpose = trim(field(4));
        row.dest_purpose = trim(field(5));
        for (const auto &mode : split_list(field(6), '|')) {
            row.modes.push_back(mode);
        }
        auto depart = parse_clock(trim(field(7)));
        auto arrive = parse_clock(trim(field(8)));
        if (!depart || !arrive) {
            reject("bad_time");
            continue;
        }
        row.depart_min = *depart;
        row.arrive_min = *arrive;
        auto duration = parse_number<double>(field(9));
        if (!duration || !std::isfinite(*duration)) {
            reject("bad_duration");
            continue;
        }
        row.duration_min = *duration;
        if (!is_blank_or_nan(field(10))) {
            auto distance = parse_number<double>(field(10));
            if (!distance || !std::isfinite(*distance)) {
                reject("bad_distance");
                continue;
            }
            row.distance_km = *distance;
        }
        auto hh = is_blank_or_nan(field(11)) ? std::optional<int>{0} : parse_number<int>(field(11));
        auto nonhh = is_blank_or_nan(field(12)) ? std::optional<int>{0} : parse_number<int>(field(12));
        if (!hh || !nonhh || *hh < 0 || *nonhh < 0) {
            reject("bad_companions");
            continue;
        }
        row.n_hh_companions = *hh;
        row.n_nonhh_companions = *nonhh;
        out.trips.push_back(std::move(row));
    }
}

void read_person_rows(std::istream &in, RawTables &out) {
    CsvReader reader{in};
    auto col = resolve_columns(reader, kPersonColumns, "persons", out.warnings);
    auto width = required_width(col);

    std::vector<std::string> fields;
    while (true) {
        try {
            if (!reader.next(fields)) {
                break;
            }
        } catch (const boost::escaped_list_error &) {
            out.rejects.push_back({"persons", reader.line_number(), "malformed_record"});
            continue;
        }
        auto reject = [&](std::string reason) {
            out.rejects.push_back({"persons", reader.line_number(), std::move(reason)});
        };
        if (fields.size() < width) {
            reject("wrong_field_count");
            continue;
        }
        auto field = [&](std::size_t i) -> const std::string & { return fields[col[i]]; };

        PersonRow row;
        row.line = reader.line_number();
        row.person_id = trim(field(0));
        row.household_id = trim(field(1));
        if (row.person_id.empty() || row.household_id.empty()) {
            reject("missing_id");
            continue;
        }
        auto wave = parse_number<int>(field(2));
        if (!wave) {
            reject("bad_wave");
            continue;
        }
        row.wave = *wave;
        if (!is_blank_or_nan(field(3))) {
            auto age = parse_number<double>(field(3));
            if (!age || !std::isfinite(*age)) {
                reject("bad_age");
                continue;
            }
            row.attributes.age_years = *age;
        }
        row.attributes.gender = trim(field(4));
        row.attributes.income = trim(field(5));
        if (!is_blank_or_nan(field(6))) {
            auto children = parse_number<int>(field(6));
            if (!children) {
                reject("bad_children");
                continue;
            }
            row.attributes.n_children = *children;
        }
        try {
            row.labels = bin_labels(row.attributes);
        } catch (const Error &e) {
            reject(e.code());
            continue;
        }
        out.persons.push_back(std::move(row));
    }
}

RawTables load_tables(const std::filesystem::path &trips_path, const std::filesystem::path &persons_path) {
    RawTables out;
    std::ifstream trips{trips_path};
    if (!trips) {
        throw DataError("missing_file", "cannot open " + trips_path.string());
    }
    std::ifstream persons{persons_path};
    if (!persons) {
        throw DataError("missing_file", "cannot open " + persons_path.string());
    }
    read_trip_rows(trips, out);
    read_person_rows(persons, out);
    return out;
}

std::size_t CleaningReport::excluded_total() const noexcept {
    std::size_t total = 0;
    for (const auto &[_, count] : excluded) {
        total += count;
    }
    return total;
}

CleanResult clean_trips(std::span<const TripRow> rows, const PipelineConfig &config) {
    CleanResult result;
    result.report.input_rows = rows.size();
    for (auto category : kExclusionCategories) {
        result.report.excluded[std::string{category}] = 0;
    }

    for (const auto &row : rows) {
        auto origin = config.purposes.lookup(row.origin_purpose);
        auto dest = config.purposes.lookup(row.dest_purpose);
        if (!origin || !dest) {
            ++result.report.excluded["invalid_purpose"];
            continue;
        }
        std::uint64_t modes = 0;
        bool modes_ok = !row.modes.empty();
        for (const auto &raw : row.modes) {
            auto mode = config.modes.lookup(raw);
            if (!mode) {
                modes_ok = false;
                break;
            }
            modes |= std::uint64_t{1} << *mode;
        }
        if (!modes_ok) {
            ++result.report.excluded["blank_mode"];
            continue;
        }
        if (!row.distance_km || !(*row.distance_km > 0.0)) {
            ++result.report.excluded["zero_or_missing_spatial"];
            continue;
        }
        if (!(row.duration_min > 0.0)) {
            ++result.report.excluded["negative_duration"];
            continue;
        }

        Trip trip;
        trip.person_id = row.person_id;
        trip.household_id = row.household_id;
        trip.wave = row.wave;
        trip.day = row.day;
        trip.origin = *origin;
        trip.dest = *dest;
        trip.modes = modes;
        trip.depart_min = row.depart_min;
        trip.arrive_min = row.arrive_min;
        trip.duration_min = row.duration_min;
        trip.distance_km = *row.distance_km;
        trip.n_hh_companions = row.n_hh_companions;
        trip.n_nonhh_companions = row.n_nonhh_companions;
        result.trips.push_back(std::move(trip));
    }
    result.report.retained = result.trips.size();
    return result;
}

TripRow to_row(const Trip &trip, const PipelineConfig &config) {
    TripRow row;
    row.person_id = trip.person_id;
    row.household_id = trip.household_id;
    row.wave = trip.wave;
    row.day = trip.day;
    row.origin_purpose = config.purposes.code(trip.origin);
    row.dest_purpose = config.purposes.code(trip.dest);
    for (std::size_t m = 0; m < config.modes.size(); ++m) {
        if (trip.uses_mode(m)) {
            row.modes.push_back(config.modes.code(m));
        }
    }
    row.depart_min = trip.depart_min;
    row.arrive_min = trip.arrive_min;
    row.duration_min = trip.duration_min;
    row.distance_km = trip.distance_km;
    row.n_hh_companions = trip.n_hh_companions;
    row.n_nonhh_companions = trip.n_nonhh_companions;
    return row;
}

std::optional<int> bin_age(double years) {
    if (years < 0.0) {
        throw Error("negative_age", "age " + std::to_string(years) + " is negative");
    }
    if (!std::isfinite(years) || years > 120.0) {
        return std::nullopt;
    }
    constexpr std::array<double, 5> upper{12.0, 18.0, 35.0, 55.0, 75.0};
    auto it = std::upper_bound(upper.begin(), upper.end(), years);
    return static_cast<int>(it - upper.begin());
}

std::optional<int> bin_income(std::string_view raw) {
    std::string key;
    for (char c : to_lower_trimmed(raw)) {
        if (c != '$' && c != ',' && c != ' ' && c != '_') {
            key.push_back(c);
        }
    }
    if (key.empty()) {
        return std::nullopt;
    }
    if (auto dollars = parse_number<double>(key)) {
        if (*dollars < 0.0 || !std::isfinite(*dollars)) {
            return std::nullopt;
        }
        constexpr std::array<double, 4> upper{25000.0, 50000.0, 75000.0, 100000.0};
        auto it = std::upper_bound(upper.begin(), upper.end(), *dollars);
        return static_cast<int>(it - upper.begin());
    }
    static const std::unordered_map<std::string, int> kCategories{
        {"<25k", 0},          {"under25k", 0},       {"under25000", 0},      {"0-24999", 0},
        {"0-25k", 0},         {"25-50k", 1},         {"25k-49999", 1},       {"25000-49999", 1},
        {"25k-50k", 1},       {"50-75k", 2},         {"50k-74999", 2},       {"50000-74999", 2},
        {"50k-75k", 2},       {"75-100k", 3},        {"75k-99999", 3},       {"75000-99999", 3},
        {"75k-100k", 3},      {"100k+", 4},          {"100000+", 4},         {"100kormore", 4},
        {"100000ormore", 4},  {">=100k", 4}};
    auto it = kCategories.find(key);
    if (it == kCategories.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::optional<int> bin_gender(std::string_view raw) {
    static const std::unordered_map<std::string, int> kValues{
        {"male", 0},       {"m", 0},         {"man", 0},  {"female", 1},
        {"f", 1},          {"woman", 1},     {"non-binary", 2},
        {"nonbinary", 2},  {"non binary", 2}, {"nb", 2}};
    auto it = kValues.find(to_lower_trimmed(raw));
    if (it == kValues.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::optional<int> bin_children(int count) {
    if (count < 0) {
        return std::nullopt;
    }
    return std::min(count, 3);
}

Labels bin_labels(const RawPersonAttributes &raw) {
    Labels labels;
    if (raw.age_years) {
        labels[Task::Age] = bin_age(*raw.age_years);
    }
    labels[Task::Gender] = bin_gender(raw.gender);
    labels[Task::Income] = bin_income(raw.income);
    if (raw.n_children) {
        labels[Task::Children] = bin_children(*raw.n_children);
    }
    return labels;
}

std::vector<PersonRecord> assemble_persons(std::vector<Trip> trips, std::span<const PersonRow> persons,
                                           CleaningReport &report) {
    using Key = std::pair<int, std::string>;
    std::map<Key, std::size_t> person_index;
    std::map<Key, int> household_sizes;
    std::vector<PersonRecord> records;
    for (const auto &row : persons) {
        Key key{row.wave, row.person_id};
        if (person_index.contains(key)) {
            continue;
        }
        person_index.emplace(key, records.size());
        ++household_sizes[{row.wave, row.household_id}];
        PersonRecord record;
        record.person_id = row.person_id;
        record.household_id = row.household_id;
        record.wave = row.wave;
        record.labels = row.labels;
        records.push_back(std::move(record));
    }
    for (auto &record : records) {
        record.household_size = household_sizes[{record.wave, record.household_id}];
    }

    report.trips_without_person = 0;
    for (auto &trip : trips) {
        auto it = person_index.find({trip.wave, trip.person_id});
        if (it == person_index.end()) {
            ++report.trips_without_person;
            continue;
        }
        records[it->second].trips.push_back(std::move(trip));
    }

    std::vector<PersonRecord> kept;
    kept.reserve(records.size());
    report.persons_without_trips = 0;
    report.dropped_persons.clear();
    for (auto &record : records) {
        if (record.trips.empty()) {
            ++report.persons_without_trips;
            report.dropped_persons.push_back(record.person_id);
            continue;
        }
        std::stable_sort(record.trips.begin(), record.trips.end(), [](const Trip &a, const Trip &b) {
            return std::tie(a.day, a.depart_min) < std::tie(b.day, b.depart_min);
        });
        kept.push_back(std::move(record));
    }
    return kept;
}

IngestResult ingest_directory(const std::filesystem::path &dir, const PipelineConfig &config) {
    auto tables = load_tables(dir / "trips.csv", dir / "persons.csv");
    auto cleaned = clean_trips(tables.trips, config);
    IngestResult result;
    result.report = std::move(cleaned.report);
    result.persons = assemble_persons(std::move(cleaned.trips), tables.persons, result.report);
    result.rejects = std::move(tables.rejects);
    result.warnings = std::move(tables.warnings);
    return result;
}

} // namespace mobdemo
