#include "mobdemo/error.hpp"
#include "mobdemo/ingest.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace mobdemo;

namespace {

const std::string kTripHeader =
    "person_id,household_id,wave,day,origin_purpose,dest_purpose,modes,depart_hhmm,arrive_hhmm,duration_min,"
    "distance_km,n_hh_companions,n_nonhh_companions\n";
const std::string kPersonHeader = "person_id,household_id,wave,age_years,gender,income,n_children\n";

RawTables parse_trips(const std::string &body) {
    RawTables t;
    std::istringstream in{kTripHeader + body};
    read_trip_rows(in, t);
    return t;
}

TripRow row(std::string origin, std::string dest, std::vector<std::string> modes, double distance,
            double duration) {
    TripRow r;
    r.person_id = "p";
    r.household_id = "h";
    r.wave = 2019;
    r.day = *parse_date("2019-04-16");
    r.origin_purpose = std::move(origin);
    r.dest_purpose = std::move(dest);
    r.modes = std::move(modes);
    r.depart_min = 480;
    r.arrive_min = 490;
    r.duration_min = duration;
    r.distance_km = distance;
    return r;
}

} // namespace

TEST(Ingest, WellFormedRowsParse) {
    auto t = parse_trips("a,h,2019,2019-04-16,home,work,drive,08:00,08:20,20,5.0,0,0\n"
                         "a,h,2019,2019-04-16,work,home,drive,17:00,17:20,20,5.0,0,0\n"
                         "a,h,2019,2019-04-17,home,shopping,walk|transit,09:00,09:20,20,1.5,1,0\n");
    EXPECT_EQ(t.trips.size(), 3u);
    EXPECT_TRUE(t.rejects.empty());
    EXPECT_EQ(t.trips[2].modes.size(), 2u);
    EXPECT_EQ(t.trips[0].depart_min, 480);
}

TEST(Ingest, NonNumericDistanceIsRejected) {
    auto t = parse_trips("a,h,2019,2019-04-16,home,work,drive,08:00,08:20,20,far,0,0\n");
    EXPECT_TRUE(t.trips.empty());
    ASSERT_EQ(t.rejects.size(), 1u);
    EXPECT_EQ(t.rejects[0].reason, "bad_distance");
    EXPECT_EQ(t.rejects[0].line, 2u);
}

TEST(Ingest, UnknownColumnsWarnAndParse) {
    RawTables t;
    std::istringstream in{"extra," + kTripHeader + "x,a,h,2019,2019-04-16,home,work,drive,08:00,08:20,20,5,0,0\n"};
    read_trip_rows(in, t);
    EXPECT_EQ(t.trips.size(), 1u);
    EXPECT_EQ(t.warnings.size(), 1u);
}

TEST(Ingest, MissingColumnThrows) {
    RawTables t;
    std::istringstream in{"person_id,household_id\np,h\n"};
    EXPECT_THROW(read_trip_rows(in, t), DataError);
}

TEST(Cleaning, ExclusionCategories) {
    std::vector<TripRow> rows{
        row("home", "work", {"drive"}, 2.0, 10.0),   // retained
        row("home", "work", {"drive"}, 0.0, 10.0),   // zero distance
        row("home", "work", {"drive"}, 2.0, -5.0),   // negative duration
        row("home", "", {"drive"}, 2.0, 10.0),       // blank purpose
        row("home", "work", {}, 2.0, 10.0),          // blank mode
    };
    rows.push_back(row("home", "work", {"drive"}, 2.0, 10.0));
    rows.back().distance_km.reset(); // un-geocodable
    auto result = clean_trips(rows, PipelineConfig::defaults());
    ASSERT_EQ(result.trips.size(), 1u);
    const auto &ex = result.report.excluded;
    EXPECT_EQ(ex.at("zero_or_missing_spatial"), 2u);
    EXPECT_EQ(ex.at("negative_duration"), 1u);
    EXPECT_EQ(ex.at("invalid_purpose"), 1u);
    EXPECT_EQ(ex.at("blank_mode"), 1u);
    EXPECT_EQ(result.report.retained + result.report.excluded_total(), result.report.input_rows);
}

TEST(Cleaning, IsIdempotent) {
    std::vector<TripRow> rows{row("home", "work", {"drive", "walk"}, 2.0, 10.0), row("work", "store", {"bus"}, 1.0, 3.0),
                              row("x", "home", {"drive"}, 2.0, 10.0)};
    auto config = PipelineConfig::defaults();
    auto first = clean_trips(rows, config);
    std::vector<TripRow> again;
    for (const auto &t : first.trips) {
        again.push_back(to_row(t, config));
    }
    auto second = clean_trips(again, config);
    EXPECT_EQ(second.trips, first.trips);
    EXPECT_EQ(second.report.excluded_total(), 0u);
}

TEST(Labels, Bins) {
    EXPECT_EQ(bin_age(34), 2);
    EXPECT_EQ(bin_age(11.9), 0);
    EXPECT_EQ(bin_age(12), 1);
    EXPECT_EQ(bin_age(80), 5);
    EXPECT_EQ(bin_children(7), 3);
    EXPECT_EQ(bin_children(2), 2);
    EXPECT_FALSE(bin_income("").has_value());
    EXPECT_EQ(bin_income("30000"), 1);
    EXPECT_EQ(bin_gender("Female"), 1);
    EXPECT_THROW(bin_age(-1), Error);
}

TEST(Ingest, EmptyIncomeKeepsPerson) {
    auto dir = std::filesystem::temp_directory_path() / "mobdemo_ingest_test";
    std::filesystem::create_directories(dir);
    {
        std::ofstream t{dir / "trips.csv"};
        t << kTripHeader << "a,h,2019,2019-04-16,home,work,drive,08:00,08:20,20,5.0,0,0\n"
          << "b,h,2019,2019-04-16,home,work,drive,08:00,08:20,20,0,0,0\n";
        std::ofstream p{dir / "persons.csv"};
        p << kPersonHeader << "a,h,2019,40,male,,1\nb,h,2019,41,female,80000,1\n";
    }
    auto result = ingest_directory(dir, PipelineConfig::defaults());
    ASSERT_EQ(result.persons.size(), 1u);
    EXPECT_FALSE(result.persons[0].labels[Task::Income].has_value());
    EXPECT_EQ(result.persons[0].labels[Task::Age], 3);
    EXPECT_EQ(result.persons[0].household_size, 2);
    EXPECT_EQ(result.report.persons_without_trips, 1u);
    std::filesystem::remove_all(dir);
}
