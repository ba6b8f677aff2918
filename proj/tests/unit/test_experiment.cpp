#include "fixtures.hpp"

#include "mobdemo/error.hpp"
#include "mobdemo/experiment.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <set>

using namespace mobdemo;
using namespace mobdemo::testing;

namespace {

/// Households of 1..4 persons cycling, spread over the three waves.
std::vector<PersonRecord> people(std::size_t n, std::vector<int> waves = {2017, 2019, 2023}) {
    std::vector<PersonRecord> out;
    std::size_t hh = 0;
    while (out.size() < n) {
        const std::size_t size = 1 + hh % 4;
        const int wave = waves[hh % waves.size()];
        for (std::size_t m = 0; m < size && out.size() < n; ++m) {
            PersonRecord p;
            p.household_id = "h" + std::to_string(hh);
            p.person_id = p.household_id + "-" + std::to_string(m);
            p.wave = wave;
            p.household_size = static_cast<int>(size);
            out.push_back(std::move(p));
        }
        ++hh;
    }
    return out;
}

std::set<std::pair<int, std::string>> households(const std::vector<PersonRecord> &persons,
                                                 const std::vector<std::size_t> &rows) {
    std::set<std::pair<int, std::string>> out;
    for (auto r : rows) {
        out.emplace(persons[r].wave, persons[r].household_id);
    }
    return out;
}

CohortSpec small_spec(std::size_t households, std::uint64_t seed) {
    auto spec = CohortSpec::defaults();
    spec.n_households = households;
    spec.seed = seed;
    return spec;
}

} // namespace

TEST(Split, OverallProportionsAndGrouping) {
    auto persons = people(1000);
    SplitPlan plan;
    plan.seed = 3;
    auto p = make_split(persons, plan);
    EXPECT_EQ(p.train.size() + p.val.size() + p.test.size(), 1000u);
    EXPECT_NEAR(static_cast<double>(p.train.size()), 700.0, 8.0);
    EXPECT_NEAR(static_cast<double>(p.val.size()), 100.0, 8.0);
    EXPECT_NEAR(static_cast<double>(p.test.size()), 200.0, 8.0);

    auto tr = households(persons, p.train);
    auto va = households(persons, p.val);
    auto te = households(persons, p.test);
    for (const auto &h : tr) {
        EXPECT_FALSE(va.contains(h));
        EXPECT_FALSE(te.contains(h));
    }
    for (const auto &h : va) {
        EXPECT_FALSE(te.contains(h));
    }
    EXPECT_EQ(p.pool().size(), p.train.size() + p.val.size());
}

TEST(Split, SameSeedSameSplit) {
    auto persons = people(300);
    SplitPlan plan;
    plan.seed = 9;
    auto a = make_split(persons, plan);
    auto b = make_split(persons, plan);
    EXPECT_EQ(a.train, b.train);
    EXPECT_EQ(a.test, b.test);
    plan.seed = 10;
    auto c = make_split(persons, plan);
    EXPECT_NE(a.train, c.train);
}

TEST(Split, CrossTemporalUsesOnlyTestWaveForTest) {
    auto persons = people(900);
    SplitPlan plan;
    plan.kind = SplitKind::CrossTemporal;
    plan.seed = 1;
    auto p = make_split(persons, plan);
    std::size_t wave2023 = 0;
    for (const auto &person : persons) {
        wave2023 += person.wave == 2023;
    }
    EXPECT_EQ(p.test.size(), wave2023);
    for (auto r : p.test) {
        EXPECT_EQ(persons[r].wave, 2023);
    }
    for (auto r : p.pool()) {
        EXPECT_NE(persons[r].wave, 2023);
    }
    const double ratio = static_cast<double>(p.train.size()) / static_cast<double>(p.pool().size());
    EXPECT_NEAR(ratio, 7.0 / 8.0, 0.02);

    auto no_test_wave = people(100, {2017, 2019});
    EXPECT_THROW(make_split(no_test_wave, plan), Error);
    EXPECT_THROW(make_split(std::vector<PersonRecord>{}, SplitPlan{}), Error);
}

TEST(Split, ParseNames) {
    EXPECT_EQ(parse_split("overall"), SplitKind::Overall);
    EXPECT_EQ(parse_split("cross"), SplitKind::CrossTemporal);
    EXPECT_EQ(parse_split("cross-temporal"), SplitKind::CrossTemporal);
    EXPECT_THROW(parse_split("random"), Error);
}

TEST(Folds, EqualSizesAndCoverage) {
    std::vector<TaskTargets> labels(100);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        labels[i] = {static_cast<int>(i % 6), static_cast<int>(i % 3), static_cast<int>(i % 5),
                     static_cast<int>(i % 4)};
    }
    auto plan = make_folds(labels, 5, 4);
    ASSERT_EQ(plan.folds.size(), 5u);
    std::vector<int> seen(100, 0);
    for (std::size_t f = 0; f < 5; ++f) {
        EXPECT_EQ(plan.folds[f].size(), 20u);
        for (auto r : plan.folds[f]) {
            ++seen[r];
            EXPECT_EQ(plan.fold_of[r], static_cast<int>(f));
        }
    }
    for (int s : seen) {
        EXPECT_EQ(s, 1);
    }
    EXPECT_THROW(make_folds(std::span<const TaskTargets>(labels.data(), 3), 5, 1), Error);
}

TEST(Folds, StratifiesEachTask) {
    Rng rng{12};
    std::vector<TaskTargets> labels(1000);
    for (auto &l : labels) {
        for (std::size_t t = 0; t < kNumTasks; ++t) {
            std::uniform_int_distribution<int> cls(0, kTaskClasses[t] - 1);
            l[t] = cls(rng);
        }
        // unbalanced age, a few masked incomes
        if (l[0] > 2 && rng() % 3 != 0) {
            l[0] = 0;
        }
        if (rng() % 10 == 0) {
            l[2] = -1;
        }
    }
    auto plan = make_folds(labels, 5, 77);
    for (std::size_t t = 0; t < kNumTasks; ++t) {
        for (int c = 0; c < kTaskClasses[t]; ++c) {
            double overall = 0.0, known = 0.0;
            for (const auto &l : labels) {
                known += l[t] >= 0;
                overall += l[t] == c;
            }
            for (const auto &fold : plan.folds) {
                double in = 0.0, fk = 0.0;
                for (auto r : fold) {
                    fk += labels[r][t] >= 0;
                    in += labels[r][t] == c;
                }
                EXPECT_NEAR(in / fk, overall / known, 0.05) << "task " << t << " class " << c;
            }
        }
    }
}

TEST(MeanSd, SampleStandardDeviation) {
    std::vector<double> v{1.0, 2.0, 3.0, 4.0};
    auto [m, s] = mean_sd(v);
    EXPECT_DOUBLE_EQ(m, 2.5);
    EXPECT_NEAR(s, std::sqrt(5.0 / 3.0), 1e-15);
    std::vector<double> one{7.0};
    EXPECT_EQ(mean_sd(one).second, 0.0);
}

TEST(ParallelFor, RunsEveryIndexAndRethrows) {
    std::vector<int> hits(50, 0);
    parallel_for(hits.size(), 3, [&](std::size_t i) { hits[i] += 1; });
    EXPECT_EQ(std::accumulate(hits.begin(), hits.end(), 0), 50);
    EXPECT_THROW(parallel_for(10, 2,
                              [](std::size_t i) {
                                  if (i == 7) {
                                      throw Error("boom", "x");
                                  }
                              }),
                 Error);
}

TEST(Uplift, ReportShape) {
    auto cohort = cohort_from_spec(small_spec(120, 5));
    SplitPlan plan;
    plan.seed = 2;
    auto config = quick_experiment(8, 2);
    config.folds = 2;
    auto report = run_uplift(cohort, plan, config);
    EXPECT_EQ(report.kind, "uplift");
    EXPECT_EQ(report.cells.size(), 4u * 5u * 4u);
    EXPECT_EQ(report.reliability.size(), 4u * 5u);
    EXPECT_EQ(report.timings.size(), 5u * 2u);
    for (const auto &cell : report.cells) {
        EXPECT_EQ(cell.values.size(), 2u);
        EXPECT_EQ(cell.model, "MT");
    }
    const auto *acc = report.find("age", "+CT", "MT", "accuracy");
    ASSERT_NE(acc, nullptr);
    EXPECT_GE(acc->mean, 0.0);
    EXPECT_LE(acc->mean, 1.0);
    EXPECT_EQ(report.find("age", "+XX", "MT", "accuracy"), nullptr);

    auto again = run_uplift(cohort, plan, config);
    for (std::size_t i = 0; i < report.cells.size(); ++i) {
        EXPECT_EQ(report.cells[i].values, again.cells[i].values);
    }
}

TEST(MtVsSt, TinyFractionsStillComplete) {
    auto cohort = cohort_from_spec(small_spec(150, 6));
    SplitPlan plan;
    plan.seed = 2;
    auto config = quick_experiment(3, 2);
    config.folds = 2;
    std::vector<double> fractions{1.0, 0.001};
    auto report = run_mt_vs_st(cohort, plan, config, fractions);
    EXPECT_EQ(report.cells.size(), 2u * 2u * 4u * 4u);
    const auto *full = report.find("income", "1", "ST", "nll");
    ASSERT_NE(full, nullptr);
    EXPECT_TRUE(std::isfinite(full->mean));
    // 0.001 of a ~200 person pool keeps nobody: cells are NaN and noted.
    const auto *tiny = report.find("income", "0.001", "MT", "nll");
    ASSERT_NE(tiny, nullptr);
    EXPECT_TRUE(std::isnan(tiny->mean));
    EXPECT_FALSE(report.notes.empty());
}

TEST(Stats, DescriptiveReportOnCohort) {
    auto cohort = cohort_from_spec(small_spec(300, 4));
    auto report = run_descriptive_stats(cohort);
    ASSERT_FALSE(report.spearman.empty());
    for (std::size_t i = 1; i < report.spearman.size(); ++i) {
        EXPECT_GE(std::abs(report.spearman[i - 1].rho), std::abs(report.spearman[i].rho));
    }
    EXPECT_EQ(report.ols.size(), 8u);
}
