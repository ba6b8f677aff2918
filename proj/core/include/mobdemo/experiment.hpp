#pragma once

#include "mobdemo/config.hpp"
#include "mobdemo/descriptors.hpp"
#include "mobdemo/feature_matrix.hpp"
#include "mobdemo/metrics.hpp"
#include "mobdemo/stats.hpp"
#include "mobdemo/trainer.hpp"
#include "mobdemo/types.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace mobdemo {

/// Cleaned persons with their descriptors, ready for experiments.
struct Cohort {
    PipelineConfig config;
    std::vector<PersonRecord> persons;
    std::vector<PersonDescriptors> descriptors;
};

Cohort prepare_cohort(std::vector<PersonRecord> persons, const PipelineConfig &config);

enum class SplitKind { Overall, CrossTemporal };

std::string_view split_name(SplitKind kind) noexcept;
/// "overall" or "cross"/"cross_temporal"; throws Error("bad_split").
SplitKind parse_split(std::string_view name);

struct SplitPlan {
    SplitKind kind = SplitKind::Overall;
    std::uint64_t seed = 0;
    double train = 0.7;
    double val = 0.1;
    int test_wave = 2023;
    std::vector<int> train_waves{2017, 2019};
};

struct Partition {
    std::vector<std::size_t> train;
    std::vector<std::size_t> val;
    std::vector<std::size_t> test;

    /// train followed by val: the pool that cross-validation folds cover.
    std::vector<std::size_t> pool() const;
};

/// Household-grouped split (a household is keyed by wave and household
/// id). Overall: shuffled households fill 70/10/20 by person count.
/// Cross-temporal: test is the test wave; train/val come from the train
/// waves in the same 7:1 ratio. Throws Error("missing_wave") when a needed
/// wave has no persons, Error("empty_dataset") for no persons.
Partition make_split(std::span<const PersonRecord> persons, const SplitPlan &plan);

struct FoldPlan {
    std::vector<std::vector<std::size_t>> folds; ///< positions into the pool
    std::vector<int> fold_of;                    ///< fold per pool position
};

/// Greedy multilabel stratification. Rows are visited rarest label
/// combination first (seeded tie-break) and placed in the fold with room
/// whose running per-class counts fall furthest below their targets.
/// Throws Error("too_few_rows") when k exceeds the pool size.
FoldPlan make_folds(std::span<const TaskTargets> pool_labels, int k, std::uint64_t seed);

struct ExperimentConfig {
    TrainConfig train;
    int folds = 5;
    std::uint64_t seed = 0;
    std::vector<Task> tasks{kAllTasks.begin(), kAllTasks.end()};
    int reliability_bins = kDefaultBins;
    /// 0 = MOBDEMO_THREADS or hardware concurrency.
    unsigned threads = 0;
};

/// One aggregated report cell: mean and sample sd over folds.
struct MetricCell {
    std::string split;
    std::string task;
    std::string setting; ///< feature set name or training fraction
    std::string model;   ///< "MT" or "ST"
    std::string metric;  ///< accuracy, auroc, nll, ece
    double mean = 0.0;
    double sd = 0.0;
    std::vector<double> values;
};

inline constexpr std::array<std::string_view, 4> kMetricNames{"accuracy", "auroc", "nll", "ece"};

struct TimingRecord {
    std::string setting;
    int fold = 0;
    std::string model;
    std::string task; ///< "all" for the multitask network
    double wall_ms = 0.0;
    int epochs = 0;
};

struct ReliabilityEntry {
    std::string task;
    std::string setting;
    std::string model;
    ReliabilityBins bins;
};

struct ExperimentReport {
    std::string kind; ///< "uplift" or "mtvst"
    std::string split;
    std::vector<MetricCell> cells;
    std::vector<ReliabilityEntry> reliability;
    std::vector<TimingRecord> timings;
    std::vector<std::string> notes;

    const MetricCell *find(std::string_view task, std::string_view setting, std::string_view model,
                           std::string_view metric) const;
};

/// Feature-set uplift: every nested feature set x fold trains the
/// multitask network; metrics on the fixed test set.
ExperimentReport run_uplift(const Cohort &cohort, const SplitPlan &plan, const ExperimentConfig &config,
                            std::span<const FeatureSet> sets = kAllFeatureSets);

inline constexpr std::array<double, 4> kDefaultFractions{1.0, 0.1, 0.01, 0.001};

/// Multitask vs single-task networks on C+ST features over training
/// fractions; timings are recorded separately from the metric cells.
ExperimentReport run_mt_vs_st(const Cohort &cohort, const SplitPlan &plan, const ExperimentConfig &config,
                              std::span<const double> fractions = kDefaultFractions);

struct SpearmanRow {
    std::string descriptor;
    std::string label;
    double rho = 0.0;
    double p_value = 1.0;
    std::size_t n = 0;
};

struct OlsModel {
    std::string dependent;
    std::string variant; ///< "M1" (with household size) or "M2"
    OlsResult fit;
};

struct DescriptiveReport {
    std::vector<SpearmanRow> spearman; ///< sorted by |rho| descending
    std::vector<OlsModel> ols;
    std::vector<std::string> notes;
};

/// Spearman between every descriptor column and each ordinal label
/// (gender as female = 1, male = 0; non-binary excluded), and OLS of
/// f_mm, f_comp, mean local clustering and the out-and-back fraction on
/// age, income, gender and (M1 only) household size.
DescriptiveReport run_descriptive_stats(const Cohort &cohort);

/// Worker count from MOBDEMO_THREADS, else hardware concurrency (>= 1).
unsigned default_thread_count();

/// Runs fn(0..n-1) on up to `threads` workers; exceptions are rethrown.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)> &fn);

/// Mean and sample standard deviation (0 for a single value).
std::pair<double, double> mean_sd(std::span<const double> values);

} // namespace mobdemo
