#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <iosfwd>
#include <vector>

namespace mobdemo {

/// Predicted class distributions (one row per sample) and true labels.
struct PredictionBatch {
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> probs;
    std::vector<int> labels;

    std::size_t size() const noexcept { return labels.size(); }
    int classes() const noexcept { return static_cast<int>(probs.cols()); }
    /// argmax, first index on ties.
    int predicted(std::size_t i) const;
    double confidence(std::size_t i) const;

    /// Throws Error("bad_batch") when rows do not sum to 1 within 1e-9,
    /// contain negatives, or labels fall outside [0, K).
    void validate() const;
};

double top1_accuracy(const PredictionBatch &batch);

struct AurocResult {
    double macro = 0.0;
    std::vector<double> per_class; ///< NaN for skipped classes
    std::vector<int> skipped;      ///< classes lacking positives or negatives
};

/// One-vs-rest AUC per class from the rank statistic (ties count 1/2),
/// averaged over eligible classes. Throws Error("degenerate_labels") when
/// no class is eligible.
AurocResult macro_auroc_ovr(const PredictionBatch &batch);

inline constexpr double kProbabilityFloor = 1e-12;

/// Mean negative natural-log probability of the true class, clamped to
/// [1e-12, 1].
double nll(const PredictionBatch &batch);

inline constexpr int kDefaultBins = 15;

struct ReliabilityBins {
    int bins = kDefaultBins;
    std::size_t total = 0;
    std::vector<std::size_t> count;
    std::vector<double> accuracy;   ///< 0 for empty bins
    std::vector<double> confidence; ///< 0 for empty bins

    double lower(int m) const noexcept { return static_cast<double>(m) / bins; }
    double upper(int m) const noexcept { return static_cast<double>(m + 1) / bins; }
};

/// Zero-based index of the bin ((m)/M, (m+1)/M] holding a confidence.
int confidence_bin(double confidence, int bins) noexcept;

ReliabilityBins reliability_bins(const PredictionBatch &batch, int bins = kDefaultBins);
/// Bin-weighted mean of |acc - conf|.
double ece(const ReliabilityBins &bins);
double ece(const PredictionBatch &batch, int bins = kDefaultBins);

/// bin_lo,bin_hi,count,acc,conf
void write_reliability_csv(std::ostream &out, const ReliabilityBins &bins);

struct MetricSummary {
    double accuracy = 0.0;
    double auroc = 0.0;
    double nll = 0.0;
    double ece = 0.0;
    std::vector<int> auroc_skipped;
};

MetricSummary evaluate_batch(const PredictionBatch &batch);

} // namespace mobdemo
