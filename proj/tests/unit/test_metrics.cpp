#include "oracles.hpp"

#include "mobdemo/error.hpp"
#include "mobdemo/metrics.hpp"
#include "mobdemo/rng.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

using namespace mobdemo;
using namespace mobdemo::testing;

namespace {

PredictionBatch batch_of(std::vector<std::vector<double>> rows, std::vector<int> labels) {
    PredictionBatch b;
    b.probs.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t k = 0; k < rows[i].size(); ++k) {
            b.probs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
        }
    }
    b.labels = std::move(labels);
    return b;
}

PredictionBatch uniform(std::size_t n, int k, int label) {
    PredictionBatch b;
    b.probs = RowMatrix::Constant(static_cast<Eigen::Index>(n), k, 1.0 / k);
    b.labels.assign(n, label);
    return b;
}

} // namespace

TEST(Accuracy, Counts) {
    auto b = batch_of({{0.9, 0.1}, {0.2, 0.8}, {0.6, 0.4}, {0.3, 0.7}, {0.5, 0.5}}, {0, 1, 0, 0, 1});
    EXPECT_DOUBLE_EQ(top1_accuracy(b), 0.6);
    b.labels = {0, 1, 0, 1, 0};
    EXPECT_EQ(top1_accuracy(b), 1.0);
    b.labels = {1, 0, 1, 0, 1};
    EXPECT_EQ(top1_accuracy(b), 0.0);
}

TEST(Auroc, HandCases) {
    auto separated = batch_of({{0.9, 0.1}, {0.8, 0.2}, {0.3, 0.7}, {0.1, 0.9}}, {0, 0, 1, 1});
    EXPECT_EQ(macro_auroc_ovr(separated).macro, 1.0);
    auto tied = uniform(6, 2, 0);
    tied.labels = {0, 1, 0, 1, 0, 1};
    EXPECT_EQ(macro_auroc_ovr(tied).macro, 0.5);
    auto b = batch_of({{0.1, 0.9}, {0.2, 0.8}, {0.8, 0.2}}, {1, 0, 1});
    EXPECT_EQ(macro_auroc_ovr(b).per_class[1], 0.5);
}

TEST(Auroc, SkipsAbsentClasses) {
    auto b = batch_of({{0.7, 0.2, 0.1}, {0.2, 0.7, 0.1}, {0.6, 0.3, 0.1}}, {0, 1, 0});
    auto r = macro_auroc_ovr(b);
    EXPECT_EQ(r.skipped, std::vector<int>{2});
    EXPECT_TRUE(std::isnan(r.per_class[2]));
    auto one_class = uniform(4, 3, 1);
    try {
        macro_auroc_ovr(one_class);
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.code(), "degenerate_labels");
    }
}

TEST(Auroc, MatchesPairCountingOnRandomBatches) {
    Rng rng{2024};
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 2 + rng() % 120;
        const int k = 2 + static_cast<int>(rng() % 5);
        PredictionBatch b;
        b.probs.resize(static_cast<Eigen::Index>(n), k);
        for (std::size_t i = 0; i < n; ++i) {
            double sum = 0.0;
            for (int c = 0; c < k; ++c) {
                // Coarse values so ties are common.
                sum += b.probs(static_cast<Eigen::Index>(i), c) = static_cast<double>(1 + rng() % 5);
            }
            b.probs.row(static_cast<Eigen::Index>(i)) /= sum;
            b.labels.push_back(static_cast<int>(rng() % static_cast<std::uint64_t>(k)));
        }
        if (std::all_of(b.labels.begin(), b.labels.end(), [&](int y) { return y == b.labels[0]; })) {
            continue;
        }
        EXPECT_EQ(macro_auroc_ovr(b).macro, pairwise_macro_auc(b));
    }
}

TEST(Nll, Values) {
    EXPECT_NEAR(nll(uniform(1, 5, 2)), std::log(5.0), 1e-12);
    auto perfect = batch_of({{1.0, 0.0}, {0.0, 1.0}}, {0, 1});
    EXPECT_EQ(nll(perfect), 0.0);
    auto two = batch_of({{0.5, 0.5}, {0.75, 0.25}}, {0, 1});
    EXPECT_NEAR(nll(two), 1.03972, 1e-5);
    auto confident_wrong = batch_of({{1.0, 0.0}}, {1});
    EXPECT_NEAR(nll(confident_wrong), -std::log(1e-12), 1e-9);
}

TEST(Ece, HandValues) {
    // 10 samples at confidence 0.75, 6 correct.
    PredictionBatch b;
    b.probs.resize(10, 2);
    for (int i = 0; i < 10; ++i) {
        b.probs.row(i) << 0.75, 0.25;
        b.labels.push_back(i < 6 ? 0 : 1);
    }
    EXPECT_NEAR(ece(b), 0.15, 1e-12);

    // Half the samples with gap 0.2, half with gap 0.
    auto mixed = batch_of({{0.8, 0.2}, {0.8, 0.2}, {0.8, 0.2}, {0.8, 0.2}, {0.8, 0.2},
                           {0.5, 0.5}, {0.5, 0.5}},
                          {0, 0, 0, 0, 0, 0, 1});
    // bin of 0.8: 5 samples, acc 1, conf 0.8; bin of 0.5: 2 samples, acc 0.5
    EXPECT_NEAR(ece(mixed), 5.0 / 7.0 * 0.2, 1e-12);

    auto all_right = uniform(20, 5, 0);
    EXPECT_NEAR(ece(all_right), 0.8, 1e-12);
}

TEST(Ece, Bins) {
    EXPECT_EQ(confidence_bin(0.2, 5), 0);
    EXPECT_EQ(confidence_bin(0.2, 15), 2);
    EXPECT_EQ(confidence_bin(0.95, 15), 14);
    EXPECT_EQ(confidence_bin(1.0, 15), 14);
    PredictionBatch b;
    b.probs.resize(30, 2);
    for (int i = 0; i < 30; ++i) {
        b.probs.row(i) << 0.95, 0.05;
        b.labels.push_back(0);
    }
    auto bins = reliability_bins(b);
    EXPECT_EQ(bins.count[14], 30u);
    std::size_t total = 0;
    for (auto c : bins.count) {
        total += c;
    }
    EXPECT_EQ(total, 30u);
    EXPECT_EQ(bins.accuracy[3], 0.0);
}

TEST(Ece, RecomputedFromBinsMatches) {
    Rng rng{8};
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 1 + rng() % 300;
        PredictionBatch b;
        b.probs.resize(static_cast<Eigen::Index>(n), 3);
        for (std::size_t i = 0; i < n; ++i) {
            double a = static_cast<double>(rng() % 1000 + 1);
            double c = static_cast<double>(rng() % 1000 + 1);
            double d = static_cast<double>(rng() % 1000 + 1);
            b.probs.row(static_cast<Eigen::Index>(i)) << a, c, d;
            b.probs.row(static_cast<Eigen::Index>(i)) /= a + c + d;
            b.labels.push_back(static_cast<int>(rng() % 3));
        }
        auto bins = reliability_bins(b);
        double sum = 0.0;
        for (int m = 0; m < bins.bins; ++m) {
            const auto i = static_cast<std::size_t>(m);
            sum += static_cast<double>(bins.count[i]) / static_cast<double>(n) *
                   std::abs(bins.accuracy[i] - bins.confidence[i]);
        }
        EXPECT_NEAR(ece(b), sum, 1e-14);
        EXPECT_EQ(ece(b), ece(bins));
    }
}

TEST(Metrics, RejectBadBatches) {
    auto b = batch_of({{0.5, 0.6}}, {0});
    EXPECT_THROW(b.validate(), Error);
    PredictionBatch empty;
    empty.probs.resize(0, 3);
    EXPECT_THROW(nll(empty), Error);
}

TEST(Metrics, ReliabilityCsv) {
    auto b = uniform(4, 4, 0);
    std::ostringstream out;
    write_reliability_csv(out, reliability_bins(b, 4));
    const auto text = out.str();
    EXPECT_EQ(text.rfind("bin_lo,bin_hi,count,acc,conf\n", 0), 0u);
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 5);
}
