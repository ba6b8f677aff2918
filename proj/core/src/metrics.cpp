#include "mobdemo/metrics.hpp"

#include "mobdemo/csv.hpp"
#include "mobdemo/error.hpp"
#include "mobdemo/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace mobdemo {

int PredictionBatch::predicted(std::size_t i) const {
    Eigen::Index best = 0;
    probs.row(static_cast<Eigen::Index>(i)).maxCoeff(&best);
    return static_cast<int>(best);
}

double PredictionBatch::confidence(std::size_t i) const { return probs.row(static_cast<Eigen::Index>(i)).maxCoeff(); }

void PredictionBatch::validate() const {
    if (static_cast<std::size_t>(probs.rows()) != labels.size()) {
        throw Error("bad_batch", "probability rows and labels differ in length");
    }
    for (Eigen::Index i = 0; i < probs.rows(); ++i) {
        if ((probs.row(i).array() < 0.0).any() || std::abs(probs.row(i).sum() - 1.0) > 1e-9) {
            throw Error("bad_batch", "row " + std::to_string(i) + " is not a probability vector");
        }
        auto y = labels[static_cast<std::size_t>(i)];
        if (y < 0 || y >= probs.cols()) {
            throw Error("bad_batch", "label out of range at row " + std::to_string(i));
        }
    }
}

double top1_accuracy(const PredictionBatch &batch) {
    if (batch.size() == 0) {
        throw Error("empty_batch", "accuracy of an empty batch");
    }
    std::size_t correct = 0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        correct += batch.predicted(i) == batch.labels[i] ? 1 : 0;
    }
    return static_cast<double>(correct) / static_cast<double>(batch.size());
}

AurocResult macro_auroc_ovr(const PredictionBatch &batch) {
    const auto n = batch.size();
    const int k = batch.classes();
    AurocResult out;
    out.per_class.assign(static_cast<std::size_t>(k), std::numeric_limits<double>::quiet_NaN());

    std::vector<double> scores(n);
    double sum = 0.0;
    int eligible = 0;
    for (int c = 0; c < k; ++c) {
        double positives = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            scores[i] = batch.probs(static_cast<Eigen::Index>(i), c);
            positives += batch.labels[i] == c ? 1.0 : 0.0;
        }
        const double negatives = static_cast<double>(n) - positives;
        if (positives == 0.0 || negatives == 0.0) {
            out.skipped.push_back(c);
            continue;
        }
        auto ranks = average_ranks(scores);
        double rank_sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (batch.labels[i] == c) {
                rank_sum += ranks[i];
            }
        }
        // Mann-Whitney U: positive/negative pairs won, ties counted as 1/2.
        double u = rank_sum - positives * (positives + 1.0) / 2.0;
        double auc = u / (positives * negatives);
        out.per_class[static_cast<std::size_t>(c)] = auc;
        sum += auc;
        ++eligible;
    }
    if (eligible == 0) {
        throw Error("degenerate_labels", "no class has both positive and negative samples");
    }
    out.macro = sum / eligible;
    return out;
}

double nll(const PredictionBatch &batch) {
    if (batch.size() == 0) {
        throw Error("empty_batch", "NLL of an empty batch");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        double p = batch.probs(static_cast<Eigen::Index>(i), batch.labels[i]);
        total -= std::log(std::clamp(p, kProbabilityFloor, 1.0));
    }
    return total / static_cast<double>(batch.size());
}

int confidence_bin(double confidence, int bins) noexcept {
    // Start from the arithmetic guess, then settle against the same edge
    // values lower()/upper() report so that e.g. 0.2 lands in (2/15, 3/15].
    int m = static_cast<int>(std::ceil(confidence * bins)) - 1;
    m = std::clamp(m, 0, bins - 1);
    while (m > 0 && confidence <= static_cast<double>(m) / bins) {
        --m;
    }
    while (m < bins - 1 && confidence > static_cast<double>(m + 1) / bins) {
        ++m;
    }
    return m;
}

ReliabilityBins reliability_bins(const PredictionBatch &batch, int bins) {
    if (bins < 1) {
        throw Error("bad_bins", "bin count must be positive");
    }
    ReliabilityBins out;
    out.bins = bins;
    out.total = batch.size();
    out.count.assign(static_cast<std::size_t>(bins), 0);
    out.accuracy.assign(static_cast<std::size_t>(bins), 0.0);
    out.confidence.assign(static_cast<std::size_t>(bins), 0.0);
    for (std::size_t i = 0; i < batch.size(); ++i) {
        double conf = batch.confidence(i);
        auto m = static_cast<std::size_t>(confidence_bin(conf, bins));
        ++out.count[m];
        out.accuracy[m] += batch.predicted(i) == batch.labels[i] ? 1.0 : 0.0;
        out.confidence[m] += conf;
    }
    for (std::size_t m = 0; m < out.count.size(); ++m) {
        if (out.count[m] > 0) {
            out.accuracy[m] /= static_cast<double>(out.count[m]);
            out.confidence[m] /= static_cast<double>(out.count[m]);
        }
    }
    return out;
}

double ece(const ReliabilityBins &bins) {
    if (bins.total == 0) {
        throw Error("empty_batch", "ECE of an empty batch");
    }
    double sum = 0.0;
    for (std::size_t m = 0; m < bins.count.size(); ++m) {
        if (bins.count[m] == 0) {
            continue;
        }
        double weight = static_cast<double>(bins.count[m]) / static_cast<double>(bins.total);
        sum += weight * std::abs(bins.accuracy[m] - bins.confidence[m]);
    }
    return sum;
}

double ece(const PredictionBatch &batch, int bins) { return ece(reliability_bins(batch, bins)); }

void write_reliability_csv(std::ostream &out, const ReliabilityBins &bins) {
    out << "bin_lo,bin_hi,count,acc,conf\n";
    for (int m = 0; m < bins.bins; ++m) {
        auto i = static_cast<std::size_t>(m);
        out << format_double(bins.lower(m)) << ',' << format_double(bins.upper(m)) << ',' << bins.count[i] << ','
            << format_double(bins.accuracy[i]) << ',' << format_double(bins.confidence[i]) << '\n';
    }
}

MetricSummary evaluate_batch(const PredictionBatch &batch) {
    MetricSummary s;
    s.accuracy = top1_accuracy(batch);
    auto auc = macro_auroc_ovr(batch);
    s.auroc = auc.macro;
    s.auroc_skipped = std::move(auc.skipped);
    s.nll = nll(batch);
    s.ece = ece(batch);
    return s;
}

} // namespace mobdemo
