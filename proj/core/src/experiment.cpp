#include "mobdemo/experiment.hpp"

#include "mobdemo/csv.hpp"
#include "mobdemo/error.hpp"
#include "mobdemo/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <set>
#include <thread>

namespace mobdemo {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void seeded_shuffle(std::vector<std::size_t> &v, Rng &rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::swap(v[i - 1], v[static_cast<std::size_t>(rng() % i)]);
    }
}

std::vector<TaskTargets> all_targets(const Cohort &cohort) {
    std::vector<TaskTargets> out;
    out.reserve(cohort.persons.size());
    for (const auto &p : cohort.persons) {
        out.push_back(encode_labels(p));
    }
    return out;
}

HeadTargets head_targets(std::span<const TaskTargets> targets, std::span<const std::size_t> rows,
                         std::span<const Task> heads) {
    HeadTargets out(heads.size(), std::vector<int>(rows.size()));
    for (std::size_t h = 0; h < heads.size(); ++h) {
        for (std::size_t i = 0; i < rows.size(); ++i) {
            out[h][i] = targets[rows[i]][task_index(heads[h])];
        }
    }
    return out;
}

/// Standardized inputs for one training run; statistics from `train` only.
struct FoldInputs {
    RowMatrix train_x;
    RowMatrix val_x;
    RowMatrix test_x;
};

FoldInputs standardize(const RowMatrix &values, std::span<const std::size_t> train,
                       std::span<const std::size_t> val, std::span<const std::size_t> test) {
    Standardizer s;
    s.fit(values, train);
    return {s.apply(values, train), s.apply(values, val), s.apply(values, test)};
}

/// Test-set metrics for one head; rows with a masked label are skipped.
struct TaskOutcome {
    MetricSummary summary;
    bool auroc_defined = true;
    PredictionBatch batch;
};

TaskOutcome score_task(const RowMatrix &probs, std::span<const TaskTargets> targets,
                       std::span<const std::size_t> test_rows, Task task) {
    TaskOutcome out;
    std::vector<Eigen::Index> keep;
    for (std::size_t i = 0; i < test_rows.size(); ++i) {
        int y = targets[test_rows[i]][task_index(task)];
        if (y >= 0) {
            keep.push_back(static_cast<Eigen::Index>(i));
            out.batch.labels.push_back(y);
        }
    }
    out.batch.probs.resize(static_cast<Eigen::Index>(keep.size()), probs.cols());
    for (std::size_t i = 0; i < keep.size(); ++i) {
        out.batch.probs.row(static_cast<Eigen::Index>(i)) = probs.row(keep[i]);
    }
    if (keep.empty()) {
        throw Error("empty_test", std::string{"no labelled test rows for "} + std::string{task_name(task)});
    }
    out.summary.accuracy = top1_accuracy(out.batch);
    out.summary.nll = nll(out.batch);
    out.summary.ece = ece(out.batch);
    try {
        auto auc = macro_auroc_ovr(out.batch);
        out.summary.auroc = auc.macro;
        out.summary.auroc_skipped = std::move(auc.skipped);
    } catch (const Error &e) {
        if (e.code() != "degenerate_labels") {
            throw;
        }
        out.summary.auroc = kNaN;
        out.auroc_defined = false;
    }
    return out;
}

double metric_value(const MetricSummary &s, std::string_view metric) {
    if (metric == "accuracy") {
        return s.accuracy;
    }
    if (metric == "auroc") {
        return s.auroc;
    }
    if (metric == "nll") {
        return s.nll;
    }
    return s.ece;
}

MetricCell aggregate(std::string split, std::string task, std::string setting, std::string model,
                     std::string metric, const std::vector<double> &values) {
    MetricCell cell{std::move(split), std::move(task), std::move(setting), std::move(model), std::move(metric),
                    0.0, 0.0, values};
    std::vector<double> finite;
    for (double v : values) {
        if (!std::isnan(v)) {
            finite.push_back(v);
        }
    }
    if (finite.empty()) {
        cell.mean = kNaN;
        cell.sd = kNaN;
    } else {
        std::tie(cell.mean, cell.sd) = mean_sd(finite);
    }
    return cell;
}

PredictionBatch concatenate(const std::vector<PredictionBatch> &parts) {
    PredictionBatch out;
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;
    for (const auto &p : parts) {
        rows += p.probs.rows();
        cols = p.probs.cols();
    }
    out.probs.resize(rows, cols);
    Eigen::Index r = 0;
    for (const auto &p : parts) {
        out.probs.middleRows(r, p.probs.rows()) = p.probs;
        r += p.probs.rows();
        out.labels.insert(out.labels.end(), p.labels.begin(), p.labels.end());
    }
    return out;
}

std::string skipped_note(std::string_view what, const TaskOutcome &o, Task task) {
    if (!o.auroc_defined) {
        return std::string{what} + " " + std::string{task_name(task)} + ": AUROC undefined (no eligible class)";
    }
    if (o.summary.auroc_skipped.empty()) {
        return {};
    }
    std::string classes;
    for (int c : o.summary.auroc_skipped) {
        classes += (classes.empty() ? "" : ",") + std::string{class_label(task, c)};
    }
    return std::string{what} + " " + std::string{task_name(task)} + ": AUROC skipped classes " + classes;
}

TrainConfig run_config(const ExperimentConfig &config, std::uint64_t seed) {
    TrainConfig t = config.train;
    t.seed = seed;
    return t;
}

struct FoldContext {
    std::vector<std::size_t> train;
    std::vector<std::size_t> val;
};

std::vector<FoldContext> fold_contexts(const Partition &split, std::span<const TaskTargets> targets,
                                       const ExperimentConfig &config) {
    auto pool = split.pool();
    std::vector<TaskTargets> pool_labels;
    for (auto r : pool) {
        pool_labels.push_back(targets[r]);
    }
    auto plan = make_folds(pool_labels, config.folds, derive_seed(config.seed, "folds"));
    std::vector<FoldContext> out(static_cast<std::size_t>(config.folds));
    for (std::size_t i = 0; i < pool.size(); ++i) {
        auto f = static_cast<std::size_t>(plan.fold_of[i]);
        for (std::size_t g = 0; g < out.size(); ++g) {
            (g == f ? out[g].val : out[g].train).push_back(pool[i]);
        }
    }
    return out;
}

unsigned resolve_threads(const ExperimentConfig &config) {
    return config.threads > 0 ? config.threads : default_thread_count();
}

} // namespace

Cohort prepare_cohort(std::vector<PersonRecord> persons, const PipelineConfig &config) {
    Cohort c;
    c.config = config;
    c.persons = std::move(persons);
    c.descriptors.resize(c.persons.size());
    parallel_for(c.persons.size(), default_thread_count(), [&](std::size_t i) {
        c.descriptors[i] = compute_descriptors(c.persons[i].trips, config);
    });
    return c;
}

std::string_view split_name(SplitKind kind) noexcept { return kind == SplitKind::Overall ? "overall" : "cross"; }

SplitKind parse_split(std::string_view name) {
    auto key = to_lower_trimmed(name);
    if (key == "overall") {
        return SplitKind::Overall;
    }
    if (key == "cross" || key == "cross_temporal" || key == "cross-temporal") {
        return SplitKind::CrossTemporal;
    }
    throw Error("bad_split", "unknown split '" + std::string{name} + "'");
}

std::vector<std::size_t> Partition::pool() const {
    std::vector<std::size_t> out = train;
    out.insert(out.end(), val.begin(), val.end());
    return out;
}

Partition make_split(std::span<const PersonRecord> persons, const SplitPlan &plan) {
    if (persons.empty()) {
        throw Error("empty_dataset", "cannot split an empty cohort");
    }
    // Households in first-seen order, then shuffled.
    std::map<std::pair<int, std::string>, std::size_t> index;
    std::vector<std::vector<std::size_t>> households;
    std::vector<int> household_wave;
    for (std::size_t i = 0; i < persons.size(); ++i) {
        auto key = std::make_pair(persons[i].wave, persons[i].household_id);
        auto [it, inserted] = index.emplace(key, households.size());
        if (inserted) {
            households.emplace_back();
            household_wave.push_back(persons[i].wave);
        }
        households[it->second].push_back(i);
    }
    std::vector<std::size_t> order(households.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng{derive_seed(plan.seed, "split")};
    seeded_shuffle(order, rng);

    Partition part;
    auto fill = [&](const std::vector<std::size_t> &hh, double train_share, double val_share,
                    std::vector<std::size_t> *test_target) {
        std::size_t total = 0;
        for (auto h : hh) {
            total += households[h].size();
        }
        const double train_end = train_share * static_cast<double>(total);
        const double val_end = (train_share + val_share) * static_cast<double>(total);
        std::size_t assigned = 0;
        for (auto h : hh) {
            std::vector<std::size_t> *target = nullptr;
            if (static_cast<double>(assigned) < train_end) {
                target = &part.train;
            } else if (static_cast<double>(assigned) < val_end) {
                target = &part.val;
            } else {
                target = test_target;
            }
            target->insert(target->end(), households[h].begin(), households[h].end());
            assigned += households[h].size();
        }
    };

    if (plan.kind == SplitKind::Overall) {
        fill(order, plan.train, plan.val, &part.test);
    } else {
        std::vector<std::size_t> source;
        std::set<int> seen_train_waves;
        for (auto h : order) {
            int wave = household_wave[h];
            if (wave == plan.test_wave) {
                part.test.insert(part.test.end(), households[h].begin(), households[h].end());
            } else if (std::find(plan.train_waves.begin(), plan.train_waves.end(), wave) != plan.train_waves.end()) {
                source.push_back(h);
                seen_train_waves.insert(wave);
            }
        }
        if (part.test.empty()) {
            throw Error("missing_wave", "cross-temporal split needs persons from wave " +
                                            std::to_string(plan.test_wave));
        }
        for (int w : plan.train_waves) {
            if (!seen_train_waves.contains(w)) {
                throw Error("missing_wave", "cross-temporal split needs persons from wave " + std::to_string(w));
            }
        }
        const double share = plan.train / (plan.train + plan.val);
        fill(source, share, 1.0 - share, &part.val);
    }
    std::sort(part.train.begin(), part.train.end());
    std::sort(part.val.begin(), part.val.end());
    std::sort(part.test.begin(), part.test.end());
    if (part.train.empty() || part.val.empty() || part.test.empty()) {
        throw Error("empty_split", "cohort too small for a non-empty train/val/test partition");
    }
    return part;
}

FoldPlan make_folds(std::span<const TaskTargets> labels, int k, std::uint64_t seed) {
    const std::size_t n = labels.size();
    if (k < 1 || static_cast<std::size_t>(k) > n) {
        throw Error("too_few_rows", "cannot build " + std::to_string(k) + " folds from " + std::to_string(n) +
                                        " rows");
    }
    const auto folds = static_cast<std::size_t>(k);

    std::map<TaskTargets, std::size_t> combo_count;
    for (const auto &y : labels) {
        ++combo_count[y];
    }
    // Per-task class totals and the per-fold targets derived from them.
    std::array<std::vector<double>, kNumTasks> totals;
    for (std::size_t t = 0; t < kNumTasks; ++t) {
        totals[t].assign(static_cast<std::size_t>(kTaskClasses[t]), 0.0);
    }
    for (const auto &y : labels) {
        for (std::size_t t = 0; t < kNumTasks; ++t) {
            if (y[t] >= 0) {
                totals[t][static_cast<std::size_t>(y[t])] += 1.0;
            }
        }
    }

    Rng rng{seed};
    std::vector<std::uint64_t> tiebreak(n);
    for (auto &v : tiebreak) {
        v = rng();
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        auto ca = combo_count[labels[a]];
        auto cb = combo_count[labels[b]];
        if (ca != cb) {
            return ca < cb;
        }
        if (labels[a] != labels[b]) {
            return labels[a] < labels[b]; // keep each combination contiguous
        }
        return tiebreak[a] < tiebreak[b];
    });

    std::vector<std::size_t> capacity(folds, n / folds);
    for (std::size_t f = 0; f < n % folds; ++f) {
        ++capacity[f];
    }
    std::vector<std::array<std::vector<double>, kNumTasks>> counts(folds);
    for (auto &c : counts) {
        for (std::size_t t = 0; t < kNumTasks; ++t) {
            c[t].assign(totals[t].size(), 0.0);
        }
    }

    FoldPlan plan;
    plan.folds.resize(folds);
    plan.fold_of.assign(n, -1);
    for (auto row : order) {
        const auto &y = labels[row];
        std::size_t best = folds;
        double best_score = -std::numeric_limits<double>::infinity();
        for (std::size_t f = 0; f < folds; ++f) {
            const auto room = capacity[f] - plan.folds[f].size();
            if (room == 0) {
                continue;
            }
            double deficit = 0.0;
            for (std::size_t t = 0; t < kNumTasks; ++t) {
                if (y[t] >= 0) {
                    auto c = static_cast<std::size_t>(y[t]);
                    double target = totals[t][c] * static_cast<double>(capacity[f]) / static_cast<double>(n);
                    deficit += target - counts[f][t][c];
                }
            }
            // Ties go to the fold with the most free room, then the lowest index.
            double score = deficit + 1e-9 * static_cast<double>(room);
            if (score > best_score) {
                best_score = score;
                best = f;
            }
        }
        plan.folds[best].push_back(row);
        plan.fold_of[row] = static_cast<int>(best);
        for (std::size_t t = 0; t < kNumTasks; ++t) {
            if (y[t] >= 0) {
                counts[best][t][static_cast<std::size_t>(y[t])] += 1.0;
            }
        }
    }
    for (auto &f : plan.folds) {
        std::sort(f.begin(), f.end());
    }
    return plan;
}

const MetricCell *ExperimentReport::find(std::string_view task, std::string_view setting, std::string_view model,
                                         std::string_view metric) const {
    for (const auto &c : cells) {
        if (c.task == task && c.setting == setting && c.model == model && c.metric == metric) {
            return &c;
        }
    }
    return nullptr;
}

ExperimentReport run_uplift(const Cohort &cohort, const SplitPlan &plan, const ExperimentConfig &config,
                            std::span<const FeatureSet> sets) {
    const auto targets = all_targets(cohort);
    const auto split = make_split(cohort.persons, plan);
    const auto folds = fold_contexts(split, targets, config);
    const std::vector<Task> heads(kAllTasks.begin(), kAllTasks.end());

    std::vector<DesignMatrix> matrices;
    for (auto set : sets) {
        matrices.push_back(build_design_matrix(cohort.persons, cohort.descriptors, set, cohort.config));
    }

    const std::size_t n_folds = folds.size();
    // outcome[set][fold][task]
    std::vector<std::vector<std::vector<TaskOutcome>>> outcome(
        sets.size(), std::vector<std::vector<TaskOutcome>>(n_folds));
    std::vector<TimingRecord> timings(sets.size() * n_folds);

    parallel_for(sets.size() * n_folds, resolve_threads(config), [&](std::size_t job) {
        const std::size_t s = job / n_folds;
        const std::size_t f = job % n_folds;
        const auto &fold = folds[f];
        auto inputs = standardize(matrices[s].values, fold.train, fold.val, split.test);
        Dataset train_set{std::move(inputs.train_x), head_targets(targets, fold.train, heads)};
        Dataset val_set{std::move(inputs.val_x), head_targets(targets, fold.val, heads)};

        Network net{multitask_shape(static_cast<std::size_t>(train_set.x.cols()), config.train.layer_norm,
                                    config.train.dropout)};
        net.initialize(derive_seed(config.seed, "init", f));
        auto result = train(net, train_set, val_set, run_config(config, derive_seed(config.seed, "train", f)));
        auto probs = net.predict(inputs.test_x);
        for (std::size_t t = 0; t < heads.size(); ++t) {
            outcome[s][f].push_back(score_task(probs[t], targets, split.test, heads[t]));
        }
        timings[job] = {std::string{feature_set_name(sets[s])}, static_cast<int>(f), "MT", "all", result.wall_ms,
                        static_cast<int>(result.log.size())};
    });

    ExperimentReport report;
    report.kind = "uplift";
    report.split = std::string{split_name(plan.kind)};
    report.timings = std::move(timings);
    for (std::size_t s = 0; s < sets.size(); ++s) {
        const std::string setting{feature_set_name(sets[s])};
        for (auto task : config.tasks) {
            const auto t = task_index(task);
            for (auto metric : kMetricNames) {
                std::vector<double> values;
                for (std::size_t f = 0; f < n_folds; ++f) {
                    values.push_back(metric_value(outcome[s][f][t].summary, metric));
                }
                report.cells.push_back(aggregate(report.split, std::string{task_name(task)}, setting, "MT",
                                                 std::string{metric}, values));
            }
            std::vector<PredictionBatch> parts;
            for (std::size_t f = 0; f < n_folds; ++f) {
                parts.push_back(outcome[s][f][t].batch);
                auto note = skipped_note("set " + setting + " fold " + std::to_string(f), outcome[s][f][t], task);
                if (!note.empty()) {
                    report.notes.push_back(std::move(note));
                }
            }
            report.reliability.push_back({std::string{task_name(task)}, setting, "MT",
                                          reliability_bins(concatenate(parts), config.reliability_bins)});
        }
    }
    return report;
}

ExperimentReport run_mt_vs_st(const Cohort &cohort, const SplitPlan &plan, const ExperimentConfig &config,
                              std::span<const double> fractions) {
    const auto targets = all_targets(cohort);
    const auto split = make_split(cohort.persons, plan);
    const auto folds = fold_contexts(split, targets, config);
    const std::vector<Task> heads(kAllTasks.begin(), kAllTasks.end());
    const auto matrix = build_design_matrix(cohort.persons, cohort.descriptors, FeatureSet::ST, cohort.config);
    const std::size_t n_folds = folds.size();

    struct JobOutput {
        std::vector<TaskOutcome> mt;                // per head
        std::map<std::size_t, TaskOutcome> st;      // per selected task index
        std::vector<TimingRecord> timings;
        bool skipped = false;
    };
    std::vector<JobOutput> jobs(fractions.size() * n_folds);

    parallel_for(jobs.size(), resolve_threads(config), [&](std::size_t job) {
        const std::size_t q = job / n_folds;
        const std::size_t f = job % n_folds;
        const auto &fold = folds[f];
        const std::string setting = format_double(fractions[q]);
        auto &out = jobs[job];
        if (std::llround(fractions[q] * static_cast<double>(fold.train.size())) == 0) {
            out.skipped = true; // too small to keep a single row; cells stay NaN
            return;
        }
        // The same seed at every fraction makes smaller subsets prefixes of larger ones.
        auto picks = subsample_indices(fold.train.size(), fractions[q], derive_seed(config.seed, "subsample", f));
        std::vector<std::size_t> train_rows;
        for (auto p : picks) {
            train_rows.push_back(fold.train[p]);
        }
        std::sort(train_rows.begin(), train_rows.end());
        auto inputs = standardize(matrix.values, train_rows, fold.val, split.test);
        const auto input_dim = static_cast<std::size_t>(inputs.train_x.cols());

        {
            Dataset train_set{inputs.train_x, head_targets(targets, train_rows, heads)};
            Dataset val_set{inputs.val_x, head_targets(targets, fold.val, heads)};
            Network net{multitask_shape(input_dim, config.train.layer_norm, config.train.dropout)};
            net.initialize(derive_seed(config.seed, "init", f));
            auto result = train(net, train_set, val_set, run_config(config, derive_seed(config.seed, "train", f)));
            auto probs = net.predict(inputs.test_x);
            for (std::size_t t = 0; t < heads.size(); ++t) {
                out.mt.push_back(score_task(probs[t], targets, split.test, heads[t]));
            }
            out.timings.push_back({setting, static_cast<int>(f), "MT", "all", result.wall_ms,
                                   static_cast<int>(result.log.size())});
        }
        for (auto task : config.tasks) {
            const std::array<Task, 1> one{task};
            Dataset train_set{inputs.train_x, head_targets(targets, train_rows, one)};
            Dataset val_set{inputs.val_x, head_targets(targets, fold.val, one)};
            Network net{single_task_shape(input_dim, num_classes(task), config.train.layer_norm,
                                          config.train.dropout)};
            net.initialize(derive_seed(derive_seed(config.seed, "init", f), task_name(task)));
            auto result = train(net, train_set, val_set,
                                run_config(config, derive_seed(derive_seed(config.seed, "train", f), task_name(task))));
            auto probs = net.predict(inputs.test_x);
            out.st.emplace(task_index(task), score_task(probs[0], targets, split.test, task));
            out.timings.push_back({setting, static_cast<int>(f), "ST", std::string{task_name(task)}, result.wall_ms,
                                   static_cast<int>(result.log.size())});
        }
    });

    ExperimentReport report;
    report.kind = "mtvst";
    report.split = std::string{split_name(plan.kind)};
    for (std::size_t q = 0; q < fractions.size(); ++q) {
        const std::string setting = format_double(fractions[q]);
        for (auto task : config.tasks) {
            const auto t = task_index(task);
            for (const char *model : {"MT", "ST"}) {
                const bool mt = model[0] == 'M';
                for (auto metric : kMetricNames) {
                    std::vector<double> values;
                    for (std::size_t f = 0; f < n_folds; ++f) {
                        const auto &job = jobs[q * n_folds + f];
                        values.push_back(job.skipped ? kNaN
                                                     : metric_value(mt ? job.mt[t].summary : job.st.at(t).summary,
                                                                    metric));
                    }
                    report.cells.push_back(
                        aggregate(report.split, std::string{task_name(task)}, setting, model, std::string{metric},
                                  values));
                }
                std::vector<PredictionBatch> parts;
                for (std::size_t f = 0; f < n_folds; ++f) {
                    const auto &job = jobs[q * n_folds + f];
                    if (job.skipped) {
                        if (mt && t == task_index(config.tasks.front())) {
                            report.notes.push_back("fraction " + setting + " fold " + std::to_string(f) +
                                                   ": no training rows survive subsampling");
                        }
                        continue;
                    }
                    const auto &o = mt ? job.mt[t] : job.st.at(t);
                    parts.push_back(o.batch);
                    auto note = skipped_note(std::string{model} + " fraction " + setting + " fold " +
                                                 std::to_string(f),
                                             o, task);
                    if (!note.empty()) {
                        report.notes.push_back(std::move(note));
                    }
                }
                if (!parts.empty()) {
                    report.reliability.push_back({std::string{task_name(task)}, setting, model,
                                                  reliability_bins(concatenate(parts), config.reliability_bins)});
                }
            }
        }
    }
    for (auto &job : jobs) {
        report.timings.insert(report.timings.end(), job.timings.begin(), job.timings.end());
    }
    return report;
}

DescriptiveReport run_descriptive_stats(const Cohort &cohort) {
    DescriptiveReport report;
    const auto matrix = build_design_matrix(cohort.persons, cohort.descriptors, FeatureSet::CT, cohort.config);
    const auto n = cohort.persons.size();

    // Ordinal label encodings; gender keeps only male (0) and female (1).
    auto label_value = [&](std::size_t i, Task task) -> std::optional<double> {
        const auto &v = cohort.persons[i].labels[task];
        if (!v) {
            return std::nullopt;
        }
        if (task == Task::Gender && *v == 2) {
            return std::nullopt;
        }
        return static_cast<double>(*v);
    };

    for (std::size_t j = 0; j < matrix.columns.size(); ++j) {
        const auto &column = matrix.columns[j].name;
        for (auto task : kAllTasks) {
            std::vector<double> x;
            std::vector<double> y;
            for (std::size_t i = 0; i < n; ++i) {
                double d = matrix.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
                auto label = label_value(i, task);
                if (!std::isnan(d) && label) {
                    x.push_back(d);
                    y.push_back(*label);
                }
            }
            try {
                auto r = spearman_rho(x, y);
                report.spearman.push_back({column, std::string{task_name(task)}, r.rho, r.p_value, r.n});
            } catch (const Error &e) {
                report.notes.push_back("spearman " + column + " vs " + std::string{task_name(task)} +
                                       " skipped: " + e.code());
            }
        }
    }
    std::stable_sort(report.spearman.begin(), report.spearman.end(),
                     [](const SpearmanRow &a, const SpearmanRow &b) { return std::abs(a.rho) > std::abs(b.rho); });

    const std::vector<std::pair<std::string, std::string>> dependents{
        {"f_mm", "f_mm"},
        {"f_comp", "f_comp"},
        {"mean_local_clustering", "mean_local_clustering"},
        {"out_and_back", "motif_out_and_back"},
    };
    for (const auto &[name, column_name] : dependents) {
        auto col = std::find_if(matrix.columns.begin(), matrix.columns.end(),
                                [&](const FeatureColumn &c) { return c.name == column_name; });
        const auto j = static_cast<Eigen::Index>(col - matrix.columns.begin());
        for (bool with_household : {true, false}) {
            std::vector<std::array<double, 4>> rows;
            std::vector<double> response;
            for (std::size_t i = 0; i < n; ++i) {
                double d = matrix.values(static_cast<Eigen::Index>(i), j);
                auto age = label_value(i, Task::Age);
                auto income = label_value(i, Task::Income);
                auto gender = label_value(i, Task::Gender);
                if (std::isnan(d) || !age || !income || !gender) {
                    continue;
                }
                rows.push_back({*age, *income, *gender, static_cast<double>(cohort.persons[i].household_size)});
                response.push_back(d);
            }
            const Eigen::Index p = with_household ? 4 : 3;
            Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), p);
            for (std::size_t r = 0; r < rows.size(); ++r) {
                for (Eigen::Index c = 0; c < p; ++c) {
                    x(static_cast<Eigen::Index>(r), c) = rows[r][static_cast<std::size_t>(c)];
                }
            }
            std::vector<std::string> names{"intercept", "age", "income", "female"};
            if (with_household) {
                names.push_back("household_size");
            }
            Eigen::VectorXd y = Eigen::Map<Eigen::VectorXd>(response.data(), static_cast<Eigen::Index>(response.size()));
            const std::string variant = with_household ? "M1" : "M2";
            try {
                report.ols.push_back({name, variant, ols_fit(with_intercept(x), y, names)});
            } catch (const Error &e) {
                report.notes.push_back("ols " + name + " " + variant + " skipped: " + e.what());
            }
        }
    }
    return report;
}

unsigned default_thread_count() {
    if (const char *env = std::getenv("MOBDEMO_THREADS")) {
        int v = std::atoi(env);
        if (v > 0) {
            return static_cast<unsigned>(v);
        }
    }
    return std::max(1U, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)> &fn) {
    threads = std::max(1U, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i) {
            fn(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock{error_mutex};
                    if (!error) {
                        error = std::current_exception();
                    }
                    next = n;
                }
            }
        });
    }
    for (auto &t : pool) {
        t.join();
    }
    if (error) {
        std::rethrow_exception(error);
    }
}

std::pair<double, double> mean_sd(std::span<const double> values) {
    if (values.empty()) {
        return {kNaN, kNaN};
    }
    const double n = static_cast<double>(values.size());
    double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    if (values.size() == 1) {
        return {mean, 0.0};
    }
    double ss = 0.0;
    for (double v : values) {
        ss += (v - mean) * (v - mean);
    }
    return {mean, std::sqrt(ss / (n - 1.0))};
}

} // namespace mobdemo
