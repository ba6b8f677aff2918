#include "cli.hpp"

#include "mobdemo/checkpoint.hpp"
#include "mobdemo/csv.hpp"
#include "mobdemo/digest.hpp"
#include "mobdemo/error.hpp"
#include "mobdemo/ingest.hpp"
#include "mobdemo/metrics.hpp"
#include "mobdemo/network.hpp"
#include "mobdemo/reports.hpp"
#include "mobdemo/rng.hpp"
#include "mobdemo/synthgen.hpp"
#include "mobdemo/trainer.hpp"

#include <CLI11.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

namespace mobdemo::cli {

namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

/// Options shared by every subcommand; unused ones are simply ignored.
struct Options {
    std::string config_path;
    std::uint64_t seed = 1;
    std::string out = "out";
    std::string data;
    std::string split = "overall";
    std::string fractions;
    std::string feature_set = "CT";
    std::string tasks;
    bool layer_norm = false;
    std::string spec;
    std::string predictions;
    std::string task_for_eval;
};

/// Bad flag values are usage errors, not data errors.
class UsageError : public Error {
public:
    using Error::Error;
};

std::vector<Task> parse_tasks(const std::string &text) {
    if (text.empty()) {
        return {kAllTasks.begin(), kAllTasks.end()};
    }
    std::vector<Task> out;
    for (const auto &name : split_list(text, ',')) {
        auto t = parse_task(name);
        if (!t) {
            throw UsageError("unknown_task", "unknown task '" + name + "'");
        }
        if (std::find(out.begin(), out.end(), *t) == out.end()) {
            out.push_back(*t);
        }
    }
    return out;
}

std::vector<double> parse_fractions(const std::string &text) {
    if (text.empty()) {
        return {kDefaultFractions.begin(), kDefaultFractions.end()};
    }
    std::vector<double> out;
    for (const auto &item : split_list(text, ',')) {
        try {
            std::size_t used = 0;
            double v = std::stod(item, &used);
            if (used != item.size() || !(v > 0.0) || v > 1.0) {
                throw std::invalid_argument(item);
            }
            out.push_back(v);
        } catch (const std::exception &) {
            throw UsageError("bad_fraction", "fractions must be numbers in (0, 1], got '" + item + "'");
        }
    }
    return out;
}

template <typename F>
auto as_usage(F &&fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const DataError &) {
        throw;
    } catch (const Error &e) {
        throw UsageError(e.code(), e.what());
    }
}

struct Context {
    const Options &opt;
    RunConfig config;
    RunManifest manifest;
    fs::path out_dir;
    Clock::time_point started = Clock::now();
    std::ostream &out;
};

Context make_context(const std::string &command, const Options &opt, std::ostream &out) {
    Context ctx{opt, opt.config_path.empty() ? RunConfig{} : load_run_config(opt.config_path), {}, opt.out,
                Clock::now(), out};
    ctx.config.experiment.seed = opt.seed;
    ctx.config.experiment.train.layer_norm = ctx.config.experiment.train.layer_norm || opt.layer_norm;
    ctx.config.experiment.tasks = as_usage([&] { return parse_tasks(opt.tasks); });
    auto &id = ctx.manifest.identity;
    id.command = command;
    id.config_path = opt.config_path;
    id.seed = opt.seed;
    if (!opt.config_path.empty()) {
        id.input_digests["config"] = content_digest(ctx.config.text);
    }
    return ctx;
}

void add_data_inputs(Context &ctx) {
    if (ctx.opt.data.empty()) {
        throw UsageError("missing_data", "--data is required");
    }
    for (const char *name : {"trips.csv", "persons.csv"}) {
        ctx.manifest.identity.input_digests[name] = file_digest(fs::path{ctx.opt.data} / name);
    }
}

std::string experiment_canonical(const Context &ctx, const std::string &extra) {
    const auto &e = ctx.config.experiment;
    std::ostringstream s;
    s << e.train.canonical() << ";folds=" << e.folds << ";bins=" << e.reliability_bins << ";tasks=";
    for (auto t : e.tasks) {
        s << task_name(t) << ',';
    }
    s << extra;
    return s.str();
}

void finalize(Context &ctx, const std::string &canonical, const std::vector<std::string> &outputs) {
    ctx.manifest.identity.config_canonical = canonical;
    ctx.manifest.config_hash = sha1_hex(canonical);
    ctx.manifest.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - ctx.started).count();
    write_manifest(ctx.out_dir, ctx.manifest, outputs);
    ctx.out << "run_id " << ctx.manifest.run_id << "\n";
    for (const auto &name : outputs) {
        ctx.out << "wrote " << (ctx.out_dir / name).string() << "\n";
    }
}

std::string begin_run(Context &ctx, const std::string &canonical) {
    ctx.manifest.identity.config_canonical = canonical;
    ctx.manifest.run_id = run_id(ctx.manifest.identity);
    // Created only once the inputs have been validated.
    fs::create_directories(ctx.out_dir);
    return ctx.manifest.run_id;
}

std::ofstream open_in(const Context &ctx, const std::string &name) {
    std::ofstream f{ctx.out_dir / name, std::ios::binary};
    if (!f) {
        throw DataError("io_error", "cannot write " + (ctx.out_dir / name).string());
    }
    return f;
}

Cohort load_cohort(Context &ctx, std::vector<std::string> *warnings = nullptr) {
    add_data_inputs(ctx);
    auto result = ingest_directory(ctx.opt.data, ctx.config.pipeline);
    if (warnings) {
        *warnings = result.warnings;
    }
    if (result.persons.empty()) {
        throw DataError("empty_dataset", "no persons survive cleaning in " + ctx.opt.data);
    }
    return prepare_cohort(std::move(result.persons), ctx.config.pipeline);
}

void record_seeds(Context &ctx) {
    const auto seed = ctx.opt.seed;
    auto &s = ctx.manifest.seeds;
    s["split"] = derive_seed(seed, "split");
    s["folds"] = derive_seed(seed, "folds");
    s["init"] = derive_seed(seed, "init");
    s["train"] = derive_seed(seed, "train");
    s["subsample"] = derive_seed(seed, "subsample");
}

SplitPlan split_plan(const Context &ctx) {
    SplitPlan plan;
    plan.kind = as_usage([&] { return parse_split(ctx.opt.split); });
    plan.seed = derive_seed(ctx.opt.seed, "split");
    return plan;
}

// ---- subcommands ---------------------------------------------------------

int cmd_ingest(const Options &opt, std::ostream &out) {
    auto ctx = make_context("ingest", opt, out);
    add_data_inputs(ctx);
    const auto id = begin_run(ctx, "ingest");
    auto result = ingest_directory(opt.data, ctx.config.pipeline);
    {
        auto f = open_in(ctx, "cleaning_report.csv");
        write_cleaning_report(f, result.report, id);
    }
    {
        auto f = open_in(ctx, "rejects.csv");
        f << "# run_id: " << id << "\ntable,line,reason\n";
        for (const auto &r : result.rejects) {
            f << r.table << ',' << r.line << ',' << csv_field(r.reason) << '\n';
        }
    }
    {
        auto f = open_in(ctx, "persons_summary.csv");
        f << "# run_id: " << id << "\nperson_id,household_id,wave,household_size,n_trips,age,gender,income,children\n";
        for (const auto &p : result.persons) {
            f << csv_field(p.person_id) << ',' << csv_field(p.household_id) << ',' << p.wave << ','
              << p.household_size << ',' << p.trips.size();
            for (auto t : kAllTasks) {
                f << ',' << (p.labels[t] ? std::string{class_label(t, *p.labels[t])} : std::string{});
            }
            f << '\n';
        }
    }
    ctx.manifest.notes = result.warnings;
    out << "retained " << result.report.retained << " of " << result.report.input_rows << " trips, "
        << result.persons.size() << " persons\n";
    finalize(ctx, "ingest", {"cleaning_report.csv", "rejects.csv", "persons_summary.csv"});
    return kExitOk;
}

int cmd_features(const Options &opt, std::ostream &out) {
    auto ctx = make_context("features", opt, out);
    const auto set = as_usage([&] { return parse_feature_set(opt.feature_set); });
    const auto plan = split_plan(ctx);
    auto cohort = load_cohort(ctx, &ctx.manifest.notes);
    record_seeds(ctx);
    const auto canonical = std::string{"features;set="} + std::string{feature_set_name(set)} + ";split=" +
                           std::string{split_name(plan.kind)};
    const auto id = begin_run(ctx, canonical);
    auto matrix = build_design_matrix(cohort.persons, cohort.descriptors, set, cohort.config);
    auto split = make_split(cohort.persons, plan);
    std::vector<std::string> partition(cohort.persons.size());
    for (auto r : split.train) {
        partition[r] = "train";
    }
    for (auto r : split.val) {
        partition[r] = "val";
    }
    for (auto r : split.test) {
        partition[r] = "test";
    }
    Standardizer standardizer;
    standardizer.fit(matrix.values, split.train);
    export_design_matrix(ctx.out_dir / "design_matrix.csv", ctx.out_dir / "design_matrix.json", matrix,
                         standardizer, partition, id);
    out << matrix.values.rows() << " rows x " << matrix.values.cols() << " columns\n";
    finalize(ctx, canonical, {"design_matrix.csv", "design_matrix.json"});
    return kExitOk;
}

int cmd_stats(const Options &opt, std::ostream &out) {
    auto ctx = make_context("stats", opt, out);
    auto cohort = load_cohort(ctx);
    const auto id = begin_run(ctx, "stats");
    auto report = run_descriptive_stats(cohort);
    {
        auto f = open_in(ctx, "spearman.csv");
        write_spearman_csv(f, report, id);
    }
    {
        auto f = open_in(ctx, "ols.csv");
        write_ols_csv(f, report, id);
    }
    ctx.manifest.notes = report.notes;
    finalize(ctx, "stats", {"spearman.csv", "ols.csv"});
    return kExitOk;
}

void write_prediction_dump(std::ostream &f, const PredictionBatch &batch) {
    f << "label";
    for (Eigen::Index k = 0; k < batch.probs.cols(); ++k) {
        f << ",p" << k;
    }
    f << '\n';
    for (Eigen::Index i = 0; i < batch.probs.rows(); ++i) {
        f << batch.labels[static_cast<std::size_t>(i)];
        for (Eigen::Index k = 0; k < batch.probs.cols(); ++k) {
            f << ',' << format_double(batch.probs(i, k));
        }
        f << '\n';
    }
}

int cmd_train(const Options &opt, std::ostream &out) {
    auto ctx = make_context("train", opt, out);
    const auto set = as_usage([&] { return parse_feature_set(opt.feature_set); });
    const auto plan = split_plan(ctx);
    auto cohort = load_cohort(ctx);
    record_seeds(ctx);
    const auto &exp = ctx.config.experiment;
    // One task trains a single-task network; otherwise the four-head model.
    const bool single = exp.tasks.size() == 1;
    const std::vector<Task> heads = single ? exp.tasks : std::vector<Task>{kAllTasks.begin(), kAllTasks.end()};
    const auto canonical = experiment_canonical(ctx, std::string{";set="} + std::string{feature_set_name(set)} +
                                                         ";split=" + std::string{split_name(plan.kind)});
    const auto id = begin_run(ctx, canonical);

    auto matrix = build_design_matrix(cohort.persons, cohort.descriptors, set, cohort.config);
    auto split = make_split(cohort.persons, plan);
    Standardizer standardizer;
    standardizer.fit(matrix.values, split.train);
    auto make_set = [&](const std::vector<std::size_t> &rows) {
        Dataset d{standardizer.apply(matrix.values, rows), HeadTargets(heads.size(), std::vector<int>(rows.size()))};
        for (std::size_t i = 0; i < rows.size(); ++i) {
            auto y = encode_labels(cohort.persons[rows[i]]);
            for (std::size_t h = 0; h < heads.size(); ++h) {
                d.y[h][i] = y[task_index(heads[h])];
            }
        }
        return d;
    };
    auto train_set = make_set(split.train);
    auto val_set = make_set(split.val);
    auto test_set = make_set(split.test);

    const auto dim = static_cast<std::size_t>(train_set.x.cols());
    Network net{single ? single_task_shape(dim, num_classes(heads[0]), exp.train.layer_norm, exp.train.dropout)
                       : multitask_shape(dim, exp.train.layer_norm, exp.train.dropout)};
    net.initialize(derive_seed(opt.seed, "init", 0));
    TrainConfig tc = exp.train;
    tc.seed = derive_seed(opt.seed, "train", 0);
    auto result = train(net, train_set, val_set, tc);

    std::vector<std::string> head_names;
    for (auto t : heads) {
        head_names.emplace_back(task_name(t));
    }
    std::vector<std::string> outputs{"checkpoint.json", "training_log.csv", "test_metrics.csv"};
    auto checkpoint = make_checkpoint(net, tc, head_names);
    checkpoint.run_id = id;
    save_checkpoint(ctx.out_dir / "checkpoint.json", checkpoint);
    {
        auto f = open_in(ctx, "training_log.csv");
        f << "# run_id: " << id << '\n';
        write_training_log(f, result, head_names);
    }
    auto probs = net.predict(test_set.x);
    auto metrics_file = open_in(ctx, "test_metrics.csv");
    metrics_file << "# run_id: " << id << "\ntask,n,accuracy,auroc,nll,ece\n";
    for (std::size_t h = 0; h < heads.size(); ++h) {
        PredictionBatch batch;
        std::vector<Eigen::Index> keep;
        for (std::size_t i = 0; i < test_set.rows(); ++i) {
            if (test_set.y[h][i] >= 0) {
                keep.push_back(static_cast<Eigen::Index>(i));
                batch.labels.push_back(test_set.y[h][i]);
            }
        }
        batch.probs.resize(static_cast<Eigen::Index>(keep.size()), probs[h].cols());
        for (std::size_t i = 0; i < keep.size(); ++i) {
            batch.probs.row(static_cast<Eigen::Index>(i)) = probs[h].row(keep[i]);
        }
        const auto name = "predictions_" + head_names[h] + ".csv";
        {
            auto f = open_in(ctx, name);
            f << "# run_id: " << id << '\n';
            write_prediction_dump(f, batch);
        }
        outputs.push_back(name);
        if (batch.labels.empty()) {
            continue;
        }
        MetricSummary s;
        s.accuracy = top1_accuracy(batch);
        s.nll = nll(batch);
        s.ece = ece(batch, exp.reliability_bins);
        try {
            s.auroc = macro_auroc_ovr(batch).macro;
        } catch (const Error &) {
            s.auroc = std::numeric_limits<double>::quiet_NaN();
        }
        metrics_file << head_names[h] << ',' << batch.labels.size() << ',' << format_double(s.accuracy) << ','
                     << format_double(s.auroc) << ',' << format_double(s.nll) << ',' << format_double(s.ece)
                     << '\n';
    }
    metrics_file.close();
    out << "best epoch " << result.best_epoch << ", val loss " << format_double(result.best_val_loss) << "\n";
    finalize(ctx, canonical, outputs);
    return kExitOk;
}

int run_experiment(const std::string &command, const Options &opt, std::ostream &out) {
    auto ctx = make_context(command, opt, out);
    const auto plan = split_plan(ctx);
    const bool uplift = command == "uplift";
    std::vector<FeatureSet> sets;
    std::vector<double> fractions;
    std::string extra = ";split=" + std::string{split_name(plan.kind)};
    if (uplift) {
        sets.assign(kAllFeatureSets.begin(), kAllFeatureSets.end());
    } else {
        fractions = as_usage([&] { return parse_fractions(opt.fractions); });
        extra += ";fractions=";
        for (double f : fractions) {
            extra += format_double(f) + ",";
        }
    }
    auto cohort = load_cohort(ctx);
    record_seeds(ctx);
    const auto canonical = experiment_canonical(ctx, extra);
    const auto id = begin_run(ctx, canonical);
    auto report = uplift ? run_uplift(cohort, plan, ctx.config.experiment, sets)
                         : run_mt_vs_st(cohort, plan, ctx.config.experiment, fractions);
    auto outputs = write_experiment_outputs(ctx.out_dir, report, id);
    ctx.manifest.notes = report.notes;
    out << report.cells.size() << " metric cells\n";
    finalize(ctx, canonical, outputs);
    return kExitOk;
}

int cmd_synth(const Options &opt, std::ostream &out) {
    if (opt.spec.empty()) {
        throw UsageError("missing_spec", "--spec is required");
    }
    Context ctx = make_context("synth", opt, out);
    auto spec = load_cohort_spec(opt.spec);
    ctx.manifest.identity.input_digests["spec"] = file_digest(opt.spec);
    const auto id = begin_run(ctx, "synth");
    auto cohort = generate(spec);
    write_cohort(ctx.out_dir, spec, cohort, id);
    ctx.manifest.seeds["cohort"] = spec.seed;
    out << cohort.persons.size() << " persons, " << cohort.trips.size() << " trips\n";
    finalize(ctx, "synth", {"trips.csv", "persons.csv", "manifest.json"});
    return kExitOk;
}

PredictionBatch read_prediction_dump(const fs::path &path) {
    std::ifstream in{path};
    if (!in) {
        throw DataError("missing_file", "cannot open " + path.string());
    }
    CsvReader reader{in};
    const auto &header = reader.header();
    if (header.size() < 3 || header[0] != "label") {
        throw DataError("bad_dump", "expected header label,p0,...,pK-1");
    }
    const auto k = header.size() - 1;
    for (std::size_t c = 0; c < k; ++c) {
        if (header[c + 1] != "p" + std::to_string(c)) {
            throw DataError("bad_dump", "expected column p" + std::to_string(c));
        }
    }
    std::vector<std::vector<double>> rows;
    PredictionBatch batch;
    std::vector<std::string> fields;
    while (reader.next(fields)) {
        if (fields.size() != header.size()) {
            throw DataError("bad_dump", "line " + std::to_string(reader.line_number()) + ": wrong field count");
        }
        try {
            batch.labels.push_back(std::stoi(fields[0]));
            std::vector<double> row;
            for (std::size_t c = 1; c < fields.size(); ++c) {
                row.push_back(std::stod(fields[c]));
            }
            rows.push_back(std::move(row));
        } catch (const std::exception &) {
            throw DataError("bad_dump", "line " + std::to_string(reader.line_number()) + ": not a number");
        }
    }
    batch.probs.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(k));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t c = 0; c < k; ++c) {
            batch.probs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = rows[i][c];
        }
    }
    try {
        batch.validate();
    } catch (const Error &e) {
        throw DataError(e.code(), e.what());
    }
    return batch;
}

int cmd_evaluate(const Options &opt, std::ostream &out) {
    if (opt.predictions.empty()) {
        throw UsageError("missing_predictions", "--predictions is required");
    }
    auto ctx = make_context("evaluate", opt, out);
    ctx.manifest.identity.input_digests["predictions"] = file_digest(opt.predictions);
    const auto bins = ctx.config.experiment.reliability_bins;
    const auto canonical = "evaluate;bins=" + std::to_string(bins);
    const auto id = begin_run(ctx, canonical);
    auto batch = read_prediction_dump(opt.predictions);
    if (batch.labels.empty()) {
        throw DataError("empty_batch", "prediction dump has no rows");
    }
    const double acc = top1_accuracy(batch);
    const double loss = nll(batch);
    const auto rel = reliability_bins(batch, bins);
    const double calib = ece(rel);
    double auc = std::numeric_limits<double>::quiet_NaN();
    std::vector<int> skipped;
    try {
        auto r = macro_auroc_ovr(batch);
        auc = r.macro;
        skipped = r.skipped;
    } catch (const Error &e) {
        ctx.manifest.notes.push_back(std::string{"auroc undefined: "} + e.what());
    }
    for (int c : skipped) {
        ctx.manifest.notes.push_back("auroc skipped class " + std::to_string(c));
    }
    {
        auto f = open_in(ctx, "evaluation.csv");
        f << "# run_id: " << id << "\nmetric,value\n";
        f << "accuracy," << format_double(acc) << "\nauroc," << format_double(auc) << "\nnll," << format_double(loss)
          << "\nece," << format_double(calib) << '\n';
    }
    {
        auto f = open_in(ctx, "reliability.csv");
        f << "# run_id: " << id << '\n';
        write_reliability_csv(f, rel);
    }
    out << "accuracy " << format_double(acc) << "\nauroc " << format_double(auc) << "\nnll " << format_double(loss)
        << "\nece " << format_double(calib) << "\n";
    finalize(ctx, canonical, {"evaluation.csv", "reliability.csv"});
    return kExitOk;
}

std::uint64_t parse_seed(const std::string &text) {
    try {
        std::size_t used = 0;
        auto v = std::stoull(text, &used);
        if (used != text.size()) {
            throw std::invalid_argument(text);
        }
        return v;
    } catch (const std::exception &) {
        throw UsageError("bad_seed", "seed must be a non-negative integer");
    }
}

} // namespace

RunConfig parse_run_config(std::istream &in) {
    RunConfig rc;
    std::ostringstream buffer;
    buffer << in.rdbuf();
    rc.text = buffer.str();
    {
        std::istringstream again{rc.text};
        rc.pipeline = parse_config(again);
    }
    boost::property_tree::ptree tree;
    try {
        std::istringstream again{rc.text};
        boost::property_tree::ini_parser::read_ini(again, tree);
        auto &t = rc.experiment.train;
        t.learning_rate = tree.get("train.learning_rate", t.learning_rate);
        t.batch_size = tree.get("train.batch_size", t.batch_size);
        t.weight_decay = tree.get("train.weight_decay", t.weight_decay);
        t.max_epochs = tree.get("train.max_epochs", t.max_epochs);
        t.patience = tree.get("train.patience", t.patience);
        t.dropout = tree.get("train.dropout", t.dropout);
        t.layer_norm = tree.get("train.layer_norm", t.layer_norm);
        if (auto w = tree.get_optional<std::string>("train.task_weights")) {
            for (const auto &item : split_list(*w, ',')) {
                t.task_weights.push_back(std::stod(item));
            }
        }
        auto &e = rc.experiment;
        e.folds = tree.get("experiment.folds", e.folds);
        e.reliability_bins = tree.get("experiment.reliability_bins", e.reliability_bins);
        e.threads = tree.get("experiment.threads", e.threads);
    } catch (const boost::property_tree::ptree_error &e) {
        throw Error("bad_config", e.what());
    } catch (const std::invalid_argument &) {
        throw Error("bad_config", "task_weights must be numbers");
    }
    rc.experiment.train.validate();
    if (rc.experiment.folds < 2 || rc.experiment.reliability_bins < 1) {
        throw Error("bad_config", "need folds >= 2 and reliability_bins >= 1");
    }
    return rc;
}

RunConfig load_run_config(const fs::path &path) {
    std::ifstream in{path};
    if (!in) {
        throw DataError("missing_file", "cannot open config " + path.string());
    }
    return parse_run_config(in);
}

int dispatch(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
    CLI::App app{"Sociodemographic inference from trip diaries", "mobdemo"};
    app.require_subcommand(1);
    Options opt;
    std::string seed_text = "1";

    auto common = [&](CLI::App *sub, bool data) {
        sub->add_option("--config", opt.config_path, "INI config (vocabulary, [train], [experiment])");
        sub->add_option("--seed", seed_text, "root seed for every named sub-seed");
        sub->add_option("--out", opt.out, "output directory");
        if (data) {
            sub->add_option("--data", opt.data, "directory with trips.csv and persons.csv")->required();
        }
    };
    auto *ingest = app.add_subcommand("ingest", "clean trip rows and report exclusions");
    common(ingest, true);
    auto *features = app.add_subcommand("features", "descriptor extraction and design-matrix export");
    common(features, true);
    features->add_option("--feature-set", opt.feature_set, "C, ST, D, M or CT");
    features->add_option("--split", opt.split, "overall or cross");
    auto *stats = app.add_subcommand("stats", "Spearman and OLS tables");
    common(stats, true);
    auto *trn = app.add_subcommand("train", "train one model");
    common(trn, true);
    trn->add_option("--feature-set", opt.feature_set, "C, ST, D, M or CT");
    trn->add_option("--split", opt.split, "overall or cross");
    trn->add_option("--tasks", opt.tasks, "comma list; one task trains a single-task network");
    trn->add_flag("--layer-norm", opt.layer_norm, "LayerNorm before each head");
    auto *uplift = app.add_subcommand("uplift", "feature-set uplift protocol");
    common(uplift, true);
    uplift->add_option("--split", opt.split, "overall or cross");
    uplift->add_option("--tasks", opt.tasks, "tasks to report");
    uplift->add_flag("--layer-norm", opt.layer_norm, "LayerNorm before each head");
    auto *mtvst = app.add_subcommand("mtvst", "multitask vs single-task over training fractions");
    common(mtvst, true);
    mtvst->add_option("--split", opt.split, "overall or cross");
    mtvst->add_option("--fractions", opt.fractions, "comma list, default 1,0.1,0.01,0.001");
    mtvst->add_option("--tasks", opt.tasks, "tasks to compare");
    mtvst->add_flag("--layer-norm", opt.layer_norm, "LayerNorm before each head");
    auto *synth = app.add_subcommand("synth", "generate a synthetic cohort");
    common(synth, false);
    synth->add_option("--spec", opt.spec, "cohort spec (INI / flat TOML)")->required();
    auto *evaluate = app.add_subcommand("evaluate", "metrics on a prediction dump (label,p0..pK-1)");
    common(evaluate, false);
    evaluate->add_option("--predictions", opt.predictions, "prediction dump CSV")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(std::move(reversed));
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp &e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError &e) {
        app.exit(e, out, err);
        if (args.empty()) {
            err << app.help();
        }
        return kExitUsage;
    }

    try {
        opt.seed = parse_seed(seed_text);
        auto *sub = app.get_subcommands().front();
        const auto name = sub->get_name();
        if (name == "ingest") {
            return cmd_ingest(opt, out);
        }
        if (name == "features") {
            return cmd_features(opt, out);
        }
        if (name == "stats") {
            return cmd_stats(opt, out);
        }
        if (name == "train") {
            return cmd_train(opt, out);
        }
        if (name == "uplift" || name == "mtvst") {
            return run_experiment(name, opt, out);
        }
        if (name == "synth") {
            return cmd_synth(opt, out);
        }
        return cmd_evaluate(opt, out);
    } catch (const UsageError &e) {
        err << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const Error &e) {
        err << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception &e) {
        err << "error: " << e.what() << "\n";
        return kExitData;
    }
}

int main_entry(int argc, char **argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return dispatch(args, std::cout, std::cerr);
}

} // namespace mobdemo::cli
