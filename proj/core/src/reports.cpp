#include "mobdemo/reports.hpp"

#include "mobdemo/csv.hpp"
#include "mobdemo/digest.hpp"
#include "mobdemo/error.hpp"

#include <json.hpp>

#include <cctype>
#include <fstream>
#include <ostream>
#include <sstream>

namespace mobdemo {

namespace {

using nlohmann::json;

std::ofstream open_output(const std::filesystem::path &path) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out{path, std::ios::binary};
    if (!out) {
        throw DataError("io_error", "cannot write " + path.string());
    }
    return out;
}

std::string safe_name(std::string_view text) {
    std::string out;
    for (char c : text) {
        if (c == '+') {
            continue;
        }
        out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
    }
    return out;
}

} // namespace

std::string run_id(const RunIdentity &identity) {
    std::ostringstream s;
    s << "command=" << identity.command << '\n'
      << "config_path=" << identity.config_path << '\n'
      << "config=" << identity.config_canonical << '\n'
      << "seed=" << identity.seed << '\n';
    for (const auto &[name, digest] : identity.input_digests) {
        s << "input:" << name << '=' << digest << '\n';
    }
    return content_digest(s.str());
}

void write_metric_csv(std::ostream &out, const ExperimentReport &report, const std::string &run_id) {
    out << "# run_id: " << run_id << '\n';
    out << "split,task," << (report.kind == "mtvst" ? "fraction" : "feature_set") << ",model,metric,mean,sd\n";
    for (const auto &c : report.cells) {
        out << csv_field(c.split) << ',' << csv_field(c.task) << ',' << csv_field(c.setting) << ','
            << csv_field(c.model) << ',' << csv_field(c.metric) << ',' << format_double(c.mean) << ','
            << format_double(c.sd) << '\n';
    }
}

void write_timing_csv(std::ostream &out, const ExperimentReport &report, const std::string &run_id) {
    out << "# run_id: " << run_id << '\n';
    out << "split,setting,fold,model,task,wall_ms,epochs\n";
    for (const auto &t : report.timings) {
        out << csv_field(report.split) << ',' << csv_field(t.setting) << ',' << t.fold << ',' << t.model << ','
            << csv_field(t.task) << ',' << format_double(t.wall_ms) << ',' << t.epochs << '\n';
    }
}

void write_spearman_csv(std::ostream &out, const DescriptiveReport &report, const std::string &run_id) {
    out << "# run_id: " << run_id << '\n';
    out << "descriptor,label,rho,p_value,n\n";
    for (const auto &r : report.spearman) {
        out << csv_field(r.descriptor) << ',' << r.label << ',' << format_double(r.rho) << ','
            << format_double(r.p_value) << ',' << r.n << '\n';
    }
}

void write_ols_csv(std::ostream &out, const DescriptiveReport &report, const std::string &run_id) {
    out << "# run_id: " << run_id << '\n';
    out << "dependent,model,term,coef,se,t,p,r_squared,n\n";
    for (const auto &m : report.ols) {
        const auto &f = m.fit;
        for (std::size_t i = 0; i < f.names.size(); ++i) {
            out << csv_field(m.dependent) << ',' << m.variant << ',' << csv_field(f.names[i]) << ','
                << format_double(f.coefficients[static_cast<Eigen::Index>(i)]) << ','
                << format_double(f.std_errors[static_cast<Eigen::Index>(i)]) << ','
                << format_double(f.t_stats[static_cast<Eigen::Index>(i)]) << ','
                << format_double(f.p_values[static_cast<Eigen::Index>(i)]) << ',' << format_double(f.r_squared)
                << ',' << f.n << '\n';
        }
    }
}

void write_cleaning_report(std::ostream &out, const CleaningReport &report, const std::string &run_id) {
    out << "# run_id: " << run_id << '\n';
    out << "item,count\n";
    out << "input_rows," << report.input_rows << '\n';
    out << "retained," << report.retained << '\n';
    for (auto category : kExclusionCategories) {
        auto it = report.excluded.find(std::string{category});
        out << "excluded_" << category << ',' << (it == report.excluded.end() ? 0 : it->second) << '\n';
    }
    out << "persons_without_trips," << report.persons_without_trips << '\n';
    out << "trips_without_person," << report.trips_without_person << '\n';
}

std::string metrics_json(const ExperimentReport &report, const std::string &run_id) {
    json doc;
    doc["run_id"] = run_id;
    doc["kind"] = report.kind;
    doc["split"] = report.split;
    json cells = json::array();
    for (const auto &c : report.cells) {
        cells.push_back({{"task", c.task},
                         {"setting", c.setting},
                         {"model", c.model},
                         {"metric", c.metric},
                         {"mean", c.mean},
                         {"sd", c.sd},
                         {"folds", c.values}});
    }
    doc["cells"] = std::move(cells);
    json rel = json::array();
    for (const auto &r : report.reliability) {
        json bins = json::array();
        for (int m = 0; m < r.bins.bins; ++m) {
            const auto i = static_cast<std::size_t>(m);
            bins.push_back({{"lo", r.bins.lower(m)},
                            {"hi", r.bins.upper(m)},
                            {"count", r.bins.count[i]},
                            {"acc", r.bins.accuracy[i]},
                            {"conf", r.bins.confidence[i]}});
        }
        rel.push_back({{"task", r.task}, {"setting", r.setting}, {"model", r.model}, {"bins", std::move(bins)}});
    }
    doc["reliability"] = std::move(rel);
    doc["notes"] = report.notes;
    return doc.dump(2) + "\n";
}

std::string reliability_file_name(const ReliabilityEntry &entry) {
    return "reliability/" + safe_name(entry.task) + "_" + safe_name(entry.setting) + "_" + safe_name(entry.model) +
           ".csv";
}

std::vector<std::string> write_experiment_outputs(const std::filesystem::path &dir, const ExperimentReport &report,
                                                  const std::string &run_id) {
    std::vector<std::string> written;
    {
        auto out = open_output(dir / "metrics.csv");
        write_metric_csv(out, report, run_id);
        written.emplace_back("metrics.csv");
    }
    {
        auto out = open_output(dir / "metrics.json");
        out << metrics_json(report, run_id);
        written.emplace_back("metrics.json");
    }
    {
        auto out = open_output(dir / "timings.csv");
        write_timing_csv(out, report, run_id);
        written.emplace_back("timings.csv");
    }
    for (const auto &entry : report.reliability) {
        auto name = reliability_file_name(entry);
        auto out = open_output(dir / name);
        out << "# run_id: " << run_id << '\n';
        write_reliability_csv(out, entry.bins);
        written.push_back(std::move(name));
    }
    return written;
}

void write_manifest(const std::filesystem::path &dir, RunManifest &manifest, const std::vector<std::string> &outputs) {
    for (const auto &name : outputs) {
        manifest.output_digests[name] = file_digest(dir / name);
    }
    json doc;
    doc["run_id"] = manifest.run_id;
    doc["command"] = manifest.identity.command;
    doc["config_path"] = manifest.identity.config_path;
    doc["config"] = manifest.identity.config_canonical;
    doc["config_hash"] = manifest.config_hash;
    doc["seed"] = manifest.identity.seed;
    doc["seeds"] = manifest.seeds;
    doc["inputs"] = manifest.identity.input_digests;
    doc["outputs"] = manifest.output_digests;
    doc["notes"] = manifest.notes;
    doc["wall_ms"] = manifest.wall_ms;
    auto out = open_output(dir / "run_manifest.json");
    out << doc.dump(2) << '\n';
}

} // namespace mobdemo
