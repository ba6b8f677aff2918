#pragma once

#include "mobdemo/experiment.hpp"
#include "mobdemo/ingest.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace mobdemo {

/// Inputs that identify a run. The run id is a content digest over all of
/// them, so the same command, config, seed and inputs give the same id.
struct RunIdentity {
    std::string command;
    std::string config_path;
    std::string config_canonical;
    std::uint64_t seed = 0;
    std::map<std::string, std::string> input_digests; ///< name -> content digest
};

std::string run_id(const RunIdentity &identity);

struct RunManifest {
    RunIdentity identity;
    std::string run_id;
    std::map<std::string, std::uint64_t> seeds;       ///< named sub-seeds
    std::string config_hash;
    std::map<std::string, std::string> output_digests; ///< relative path -> digest
    std::vector<std::string> notes;
    double wall_ms = 0.0;
};

/// Long format; the first line is "# run_id: <id>".
void write_metric_csv(std::ostream &out, const ExperimentReport &report, const std::string &run_id);
void write_timing_csv(std::ostream &out, const ExperimentReport &report, const std::string &run_id);
void write_spearman_csv(std::ostream &out, const DescriptiveReport &report, const std::string &run_id);
void write_ols_csv(std::ostream &out, const DescriptiveReport &report, const std::string &run_id);
void write_cleaning_report(std::ostream &out, const CleaningReport &report, const std::string &run_id);

/// Nested JSON of every cell with its per-fold values.
std::string metrics_json(const ExperimentReport &report, const std::string &run_id);

/// "reliability/<task>_<setting>_<model>.csv" with the setting made
/// filename-safe.
std::string reliability_file_name(const ReliabilityEntry &entry);

/// Writes metrics.csv, metrics.json, timings.csv and reliability/*.csv
/// under dir; returns the relative paths written.
std::vector<std::string> write_experiment_outputs(const std::filesystem::path &dir, const ExperimentReport &report,
                                                  const std::string &run_id);

/// Fills output_digests from the listed files and writes run_manifest.json.
void write_manifest(const std::filesystem::path &dir, RunManifest &manifest,
                    const std::vector<std::string> &outputs);

} // namespace mobdemo
