#pragma once

#include "mobdemo/config.hpp"
#include "mobdemo/experiment.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace mobdemo::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

/// Pipeline vocabulary plus [train] and [experiment] sections of one INI file.
struct RunConfig {
    PipelineConfig pipeline = PipelineConfig::defaults();
    ExperimentConfig experiment;
    std::string text; ///< raw bytes of the file, empty for defaults
};

RunConfig parse_run_config(std::istream &in);
RunConfig load_run_config(const std::filesystem::path &path);

/// Runs one subcommand; never throws. Messages go to out/err.
int dispatch(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

int main_entry(int argc, char **argv);

} // namespace mobdemo::cli
