#pragma once

#include "mobdemo/experiment.hpp"
#include "mobdemo/synthgen.hpp"

#include <filesystem>
#include <string>

namespace mobdemo::testing {

/// generate -> clean -> assemble -> descriptors, all in memory.
Cohort cohort_from_spec(const CohortSpec &spec, const PipelineConfig &config = PipelineConfig::defaults());

/// Small cheap training setup for tests that only need a run to finish.
ExperimentConfig quick_experiment(std::uint64_t seed, int epochs = 3);

/// Fresh empty directory under the system temp dir.
std::filesystem::path scratch_dir(const std::string &name);

} // namespace mobdemo::testing
