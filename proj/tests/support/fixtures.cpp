#include "fixtures.hpp"

#include "mobdemo/ingest.hpp"

namespace mobdemo::testing {

Cohort cohort_from_spec(const CohortSpec &spec, const PipelineConfig &config) {
    auto generated = generate(spec);
    auto cleaned = clean_trips(generated.trips, config);
    auto persons = assemble_persons(std::move(cleaned.trips), generated.persons, cleaned.report);
    return prepare_cohort(std::move(persons), config);
}

ExperimentConfig quick_experiment(std::uint64_t seed, int epochs) {
    ExperimentConfig c;
    c.seed = seed;
    c.train.learning_rate = 1e-3;
    c.train.max_epochs = epochs;
    c.train.patience = 2;
    c.train.seed = seed;
    c.threads = 1;
    return c;
}

std::filesystem::path scratch_dir(const std::string &name) {
    auto dir = std::filesystem::temp_directory_path() / ("mobdemo_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace mobdemo::testing
