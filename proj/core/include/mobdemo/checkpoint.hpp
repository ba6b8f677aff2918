#pragma once

#include "mobdemo/network.hpp"
#include "mobdemo/trainer.hpp"

#include <filesystem>
#include <string>

namespace mobdemo {

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
    NetworkShape shape;
    TrainConfig config;
    std::string config_hash; ///< sha1 of TrainConfig::canonical()
    std::vector<std::string> head_names;
    std::vector<double> params;
    std::string run_id; ///< run that produced it; optional
};

Checkpoint make_checkpoint(const Network &network, const TrainConfig &config, std::vector<std::string> head_names);

/// JSON container; doubles round-trip exactly.
void save_checkpoint(const std::filesystem::path &path, const Checkpoint &checkpoint);
/// Throws DataError("bad_checkpoint") on version, shape or hash mismatch.
Checkpoint load_checkpoint(const std::filesystem::path &path);

Network restore_network(const Checkpoint &checkpoint);

} // namespace mobdemo
