#include "mobdemo/checkpoint.hpp"

#include "mobdemo/digest.hpp"
#include "mobdemo/error.hpp"

#include <json.hpp>

#include <fstream>

namespace mobdemo {

using nlohmann::json;

Checkpoint make_checkpoint(const Network &network, const TrainConfig &config, std::vector<std::string> head_names) {
    Checkpoint c;
    c.shape = network.shape();
    c.config = config;
    c.config_hash = sha1_hex(config.canonical());
    c.head_names = std::move(head_names);
    c.params.assign(network.params().begin(), network.params().end());
    return c;
}

void save_checkpoint(const std::filesystem::path &path, const Checkpoint &c) {
    json j;
    j["version"] = kCheckpointVersion;
    j["shape"] = {{"input_dim", c.shape.input_dim},
                  {"hidden", c.shape.hidden},
                  {"head_classes", c.shape.head_classes},
                  {"layer_norm", c.shape.layer_norm},
                  {"dropout", c.shape.dropout}};
    j["config"] = {{"learning_rate", c.config.learning_rate},
                   {"batch_size", c.config.batch_size},
                   {"weight_decay", c.config.weight_decay},
                   {"max_epochs", c.config.max_epochs},
                   {"patience", c.config.patience},
                   {"dropout", c.config.dropout},
                   {"task_weights", c.config.task_weights},
                   {"seed", c.config.seed},
                   {"layer_norm", c.config.layer_norm}};
    j["config_hash"] = c.config_hash;
    if (!c.run_id.empty()) {
        j["run_id"] = c.run_id;
    }
    j["head_names"] = c.head_names;
    j["params"] = c.params;
    std::ofstream out{path};
    if (!out) {
        throw DataError("io_error", "cannot write " + path.string());
    }
    out << j.dump() << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path &path) {
    Checkpoint c;
    try {
        auto j = json::parse(read_file(path));
        if (j.at("version").get<int>() != kCheckpointVersion) {
            throw DataError("bad_checkpoint", "unsupported checkpoint version");
        }
        const auto &s = j.at("shape");
        c.shape.input_dim = s.at("input_dim").get<std::size_t>();
        c.shape.hidden = s.at("hidden").get<std::vector<std::size_t>>();
        c.shape.head_classes = s.at("head_classes").get<std::vector<int>>();
        c.shape.layer_norm = s.at("layer_norm").get<bool>();
        c.shape.dropout = s.at("dropout").get<double>();
        const auto &cfg = j.at("config");
        c.config.learning_rate = cfg.at("learning_rate").get<double>();
        c.config.batch_size = cfg.at("batch_size").get<std::size_t>();
        c.config.weight_decay = cfg.at("weight_decay").get<double>();
        c.config.max_epochs = cfg.at("max_epochs").get<int>();
        c.config.patience = cfg.at("patience").get<int>();
        c.config.dropout = cfg.at("dropout").get<double>();
        c.config.task_weights = cfg.at("task_weights").get<std::vector<double>>();
        c.config.seed = cfg.at("seed").get<std::uint64_t>();
        c.config.layer_norm = cfg.at("layer_norm").get<bool>();
        c.config_hash = j.at("config_hash").get<std::string>();
        c.head_names = j.at("head_names").get<std::vector<std::string>>();
        c.run_id = j.value("run_id", std::string{});
        c.params = j.at("params").get<std::vector<double>>();
    } catch (const json::exception &e) {
        throw DataError("bad_checkpoint", std::string{"malformed checkpoint: "} + e.what());
    }
    if (sha1_hex(c.config.canonical()) != c.config_hash) {
        throw DataError("bad_checkpoint", "config hash does not match the stored configuration");
    }
    if (Network{c.shape}.parameter_count() != c.params.size()) {
        throw DataError("bad_checkpoint", "parameter count does not match the stored shape");
    }
    return c;
}

Network restore_network(const Checkpoint &checkpoint) {
    Network net{checkpoint.shape};
    net.params().assign(checkpoint.params.begin(), checkpoint.params.end());
    return net;
}

} // namespace mobdemo
