#pragma once

#include <stdexcept>
#include <string>

#include "geogrouse/geo.hpp"
#include "geogrouse/metrics.hpp"
#include "geogrouse/simulator.hpp"
#include "geogrouse/training.hpp"

namespace geogrouse {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// One run is fully determined by one config file: sections [env], [model],
/// [train], [eval], [io]. Unknown sections or keys are rejected.
struct RunConfig {
    EnvConfig env;
    ModelConfig model;
    TrainConfig train;
    EvalConfig eval;
    std::vector<std::uint64_t> sweep_seeds = {1, 2, 3, 4, 5};
    std::string output_dir = "out";
    int n_logged_sessions = 500;

    bool operator==(const RunConfig&) const = default;
};

/// Parses INI-style text ("key = value" under "[section]", '#' comments).
/// Throws ConfigError naming the offending section.key.
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::string& path);

/// Canonical INI form; re-parses to an equal RunConfig.
std::string serialize_run_config(const RunConfig& cfg);

}  // namespace geogrouse
