#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "geogrouse/geo.hpp"

namespace geogrouse {

/// One logged or simulated session tau of (state, action, reward) steps.
struct EpisodeStep {
    State state;
    int chosen_item = 0;
    std::vector<int> candidate_set;
    int reward = 0;  // 0|1

    bool operator==(const EpisodeStep&) const = default;
};

struct Episode {
    std::int64_t session_id = 0;
    int user_id = 0;
    std::vector<EpisodeStep> steps;

    bool operator==(const Episode&) const = default;
};

/// JSON-lines persistence, one episode per line; read(write(x)) == x exactly.
void write_sessions(const std::vector<Episode>& episodes, const std::string& path);
std::vector<Episode> read_sessions(const std::string& path);

}  // namespace geogrouse
