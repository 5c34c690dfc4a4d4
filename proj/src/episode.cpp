#include "geogrouse/episode.hpp"

#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace geogrouse {

using nlohmann::json;

static json state_to_json(const State& s) {
    json geo = {{"city", s.geo.city},
                {"gps", s.geo.gps_cell},
                {"aoi", s.geo.aoi_path},
                {"hour", s.geo.hour},
                {"season", s.geo.season}};
    json behavior = json::array();
    for (const auto& [item, cat] : s.behavior) behavior.push_back({item, cat});
    return {{"profile", s.profile_ids}, {"behavior", behavior}, {"geo", geo}};
}

static State state_from_json(const json& j) {
    State s;
    s.profile_ids = j.at("profile").get<std::vector<int>>();
    for (const auto& pair : j.at("behavior")) {
        if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number_integer() ||
            !pair[1].is_number_integer()) {
            throw std::invalid_argument("behavior entries must be [item_id, category_id] int pairs");
        }
        s.behavior.emplace_back(pair[0].get<int>(), pair[1].get<int>());
    }
    const json& geo = j.at("geo");
    s.geo.city = geo.at("city").get<int>();
    s.geo.gps_cell = geo.at("gps").get<int>();
    auto aoi = geo.at("aoi").get<std::vector<int>>();
    if (aoi.size() != kAoiLevels) {
        throw std::invalid_argument("geo.aoi must have " + std::to_string(kAoiLevels) + " levels");
    }
    std::copy(aoi.begin(), aoi.end(), s.geo.aoi_path.begin());
    s.geo.hour = geo.at("hour").get<int>();
    s.geo.season = geo.at("season").get<int>();
    return s;
}

void write_sessions(const std::vector<Episode>& episodes, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_sessions: cannot open '" + path + "'");
    for (const Episode& ep : episodes) {
        json steps = json::array();
        for (const EpisodeStep& st : ep.steps) {
            steps.push_back({{"state", state_to_json(st.state)},
                             {"chosen", st.chosen_item},
                             {"candidates", st.candidate_set},
                             {"reward", st.reward}});
        }
        json j = {{"session_id", ep.session_id}, {"user_id", ep.user_id}, {"steps", steps}};
        out << j.dump() << "\n";
    }
}

std::vector<Episode> read_sessions(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_sessions: cannot open '" + path + "'");
    std::vector<Episode> episodes;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            json j = json::parse(line);
            Episode ep;
            ep.session_id = j.at("session_id").get<std::int64_t>();
            ep.user_id = j.at("user_id").get<int>();
            for (const json& js : j.at("steps")) {
                EpisodeStep st;
                st.state = state_from_json(js.at("state"));
                if (!js.at("chosen").is_number_integer()) {
                    throw std::invalid_argument("chosen must be an integer item id");
                }
                st.chosen_item = js.at("chosen").get<int>();
                st.candidate_set = js.at("candidates").get<std::vector<int>>();
                int reward = js.at("reward").get<int>();
                if (reward != 0 && reward != 1) {
                    throw std::invalid_argument("reward must be 0 or 1");
                }
                st.reward = reward;
                ep.steps.push_back(std::move(st));
            }
            episodes.push_back(std::move(ep));
        } catch (const std::exception& e) {
            throw std::runtime_error("read_sessions: " + path + " line " + std::to_string(line_no) +
                                     ": " + e.what());
        }
    }
    return episodes;
}

}  // namespace geogrouse
