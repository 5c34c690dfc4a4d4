#pragma once

#include "geogrouse/geo.hpp"
#include "geogrouse/policy.hpp"
#include "geogrouse/rng.hpp"
#include "geogrouse/simulator.hpp"

namespace ggtest {

using namespace geogrouse;

// compact dims so finite-difference sweeps stay fast
inline ModelConfig small_model(GsVariant variant = GsVariant::can) {
    ModelConfig cfg;
    cfg.dim_city = 2;
    cfg.dim_gps = 3;
    cfg.dim_aoi = 4;
    cfg.dim_hour = 2;
    cfg.dim_season = 2;
    cfg.aoi_level = 3;
    cfg.dim_item = 4;
    cfg.dim_action = 4;
    cfg.dim_profile = 3;
    cfg.attn_hidden = 5;
    cfg.fuse_hidden = 6;
    cfg.micro_hidden = 3;
    cfg.n_groups = 3;
    cfg.variant = variant;
    return cfg;
}

inline Vocabs small_vocabs() {
    Vocabs v;
    v.city = 2;
    v.gps_cell = 6;
    v.aoi = 3;
    v.items = 12;
    v.categories = 4;
    v.profile = {5, 3};
    return v;
}

inline std::vector<int> round_robin_categories(std::size_t n_items, std::size_t n_categories) {
    std::vector<int> cats(n_items);
    for (std::size_t i = 0; i < n_items; ++i) cats[i] = static_cast<int>(i % n_categories);
    return cats;
}

inline State sample_state(Rng& rng, const Vocabs& v, std::size_t seq_len) {
    State s;
    for (std::size_t f = 0; f < v.profile.size(); ++f) {
        s.profile_ids.push_back(static_cast<int>(rng.uniform_index(v.profile[f])));
    }
    for (std::size_t t = 0; t < seq_len; ++t) {
        int item = static_cast<int>(rng.uniform_index(v.items));
        s.behavior.emplace_back(item, static_cast<int>(rng.uniform_index(v.categories)));
    }
    s.geo.city = static_cast<int>(rng.uniform_index(v.city));
    s.geo.gps_cell = static_cast<int>(rng.uniform_index(v.gps_cell));
    for (int l = 0; l < kAoiLevels; ++l) {
        s.geo.aoi_path[static_cast<std::size_t>(l)] = static_cast<int>(rng.uniform_index(v.aoi));
    }
    s.geo.hour = static_cast<int>(rng.uniform_index(v.hour));
    s.geo.season = static_cast<int>(rng.uniform_index(v.season));
    return s;
}

// small planted environment for simulator-backed tests
inline EnvConfig small_env(std::uint64_t seed = 7) {
    EnvConfig cfg;
    cfg.n_groups = 3;
    cfg.n_categories = 5;
    cfg.n_items = 30;
    cfg.candidate_set_size = 8;
    cfg.n_gps_cells = 12;
    cfg.n_users = 40;
    cfg.init_history_max = 4;
    cfg.max_session_len = 4;
    cfg.seed = seed;
    return cfg;
}

}  // namespace ggtest
