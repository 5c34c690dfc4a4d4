#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "geogrouse/episode.hpp"
#include "geogrouse/geo.hpp"
#include "geogrouse/rng.hpp"
#include "geogrouse/tensor.hpp"

namespace geogrouse {

/// Knobs for the synthetic O2O environment with planted geographic group
/// structure: G functional regions, each with its own category preference
/// profile; the AOI hierarchy aligns with the regions exactly at level 3.
struct EnvConfig {
    int n_groups = 3;
    int n_categories = 5;
    int n_items = 200;
    int candidate_set_size = 20;
    int n_cities = 1;
    int n_gps_cells = 60;
    int n_users = 300;
    int aoi_branch4 = 4;  // level-4 children per level-3 region
    int aoi_branch5 = 4;  // level-5 children per level-4 node
    double pi_top_mass = 0.6;
    double alpha = 5.0;        // group-affinity weight
    double beta = 1.5;         // user-taste weight
    double noise_scale = 0.25;  // stddev of the per-item appeal offset
    double target_click_rate = 0.1;
    int init_history_max = 8;
    int max_behavior_len = 30;
    int max_session_len = 6;
    std::vector<int> profile_vocabs = {8, 5};
    std::uint64_t seed = 7;

    bool operator==(const EnvConfig&) const = default;
};

struct SyntheticUser {
    int id = 0;
    GeoContext home;
    std::vector<double> taste;  // probability vector over categories
    std::vector<int> profile_ids;
    std::vector<std::pair<int, int>> init_history;
};

/// A generated environment: catalog, users, geo layout, calibrated click
/// model. Immutable after generation.
struct Environment {
    EnvConfig cfg;
    Tensor pi;  // [G, n_categories], rows sum to 1
    std::vector<int> item_category;
    std::vector<double> item_appeal;
    std::vector<int> cell_group;                      // gps cell -> group
    std::vector<std::array<int, kAoiLevels>> cell_aoi;  // gps cell -> AOI path
    std::array<std::size_t, kAoiLevels> aoi_vocab{};
    std::vector<SyntheticUser> users;
    double bias = 0.0;

    int group_of_user(const SyntheticUser& u) const { return cell_group[u.home.gps_cell]; }
    double click_probability(const SyntheticUser& u, int item) const;
    /// Model vocabularies for a given active AOI level.
    Vocabs vocabs(int aoi_level) const;
};

Environment generate_environment(const EnvConfig& cfg);

/// Scores a candidate set; logits in, one per candidate. A uniform logger
/// returns all-zero logits.
using Scorer = std::function<void(const State&, const std::vector<int>&, std::vector<double>&)>;

Scorer uniform_scorer();
/// Ranks by the true click probability (Bayes ceiling).
Scorer oracle_scorer(const Environment& env, const SyntheticUser& user);

/// Realized per-candidate click outcomes for one step, used by evaluation.
struct LabeledStep {
    State state;
    std::vector<int> candidates;
    std::vector<int> labels;
};

/// Simulates one session: per step a uniform candidate set is drawn, the
/// scorer's softmax picks an item (argmax when greedy), the reward is the
/// item's realized Bernoulli outcome, and clicked items append to the
/// behavior sequence. Outcomes for the whole candidate set are drawn before
/// scoring, so paired evaluation across models sees identical labels.
Episode simulate_session(const Environment& env, const SyntheticUser& user, const Scorer& scorer,
                         int max_len, Rng& rng, bool greedy = false,
                         std::vector<LabeledStep>* labeled = nullptr);

}  // namespace geogrouse
