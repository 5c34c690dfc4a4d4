#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "geogrouse/episode.hpp"
#include "geogrouse/simulator.hpp"
#include "test_helpers.hpp"

using namespace geogrouse;
using namespace ggtest;

TEST_CASE("generate_environment basics") {
    EnvConfig cfg = small_env();
    Environment env = generate_environment(cfg);

    CHECK(env.users.size() == static_cast<std::size_t>(cfg.n_users));
    CHECK(env.item_category.size() == static_cast<std::size_t>(cfg.n_items));
    for (int i = 0; i < cfg.n_items; ++i) {
        CHECK(env.item_category[static_cast<std::size_t>(i)] == i % cfg.n_categories);
    }
    // pi rows are probability vectors
    for (int g = 0; g < cfg.n_groups; ++g) {
        double row = 0.0;
        for (int c = 0; c < cfg.n_categories; ++c) {
            row += env.pi.at(static_cast<std::size_t>(g), static_cast<std::size_t>(c));
        }
        CHECK(row == doctest::Approx(1.0).epsilon(1e-12));
    }
    // distinct top category per group with disjoint-ish rows
    CHECK(env.pi.at(0, 0) == doctest::Approx(cfg.pi_top_mass));
    CHECK(env.pi.at(1, 1) == doctest::Approx(cfg.pi_top_mass));
    CHECK(env.pi.at(2, 2) == doctest::Approx(cfg.pi_top_mass));

    // every gps cell maps to exactly one group; level 3 of the AOI path is
    // the group id, levels 1-2 merge, levels 4-5 refine
    for (int cell = 0; cell < cfg.n_gps_cells; ++cell) {
        int group = env.cell_group[static_cast<std::size_t>(cell)];
        CHECK(group >= 0);
        CHECK(group < cfg.n_groups);
        const auto& path = env.cell_aoi[static_cast<std::size_t>(cell)];
        CHECK(path[2] == group);
        CHECK(path[1] == group / 2);
        CHECK(path[0] == group / 4);
        CHECK(path[3] / cfg.aoi_branch4 == path[2]);
        CHECK(path[4] / cfg.aoi_branch5 == path[3]);
        for (int l = 0; l < kAoiLevels; ++l) {
            CHECK(static_cast<std::size_t>(path[l]) < env.aoi_vocab[static_cast<std::size_t>(l)]);
        }
    }

    SUBCASE("single group degenerates cleanly") {
        EnvConfig one = cfg;
        one.n_groups = 1;
        Environment env1 = generate_environment(one);
        CHECK(env1.pi.shape[0] == 1);
        for (int cell = 0; cell < one.n_gps_cells; ++cell) {
            CHECK(env1.cell_group[static_cast<std::size_t>(cell)] == 0);
        }
    }

    SUBCASE("same seed reproduces the environment exactly") {
        Environment env2 = generate_environment(cfg);
        CHECK(env2.item_appeal == env.item_appeal);
        CHECK(env2.bias == env.bias);
        for (std::size_t u = 0; u < env.users.size(); ++u) {
            CHECK(env2.users[u].taste == env.users[u].taste);
            CHECK(env2.users[u].home == env.users[u].home);
        }
    }

    SUBCASE("inconsistent spec rejected") {
        EnvConfig bad = cfg;
        bad.candidate_set_size = bad.n_items + 1;
        CHECK_THROWS(generate_environment(bad));
    }
}

TEST_CASE("click probability: constant model when alpha=beta=0 and no noise") {
    EnvConfig cfg = small_env();
    cfg.alpha = 0.0;
    cfg.beta = 0.0;
    cfg.noise_scale = 0.0;
    Environment env = generate_environment(cfg);
    double expected = 1.0 / (1.0 + std::exp(-env.bias));
    for (int u = 0; u < 5; ++u) {
        for (int i = 0; i < 10; ++i) {
            CHECK(env.click_probability(env.users[static_cast<std::size_t>(u)], i) ==
                  doctest::Approx(expected).epsilon(1e-12));
        }
    }
    CHECK(expected == doctest::Approx(cfg.target_click_rate).epsilon(0.01));
}

TEST_CASE("click probability follows the group preference ordering in alpha") {
    EnvConfig cfg = small_env();
    cfg.alpha = 8.0;
    cfg.beta = 0.0;
    cfg.noise_scale = 0.0;
    Environment env = generate_environment(cfg);
    for (const SyntheticUser& u : env.users) {
        int group = env.group_of_user(u);
        int top_cat = group % cfg.n_categories;
        // any item of the top category beats any item of a non-top category
        double top_min = 1.0, other_max = 0.0;
        for (int i = 0; i < cfg.n_items; ++i) {
            double p = env.click_probability(u, i);
            if (env.item_category[static_cast<std::size_t>(i)] == top_cat) {
                top_min = std::min(top_min, p);
            } else {
                other_max = std::max(other_max, p);
            }
        }
        CHECK(top_min > other_max);
    }
}

TEST_CASE("uniform-policy click rate calibrates near the target") {
    EnvConfig cfg = small_env(21);
    Environment env = generate_environment(cfg);
    Rng rng(99);
    double clicks = 0.0;
    int n = 10000;
    for (int i = 0; i < n; ++i) {
        const SyntheticUser& u = env.users[rng.uniform_index(env.users.size())];
        int item = static_cast<int>(rng.uniform_index(static_cast<std::size_t>(cfg.n_items)));
        clicks += rng.bernoulli(env.click_probability(u, item)) ? 1.0 : 0.0;
    }
    double rate = clicks / n;
    CHECK(rate >= 0.08);
    CHECK(rate <= 0.12);
}

TEST_CASE("simulate_session contracts") {
    EnvConfig cfg = small_env(31);
    Environment env = generate_environment(cfg);
    const SyntheticUser& user = env.users[3];

    SUBCASE("max_len bounds the episode") {
        Rng rng(1);
        Episode ep = simulate_session(env, user, uniform_scorer(), 1, rng);
        CHECK(ep.steps.size() == 1);
        CHECK(ep.user_id == user.id);
        const EpisodeStep& st = ep.steps[0];
        CHECK(st.candidate_set.size() == static_cast<std::size_t>(cfg.candidate_set_size));
        bool found = false;
        for (int c : st.candidate_set) found = found || c == st.chosen_item;
        CHECK(found);
    }

    SUBCASE("greedy sessions are reproducible") {
        Rng a(7), b(7);
        Episode e1 = simulate_session(env, user, oracle_scorer(env, user), 5, a, true);
        Episode e2 = simulate_session(env, user, oracle_scorer(env, user), 5, b, true);
        CHECK(e1 == e2);
    }

    SUBCASE("behavior grows only on clicks") {
        Rng rng(11);
        Episode ep = simulate_session(env, user, uniform_scorer(), 8, rng);
        std::size_t len = user.init_history.size();
        for (const EpisodeStep& st : ep.steps) {
            CHECK(st.state.behavior.size() == len);
            if (st.reward == 1) len = std::min<std::size_t>(len + 1,
                                    static_cast<std::size_t>(cfg.max_behavior_len));
        }
    }

    SUBCASE("uniform logging reward rate matches the calibrated click rate") {
        double total = 0.0;
        std::size_t steps = 0;
        for (int s = 0; s < 1000; ++s) {
            Rng rng(1000 + static_cast<std::uint64_t>(s));
            const SyntheticUser& u = env.users[rng.uniform_index(env.users.size())];
            Episode ep = simulate_session(env, u, uniform_scorer(), 4, rng);
            for (const EpisodeStep& st : ep.steps) {
                total += st.reward;
                ++steps;
            }
        }
        double rate = total / static_cast<double>(steps);
        CHECK(rate >= 0.08);
        CHECK(rate <= 0.12);
    }
}

TEST_CASE("oracle policy beats the uniform logger with headroom") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        EnvConfig cfg = small_env(seed);
        Environment env = generate_environment(cfg);
        double uniform_reward = 0.0, oracle_reward = 0.0;
        std::size_t steps = 0;
        for (int s = 0; s < 1000; ++s) {
            Rng ru = Rng::substream(seed, 1, static_cast<std::uint64_t>(s));
            Rng ro = Rng::substream(seed, 1, static_cast<std::uint64_t>(s));
            const SyntheticUser& u = env.users[ru.uniform_index(env.users.size())];
            const SyntheticUser& u2 = env.users[ro.uniform_index(env.users.size())];
            Episode eu = simulate_session(env, u, uniform_scorer(), 4, ru);
            Episode eo = simulate_session(env, u2, oracle_scorer(env, u2), 4, ro, true);
            for (const EpisodeStep& st : eu.steps) uniform_reward += st.reward;
            for (const EpisodeStep& st : eo.steps) oracle_reward += st.reward;
            steps += eu.steps.size();
        }
        CHECK(oracle_reward / static_cast<double>(steps) >
              uniform_reward / static_cast<double>(steps) + 0.1);
    }
}

TEST_CASE("sessions json-lines round-trip exactly") {
    EnvConfig cfg = small_env(41);
    Environment env = generate_environment(cfg);
    std::vector<Episode> episodes;
    for (int s = 0; s < 100; ++s) {
        Rng rng(500 + static_cast<std::uint64_t>(s));
        const SyntheticUser& u = env.users[rng.uniform_index(env.users.size())];
        Episode ep = simulate_session(env, u, uniform_scorer(), 3, rng);
        ep.session_id = s;
        episodes.push_back(std::move(ep));
    }
    std::string path = "sessions_roundtrip_test.jsonl";
    write_sessions(episodes, path);
    std::vector<Episode> back = read_sessions(path);
    CHECK(back == episodes);

    std::vector<Episode> none;
    write_sessions(none, path);
    CHECK(read_sessions(path).empty());
    std::remove(path.c_str());
}

TEST_CASE("malformed session lines report the line number") {
    std::string path = "sessions_malformed_test.jsonl";
    {
        std::ofstream out(path);
        out << R"({"session_id":0,"user_id":1,"steps":[]})" << "\n";
        out << R"({"session_id":"oops","user_id":1,"steps":[]})" << "\n";
    }
    try {
        read_sessions(path);
        FAIL("expected throw");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
    std::remove(path.c_str());
}

TEST_CASE("non-integer ids are rejected on read") {
    std::string path = "sessions_schema_test.jsonl";
    {
        std::ofstream out(path);
        out << R"({"session_id":0,"user_id":1,"steps":[{"state":{"profile":[1],"behavior":[],)"
            << R"("geo":{"city":0,"gps":0,"aoi":[0,0,0,0,0],"hour":0,"season":0}},)"
            << R"("chosen":"é","candidates":[1,2],"reward":1}]})" << "\n";
    }
    CHECK_THROWS(read_sessions(path));
    std::remove(path.c_str());
}
