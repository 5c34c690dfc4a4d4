#include "geogrouse/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "geogrouse/ops.hpp"

namespace geogrouse {

static double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double Environment::click_probability(const SyntheticUser& u, int item) const {
    if (item < 0 || static_cast<std::size_t>(item) >= item_category.size()) {
        throw std::out_of_range("click_probability: item " + std::to_string(item) +
                                " outside catalog");
    }
    int cat = item_category[static_cast<std::size_t>(item)];
    int group = group_of_user(u);
    double z = cfg.alpha * pi.at(static_cast<std::size_t>(group), static_cast<std::size_t>(cat)) +
               cfg.beta * u.taste[static_cast<std::size_t>(cat)] +
               item_appeal[static_cast<std::size_t>(item)] + bias;
    return sigmoid(z);
}

Vocabs Environment::vocabs(int aoi_level) const {
    if (aoi_level < 1 || aoi_level > kAoiLevels) {
        throw std::invalid_argument("vocabs: aoi_level " + std::to_string(aoi_level) +
                                    " outside 1.." + std::to_string(kAoiLevels));
    }
    Vocabs v;
    v.city = static_cast<std::size_t>(cfg.n_cities);
    v.gps_cell = static_cast<std::size_t>(cfg.n_gps_cells);
    v.aoi = aoi_vocab[static_cast<std::size_t>(aoi_level - 1)];
    v.items = static_cast<std::size_t>(cfg.n_items);
    v.categories = static_cast<std::size_t>(cfg.n_categories);
    for (int p : cfg.profile_vocabs) v.profile.push_back(static_cast<std::size_t>(p));
    return v;
}

// Mean click probability over all (user, item) pairs for a candidate bias.
static double mean_rate_at_bias(const Environment& env, double bias) {
    double total = 0.0;
    for (const SyntheticUser& u : env.users) {
        int group = env.cell_group[u.home.gps_cell];
        for (std::size_t i = 0; i < env.item_category.size(); ++i) {
            int cat = env.item_category[i];
            double z = env.cfg.alpha * env.pi.at(static_cast<std::size_t>(group),
                                                 static_cast<std::size_t>(cat)) +
                       env.cfg.beta * u.taste[static_cast<std::size_t>(cat)] + env.item_appeal[i] +
                       bias;
            total += sigmoid(z);
        }
    }
    return total / (static_cast<double>(env.users.size()) * static_cast<double>(env.item_category.size()));
}

Environment generate_environment(const EnvConfig& cfg) {
    if (cfg.n_groups < 1 || cfg.n_categories < 1 || cfg.n_items < 1 || cfg.n_users < 1 ||
        cfg.n_gps_cells < cfg.n_groups || cfg.candidate_set_size > cfg.n_items ||
        cfg.candidate_set_size < 1) {
        throw std::invalid_argument("generate_environment: inconsistent spec");
    }
    Environment env;
    env.cfg = cfg;
    std::size_t G = static_cast<std::size_t>(cfg.n_groups);
    std::size_t C = static_cast<std::size_t>(cfg.n_categories);

    // group preference profiles: each group concentrates on its own top
    // category, remaining mass spread uniformly
    env.pi = Tensor({G, C});
    for (std::size_t g = 0; g < G; ++g) {
        std::size_t top = g % C;
        double rest = C > 1 ? (1.0 - cfg.pi_top_mass) / static_cast<double>(C - 1) : 0.0;
        for (std::size_t c = 0; c < C; ++c) {
            env.pi.at(g, c) = (c == top) ? (C > 1 ? cfg.pi_top_mass : 1.0) : rest;
        }
    }

    Rng item_rng = Rng::substream(cfg.seed, 1);
    env.item_category.resize(static_cast<std::size_t>(cfg.n_items));
    env.item_appeal.resize(static_cast<std::size_t>(cfg.n_items));
    for (int i = 0; i < cfg.n_items; ++i) {
        env.item_category[static_cast<std::size_t>(i)] = i % cfg.n_categories;
        env.item_appeal[static_cast<std::size_t>(i)] = cfg.noise_scale * item_rng.normal();
    }

    // geo layout: contiguous blocks of gps cells per group; the AOI path is
    // a function of the cell. Level 3 equals the group id; levels 1-2 merge
    // groups; levels 4-5 subdivide each group.
    env.cell_group.resize(static_cast<std::size_t>(cfg.n_gps_cells));
    env.cell_aoi.resize(static_cast<std::size_t>(cfg.n_gps_cells));
    std::vector<int> within_group_pos(G, 0);
    for (int cell = 0; cell < cfg.n_gps_cells; ++cell) {
        int group = static_cast<int>((static_cast<std::int64_t>(cell) * cfg.n_groups) / cfg.n_gps_cells);
        env.cell_group[static_cast<std::size_t>(cell)] = group;
        int pos = within_group_pos[static_cast<std::size_t>(group)]++;
        int a3 = group;
        int a2 = group / 2;
        int a1 = group / 4;
        int a4 = a3 * cfg.aoi_branch4 + pos % cfg.aoi_branch4;
        int a5 = a4 * cfg.aoi_branch5 + (pos / cfg.aoi_branch4) % cfg.aoi_branch5;
        env.cell_aoi[static_cast<std::size_t>(cell)] = {a1, a2, a3, a4, a5};
    }
    env.aoi_vocab = {static_cast<std::size_t>((cfg.n_groups + 3) / 4),
                     static_cast<std::size_t>((cfg.n_groups + 1) / 2),
                     static_cast<std::size_t>(cfg.n_groups),
                     static_cast<std::size_t>(cfg.n_groups * cfg.aoi_branch4),
                     static_cast<std::size_t>(cfg.n_groups * cfg.aoi_branch4 * cfg.aoi_branch5)};

    // items grouped by category for history generation
    std::vector<std::vector<int>> by_category(C);
    for (int i = 0; i < cfg.n_items; ++i) {
        by_category[static_cast<std::size_t>(env.item_category[static_cast<std::size_t>(i)])].push_back(i);
    }

    Rng user_rng = Rng::substream(cfg.seed, 2);
    env.users.reserve(static_cast<std::size_t>(cfg.n_users));
    for (int uid = 0; uid < cfg.n_users; ++uid) {
        SyntheticUser u;
        u.id = uid;
        int cell = static_cast<int>(user_rng.uniform_index(static_cast<std::size_t>(cfg.n_gps_cells)));
        u.home.city = static_cast<int>(user_rng.uniform_index(static_cast<std::size_t>(cfg.n_cities)));
        u.home.gps_cell = cell;
        u.home.aoi_path = env.cell_aoi[static_cast<std::size_t>(cell)];
        u.home.hour = static_cast<int>(user_rng.uniform_index(kHourVocab));
        u.home.season = static_cast<int>(user_rng.uniform_index(kSeasonVocab));
        u.taste.resize(C);
        double taste_sum = 0.0;
        for (std::size_t c = 0; c < C; ++c) {
            u.taste[c] = -std::log(std::max(user_rng.uniform(), 0x1.0p-53));
            taste_sum += u.taste[c];
        }
        for (double& t : u.taste) t /= taste_sum;
        for (int vocab : cfg.profile_vocabs) {
            u.profile_ids.push_back(static_cast<int>(user_rng.uniform_index(static_cast<std::size_t>(vocab))));
        }
        // initial history drawn from the blend of the group profile and taste
        int group = env.cell_group[static_cast<std::size_t>(cell)];
        std::vector<double> blend(C);
        for (std::size_t c = 0; c < C; ++c) {
            blend[c] = env.pi.at(static_cast<std::size_t>(group), c) + u.taste[c];
        }
        std::size_t n_hist = user_rng.uniform_index(static_cast<std::size_t>(cfg.init_history_max) + 1);
        for (std::size_t j = 0; j < n_hist; ++j) {
            std::size_t cat = user_rng.categorical(blend);
            const std::vector<int>& pool = by_category[cat];
            if (pool.empty()) continue;
            int item = pool[user_rng.uniform_index(pool.size())];
            u.init_history.emplace_back(item, static_cast<int>(cat));
        }
        env.users.push_back(std::move(u));
    }

    // calibrate the bias so the uniform-policy click rate hits the target
    double lo = -12.0, hi = 12.0;
    for (int it = 0; it < 60; ++it) {
        double mid = 0.5 * (lo + hi);
        env.bias = mid;
        if (mean_rate_at_bias(env, mid) > cfg.target_click_rate) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    env.bias = 0.5 * (lo + hi);
    return env;
}

Scorer uniform_scorer() {
    return [](const State&, const std::vector<int>& candidates, std::vector<double>& out) {
        out.assign(candidates.size(), 0.0);
    };
}

Scorer oracle_scorer(const Environment& env, const SyntheticUser& user) {
    return [&env, &user](const State&, const std::vector<int>& candidates, std::vector<double>& out) {
        out.resize(candidates.size());
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            out[i] = env.click_probability(user, candidates[i]);
        }
    };
}

static std::vector<int> draw_candidates(const Environment& env, Rng& rng) {
    std::size_t n = static_cast<std::size_t>(env.cfg.n_items);
    std::size_t c = static_cast<std::size_t>(env.cfg.candidate_set_size);
    std::vector<int> picked;
    picked.reserve(c);
    std::vector<bool> used(n, false);
    while (picked.size() < c) {
        std::size_t i = rng.uniform_index(n);
        if (used[i]) continue;
        used[i] = true;
        picked.push_back(static_cast<int>(i));
    }
    return picked;
}

Episode simulate_session(const Environment& env, const SyntheticUser& user, const Scorer& scorer,
                         int max_len, Rng& rng, bool greedy, std::vector<LabeledStep>* labeled) {
    Episode ep;
    ep.user_id = user.id;
    State state;
    state.profile_ids = user.profile_ids;
    state.behavior = user.init_history;
    state.geo = user.home;
    state.geo.hour = static_cast<int>(rng.uniform_index(kHourVocab));

    std::vector<double> logits;
    std::vector<double> probs;
    for (int step = 0; step < max_len; ++step) {
        std::vector<int> candidates = draw_candidates(env, rng);
        std::vector<int> labels(candidates.size());
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            labels[i] = rng.bernoulli(env.click_probability(user, candidates[i])) ? 1 : 0;
        }
        scorer(state, candidates, logits);
        if (logits.size() != candidates.size()) {
            throw std::runtime_error("simulate_session: scorer returned " +
                                     std::to_string(logits.size()) + " logits for " +
                                     std::to_string(candidates.size()) + " candidates");
        }
        std::size_t pick;
        if (greedy) {
            pick = 0;
            for (std::size_t i = 1; i < logits.size(); ++i) {
                if (logits[i] > logits[pick]) pick = i;
            }
        } else {
            Tensor p = softmax(Tensor::vector(std::vector<double>(logits.begin(), logits.end())));
            probs.assign(p.data.begin(), p.data.end());
            pick = rng.categorical(probs);
        }
        int chosen = candidates[pick];
        int reward = labels[pick];

        if (labeled) labeled->push_back({state, candidates, labels});
        ep.steps.push_back({state, chosen, candidates, reward});

        // transition: clicked items append to the behavior sequence
        if (reward == 1) {
            state.behavior.emplace_back(chosen, env.item_category[static_cast<std::size_t>(chosen)]);
            if (state.behavior.size() > static_cast<std::size_t>(env.cfg.max_behavior_len)) {
                state.behavior.erase(state.behavior.begin());
            }
        }
        if ((step + 1) % 3 == 0) state.geo.hour = (state.geo.hour + 1) % 24;
    }
    return ep;
}

}  // namespace geogrouse
