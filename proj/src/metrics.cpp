#include "geogrouse/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace geogrouse {

double auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size()) {
        throw std::invalid_argument("auc: " + std::to_string(scores.size()) + " scores vs " +
                                    std::to_string(labels.size()) + " labels");
    }
    std::size_t n_pos = 0, n_neg = 0;
    for (int l : labels) (l ? n_pos : n_neg)++;
    if (n_pos == 0 || n_neg == 0) {
        throw std::invalid_argument("auc: needs at least one positive and one negative label");
    }
    // rank-sum with average ranks for ties
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    double pos_rank_sum = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
        for (std::size_t t = i; t < j; ++t) {
            if (labels[order[t]]) pos_rank_sum += avg_rank;
        }
        i = j;
    }
    double numer = pos_rank_sum - 0.5 * static_cast<double>(n_pos) * static_cast<double>(n_pos + 1);
    return numer / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double ndcg_at_k(const std::vector<int>& ranked_labels, int k) {
    if (k < 1) throw std::invalid_argument("ndcg_at_k: k must be >= 1");
    std::size_t depth = std::min<std::size_t>(ranked_labels.size(), static_cast<std::size_t>(k));
    double dcg = 0.0;
    std::size_t n_pos = 0;
    for (std::size_t i = 0; i < ranked_labels.size(); ++i) {
        if (ranked_labels[i]) ++n_pos;
        if (i < depth && ranked_labels[i]) dcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
    }
    if (n_pos == 0) return 0.0;
    double idcg = 0.0;
    for (std::size_t i = 0; i < std::min(n_pos, depth); ++i) {
        idcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
    }
    return dcg / idcg;
}

int hit_at_k(const std::vector<int>& ranked_labels, int k) {
    if (k < 1) throw std::invalid_argument("hit_at_k: k must be >= 1");
    std::size_t depth = std::min<std::size_t>(ranked_labels.size(), static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < depth; ++i) {
        if (ranked_labels[i]) return 1;
    }
    return 0;
}

static double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

static double std_of(const std::vector<double>& v, double mean) {
    if (v.size() < 2) return 0.0;
    double s = 0.0;
    for (double x : v) s += (x - mean) * (x - mean);
    return std::sqrt(s / static_cast<double>(v.size()));
}

static std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string MetricsReport::to_json() const {
    std::ostringstream os;
    os << "{\n  \"auc\": {\"mean\": " << fmt(auc_mean) << ", \"std\": " << fmt(auc_std) << "},\n";
    for (const auto& [k, m] : ndcg_mean) {
        os << "  \"ndcg@" << k << "\": {\"mean\": " << fmt(m)
           << ", \"std\": " << fmt(ndcg_std.at(k)) << "},\n";
    }
    os << "  \"hit_rate@10\": {\"mean\": " << fmt(hit10_mean) << ", \"std\": " << fmt(hit10_std)
       << "},\n";
    os << "  \"n_sessions\": " << n_sessions << ",\n  \"n_impressions\": " << n_impressions
       << ",\n  \"auc_pooling\": \"global over impressions\"\n}\n";
    return os.str();
}

std::string MetricsReport::to_table() const {
    std::ostringstream os;
    char buf[128];
    auto row = [&](const std::string& name, double m, double s) {
        std::snprintf(buf, sizeof(buf), "%-12s %.4f+-%.4f\n", name.c_str(), m, s);
        os << buf;
    };
    row("AUC", auc_mean, auc_std);
    for (const auto& [k, m] : ndcg_mean) row("NDCG@" + std::to_string(k), m, ndcg_std.at(k));
    row("Hit Rate@10", hit10_mean, hit10_std);
    return os.str();
}

EvalScorer bayes_ceiling_scorer(const Environment& env) {
    return [&env](const SyntheticUser& user, const State&, const std::vector<int>& candidates,
                  std::vector<double>& out) {
        out.resize(candidates.size());
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            out[i] = env.click_probability(user, candidates[i]);
        }
    };
}

MetricsReport offline_eval(const Scorer& model, const Environment& env, const EvalConfig& cfg) {
    return offline_eval_with(
        [&model](const SyntheticUser&, const State& s, const std::vector<int>& candidates,
                 std::vector<double>& out) { model(s, candidates, out); },
        env, cfg);
}

MetricsReport offline_eval_with(const EvalScorer& model, const Environment& env,
                                const EvalConfig& cfg) {
    if (cfg.seeds.empty() || cfg.n_sessions < 1) {
        throw std::invalid_argument("offline_eval: empty test set");
    }
    MetricsReport report;
    std::vector<double> auc_per_seed, hit_per_seed;
    std::map<int, std::vector<double>> ndcg_per_seed;

    Scorer logger = uniform_scorer();
    std::vector<double> step_scores;
    for (std::uint64_t seed : cfg.seeds) {
        std::vector<double> pooled_scores;
        std::vector<int> pooled_labels;
        std::map<int, double> ndcg_sum;
        double hit_sum = 0.0;
        std::size_t n_steps = 0;

        for (int si = 0; si < cfg.n_sessions; ++si) {
            Rng rng = Rng::substream(seed, 0xE7A1, static_cast<std::uint64_t>(si));
            const SyntheticUser& user = env.users[rng.uniform_index(env.users.size())];
            std::vector<LabeledStep> steps;
            simulate_session(env, user, logger, env.cfg.max_session_len, rng, false, &steps);
            for (const LabeledStep& st : steps) {
                model(user, st.state, st.candidates, step_scores);
                // rank candidates by model score, ties to the lower index
                std::vector<std::size_t> order(st.candidates.size());
                std::iota(order.begin(), order.end(), 0);
                std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                    return step_scores[a] > step_scores[b];
                });
                std::vector<int> ranked(order.size());
                for (std::size_t i = 0; i < order.size(); ++i) ranked[i] = st.labels[order[i]];
                for (int k : cfg.k_list) ndcg_sum[k] += ndcg_at_k(ranked, k);
                hit_sum += hit_at_k(ranked, 10);
                ++n_steps;
                for (std::size_t i = 0; i < st.candidates.size(); ++i) {
                    pooled_scores.push_back(step_scores[i]);
                    pooled_labels.push_back(st.labels[i]);
                }
            }
            report.n_sessions += 1;
        }
        report.n_impressions += pooled_scores.size();
        auc_per_seed.push_back(auc(pooled_scores, pooled_labels));
        hit_per_seed.push_back(hit_sum / static_cast<double>(n_steps));
        for (int k : cfg.k_list) {
            ndcg_per_seed[k].push_back(ndcg_sum[k] / static_cast<double>(n_steps));
        }
    }

    report.auc_mean = mean_of(auc_per_seed);
    report.auc_std = std_of(auc_per_seed, report.auc_mean);
    report.hit10_mean = mean_of(hit_per_seed);
    report.hit10_std = std_of(hit_per_seed, report.hit10_mean);
    for (const auto& [k, v] : ndcg_per_seed) {
        report.ndcg_mean[k] = mean_of(v);
        report.ndcg_std[k] = std_of(v, report.ndcg_mean[k]);
    }
    return report;
}

double eval_auc(const PolicyNet& policy, const ParamStore& ps, const Environment& env,
                const EvalConfig& cfg) {
    return offline_eval(policy_scorer(policy, ps), env, cfg).auc_mean;
}

std::vector<SweepRow> sensitivity_sweep(const std::vector<int>& levels, const Environment& env,
                                        ModelConfig model_cfg, const TrainConfig& train_cfg,
                                        const EvalConfig& eval_cfg,
                                        const std::vector<std::uint64_t>& train_seeds) {
    std::vector<SweepRow> rows;
    for (int level : levels) {
        if (level < 1 || level > kAoiLevels) {
            throw std::invalid_argument("sensitivity_sweep: aoi level " + std::to_string(level) +
                                        " outside 1.." + std::to_string(kAoiLevels));
        }
        SweepRow row;
        row.aoi_level = level;
        model_cfg.aoi_level = level;
        PolicyNet policy(model_cfg, env.vocabs(level), env.item_category);
        for (std::uint64_t seed : train_seeds) {
            TrainConfig tc = train_cfg;
            tc.seed = seed;
            TrainResult res = train_em(policy, env, tc);
            row.auc_per_seed.push_back(eval_auc(policy, res.params, env, eval_cfg));
        }
        row.mean_auc = mean_of(row.auc_per_seed);
        rows.push_back(std::move(row));
    }
    return rows;
}

void save_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_sweep_csv: cannot open '" + path + "'");
    out << "aoi_level";
    if (!rows.empty()) {
        for (std::size_t i = 0; i < rows[0].auc_per_seed.size(); ++i) out << ",auc_seed" << i;
    }
    out << ",mean_auc\n";
    char buf[64];
    for (const SweepRow& r : rows) {
        out << r.aoi_level;
        for (double a : r.auc_per_seed) {
            std::snprintf(buf, sizeof(buf), ",%.17g", a);
            out << buf;
        }
        std::snprintf(buf, sizeof(buf), ",%.17g\n", r.mean_auc);
        out << buf;
    }
}

}  // namespace geogrouse
