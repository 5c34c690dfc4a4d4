#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "geogrouse/policy.hpp"
#include "geogrouse/simulator.hpp"
#include "geogrouse/training.hpp"

namespace geogrouse {

/// P(random positive outranks random negative), ties 0.5, via rank-sum.
/// Throws if labels are single-class.
double auc(const std::vector<double>& scores, const std::vector<int>& labels);

/// Binary NDCG@k over an already-ranked label list; 0 when no positives.
double ndcg_at_k(const std::vector<int>& ranked_labels, int k);

/// 1 iff any positive appears within the top k of the ranked labels.
int hit_at_k(const std::vector<int>& ranked_labels, int k);

struct MetricsReport {
    double auc_mean = 0.0, auc_std = 0.0;
    std::map<int, double> ndcg_mean, ndcg_std;
    double hit10_mean = 0.0, hit10_std = 0.0;
    std::size_t n_sessions = 0;
    std::size_t n_impressions = 0;

    std::string to_json() const;
    /// Aligned plain-text table: AUC, NDCG@k rows, Hit Rate@10.
    std::string to_table() const;
};

struct EvalConfig {
    std::vector<std::uint64_t> seeds = {1001, 1002, 1003, 1004, 1005,
                                        1006, 1007, 1008, 1009, 1010};
    std::vector<int> k_list = {3, 5, 10, 20, 50};
    int n_sessions = 200;

    bool operator==(const EvalConfig&) const = default;
};

/// Evaluation-time scorer that also sees the session's user, so the Bayes
/// ceiling (true click probability, which depends on the user's latent
/// taste) fits the same harness as state-only models.
using EvalScorer =
    std::function<void(const SyntheticUser&, const State&, const std::vector<int>&,
                       std::vector<double>&)>;

EvalScorer bayes_ceiling_scorer(const Environment& env);

/// Held-out evaluation: per seed, simulate uniform-logged sessions with
/// realized per-candidate outcomes, score every candidate set with the
/// model, pool AUC over all impressions and average NDCG/HitRate over
/// steps; report mean +- std across seeds.
MetricsReport offline_eval(const Scorer& model, const Environment& env, const EvalConfig& cfg);
MetricsReport offline_eval_with(const EvalScorer& model, const Environment& env,
                                const EvalConfig& cfg);

/// Convenience: mean AUC of a trained parameter set.
double eval_auc(const PolicyNet& policy, const ParamStore& ps, const Environment& env,
                const EvalConfig& cfg);

struct SweepRow {
    int aoi_level = 0;
    std::vector<double> auc_per_seed;  // one entry per training seed
    double mean_auc = 0.0;
};

/// Full train+eval per AOI level over the given training seeds; identical
/// seeds across levels.
std::vector<SweepRow> sensitivity_sweep(const std::vector<int>& levels, const Environment& env,
                                        ModelConfig model_cfg, const TrainConfig& train_cfg,
                                        const EvalConfig& eval_cfg,
                                        const std::vector<std::uint64_t>& train_seeds);

void save_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path);

}  // namespace geogrouse
