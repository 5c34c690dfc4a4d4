#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "geogrouse/episode.hpp"
#include "geogrouse/grouping.hpp"
#include "geogrouse/policy.hpp"
#include "geogrouse/simulator.hpp"
#include "geogrouse/tensor.hpp"

namespace geogrouse {

/// Raised when a training step produces non-finite values.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TrainConfig {
    double gamma = 0.9;
    double learning_rate = 0.01;
    int batch_size = 16;         // episodes per M-step
    int em_rounds = 50;
    int m_steps_per_round = 1;   // sessions per round = batch_size * m_steps_per_round
    int e_step_every = 1;        // rounds between E-steps
    bool baseline = true;
    double proto_estep_lr = 1e-3;
    int lloyd_max_iters = 25;
    std::uint64_t seed = 1;

    bool operator==(const TrainConfig&) const = default;
};

struct TrainHistoryRow {
    int round = 0;
    double mean_return = 0.0;
    double objective = 0.0;     // policy-gradient surrogate sum (G - B) log pi
    double e_objective = 0.0;   // kmeans SSE or proto log-likelihood
    double grad_norm = 0.0;
};

struct TrainHistory {
    std::vector<TrainHistoryRow> rows;
    void save_csv(const std::string& path) const;
};

struct TrainResult {
    ParamStore params;
    TrainHistory history;
};

/// Fresh parameters: uniform(-0.05, 0.05) weights, zero biases, kmeans
/// towers initialized identically, prototypes/centroids from a k-means fit
/// of the users' home geo embeddings.
ParamStore init_params(const PolicyNet& policy, const Environment& env, std::uint64_t seed);

/// One REINFORCE update on a batch of episodes with phi frozen: accumulates
/// sum over steps of (G_t - B) grad log pi(a_t | s_t, h_t) and applies a
/// single gradient-ascent step. Returns the surrogate objective.
double m_step(const std::vector<Episode>& batch, ParamStore& ps, const PolicyNet& policy,
              const TrainConfig& cfg);

/// Wraps the policy + current params as a session scorer (on-policy sampling).
Scorer policy_scorer(const PolicyNet& policy, const ParamStore& ps);

/// The EM loop: per round, simulate fresh on-policy sessions, run the
/// variant's E-step on their geo embeddings (per cadence), then
/// m_steps_per_round M-steps. Deterministic given cfg.seed.
TrainResult train_em(const PolicyNet& policy, const Environment& env, const TrainConfig& cfg);

/// Finite-difference check of the whole policy path (log-prob through
/// scoring, GS head, DIN, and every embedding table) on one random state
/// with the group indicator held fixed. Weights drawn U(-0.4, 0.4) so no
/// touched coordinate's gradient sits below the finite-difference noise
/// floor. Returns the max relative error over all parameter coordinates.
double full_stack_grad_check(const PolicyNet& policy, const Environment& env, std::uint64_t seed,
                             double eps = 1e-5);

}  // namespace geogrouse
