#pragma once

#include <cstdint>
#include <vector>

#include "geogrouse/geo.hpp"
#include "geogrouse/policy.hpp"
#include "geogrouse/tensor.hpp"

namespace geogrouse {

/// Lloyd's algorithm with k-means++ initialization. points:[N,d], N >= K.
/// Empty clusters are reseeded to the point farthest from its nearest
/// centroid. Stops when assignments are unchanged or after max_iters.
Tensor kmeans_fit(const Tensor& points, std::size_t K, int max_iters, std::uint64_t seed);

/// Lloyd iterations warm-started from the given centroids; mutates them.
/// Returns the final within-cluster SSE.
double lloyd_refine(const Tensor& points, Tensor& centroids, int max_iters);

/// Within-cluster SSE of points against centroids.
double kmeans_sse(const Tensor& points, const Tensor& centroids);

/// Nearest centroid by L2 distance, ties to the lower index.
std::size_t nearest_centroid(const Tensor& centroids, const double* x, std::size_t d);

/// The recognition model sigma_phi(h|s) on the geographic embedding g.
/// kmeans: Discrete(argmin_k ||g - c_k||); proto: Discrete(argmax_k cos(g, p_k));
/// can: Dense(L_phi g); none: empty indicator.
GroupIndicator assign(const Tensor& g, const ParamStore& ps, const ModelConfig& cfg);

/// Mean over rows of log softmax_k(cos(g, p_k)/T) at each row's current
/// argmax assignment; the proto E-step ascends this.
double proto_likelihood(const Tensor& g_batch, const ParamStore& ps, const ModelConfig& cfg);

struct EStepResult {
    /// kmeans: within-cluster SSE after the refit; proto: batch mean
    /// log-likelihood after the ascent step; can/none: 0.
    double objective = 0.0;
};

/// Variant-specific E-step update of phi with theta frozen.
/// kmeans: one full Lloyd refit of the centroids on the batch (warm-started);
/// proto: one gradient-ascent step of size step_size on proto_likelihood,
/// updating the prototypes only; can/none: no-op.
EStepResult e_step(const Tensor& g_batch, ParamStore& ps, const ModelConfig& cfg,
                   int lloyd_max_iters, double step_size);

}  // namespace geogrouse
