#include "geogrouse/grouping.hpp"

#include <cmath>
#include <cstring>
#include <limits>
#include <stdexcept>

#include "geogrouse/ops.hpp"
#include "geogrouse/rng.hpp"

namespace geogrouse {

static double sq_dist(const double* a, const double* b, std::size_t d) {
    double s = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        double diff = a[i] - b[i];
        s += diff * diff;
    }
    return s;
}

std::size_t nearest_centroid(const Tensor& centroids, const double* x, std::size_t d) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < centroids.shape[0]; ++k) {
        double dist = sq_dist(centroids.row(k), x, d);
        if (dist < best_d) {
            best_d = dist;
            best = k;
        }
    }
    return best;
}

double kmeans_sse(const Tensor& points, const Tensor& centroids) {
    std::size_t d = points.shape[1];
    double sse = 0.0;
    for (std::size_t n = 0; n < points.shape[0]; ++n) {
        std::size_t k = nearest_centroid(centroids, points.row(n), d);
        sse += sq_dist(points.row(n), centroids.row(k), d);
    }
    return sse;
}

// One assignment + update sweep. Returns true if any assignment changed.
static bool lloyd_sweep(const Tensor& points, Tensor& centroids, std::vector<std::size_t>& assign_buf) {
    std::size_t N = points.shape[0], d = points.shape[1], K = centroids.shape[0];
    bool changed = false;
    std::vector<double> best_dist(N);
    for (std::size_t n = 0; n < N; ++n) {
        std::size_t k = nearest_centroid(centroids, points.row(n), d);
        best_dist[n] = sq_dist(points.row(n), centroids.row(k), d);
        if (assign_buf[n] != k) {
            assign_buf[n] = k;
            changed = true;
        }
    }
    // reseed empty clusters to the point farthest from its nearest centroid
    std::vector<std::size_t> counts(K, 0);
    for (std::size_t n = 0; n < N; ++n) counts[assign_buf[n]]++;
    for (std::size_t k = 0; k < K; ++k) {
        if (counts[k] > 0) continue;
        std::size_t far = 0;
        double far_d = -1.0;
        for (std::size_t n = 0; n < N; ++n) {
            if (counts[assign_buf[n]] > 1 && best_dist[n] > far_d) {
                far_d = best_dist[n];
                far = n;
            }
        }
        counts[assign_buf[far]]--;
        assign_buf[far] = k;
        counts[k] = 1;
        best_dist[far] = 0.0;
        changed = true;
    }
    Tensor sums({K, d}, 0.0);
    for (std::size_t n = 0; n < N; ++n) {
        double* s = sums.row(assign_buf[n]);
        const double* p = points.row(n);
        for (std::size_t i = 0; i < d; ++i) s[i] += p[i];
    }
    for (std::size_t k = 0; k < K; ++k) {
        double* c = centroids.row(k);
        const double* s = sums.row(k);
        for (std::size_t i = 0; i < d; ++i) c[i] = s[i] / static_cast<double>(counts[k]);
    }
    return changed;
}

double lloyd_refine(const Tensor& points, Tensor& centroids, int max_iters) {
    if (points.rank() != 2 || centroids.rank() != 2 || points.shape[1] != centroids.shape[1]) {
        throw std::invalid_argument("lloyd_refine: points" + shape_str(points.shape) +
                                    " vs centroids" + shape_str(centroids.shape));
    }
    std::vector<std::size_t> assign_buf(points.shape[0], std::numeric_limits<std::size_t>::max());
    for (int it = 0; it < max_iters; ++it) {
        if (!lloyd_sweep(points, centroids, assign_buf)) break;
    }
    return kmeans_sse(points, centroids);
}

Tensor kmeans_fit(const Tensor& points, std::size_t K, int max_iters, std::uint64_t seed) {
    if (points.rank() != 2) throw std::invalid_argument("kmeans_fit: points must be [N,d]");
    std::size_t N = points.shape[0], d = points.shape[1];
    if (K == 0 || N < K) {
        throw std::invalid_argument("kmeans_fit: need N >= K >= 1, got N=" + std::to_string(N) +
                                    " K=" + std::to_string(K));
    }
    Rng rng(seed);
    // k-means++ seeding
    Tensor centroids({K, d});
    std::vector<double> min_d(N, std::numeric_limits<double>::infinity());
    std::vector<bool> taken(N, false);
    std::size_t first = rng.uniform_index(N);
    std::memcpy(centroids.row(0), points.row(first), d * sizeof(double));
    taken[first] = true;
    for (std::size_t k = 1; k < K; ++k) {
        double total = 0.0;
        for (std::size_t n = 0; n < N; ++n) {
            double dist = sq_dist(points.row(n), centroids.row(k - 1), d);
            if (dist < min_d[n]) min_d[n] = dist;
            total += min_d[n];
        }
        std::size_t pick = N;
        if (total > 0.0) {
            double r = rng.uniform() * total;
            double acc = 0.0;
            for (std::size_t n = 0; n < N; ++n) {
                acc += min_d[n];
                if (r < acc) {
                    pick = n;
                    break;
                }
            }
        }
        if (pick == N) {
            // all remaining mass is zero: take the first point not yet chosen
            for (std::size_t n = 0; n < N; ++n) {
                if (!taken[n]) {
                    pick = n;
                    break;
                }
            }
            if (pick == N) pick = 0;
        }
        std::memcpy(centroids.row(k), points.row(pick), d * sizeof(double));
        taken[pick] = true;
    }
    lloyd_refine(points, centroids, max_iters);
    return centroids;
}

GroupIndicator assign(const Tensor& g, const ParamStore& ps, const ModelConfig& cfg) {
    switch (cfg.variant) {
        case GsVariant::none:
            return GroupIndicator::none();
        case GsVariant::kmeans: {
            const Tensor& centroids = ps.param("phi.centroids");
            std::size_t k = nearest_centroid(centroids, g.data.data(), g.numel());
            return GroupIndicator::discrete(static_cast<int>(k));
        }
        case GsVariant::proto: {
            const Tensor& protos = ps.param("gs.proto.p");
            std::size_t best = 0;
            double best_cos = -std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < protos.shape[0]; ++k) {
                Tensor p({g.numel()},
                         std::vector<double>(protos.row(k), protos.row(k) + g.numel()));
                double c = cosine_sim(g, p);
                if (c > best_cos) {
                    best_cos = c;
                    best = k;
                }
            }
            return GroupIndicator::discrete(static_cast<int>(best));
        }
        case GsVariant::can: {
            const Tensor& L = ps.param("gs.can.L");
            Tensor h({L.shape[0]});
            for (std::size_t i = 0; i < L.shape[0]; ++i) {
                const double* li = L.row(i);
                double s = 0.0;
                for (std::size_t j = 0; j < g.numel(); ++j) s += li[j] * g.data[j];
                h.data[i] = s;
            }
            return GroupIndicator::from_dense(std::move(h));
        }
    }
    throw std::logic_error("assign: unhandled variant");
}

// cos(g, p_k) for every prototype row, plus norms for the backward pass.
static void proto_cosines(const Tensor& protos, const double* g, std::size_t d,
                          std::vector<double>& cos_out, std::vector<double>& dots,
                          std::vector<double>& pnorms, double& gnorm) {
    std::size_t K = protos.shape[0];
    gnorm = 0.0;
    for (std::size_t j = 0; j < d; ++j) gnorm += g[j] * g[j];
    gnorm = std::sqrt(gnorm);
    if (gnorm == 0.0) throw std::invalid_argument("proto assign: zero-norm g");
    cos_out.resize(K);
    dots.resize(K);
    pnorms.resize(K);
    for (std::size_t k = 0; k < K; ++k) {
        const double* p = protos.row(k);
        double dp = 0.0, pn = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            dp += p[j] * g[j];
            pn += p[j] * p[j];
        }
        pn = std::sqrt(pn);
        if (pn == 0.0) throw std::invalid_argument("proto assign: zero-norm prototype");
        dots[k] = dp;
        pnorms[k] = pn;
        cos_out[k] = dp / (pn * gnorm);
    }
}

double proto_likelihood(const Tensor& g_batch, const ParamStore& ps, const ModelConfig& cfg) {
    const Tensor& protos = ps.param("gs.proto.p");
    std::size_t N = g_batch.shape[0], d = g_batch.shape[1], K = protos.shape[0];
    double total = 0.0;
    std::vector<double> cosines, dots, pnorms;
    for (std::size_t n = 0; n < N; ++n) {
        double gnorm = 0.0;
        proto_cosines(protos, g_batch.row(n), d, cosines, dots, pnorms, gnorm);
        std::size_t khat = 0;
        for (std::size_t k = 1; k < K; ++k) {
            if (cosines[k] > cosines[khat]) khat = k;
        }
        Tensor logits({K});
        for (std::size_t k = 0; k < K; ++k) logits.data[k] = cosines[k] / cfg.proto_temp;
        total += log_softmax_at(logits, khat);
    }
    return total / static_cast<double>(N);
}

// d/dp of cos(g,p) = g/(|g||p|) - cos * p/|p|^2
static void add_dcos_dp(double coef, const double* g, const double* p, double dp_dot, double pnorm,
                        double gnorm, std::size_t d, double* out) {
    double c = dp_dot / (pnorm * gnorm);
    for (std::size_t j = 0; j < d; ++j) {
        out[j] += coef * (g[j] / (pnorm * gnorm) - c * p[j] / (pnorm * pnorm));
    }
}

static double proto_estep(const Tensor& g_batch, ParamStore& ps, const ModelConfig& cfg,
                          double step_size) {
    Tensor& protos = ps.param("gs.proto.p");
    std::size_t N = g_batch.shape[0], d = g_batch.shape[1], K = protos.shape[0];
    Tensor grad({K, d}, 0.0);
    std::vector<double> cosines, dots, pnorms;
    for (std::size_t n = 0; n < N; ++n) {
        const double* g = g_batch.row(n);
        double gnorm = 0.0;
        proto_cosines(protos, g, d, cosines, dots, pnorms, gnorm);
        std::size_t khat = 0;
        for (std::size_t k = 1; k < K; ++k) {
            if (cosines[k] > cosines[khat]) khat = k;
        }
        Tensor logits({K});
        for (std::size_t k = 0; k < K; ++k) logits.data[k] = cosines[k] / cfg.proto_temp;
        Tensor q = softmax(logits);
        // d log q(khat) / d cos_k = (1[k=khat] - q_k) / T
        for (std::size_t k = 0; k < K; ++k) {
            double dcos = ((k == khat ? 1.0 : 0.0) - q.data[k]) / cfg.proto_temp;
            add_dcos_dp(dcos / static_cast<double>(N), g, protos.row(k), dots[k], pnorms[k], gnorm,
                        d, grad.row(k));
        }
    }
    for (std::size_t i = 0; i < protos.numel(); ++i) protos.data[i] += step_size * grad.data[i];
    return proto_likelihood(g_batch, ps, cfg);
}

EStepResult e_step(const Tensor& g_batch, ParamStore& ps, const ModelConfig& cfg,
                   int lloyd_max_iters, double step_size) {
    if (g_batch.rank() != 2 || g_batch.shape[0] == 0) {
        throw std::invalid_argument("e_step: empty batch");
    }
    EStepResult res;
    switch (cfg.variant) {
        case GsVariant::none:
        case GsVariant::can:
            // h is a deterministic function of g; nothing to fit here
            break;
        case GsVariant::kmeans: {
            Tensor& centroids = ps.param("phi.centroids");
            res.objective = lloyd_refine(g_batch, centroids, lloyd_max_iters);
            break;
        }
        case GsVariant::proto: {
            res.objective = proto_estep(g_batch, ps, cfg, step_size);
            break;
        }
    }
    return res;
}

}  // namespace geogrouse
