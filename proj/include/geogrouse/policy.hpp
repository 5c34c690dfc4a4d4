#pragma once

#include <functional>
#include <vector>

#include "geogrouse/geo.hpp"
#include "geogrouse/tensor.hpp"

namespace geogrouse {

/// Latent group indicator: a discrete cluster/prototype index for the
/// kmeans/proto variants, a dense generated-parameter vector for can, and
/// empty for the identity (ablation) head.
struct GroupIndicator {
    enum class Kind { none, discrete, dense };
    Kind kind = Kind::none;
    int index = 0;
    Tensor dense;

    static GroupIndicator none() { return {}; }
    static GroupIndicator discrete(int k) { return {Kind::discrete, k, {}}; }
    static GroupIndicator from_dense(Tensor h) { return {Kind::dense, 0, std::move(h)}; }
};

/// Micro-MLP parameters sliced out of a packed vector of length P, in the
/// order W1[d_a,m], b1[m], W2[m,d_a], b2[d_a].
struct MicroMlp {
    Tensor W1, b1, W2, b2;
};

MicroMlp unpack_micro_mlp(const Tensor& v, std::size_t d_a, std::size_t m);
Tensor pack_micro_mlp(const MicroMlp& p);

/// logits[c] = <a, cand_embs[c,:]>.
Tensor score_items(const Tensor& a, const Tensor& cand_embs);

/// log softmax(logits)[chosen].
double policy_log_prob(const Tensor& logits, std::size_t chosen);

/// Indices of the k largest logits, ties broken by lower index.
std::vector<std::size_t> top_k_recommend(const Tensor& logits, std::size_t k);

/// Everything the backward pass needs from one forward evaluation.
struct PolicyTrace {
    State state;
    std::vector<int> candidates;
    GroupIndicator h;

    EncodedState enc;
    Tensor ctx_vec;       // [d_p + d_g] query input
    Tensor query;         // [d_i]
    std::vector<Tensor> attn_hidden;  // tanh'd, per behavior item
    Tensor attn_scores;   // [L] (L >= 1 only)
    Tensor attn_weights;  // [L]
    Tensor attended;      // [d_i], zeros when the sequence is empty
    Tensor fuse_in;       // [d_p + d_i + d_g]
    Tensor fuse_hidden;   // tanh'd
    Tensor a_shared;      // [d_a]

    Tensor eta;           // proto: tanh(W p + b); can: L_phi g; else empty
    Tensor micro_hidden;  // tanh'd hidden of the selected tower / micro-MLP
    Tensor action;        // [d_a]
    Tensor cand_embs;     // [C, d_a]
    Tensor logits;        // [C]
};

/// The policy network pi(a|s,h) = GS(DIN(s), h) with inner-product scoring
/// over a candidate set. Parameters are resolved by name from a ParamStore;
/// forward is read-only, backward accumulates into the store's grads.
class PolicyNet {
public:
    PolicyNet(ModelConfig cfg, Vocabs vocabs, std::vector<int> item_category);

    const ModelConfig& config() const { return cfg_; }
    const Vocabs& vocabs() const { return vocabs_; }
    int category_of(int item) const;

    /// Shared DIN tower: a_s = DIN(s).
    Tensor din_forward(const EncodedState& enc, const ParamStore& ps, PolicyTrace* trace) const;

    /// Group-specification head: a = GS(a_s, h). For the can variant the
    /// dense h is recomputed as L_phi g so gradients reach L_phi.
    Tensor gs_forward(const Tensor& a_shared, const GroupIndicator& h, const Tensor& g,
                      const ParamStore& ps, PolicyTrace* trace) const;

    /// Full forward: encode, DIN, GS, candidate scoring.
    PolicyTrace forward(const State& s, const std::vector<int>& candidates,
                        const GroupIndicator& h, const ParamStore& ps) const;

    /// Single-encode forward for the training/serving path: h is derived
    /// from the already-encoded g. The assigner may be empty for the
    /// none/can variants, whose heads need no precomputed indicator.
    using GroupAssigner = std::function<GroupIndicator(const Tensor& g)>;
    PolicyTrace forward(const State& s, const std::vector<int>& candidates, const ParamStore& ps,
                        const GroupAssigner& assigner) const;

    /// Accumulates grads of coef * log pi(candidates[chosen_pos] | s, h) for
    /// every parameter on the policy path.
    void backward_log_prob(const PolicyTrace& trace, std::size_t chosen_pos, double coef,
                           ParamStore& ps) const;

    /// Registers all policy parameter slots (embeddings, DIN, GS head).
    void add_param_slots(ParamStore& ps, class Rng& rng, double scale) const;

private:
    Tensor candidate_embedding(int item, const ParamStore& ps) const;
    void finish_forward(PolicyTrace& trace, const ParamStore& ps) const;

    ModelConfig cfg_;
    Vocabs vocabs_;
    std::vector<int> item_category_;
};

}  // namespace geogrouse
