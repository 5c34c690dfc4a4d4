#include "geogrouse/policy.hpp"

#include <algorithm>
#include <cstring>
#include <numeric>
#include <stdexcept>

#include "geogrouse/ops.hpp"
#include "geogrouse/rng.hpp"

namespace geogrouse {

// Row-vector affine helpers: y[j] = b[j] + sum_i x[i] W[i,j], W:[d_in,d_out].
static Tensor affine_vec(const Tensor& x, const Tensor& W, const Tensor& b) {
    std::size_t d_in = x.numel(), d_out = b.numel();
    if (W.rank() != 2 || W.shape[0] != d_in || W.shape[1] != d_out) {
        throw std::invalid_argument("affine_vec: x" + shape_str(x.shape) + " W" + shape_str(W.shape) +
                                    " b" + shape_str(b.shape) + " do not conform");
    }
    Tensor y({d_out});
    std::memcpy(y.data.data(), b.data.data(), d_out * sizeof(double));
    for (std::size_t i = 0; i < d_in; ++i) {
        double xi = x.data[i];
        if (xi == 0.0) continue;
        const double* wi = W.row(i);
        for (std::size_t j = 0; j < d_out; ++j) y.data[j] += xi * wi[j];
    }
    return y;
}

static void affine_vec_backward(const Tensor& x, const Tensor& W, const Tensor& dy,
                                Tensor* dx, Tensor* dW, Tensor* db) {
    std::size_t d_in = x.numel(), d_out = dy.numel();
    if (db) {
        for (std::size_t j = 0; j < d_out; ++j) db->data[j] += dy.data[j];
    }
    if (dW) {
        for (std::size_t i = 0; i < d_in; ++i) {
            double xi = x.data[i];
            if (xi == 0.0) continue;
            double* dwi = dW->row(i);
            for (std::size_t j = 0; j < d_out; ++j) dwi[j] += xi * dy.data[j];
        }
    }
    if (dx) {
        for (std::size_t i = 0; i < d_in; ++i) {
            const double* wi = W.row(i);
            double s = 0.0;
            for (std::size_t j = 0; j < d_out; ++j) s += wi[j] * dy.data[j];
            dx->data[i] += s;
        }
    }
}

// y = M v + b-less matvec for M:[rows, cols] stored row-major.
static Tensor matvec(const Tensor& M, const Tensor& v) {
    if (M.rank() != 2 || M.shape[1] != v.numel()) {
        throw std::invalid_argument("matvec: M" + shape_str(M.shape) + " v" + shape_str(v.shape) +
                                    " do not conform");
    }
    Tensor y({M.shape[0]});
    for (std::size_t i = 0; i < M.shape[0]; ++i) {
        const double* mi = M.row(i);
        double s = 0.0;
        for (std::size_t j = 0; j < v.numel(); ++j) s += mi[j] * v.data[j];
        y.data[i] = s;
    }
    return y;
}

static void matvec_backward(const Tensor& M, const Tensor& v, const Tensor& dy,
                            Tensor* dM, Tensor* dv) {
    for (std::size_t i = 0; i < M.shape[0]; ++i) {
        double di = dy.data[i];
        if (di == 0.0) continue;
        if (dM) {
            double* dmi = dM->row(i);
            for (std::size_t j = 0; j < v.numel(); ++j) dmi[j] += di * v.data[j];
        }
        if (dv) {
            const double* mi = M.row(i);
            for (std::size_t j = 0; j < v.numel(); ++j) dv->data[j] += di * mi[j];
        }
    }
}

MicroMlp unpack_micro_mlp(const Tensor& v, std::size_t d_a, std::size_t m) {
    std::size_t P = d_a * m + m + m * d_a + d_a;
    if (v.numel() != P) {
        throw std::invalid_argument("unpack_micro_mlp: expected packed length " + std::to_string(P) +
                                    ", got " + std::to_string(v.numel()));
    }
    MicroMlp p;
    const double* src = v.data.data();
    p.W1 = Tensor({d_a, m}, std::vector<double>(src, src + d_a * m));
    src += d_a * m;
    p.b1 = Tensor({m}, std::vector<double>(src, src + m));
    src += m;
    p.W2 = Tensor({m, d_a}, std::vector<double>(src, src + m * d_a));
    src += m * d_a;
    p.b2 = Tensor({d_a}, std::vector<double>(src, src + d_a));
    return p;
}

Tensor pack_micro_mlp(const MicroMlp& p) {
    std::vector<double> out;
    out.reserve(p.W1.numel() + p.b1.numel() + p.W2.numel() + p.b2.numel());
    for (const Tensor* t : {&p.W1, &p.b1, &p.W2, &p.b2}) {
        out.insert(out.end(), t->data.begin(), t->data.end());
    }
    return Tensor::vector(std::move(out));
}

Tensor score_items(const Tensor& a, const Tensor& cand_embs) {
    if (cand_embs.rank() != 2 || cand_embs.shape[1] != a.numel()) {
        throw std::invalid_argument("score_items: a" + shape_str(a.shape) + " vs candidates" +
                                    shape_str(cand_embs.shape));
    }
    std::size_t C = cand_embs.shape[0];
    Tensor logits({C});
    for (std::size_t c = 0; c < C; ++c) {
        const double* e = cand_embs.row(c);
        double s = 0.0;
        for (std::size_t i = 0; i < a.numel(); ++i) s += a.data[i] * e[i];
        logits.data[c] = s;
    }
    return logits;
}

double policy_log_prob(const Tensor& logits, std::size_t chosen) {
    return log_softmax_at(logits, chosen);
}

std::vector<std::size_t> top_k_recommend(const Tensor& logits, std::size_t k) {
    if (k > logits.numel()) {
        throw std::invalid_argument("top_k_recommend: k=" + std::to_string(k) + " exceeds " +
                                    std::to_string(logits.numel()) + " candidates");
    }
    std::vector<std::size_t> idx(logits.numel());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return logits.data[a] > logits.data[b]; });
    idx.resize(k);
    return idx;
}

PolicyNet::PolicyNet(ModelConfig cfg, Vocabs vocabs, std::vector<int> item_category)
    : cfg_(std::move(cfg)), vocabs_(std::move(vocabs)), item_category_(std::move(item_category)) {
    if (item_category_.size() != vocabs_.items) {
        throw std::invalid_argument("PolicyNet: item_category size " +
                                    std::to_string(item_category_.size()) + " != item vocab " +
                                    std::to_string(vocabs_.items));
    }
}

int PolicyNet::category_of(int item) const {
    if (item < 0 || static_cast<std::size_t>(item) >= item_category_.size()) {
        throw std::out_of_range("PolicyNet: item id " + std::to_string(item) + " outside catalog");
    }
    return item_category_[static_cast<std::size_t>(item)];
}

static Tensor concat(std::initializer_list<const Tensor*> parts) {
    std::size_t n = 0;
    for (const Tensor* p : parts) n += p->numel();
    Tensor out({n});
    double* dst = out.data.data();
    for (const Tensor* p : parts) {
        std::memcpy(dst, p->data.data(), p->numel() * sizeof(double));
        dst += p->numel();
    }
    return out;
}

Tensor PolicyNet::din_forward(const EncodedState& enc, const ParamStore& ps,
                              PolicyTrace* trace) const {
    std::size_t d_i = cfg_.dim_item;
    Tensor ctx_vec = concat({&enc.profile_vec, &enc.g});
    Tensor query = affine_vec(ctx_vec, ps.param("din.query.W"), ps.param("din.query.b"));

    std::size_t L = enc.seq.size();
    Tensor attended({d_i}, 0.0);
    Tensor scores, weights;
    std::vector<Tensor> hidden;
    if (L > 0) {
        const Tensor& A1 = ps.param("din.attn.W1");
        const Tensor& a1 = ps.param("din.attn.b1");
        // no bias on the score output: softmax is shift invariant
        const Tensor& w2 = ps.param("din.attn.w2");
        scores = Tensor({L});
        hidden.reserve(L);
        Tensor z({4 * d_i});
        for (std::size_t t = 0; t < L; ++t) {
            const Tensor& e = enc.seq[t];
            for (std::size_t i = 0; i < d_i; ++i) {
                z.data[i] = e.data[i];
                z.data[d_i + i] = query.data[i];
                z.data[2 * d_i + i] = e.data[i] * query.data[i];
                z.data[3 * d_i + i] = e.data[i] - query.data[i];
            }
            Tensor u = tanh_forward(affine_vec(z, A1, a1));
            scores.data[t] = dot(u, w2);
            hidden.push_back(std::move(u));
        }
        weights = softmax(scores);
        for (std::size_t t = 0; t < L; ++t) {
            double w = weights.data[t];
            for (std::size_t i = 0; i < d_i; ++i) attended.data[i] += w * enc.seq[t].data[i];
        }
    }

    Tensor fuse_in = concat({&enc.profile_vec, &attended, &enc.g});
    Tensor fuse_hidden =
        tanh_forward(affine_vec(fuse_in, ps.param("din.fuse.W1"), ps.param("din.fuse.b1")));
    Tensor a_shared = affine_vec(fuse_hidden, ps.param("din.fuse.W2"), ps.param("din.fuse.b2"));

    if (trace) {
        trace->ctx_vec = std::move(ctx_vec);
        trace->query = std::move(query);
        trace->attn_hidden = std::move(hidden);
        trace->attn_scores = std::move(scores);
        trace->attn_weights = std::move(weights);
        trace->attended = std::move(attended);
        trace->fuse_in = std::move(fuse_in);
        trace->fuse_hidden = std::move(fuse_hidden);
        trace->a_shared = a_shared;
    }
    return a_shared;
}

static std::string tower_prefix(int k) { return "gs.tower" + std::to_string(k) + "."; }

static void check_discrete(const GroupIndicator& h, std::size_t K, const char* variant) {
    if (h.kind != GroupIndicator::Kind::discrete) {
        throw std::invalid_argument(std::string("gs_forward: ") + variant +
                                    " variant requires a discrete group indicator");
    }
    if (h.index < 0 || static_cast<std::size_t>(h.index) >= K) {
        throw std::out_of_range("gs_forward: group index " + std::to_string(h.index) +
                                " outside K=" + std::to_string(K));
    }
}

Tensor PolicyNet::gs_forward(const Tensor& a_shared, const GroupIndicator& h, const Tensor& g,
                             const ParamStore& ps, PolicyTrace* trace) const {
    switch (cfg_.variant) {
        case GsVariant::none: {
            if (trace) trace->action = a_shared;
            return a_shared;
        }
        case GsVariant::kmeans: {
            check_discrete(h, cfg_.n_groups, "kmeans");
            std::string pre = tower_prefix(h.index);
            Tensor mh = tanh_forward(affine_vec(a_shared, ps.param(pre + "W1"), ps.param(pre + "b1")));
            Tensor a = affine_vec(mh, ps.param(pre + "W2"), ps.param(pre + "b2"));
            if (trace) {
                trace->micro_hidden = std::move(mh);
                trace->action = a;
            }
            return a;
        }
        case GsVariant::proto: {
            check_discrete(h, cfg_.n_groups, "proto");
            const Tensor& protos = ps.param("gs.proto.p");
            Tensor p({cfg_.d_g()},
                     std::vector<double>(protos.row(static_cast<std::size_t>(h.index)),
                                         protos.row(static_cast<std::size_t>(h.index)) + cfg_.d_g()));
            Tensor pre = matvec(ps.param("gs.proto.W"), p);
            const Tensor& b = ps.param("gs.proto.b");
            for (std::size_t i = 0; i < pre.numel(); ++i) pre.data[i] += b.data[i];
            Tensor eta = tanh_forward(pre);
            MicroMlp micro = unpack_micro_mlp(eta, cfg_.dim_action, cfg_.micro_hidden);
            Tensor mh = tanh_forward(affine_vec(a_shared, micro.W1, micro.b1));
            Tensor a = affine_vec(mh, micro.W2, micro.b2);
            if (trace) {
                trace->eta = std::move(eta);
                trace->micro_hidden = std::move(mh);
                trace->action = a;
            }
            return a;
        }
        case GsVariant::can: {
            // a dense indicator from assign() is accepted (and its length
            // validated); Kind::none means "derive h here". Either way h is
            // recomputed as L_phi g so the backward pass reaches L_phi and
            // the geo tables.
            if (h.kind == GroupIndicator::Kind::dense) {
                if (h.dense.numel() != cfg_.micro_param_len()) {
                    throw std::invalid_argument(
                        "gs_forward: can variant requires a dense group indicator of length " +
                        std::to_string(cfg_.micro_param_len()));
                }
            } else if (h.kind == GroupIndicator::Kind::discrete) {
                throw std::invalid_argument(
                    "gs_forward: can variant cannot take a discrete group indicator");
            }
            Tensor hv = matvec(ps.param("gs.can.L"), g);
            MicroMlp micro = unpack_micro_mlp(hv, cfg_.dim_action, cfg_.micro_hidden);
            Tensor mh = tanh_forward(affine_vec(a_shared, micro.W1, micro.b1));
            Tensor a = affine_vec(mh, micro.W2, micro.b2);
            if (trace) {
                trace->eta = std::move(hv);
                trace->micro_hidden = std::move(mh);
                trace->action = a;
            }
            return a;
        }
    }
    throw std::logic_error("gs_forward: unhandled variant");
}

Tensor PolicyNet::candidate_embedding(int item, const ParamStore& ps) const {
    int cat = category_of(item);
    const Tensor& item_out = ps.param("emb.item_out");
    const Tensor& cat_out = ps.param("emb.cat_out");
    Tensor e({cfg_.dim_action});
    const double* ir = item_out.row(static_cast<std::size_t>(item));
    const double* cr = cat_out.row(static_cast<std::size_t>(cat));
    for (std::size_t i = 0; i < cfg_.dim_action; ++i) e.data[i] = ir[i] + cr[i];
    return e;
}

void PolicyNet::finish_forward(PolicyTrace& trace, const ParamStore& ps) const {
    din_forward(trace.enc, ps, &trace);
    gs_forward(trace.a_shared, trace.h, trace.enc.g, ps, &trace);
    trace.cand_embs = Tensor({trace.candidates.size(), cfg_.dim_action});
    for (std::size_t c = 0; c < trace.candidates.size(); ++c) {
        Tensor e = candidate_embedding(trace.candidates[c], ps);
        std::memcpy(trace.cand_embs.row(c), e.data.data(), cfg_.dim_action * sizeof(double));
    }
    trace.logits = score_items(trace.action, trace.cand_embs);
}

PolicyTrace PolicyNet::forward(const State& s, const std::vector<int>& candidates,
                               const GroupIndicator& h, const ParamStore& ps) const {
    if (candidates.empty()) throw std::invalid_argument("policy forward: empty candidate set");
    PolicyTrace trace;
    trace.state = s;
    trace.candidates = candidates;
    trace.h = h;
    trace.enc = encode_state(s, ps, cfg_, vocabs_);
    finish_forward(trace, ps);
    return trace;
}

PolicyTrace PolicyNet::forward(const State& s, const std::vector<int>& candidates,
                               const ParamStore& ps, const GroupAssigner& assigner) const {
    if (candidates.empty()) throw std::invalid_argument("policy forward: empty candidate set");
    PolicyTrace trace;
    trace.state = s;
    trace.candidates = candidates;
    trace.enc = encode_state(s, ps, cfg_, vocabs_);
    trace.h = assigner ? assigner(trace.enc.g) : GroupIndicator::none();
    finish_forward(trace, ps);
    return trace;
}

void PolicyNet::backward_log_prob(const PolicyTrace& trace, std::size_t chosen_pos, double coef,
                                  ParamStore& ps) const {
    std::size_t C = trace.candidates.size();
    std::size_t d_a = cfg_.dim_action;
    std::size_t d_i = cfg_.dim_item;
    std::size_t d_p = trace.enc.profile_vec.numel();

    Tensor dlogits({C}, 0.0);
    log_softmax_at_backward(trace.logits, chosen_pos, coef, dlogits);

    // scoring: logits[c] = <a, e_c>
    Tensor da({d_a}, 0.0);
    Tensor& g_item_out = ps.grad("emb.item_out");
    Tensor& g_cat_out = ps.grad("emb.cat_out");
    for (std::size_t c = 0; c < C; ++c) {
        double dl = dlogits.data[c];
        const double* e = trace.cand_embs.row(c);
        double* gi = g_item_out.row(static_cast<std::size_t>(trace.candidates[c]));
        double* gc = g_cat_out.row(static_cast<std::size_t>(category_of(trace.candidates[c])));
        for (std::size_t i = 0; i < d_a; ++i) {
            da.data[i] += dl * e[i];
            gi[i] += dl * trace.action.data[i];
            gc[i] += dl * trace.action.data[i];
        }
    }

    // group-specification head
    Tensor da_s({d_a}, 0.0);
    Tensor dg({cfg_.d_g()}, 0.0);
    switch (cfg_.variant) {
        case GsVariant::none: {
            da_s = da;
            break;
        }
        case GsVariant::kmeans: {
            std::string pre = tower_prefix(trace.h.index);
            Tensor dmh({cfg_.micro_hidden}, 0.0);
            affine_vec_backward(trace.micro_hidden, ps.param(pre + "W2"), da, &dmh,
                                &ps.grad(pre + "W2"), &ps.grad(pre + "b2"));
            Tensor dmh_pre({cfg_.micro_hidden}, 0.0);
            tanh_backward(trace.micro_hidden, dmh, dmh_pre);
            affine_vec_backward(trace.a_shared, ps.param(pre + "W1"), dmh_pre, &da_s,
                                &ps.grad(pre + "W1"), &ps.grad(pre + "b1"));
            break;
        }
        case GsVariant::proto:
        case GsVariant::can: {
            MicroMlp micro = unpack_micro_mlp(trace.eta, d_a, cfg_.micro_hidden);
            MicroMlp dmicro{Tensor({d_a, cfg_.micro_hidden}, 0.0), Tensor({cfg_.micro_hidden}, 0.0),
                            Tensor({cfg_.micro_hidden, d_a}, 0.0), Tensor({d_a}, 0.0)};
            Tensor dmh({cfg_.micro_hidden}, 0.0);
            affine_vec_backward(trace.micro_hidden, micro.W2, da, &dmh, &dmicro.W2, &dmicro.b2);
            Tensor dmh_pre({cfg_.micro_hidden}, 0.0);
            tanh_backward(trace.micro_hidden, dmh, dmh_pre);
            affine_vec_backward(trace.a_shared, micro.W1, dmh_pre, &da_s, &dmicro.W1, &dmicro.b1);
            Tensor deta = pack_micro_mlp(dmicro);
            if (cfg_.variant == GsVariant::proto) {
                // eta = tanh(W p_k + b)
                Tensor dpre({deta.numel()}, 0.0);
                tanh_backward(trace.eta, deta, dpre);
                const Tensor& W = ps.param("gs.proto.W");
                const Tensor& protos = ps.param("gs.proto.p");
                std::size_t k = static_cast<std::size_t>(trace.h.index);
                Tensor p({cfg_.d_g()}, std::vector<double>(protos.row(k), protos.row(k) + cfg_.d_g()));
                Tensor dp({cfg_.d_g()}, 0.0);
                matvec_backward(W, p, dpre, &ps.grad("gs.proto.W"), &dp);
                Tensor& gb = ps.grad("gs.proto.b");
                for (std::size_t i = 0; i < dpre.numel(); ++i) gb.data[i] += dpre.data[i];
                double* gp = ps.grad("gs.proto.p").row(k);
                for (std::size_t j = 0; j < cfg_.d_g(); ++j) gp[j] += dp.data[j];
            } else {
                // eta = L_phi g
                matvec_backward(ps.param("gs.can.L"), trace.enc.g, deta, &ps.grad("gs.can.L"), &dg);
            }
            break;
        }
    }

    // fusion MLP
    Tensor dfh({cfg_.fuse_hidden}, 0.0);
    affine_vec_backward(trace.fuse_hidden, ps.param("din.fuse.W2"), da_s, &dfh,
                        &ps.grad("din.fuse.W2"), &ps.grad("din.fuse.b2"));
    Tensor dfh_pre({cfg_.fuse_hidden}, 0.0);
    tanh_backward(trace.fuse_hidden, dfh, dfh_pre);
    Tensor dfuse_in({trace.fuse_in.numel()}, 0.0);
    affine_vec_backward(trace.fuse_in, ps.param("din.fuse.W1"), dfh_pre, &dfuse_in,
                        &ps.grad("din.fuse.W1"), &ps.grad("din.fuse.b1"));

    Tensor dpv({d_p}, 0.0);
    Tensor datt({d_i}, 0.0);
    for (std::size_t i = 0; i < d_p; ++i) dpv.data[i] += dfuse_in.data[i];
    for (std::size_t i = 0; i < d_i; ++i) datt.data[i] += dfuse_in.data[d_p + i];
    for (std::size_t i = 0; i < cfg_.d_g(); ++i) dg.data[i] += dfuse_in.data[d_p + d_i + i];

    // attention unit
    Tensor dq({d_i}, 0.0);
    std::size_t L = trace.enc.seq.size();
    if (L > 0) {
        std::vector<Tensor> de(L, Tensor({d_i}, 0.0));
        Tensor dw({L}, 0.0);
        for (std::size_t t = 0; t < L; ++t) {
            const Tensor& e = trace.enc.seq[t];
            double w = trace.attn_weights.data[t];
            for (std::size_t i = 0; i < d_i; ++i) {
                dw.data[t] += datt.data[i] * e.data[i];
                de[t].data[i] += w * datt.data[i];
            }
        }
        Tensor ds({L}, 0.0);
        softmax_backward(trace.attn_weights, dw, ds);

        const Tensor& A1 = ps.param("din.attn.W1");
        const Tensor& w2 = ps.param("din.attn.w2");
        Tensor& dw2 = ps.grad("din.attn.w2");
        Tensor z({4 * d_i});
        for (std::size_t t = 0; t < L; ++t) {
            const Tensor& e = trace.enc.seq[t];
            const Tensor& u = trace.attn_hidden[t];
            Tensor du({cfg_.attn_hidden}, 0.0);
            for (std::size_t j = 0; j < cfg_.attn_hidden; ++j) {
                du.data[j] += ds.data[t] * w2.data[j];
                dw2.data[j] += ds.data[t] * u.data[j];
            }
            Tensor du_pre({cfg_.attn_hidden}, 0.0);
            tanh_backward(u, du, du_pre);
            for (std::size_t i = 0; i < d_i; ++i) {
                z.data[i] = e.data[i];
                z.data[d_i + i] = trace.query.data[i];
                z.data[2 * d_i + i] = e.data[i] * trace.query.data[i];
                z.data[3 * d_i + i] = e.data[i] - trace.query.data[i];
            }
            Tensor dz({4 * d_i}, 0.0);
            affine_vec_backward(z, A1, du_pre, &dz, &ps.grad("din.attn.W1"), &ps.grad("din.attn.b1"));
            for (std::size_t i = 0; i < d_i; ++i) {
                de[t].data[i] += dz.data[i] + dz.data[2 * d_i + i] * trace.query.data[i] +
                                 dz.data[3 * d_i + i];
                dq.data[i] += dz.data[d_i + i] + dz.data[2 * d_i + i] * e.data[i] -
                              dz.data[3 * d_i + i];
            }
        }
        Tensor& g_item_seq = ps.grad("emb.item_seq");
        Tensor& g_cat_seq = ps.grad("emb.cat_seq");
        for (std::size_t t = 0; t < L; ++t) {
            const auto& [item, cat] = trace.state.behavior[t];
            double* gi = g_item_seq.row(static_cast<std::size_t>(item));
            double* gc = g_cat_seq.row(static_cast<std::size_t>(cat));
            for (std::size_t i = 0; i < d_i; ++i) {
                gi[i] += de[t].data[i];
                gc[i] += de[t].data[i];
            }
        }
    }

    // context query projection
    Tensor dctx({trace.ctx_vec.numel()}, 0.0);
    affine_vec_backward(trace.ctx_vec, ps.param("din.query.W"), dq, &dctx,
                        &ps.grad("din.query.W"), &ps.grad("din.query.b"));
    for (std::size_t i = 0; i < d_p; ++i) dpv.data[i] += dctx.data[i];
    for (std::size_t i = 0; i < cfg_.d_g(); ++i) dg.data[i] += dctx.data[d_p + i];

    // profile embedding tables
    for (std::size_t f = 0; f < vocabs_.profile.size(); ++f) {
        double* gp = ps.grad("emb.profile" + std::to_string(f))
                         .row(static_cast<std::size_t>(trace.state.profile_ids[f]));
        for (std::size_t i = 0; i < cfg_.dim_profile; ++i) gp[i] += dpv.data[f * cfg_.dim_profile + i];
    }

    // geo embedding tables
    encode_geo_backward(trace.state.geo, dg, ps, cfg_, vocabs_);
}

void PolicyNet::add_param_slots(ParamStore& ps, Rng& rng, double scale) const {
    auto uniform_tensor = [&](std::vector<std::size_t> shape) {
        Tensor t(std::move(shape));
        for (double& v : t.data) v = rng.uniform(-scale, scale);
        return t;
    };
    std::size_t d_i = cfg_.dim_item, d_a = cfg_.dim_action, d_g = cfg_.d_g();
    std::size_t d_p = cfg_.d_profile(vocabs_.profile.size());

    ps.add("emb.city", uniform_tensor({vocabs_.city, cfg_.dim_city}));
    ps.add("emb.gps", uniform_tensor({vocabs_.gps_cell, cfg_.dim_gps}));
    ps.add("emb.aoi", uniform_tensor({vocabs_.aoi, cfg_.dim_aoi}));
    ps.add("emb.hour", uniform_tensor({vocabs_.hour, cfg_.dim_hour}));
    ps.add("emb.season", uniform_tensor({vocabs_.season, cfg_.dim_season}));
    for (std::size_t f = 0; f < vocabs_.profile.size(); ++f) {
        ps.add("emb.profile" + std::to_string(f), uniform_tensor({vocabs_.profile[f], cfg_.dim_profile}));
    }
    ps.add("emb.item_seq", uniform_tensor({vocabs_.items, d_i}));
    ps.add("emb.cat_seq", uniform_tensor({vocabs_.categories, d_i}));
    ps.add("emb.item_out", uniform_tensor({vocabs_.items, d_a}));
    ps.add("emb.cat_out", uniform_tensor({vocabs_.categories, d_a}));

    ps.add("din.query.W", uniform_tensor({d_p + d_g, d_i}));
    ps.add("din.query.b", Tensor({d_i}, 0.0));
    ps.add("din.attn.W1", uniform_tensor({4 * d_i, cfg_.attn_hidden}));
    ps.add("din.attn.b1", Tensor({cfg_.attn_hidden}, 0.0));
    ps.add("din.attn.w2", uniform_tensor({cfg_.attn_hidden}));
    ps.add("din.fuse.W1", uniform_tensor({d_p + d_i + d_g, cfg_.fuse_hidden}));
    ps.add("din.fuse.b1", Tensor({cfg_.fuse_hidden}, 0.0));
    ps.add("din.fuse.W2", uniform_tensor({cfg_.fuse_hidden, d_a}));
    ps.add("din.fuse.b2", Tensor({d_a}, 0.0));

    switch (cfg_.variant) {
        case GsVariant::none:
            break;
        case GsVariant::kmeans: {
            // identical init across towers: specialization must come from routing
            Tensor W1 = uniform_tensor({d_a, cfg_.micro_hidden});
            Tensor W2 = uniform_tensor({cfg_.micro_hidden, d_a});
            for (std::size_t k = 0; k < cfg_.n_groups; ++k) {
                std::string pre = tower_prefix(static_cast<int>(k));
                ps.add(pre + "W1", W1);
                ps.add(pre + "b1", Tensor({cfg_.micro_hidden}, 0.0));
                ps.add(pre + "W2", W2);
                ps.add(pre + "b2", Tensor({d_a}, 0.0));
            }
            ps.add("phi.centroids", Tensor({cfg_.n_groups, d_g}, 0.0));
            break;
        }
        case GsVariant::proto: {
            ps.add("gs.proto.p", uniform_tensor({cfg_.n_groups, d_g}));
            ps.add("gs.proto.W", uniform_tensor({cfg_.micro_param_len(), d_g}));
            ps.add("gs.proto.b", Tensor({cfg_.micro_param_len()}, 0.0));
            break;
        }
        case GsVariant::can: {
            ps.add("gs.can.L", uniform_tensor({cfg_.micro_param_len(), d_g}));
            break;
        }
    }
}

}  // namespace geogrouse
