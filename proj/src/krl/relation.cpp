#include "krlab/krl/relation.hpp"

#include <algorithm>
#include <cmath>

#include "krlab/simd/kernels.hpp"

namespace krlab::krl {

namespace s = krlab::simd;

RelationScorer::RelationScorer(const RelationSpec& spec, uint32_t n_entities,
                               uint32_t n_relations, uint64_t init_seed)
    : spec_(spec), n_entities_(n_entities), n_relations_(n_relations), init_seed_(init_seed) {
    size_t d = spec.dim;
    size_t round_block = d * d + d + size_t(n_relations) * d * d;
    size_t total = size_t(n_entities) * d + size_t(spec.rounds) * round_block +
                   size_t(n_relations) * d * d;
    params_.assign(total, 0.0);

    Rng rng = make_rng(init_seed);
    double es = spec.init_scale;
    double ws = 1.0 / std::sqrt(double(d));
    size_t entity_block = size_t(n_entities) * d;
    for (size_t i = 0; i < entity_block; ++i) params_[i] = rand_uniform(rng, -es, es);
    for (uint32_t t = 0; t < spec.rounds; ++t) {
        for (size_t i = 0; i < d * d; ++i)
            params_[self_w_off(t) + i] = rand_uniform(rng, -ws, ws);
        // biases stay zero
        for (kg::RIdx r = 0; r < n_relations; ++r)
            for (size_t i = 0; i < d * d; ++i)
                params_[msg_w_off(t, r) + i] = rand_uniform(rng, -ws, ws);
    }
    for (kg::RIdx r = 0; r < n_relations; ++r)
        for (size_t i = 0; i < d * d; ++i)
            params_[bilinear_off(r) + i] = rand_uniform(rng, -ws, ws);
}

size_t RelationScorer::self_w_off(uint32_t round) const {
    size_t d = spec_.dim;
    size_t round_block = d * d + d + size_t(n_relations_) * d * d;
    return size_t(n_entities_) * d + size_t(round) * round_block;
}

size_t RelationScorer::bias_off(uint32_t round) const {
    return self_w_off(round) + size_t(spec_.dim) * spec_.dim;
}

size_t RelationScorer::msg_w_off(uint32_t round, kg::RIdx r) const {
    return bias_off(round) + spec_.dim + size_t(r) * spec_.dim * spec_.dim;
}

size_t RelationScorer::bilinear_off(kg::RIdx r) const {
    size_t d = spec_.dim;
    size_t round_block = d * d + d + size_t(n_relations_) * d * d;
    return size_t(n_entities_) * d + size_t(spec_.rounds) * round_block + size_t(r) * d * d;
}

RelationContext build_relation_context(const kg::KnowledgeGraph& g, kg::EIdx head,
                                       kg::EIdx tail) {
    require(head != tail, "relation query needs two distinct entities");
    std::vector<kg::EIdx> frontier{head, tail};
    std::vector<kg::EIdx> nodes{head, tail};
    std::sort(nodes.begin(), nodes.end());
    for (int hop = 0; hop < 2; ++hop) {
        std::vector<kg::EIdx> next;
        for (kg::EIdx u : frontier)
            for (const kg::Fact& f : g.out(u))
                if (!std::binary_search(nodes.begin(), nodes.end(), f.tail))
                    next.push_back(f.tail);
        std::sort(next.begin(), next.end());
        next.erase(std::unique(next.begin(), next.end()), next.end());
        std::vector<kg::EIdx> merged;
        std::merge(nodes.begin(), nodes.end(), next.begin(), next.end(),
                   std::back_inserter(merged));
        nodes = std::move(merged);
        frontier = std::move(next);
    }

    RelationContext ctx;
    ctx.nodes = std::move(nodes);
    ctx.edges.resize(ctx.nodes.size());
    for (uint32_t i = 0; i < ctx.nodes.size(); ++i) {
        for (const kg::Fact& f : g.out(ctx.nodes[i])) {
            auto it = std::lower_bound(ctx.nodes.begin(), ctx.nodes.end(), f.tail);
            if (it != ctx.nodes.end() && *it == f.tail)
                ctx.edges[i].emplace_back(f.rel, uint32_t(it - ctx.nodes.begin()));
        }
    }
    ctx.head_pos =
        uint32_t(std::lower_bound(ctx.nodes.begin(), ctx.nodes.end(), head) - ctx.nodes.begin());
    ctx.tail_pos =
        uint32_t(std::lower_bound(ctx.nodes.begin(), ctx.nodes.end(), tail) - ctx.nodes.begin());
    return ctx;
}

namespace {

// Node states per round: states[0] = entity rows, states[t] = post-tanh.
std::vector<std::vector<Vec>> run_rounds(const RelationScorer& sc, const RelationContext& ctx) {
    uint32_t d = sc.dim();
    const Vec& P = sc.params();
    size_t n = ctx.nodes.size();
    std::vector<std::vector<Vec>> states(sc.spec().rounds + 1, std::vector<Vec>(n, Vec(d)));
    for (size_t i = 0; i < n; ++i) {
        const double* e = P.data() + sc.entity_off(ctx.nodes[i]);
        std::copy(e, e + d, states[0][i].begin());
    }
    for (uint32_t t = 0; t < sc.spec().rounds; ++t) {
        for (size_t i = 0; i < n; ++i) {
            Vec pre(d);
            std::copy(P.begin() + sc.bias_off(t), P.begin() + sc.bias_off(t) + d, pre.begin());
            s::matvec_acc(P.data() + sc.self_w_off(t), states[t][i].data(), pre.data(), d, d);
            if (!ctx.edges[i].empty()) {
                Vec msg(d, 0.0);
                for (auto [r, j] : ctx.edges[i])
                    s::matvec_acc(P.data() + sc.msg_w_off(t, r), states[t][j].data(), msg.data(),
                                  d, d);
                s::axpy(1.0 / double(ctx.edges[i].size()), msg.data(), pre.data(), d);
            }
            for (uint32_t k = 0; k < d; ++k) states[t + 1][i][k] = std::tanh(pre[k]);
        }
    }
    return states;
}

}  // namespace

std::vector<kg::RIdx> canonical_relations(const kg::KnowledgeGraph& g) {
    std::vector<kg::RIdx> out;
    for (kg::RIdx r = 0; r < g.num_relations(); ++r)
        if (!g.rel_is_reverse[r]) out.push_back(r);
    return out;
}

Vec score_relations(const RelationScorer& s, const RelationContext& ctx,
                    std::span<const kg::RIdx> rels) {
    uint32_t d = s.dim();
    const Vec& P = s.params();
    auto states = run_rounds(s, ctx);
    const Vec& hh = states.back()[ctx.head_pos];
    const Vec& ht = states.back()[ctx.tail_pos];
    Vec out;
    out.reserve(rels.size());
    for (kg::RIdx r : rels) {  // score_r = hh' * B_r * ht
        Vec bt(d, 0.0);
        s::matvec_acc(P.data() + s.bilinear_off(r), ht.data(), bt.data(), d, d);
        out.push_back(s::dot(hh.data(), bt.data(), d));
    }
    return out;
}

double relation_ce_and_grad(const RelationScorer& sc, const RelationContext& ctx,
                            std::span<const kg::RIdx> rels, kg::RIdx label, double scale,
                            Vec* grad) {
    uint32_t d = sc.dim();
    const Vec& P = sc.params();
    auto states = run_rounds(sc, ctx);
    size_t n = ctx.nodes.size();
    const Vec& hh = states.back()[ctx.head_pos];
    const Vec& ht = states.back()[ctx.tail_pos];

    Vec scores;
    scores.reserve(rels.size());
    for (kg::RIdx r : rels) {
        Vec bt(d, 0.0);
        s::matvec_acc(P.data() + sc.bilinear_off(r), ht.data(), bt.data(), d, d);
        scores.push_back(s::dot(hh.data(), bt.data(), d));
    }

    size_t label_pos = size_t(-1);
    double mx = -1e300;
    for (size_t i = 0; i < rels.size(); ++i) {
        if (rels[i] == label) label_pos = i;
        mx = std::max(mx, scores[i]);
    }
    require(label_pos != size_t(-1), "relation label outside score set");
    double z = 0.0;
    for (double v : scores) z += std::exp(v - mx);
    double loss = -(scores[label_pos] - mx - std::log(z));
    if (!grad) return loss;

    // dscore_i = p_i - 1[i == label]; score_i = hh' B_i ht.
    Vec dhh(d, 0.0), dht(d, 0.0);
    Vec shh(d);
    for (size_t i = 0; i < rels.size(); ++i) {
        double ds = scale * (std::exp(scores[i] - mx) / z - (i == label_pos ? 1.0 : 0.0));
        for (uint32_t k = 0; k < d; ++k) shh[k] = ds * hh[k];
        s::ger_acc(grad->data() + sc.bilinear_off(rels[i]), shh.data(), ht.data(), d, d);
        Vec bt(d, 0.0), bh(d, 0.0);
        s::matvec_acc(P.data() + sc.bilinear_off(rels[i]), ht.data(), bt.data(), d, d);
        s::matvec_t_acc(P.data() + sc.bilinear_off(rels[i]), hh.data(), bh.data(), d, d);
        s::axpy(ds, bt.data(), dhh.data(), d);
        s::axpy(ds, bh.data(), dht.data(), d);
    }

    // Backward through the rounds.
    std::vector<Vec> dstate(n, Vec(d, 0.0));
    dstate[ctx.head_pos] = dhh;
    s::axpy(1.0, dht.data(), dstate[ctx.tail_pos].data(), d);
    for (uint32_t t = sc.spec().rounds; t-- > 0;) {
        std::vector<Vec> dprev(n, Vec(d, 0.0));
        for (size_t i = 0; i < n; ++i) {
            const Vec& h = states[t + 1][i];
            Vec dpre(d);
            bool any = false;
            for (uint32_t k = 0; k < d; ++k) {
                dpre[k] = dstate[i][k] * (1.0 - h[k] * h[k]);
                any = any || dpre[k] != 0.0;
            }
            if (!any) continue;
            s::ger_acc(grad->data() + sc.self_w_off(t), dpre.data(), states[t][i].data(), d, d);
            s::axpy(1.0, dpre.data(), grad->data() + sc.bias_off(t), d);
            s::matvec_t_acc(P.data() + sc.self_w_off(t), dpre.data(), dprev[i].data(), d, d);
            if (!ctx.edges[i].empty()) {
                double inv = 1.0 / double(ctx.edges[i].size());
                Vec dmsg(d);
                for (uint32_t k = 0; k < d; ++k) dmsg[k] = inv * dpre[k];
                for (auto [r, j] : ctx.edges[i]) {
                    s::ger_acc(grad->data() + sc.msg_w_off(t, r), dmsg.data(),
                               states[t][j].data(), d, d);
                    s::matvec_t_acc(P.data() + sc.msg_w_off(t, r), dmsg.data(), dprev[j].data(),
                                    d, d);
                }
            }
        }
        dstate = std::move(dprev);
    }
    for (size_t i = 0; i < n; ++i)
        s::axpy(1.0, dstate[i].data(), grad->data() + sc.entity_off(ctx.nodes[i]), d);
    return loss;
}

std::vector<std::pair<kg::RIdx, double>> answer_relation_query(const RelationScorer& s,
                                                               const kg::KnowledgeGraph& g,
                                                               const kg::RelationQuery& q) {
    RelationContext ctx = build_relation_context(g, q.head, q.tail);
    std::vector<kg::RIdx> rels = canonical_relations(g);
    Vec scores = score_relations(s, ctx, rels);
    std::vector<std::pair<kg::RIdx, double>> out;
    for (size_t i = 0; i < rels.size(); ++i) out.emplace_back(rels[i], scores[i]);
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    return out;
}

RelationTrainResult train_relation_model(const kg::KnowledgeGraph& g,
                                         const std::vector<kg::RelationQuery>& queries,
                                         const RelationSpec& spec, uint64_t seed) {
    require(!queries.empty(), "relation training requires a nonempty query set");
    RelationTrainResult out{RelationScorer(spec, uint32_t(g.num_entities()),
                                           uint32_t(g.num_relations()),
                                           derive_seed(seed, "model_init")),
                            {}};
    RelationScorer& sc = out.scorer;

    std::vector<RelationContext> ctxs;
    ctxs.reserve(queries.size());
    for (const kg::RelationQuery& q : queries)
        ctxs.push_back(build_relation_context(g, q.head, q.tail));
    std::vector<kg::RIdx> rels = canonical_relations(g);

    Vec grad(sc.params().size(), 0.0), m(sc.params().size(), 0.0), v(sc.params().size(), 0.0);
    uint64_t train_seed = derive_seed(seed, "train");
    uint64_t step = 0;
    for (uint32_t e = 0; e < spec.epochs; ++e) {
        Rng rng = make_rng(derive_seed(train_seed, "epoch", e));
        std::vector<uint32_t> order(queries.size());
        for (uint32_t i = 0; i < order.size(); ++i) order[i] = i;
        for (size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[rand_below(rng, i)]);

        double epoch_loss = 0.0;
        for (size_t start = 0; start < order.size(); start += spec.batch) {
            size_t end = std::min(order.size(), start + size_t(spec.batch));
            double scale = 1.0 / double(end - start);
            std::fill(grad.begin(), grad.end(), 0.0);
            double batch_loss = 0.0;
            for (size_t i = start; i < end; ++i)
                batch_loss += relation_ce_and_grad(sc, ctxs[order[i]], rels,
                                                   queries[order[i]].answer, scale, &grad);
            require(std::isfinite(batch_loss), "relation training diverged at epoch " +
                                                   std::to_string(e));
            epoch_loss += batch_loss;

            ++step;
            ++out.report.steps;
            constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
            double c1 = 1.0 - std::pow(b1, double(step));
            double c2 = 1.0 - std::pow(b2, double(step));
            Vec& p = sc.params();
            for (size_t k = 0; k < p.size(); ++k) {
                m[k] = b1 * m[k] + (1.0 - b1) * grad[k];
                v[k] = b2 * v[k] + (1.0 - b2) * grad[k] * grad[k];
                p[k] -= spec.lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + eps);
            }
        }
        out.report.epoch_loss.push_back(epoch_loss / double(order.size()));
    }
    return out;
}

}  // namespace krlab::krl
