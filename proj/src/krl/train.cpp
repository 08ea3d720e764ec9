#include "krlab/krl/train.hpp"

#include <algorithm>
#include <cmath>

#include "krlab/simd/kernels.hpp"

namespace krlab::krl {

namespace s = krlab::simd;

double margin_loss_and_grad(const ParamSource& ps, const LossExample& ex, double scale,
                            GradSink& gs) {
    uint32_t d = ps.dim();
    double margin = ps.spec().margin;
    bool want_grad = gs.dense || gs.entity_overlay;

    QueryTape tape = eval_query(ps, *ex.cg);
    const Box& qb = query_box(tape, *ex.cg);

    double d_pos = box_distance(ps, ps.entity(ex.positive), qb);
    double loss = softplus(d_pos - margin);

    Vec dc_box(d, 0.0), dz_box(d, 0.0);
    if (want_grad) {
        Vec dpoint(d, 0.0);
        double dd = scale * sigmoid(d_pos - margin);
        box_distance_backward(ps, ps.entity(ex.positive), qb, dd, dpoint.data(), dc_box.data(),
                              dz_box.data());
        gs.add_entity(ps, ex.positive, dpoint.data(), d);
    }

    if (!ex.negatives.empty()) {
        double inv_k = 1.0 / double(ex.negatives.size());
        for (kg::EIdx neg : ex.negatives) {
            double d_neg = box_distance(ps, ps.entity(neg), qb);
            loss += inv_k * softplus(margin - d_neg);
            if (want_grad) {
                Vec dpoint(d, 0.0);
                double dd = -scale * inv_k * sigmoid(margin - d_neg);
                box_distance_backward(ps, ps.entity(neg), qb, dd, dpoint.data(), dc_box.data(),
                                      dz_box.data());
                gs.add_entity(ps, neg, dpoint.data(), d);
            }
        }
    }

    if (want_grad) query_backward(ps, *ex.cg, tape, dc_box, dz_box, gs);
    return loss;
}

TrainQuery lower_for_training(const kg::KnowledgeGraph& g, const kg::EntityQuery& q) {
    TrainQuery tq;
    tq.cg = kg::build_compute_graph(g, q);
    tq.answers = q.answers;
    tq.sink_cat = q.sink_category(g);
    return tq;
}

Trainer::Trainer(const kg::KnowledgeGraph& g, EntityModel& model,
                 std::vector<TrainQuery> queries, TrainOptions opts, uint64_t seed)
    : g_(&g), model_(&model), queries_(std::move(queries)), opts_(opts), seed_(seed) {
    require(!queries_.empty(), "training requires a nonempty query set");
    grad_.assign(model.params().size(), 0.0);
    m_.assign(model.params().size(), 0.0);
    v_.assign(model.params().size(), 0.0);
}

void Trainer::run_epoch(std::span<const TrainQuery> extra) {
    const ModelSpec& spec = model_->spec();
    Rng rng = make_rng(derive_seed(seed_, "epoch", epoch_));

    // Items: one per (query, answer) pair, base queries first.
    struct Item {
        const TrainQuery* q;
        kg::EIdx positive;
    };
    std::vector<Item> items;
    for (const TrainQuery& q : queries_)
        for (kg::EIdx a : q.answers) items.push_back({&q, a});
    for (const TrainQuery& q : extra)
        for (kg::EIdx a : q.answers) items.push_back({&q, a});
    for (size_t i = items.size(); i > 1; --i) std::swap(items[i - 1], items[rand_below(rng, i)]);

    ParamSource ps{model_, nullptr};
    GradSink gs{&grad_, nullptr};
    double epoch_loss = 0.0;

    for (size_t start = 0; start < items.size(); start += spec.batch) {
        size_t end = std::min(items.size(), start + size_t(spec.batch));
        double scale = 1.0 / double(end - start);
        std::fill(grad_.begin(), grad_.end(), 0.0);
        double batch_loss = 0.0;

        for (size_t i = start; i < end; ++i) {
            const Item& it = items[i];
            LossExample ex;
            ex.cg = &it.q->cg;
            ex.positive = it.positive;
            const std::vector<kg::EIdx>& pool = g_->entities_of(it.q->sink_cat);
            ex.negatives.reserve(spec.neg_k);
            for (uint32_t k = 0; k < spec.neg_k; ++k) {
                for (int attempt = 0; attempt < 64; ++attempt) {
                    kg::EIdx cand = pool[rand_below(rng, pool.size())];
                    if (!std::binary_search(it.q->answers.begin(), it.q->answers.end(), cand)) {
                        ex.negatives.push_back(cand);
                        break;
                    }
                }
            }
            batch_loss += margin_loss_and_grad(ps, ex, scale, gs);
        }

        batch_loss /= double(end - start);
        require(std::isfinite(batch_loss), "training diverged: non-finite loss at epoch " +
                                               std::to_string(epoch_) + ", step " +
                                               std::to_string(step_));
        epoch_loss += batch_loss * double(end - start);

        if (opts_.freeze_entities)
            std::fill(grad_.begin(), grad_.begin() + model_->entity_block_size(), 0.0);
        if (opts_.freeze_operators)
            std::fill(grad_.begin() + model_->entity_block_size(), grad_.end(), 0.0);
        adam_step(spec.lr);
    }

    report_.epoch_loss.push_back(items.empty() ? 0.0 : epoch_loss / double(items.size()));
    ++epoch_;
}

void Trainer::adam_step(double lr) {
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    ++step_;
    ++report_.steps;
    double c1 = 1.0 - std::pow(b1, double(step_));
    double c2 = 1.0 - std::pow(b2, double(step_));
    Vec& p = model_->params();
    for (size_t i = 0; i < p.size(); ++i) {
        double gi = grad_[i];
        m_[i] = b1 * m_[i] + (1.0 - b1) * gi;
        v_[i] = b2 * v_[i] + (1.0 - b2) * gi * gi;
        p[i] -= lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps);
    }
}

TrainResult train_entity_model(const kg::KnowledgeGraph& g,
                               const std::vector<kg::EntityQuery>& queries,
                               const ModelSpec& spec, uint64_t seed, TrainOptions opts) {
    TrainResult out{EntityModel(spec, uint32_t(g.num_entities()), uint32_t(g.num_relations()),
                                derive_seed(seed, "model_init")),
                    {}};
    std::vector<TrainQuery> tq;
    tq.reserve(queries.size());
    for (const kg::EntityQuery& q : queries) tq.push_back(lower_for_training(g, q));
    Trainer t(g, out.model, std::move(tq), opts, derive_seed(seed, "train"));
    for (uint32_t e = 0; e < spec.epochs; ++e) t.run_epoch();
    out.report = t.report();
    return out;
}

TrainReport refit_entity_model(const kg::KnowledgeGraph& g, EntityModel& model,
                               const std::vector<kg::EntityQuery>& queries, uint32_t epochs,
                               uint64_t seed, TrainOptions opts) {
    std::vector<TrainQuery> tq;
    tq.reserve(queries.size());
    for (const kg::EntityQuery& q : queries) tq.push_back(lower_for_training(g, q));
    Trainer t(g, model, std::move(tq), opts, derive_seed(seed, "refit"));
    for (uint32_t e = 0; e < epochs; ++e) t.run_epoch();
    return t.report();
}

}  // namespace krlab::krl
