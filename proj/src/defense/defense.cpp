#include "krlab/defense/defense.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "krlab/attack/config.hpp"
#include "krlab/attack/qp.hpp"
#include "krlab/krl/ops.hpp"
#include "krlab/simd/kernels.hpp"

namespace krlab::defense {

namespace s = krlab::simd;

void DefenseConfig::validate() const {
    require(m >= 0.0 && m < 100.0, "defense config: prune rate must lie in [0, 100)");
}

double anomaly_score(const krl::EntityModel& model, const kg::Fact& f) {
    require(f.head < model.n_entities() && f.tail < model.n_entities(),
            "anomaly score: entity out of range");
    require(f.rel < model.n_relations(), "anomaly score: relation out of range");
    krl::ParamSource ps{&model, nullptr};
    krl::ProjTape t;
    krl::project_forward(ps, f.rel, krl::anchor_box(ps, f.head), t);
    return std::sqrt(s::l2sq_diff(t.out.center.data(), model.entity(f.tail), model.dim()));
}

Vec anomaly_scores(const kg::KnowledgeGraph& g, const krl::EntityModel& model) {
    require(model.n_entities() == g.num_entities() && model.n_relations() == g.num_relations(),
            "anomaly scores: model was trained on a different vocabulary");
    uint32_t d = model.dim();
    krl::ParamSource ps{&model, nullptr};

    Vec out(g.facts.size(), 0.0);
    krl::ProjTape t;
    kg::EIdx cur_head = kg::kNone;
    kg::RIdx cur_rel = kg::kNone;
    for (size_t i = 0; i < g.facts.size(); ++i) {
        const kg::Fact& f = g.facts[i];
        // Facts are sorted by (head, rel, tail): one projection per prefix.
        if (f.head != cur_head || f.rel != cur_rel) {
            krl::project_forward(ps, f.rel, krl::anchor_box(ps, f.head), t);
            cur_head = f.head;
            cur_rel = f.rel;
        }
        out[i] = std::sqrt(s::l2sq_diff(t.out.center.data(), model.entity(f.tail), d));
    }
    return out;
}

PruneResult prune_by_anomaly(const kg::KnowledgeGraph& g, const krl::EntityModel& model,
                             double m) {
    require(m >= 0.0 && m < 100.0, "pruning: prune rate must lie in [0, 100)");
    PruneResult res;
    res.pruned = g;

    size_t k = size_t(std::ceil(m * double(g.facts.size()) / 100.0));
    k = std::min(k, g.facts.size());

    if (k > 0) {
        Vec scores = anomaly_scores(g, model);
        std::vector<size_t> order(g.facts.size());
        std::iota(order.begin(), order.end(), size_t(0));
        std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
            if (scores[a] != scores[b]) return scores[a] > scores[b];
            return g.facts[a] < g.facts[b];
        });
        order.resize(k);
        res.removed.reserve(k);
        res.removed_scores.reserve(k);
        for (size_t i : order) {
            res.removed.push_back(g.facts[i]);
            res.removed_scores.push_back(scores[i]);
        }
        size_t dropped = res.pruned.remove_facts(res.removed);
        res.closure_removed = dropped - k;
    }

    // Audit against provenance (never consulted for the scores themselves).
    std::set<kg::Fact> removed_set(res.removed.begin(), res.removed.end());
    size_t poison_removed = 0;
    for (const kg::Fact& f : res.removed) {
        auto it = std::lower_bound(g.facts.begin(), g.facts.end(), f);
        if (it != g.facts.end() && *it == f)
            poison_removed += g.fact_source[size_t(it - g.facts.begin())] ==
                              kg::FactSource::poison;
    }
    for (size_t i = 0; i < g.facts.size(); ++i) {
        if (g.fact_source[i] != kg::FactSource::poison) continue;
        if (g.rel_is_reverse[g.facts[i].rel]) continue;  // one audit entry per pair
        ++res.poison_pairs_total;
        if (removed_set.count(g.facts[i]) || removed_set.count(g.reverse_of(g.facts[i])))
            ++res.poison_pairs_caught;
    }
    if (!res.removed.empty())
        res.poison_precision = double(poison_removed) / double(res.removed.size());
    if (res.poison_pairs_total > 0)
        res.poison_recall = double(res.poison_pairs_caught) / double(res.poison_pairs_total);
    return res;
}

FilterResult filter_and_retrain(const kg::KnowledgeGraph& g, const krl::EntityModel& model,
                                double m, const std::vector<kg::EntityQuery>& train_queries,
                                const krl::ModelSpec& spec, uint64_t seed) {
    FilterResult res{prune_by_anomaly(g, model, m), {}, {}};
    krl::TrainResult tr = krl::train_entity_model(res.prune.pruned, train_queries, spec, seed);
    res.model = std::move(tr.model);
    res.report = std::move(tr.report);
    return res;
}

AdvTrainResult adversarial_training(const kg::KnowledgeGraph& g,
                                    const std::vector<kg::EntityQuery>& train_queries,
                                    const DefenseConfig& cfg, const krl::ModelSpec& spec,
                                    uint64_t seed) {
    cfg.validate();
    AdvTrainResult res;

    // The skeleton mirrors train_entity_model exactly; with n_qp_d = 0 no
    // extra items exist and the runs are identical.
    res.model = krl::EntityModel(spec, uint32_t(g.num_entities()), uint32_t(g.num_relations()),
                                 derive_seed(seed, "model_init"));
    std::vector<krl::TrainQuery> lowered;
    lowered.reserve(train_queries.size());
    for (const kg::EntityQuery& q : train_queries)
        lowered.push_back(krl::lower_for_training(g, q));
    krl::Trainer trainer(g, res.model, std::move(lowered), {}, derive_seed(seed, "train"));

    attack::AttackConfig acfg;
    std::vector<uint8_t> eligible;
    if (cfg.n_qp_d > 0) {
        acfg.vectors = attack::Vector::qp;
        acfg.objective = attack::Objective::untargeted;
        acfg.n_qp = cfg.n_qp_d;
        acfg.maxima = attack::BudgetMaxima::relation_case();  // admits n_qp_d up to 20
        acfg.opt_steps = cfg.opt_steps;
        acfg.opt_lr = cfg.opt_lr;
        acfg.beam_depth = cfg.beam_depth;
        acfg.beam_width = cfg.beam_width;
        acfg.restrict_vicinity = cfg.restrict_vicinity;
        acfg.vicinity_hops = cfg.vicinity_hops;
        acfg.validate();
        // The defender owns every entity; any anchor may start a path.
        eligible.assign(g.num_entities(), 1);
    }

    for (uint32_t e = 0; e < spec.epochs; ++e) {
        std::vector<krl::TrainQuery> extra;
        uint32_t added = 0;
        if (cfg.n_qp_d > 0) {
            for (const kg::EntityQuery& q : train_queries) {
                // Untargeted perturbation against the epoch-start snapshot;
                // the original answers stay attached as the labels.
                try {
                    attack::QpResult r = attack::qp_attack(g, res.model, q, acfg, eligible);
                    if (r.failed) {
                        ++res.failures;
                    } else if (r.qstar.edges.size() > q.edges.size()) {
                        extra.push_back(krl::lower_for_training(g, r.qstar));
                        ++added;
                    }
                } catch (const Error&) {
                    ++res.failures;
                }
            }
        }
        res.augmented += added;
        res.per_epoch_augmented.push_back(added);
        trainer.run_epoch(extra);
    }
    res.report = trainer.report();
    return res;
}

IntegratedResult integrated_defense(const kg::KnowledgeGraph& g,
                                    const krl::EntityModel& initial,
                                    const std::vector<kg::EntityQuery>& train_queries,
                                    const DefenseConfig& cfg, const krl::ModelSpec& spec,
                                    uint64_t seed) {
    cfg.validate();
    IntegratedResult res;
    res.prune = prune_by_anomaly(g, initial, cfg.filter ? cfg.m : 0.0);

    DefenseConfig tcfg = cfg;
    if (!cfg.advtrain) tcfg.n_qp_d = 0;
    res.train = adversarial_training(res.prune.pruned, train_queries, tcfg, spec, seed);
    return res;
}

}  // namespace krlab::defense
