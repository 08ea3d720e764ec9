#include "krlab/attack/co.hpp"

#include <algorithm>
#include <memory>

namespace krlab::attack {

CoResult co_optimize(const kg::KnowledgeGraph& g, const krl::EntityModel& attacker_model,
                     const AttackConfig& cfg, std::span<const kg::EntityQuery> qstar,
                     std::span<const kg::EntityQuery> qrest,
                     const std::vector<kg::EntityQuery>& refit_queries,
                     std::span<const uint8_t> anchor_eligible, uint64_t seed) {
    cfg.validate();
    require(cfg.vectors == Vector::both, "co-optimization: config must enable both vectors");
    require(!qstar.empty(), "co-optimization: empty target query set");

    std::vector<kg::EIdx> anchors(cfg.trigger.anchors);
    std::sort(anchors.begin(), anchors.end());
    anchors.erase(std::unique(anchors.begin(), anchors.end()), anchors.end());
    require(!anchors.empty(), "co-optimization: trigger pattern names no anchor entities");

    std::vector<krl::TrainQuery> low_rest;
    low_rest.reserve(qrest.size());
    for (const kg::EntityQuery& q : qrest) low_rest.push_back(krl::lower_for_training(g, q));

    CoResult res;
    std::vector<kg::EntityQuery> curq(qstar.begin(), qstar.end());
    const krl::EntityModel* cur = &attacker_model;
    std::unique_ptr<krl::EntityModel> owned;  // refit clone; the input stays untouched

    for (uint32_t i = 1; i <= cfg.n_iter; ++i) {
        // Poisoning phase, aimed at the previous round's perturbed queries.
        std::vector<krl::TrainQuery> low_star;
        low_star.reserve(curq.size());
        for (const kg::EntityQuery& q : curq) low_star.push_back(krl::lower_for_training(g, q));

        KpObjective obj;
        obj.objective = cfg.objective;
        obj.target = cfg.target_entity;
        obj.lambda = cfg.lambda;
        for (const krl::TrainQuery& tq : low_star) obj.qstar.push_back(&tq);
        for (const krl::TrainQuery& tq : low_rest) obj.qrest.push_back(&tq);

        CoRound round;
        round.kp = run_kp_round(g, *cur, cfg, obj, anchors, kp_round_seed(seed, i));
        round.kp_final_loss = round.kp.opt.trace.back();

        kg::KnowledgeGraph gi = g;  // each round poisons the clean graph afresh
        gi.add_facts(round.kp.poison.facts, kg::FactSource::poison);

        // Perturbation phase: every ORIGINAL target query, against the
        // freshly poisoned graph.
        curq.clear();
        for (const kg::EntityQuery& q : qstar) {
            QpResult r = qp_attack(gi, *cur, q, cfg, anchor_eligible);
            curq.push_back(r.qstar);
            round.qp.push_back(std::move(r));
        }

        if (i < cfg.n_iter) {
            if (!owned) {
                owned = std::make_unique<krl::EntityModel>(*cur);
                cur = owned.get();
            }
            uint32_t refit_epochs = std::max<uint32_t>(1, owned->spec().epochs / 10);
            krl::refit_entity_model(gi, *owned, refit_queries, refit_epochs,
                                    derive_seed(seed, "co_refit", i));
        } else {
            res.poison = round.kp.poison;
            res.poisoned = std::move(gi);
        }
        res.rounds.push_back(std::move(round));
    }
    res.queries = std::move(curq);
    return res;
}

}  // namespace krlab::attack
