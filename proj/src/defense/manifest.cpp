#include "krlab/defense/manifest.hpp"

namespace krlab::defense {

using nlohmann::ordered_json;

ordered_json defense_config_json(const DefenseConfig& cfg) {
    ordered_json j;
    j["m"] = cfg.m;
    j["n_qp_d"] = cfg.n_qp_d;
    j["filter"] = cfg.filter;
    j["advtrain"] = cfg.advtrain;
    j["opt_steps"] = cfg.opt_steps;
    j["opt_lr"] = cfg.opt_lr;
    j["beam_depth"] = cfg.beam_depth;
    j["beam_width"] = cfg.beam_width;
    j["restrict_vicinity"] = cfg.restrict_vicinity;
    j["vicinity_hops"] = cfg.vicinity_hops;
    return j;
}

ordered_json prune_json(const kg::KnowledgeGraph& g, const PruneResult& res) {
    ordered_json j;
    ordered_json facts = ordered_json::array();
    for (size_t i = 0; i < res.removed.size(); ++i) {
        const kg::Fact& f = res.removed[i];
        facts.push_back({{"head", g.entity_ids[f.head]},
                         {"relation", g.relation_ids[f.rel]},
                         {"tail", g.entity_ids[f.tail]},
                         {"score", res.removed_scores[i]}});
    }
    j["removed"] = facts;
    j["n_removed"] = res.removed.size();
    j["closure_removed"] = res.closure_removed;
    j["poison_precision"] = res.poison_precision;
    j["poison_recall"] = res.poison_recall;
    j["poison_pairs_total"] = res.poison_pairs_total;
    j["poison_pairs_caught"] = res.poison_pairs_caught;
    return j;
}

ordered_json advtrain_json(const AdvTrainResult& res) {
    ordered_json j;
    j["augmented"] = res.augmented;
    j["failures"] = res.failures;
    j["per_epoch_augmented"] = res.per_epoch_augmented;
    j["epochs"] = res.report.epoch_loss.size();
    j["final_epoch_loss"] =
        res.report.epoch_loss.empty() ? 0.0 : res.report.epoch_loss.back();
    j["steps"] = res.report.steps;
    return j;
}

ordered_json defense_manifest(const kg::KnowledgeGraph& g, const DefenseConfig& cfg,
                              uint64_t seed, const IntegratedResult& res) {
    ordered_json j;
    j["defense"] = "integrated";
    j["config"] = defense_config_json(cfg);
    j["seed"] = seed;
    j["prune"] = prune_json(g, res.prune);
    j["advtrain"] = advtrain_json(res.train);
    return j;
}

}  // namespace krlab::defense
