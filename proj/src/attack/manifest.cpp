#include "krlab/attack/manifest.hpp"

#include "krlab/kg/io.hpp"

namespace krlab::attack {

using ordered_json = nlohmann::ordered_json;

namespace {

const char* vector_name(Vector v) {
    switch (v) {
        case Vector::kp: return "kp";
        case Vector::qp: return "qp";
        case Vector::both: return "both";
    }
    return "?";
}

ordered_json trace_json(const std::vector<double>& t) {
    ordered_json a = ordered_json::array();
    for (double x : t) a.push_back(x);
    return a;
}

ordered_json path_json(const kg::KnowledgeGraph& g, const PerturbationPath& p) {
    ordered_json j;
    j["anchor"] = g.entity_ids[p.anchor];
    ordered_json rels = ordered_json::array();
    for (kg::RIdx r : p.rels) rels.push_back(g.relation_ids[r]);
    j["relations"] = rels;
    return j;
}

}  // namespace

ordered_json config_json(const AttackConfig& cfg, const kg::KnowledgeGraph& g) {
    ordered_json j;
    j["vectors"] = vector_name(cfg.vectors);
    j["objective"] = cfg.objective == Objective::targeted ? "targeted" : "untargeted";
    if (cfg.target_entity != kg::kNone) j["target"] = g.entity_ids[cfg.target_entity];
    ordered_json trig;
    ordered_json ta = ordered_json::array();
    for (kg::EIdx a : cfg.trigger.anchors) ta.push_back(g.entity_ids[a]);
    trig["anchors"] = ta;
    ordered_json tr = ordered_json::array();
    for (kg::RIdx r : cfg.trigger.rels) tr.push_back(g.relation_ids[r]);
    trig["relations"] = tr;
    j["trigger"] = trig;
    j["n_kp"] = cfg.n_kp;
    j["n_qp"] = cfg.n_qp;
    j["n_iter"] = cfg.n_iter;
    j["lambda"] = cfg.lambda;
    j["opt_steps"] = cfg.opt_steps;
    j["opt_lr"] = cfg.opt_lr;
    j["minibatch"] = cfg.minibatch;
    j["beam_depth"] = cfg.beam_depth;
    j["beam_width"] = cfg.beam_width;
    j["restrict_vicinity"] = cfg.restrict_vicinity;
    j["vicinity_hops"] = cfg.vicinity_hops;
    j["encoder_known"] = cfg.encoder_known;
    j["operator_known"] = cfg.operator_known;
    j["surrogate"] = {{"dim", cfg.surrogate.dim}, {"depth", cfg.surrogate.depth}};
    return j;
}

ordered_json poison_json(const kg::KnowledgeGraph& g, const PoisonSet& ps) {
    ordered_json j;
    ordered_json facts = ordered_json::array();
    for (size_t i = 0; i < ps.facts.size(); ++i) {
        const kg::Fact& f = ps.facts[i];
        facts.push_back({{"head", g.entity_ids[f.head]},
                         {"relation", g.relation_ids[f.rel]},
                         {"tail", g.entity_ids[f.tail]},
                         {"score", ps.scores[i]}});
    }
    j["facts"] = facts;
    j["exhausted_candidates"] = ps.exhausted_candidates;
    return j;
}

ordered_json kp_manifest(const kg::KnowledgeGraph& g, const AttackConfig& cfg, uint64_t seed,
                         const KpResult& res) {
    ordered_json j;
    j["attack"] = "kp";
    j["config"] = config_json(cfg, g);
    j["seed"] = seed;
    j["poison"] = poison_json(g, res.poison);
    ordered_json rounds = ordered_json::array();
    for (const KpRound& r : res.report.rounds)
        rounds.push_back({{"trace", trace_json(r.opt_trace)},
                          {"final_loss", r.final_loss},
                          {"n_facts", r.n_facts}});
    j["rounds"] = rounds;
    j["best_round"] = res.report.best_round;
    j["no_improvement"] = res.report.no_improvement;
    return j;
}

ordered_json qp_manifest(const kg::KnowledgeGraph& g, const AttackConfig& cfg,
                         const kg::EntityQuery& original, const QpResult& res) {
    ordered_json j;
    j["attack"] = "qp";
    j["query"] = original.id;
    j["failed"] = res.failed;
    ordered_json paths = ordered_json::array();
    for (size_t i = 0; i < res.perturbation.paths.size(); ++i) {
        ordered_json p = path_json(g, res.perturbation.paths[i]);
        p["score"] = res.perturbation.scores[i];
        paths.push_back(std::move(p));
    }
    j["paths"] = paths;
    j["no_anchor_reachable"] = res.perturbation.no_anchor_reachable;
    j["trace"] = trace_json(res.opt.trace);
    j["added_edges"] = res.qstar.edges.size() - original.edges.size();
    (void)cfg;
    return j;
}

ordered_json co_manifest(const kg::KnowledgeGraph& g, const AttackConfig& cfg, uint64_t seed,
                         std::span<const kg::EntityQuery> originals, const CoResult& res) {
    ordered_json j;
    j["attack"] = "co";
    j["config"] = config_json(cfg, g);
    j["seed"] = seed;
    j["poison"] = poison_json(g, res.poison);
    ordered_json rounds = ordered_json::array();
    for (const CoRound& r : res.rounds) {
        ordered_json rj;
        rj["kp_trace"] = trace_json(r.kp.opt.trace);
        rj["kp_final_loss"] = r.kp_final_loss;
        rj["kp_n_facts"] = r.kp.poison.facts.size();
        ordered_json qps = ordered_json::array();
        for (size_t i = 0; i < r.qp.size(); ++i)
            qps.push_back(qp_manifest(g, cfg, originals[i], r.qp[i]));
        rj["qp"] = qps;
        rounds.push_back(std::move(rj));
    }
    j["rounds"] = rounds;
    return j;
}

}  // namespace krlab::attack
