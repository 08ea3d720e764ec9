#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "krlab/attack/config.hpp"
#include "krlab/kg/graph.hpp"
#include "krlab/kg/query.hpp"
#include "krlab/krl/model.hpp"
#include "krlab/krl/ops.hpp"
#include "krlab/krl/train.hpp"

namespace krlab::attack {

// Fixed evaluation form of the poisoning objective over lowered query sets:
//   targeted:    E_{q in Q*} dist(phi_A, phi_q)
//                  + lambda * E_{q in Q\Q*} mean_{a in [[q]]} dist(phi_a, phi_q)
//   untargeted:  the Q* term is the exact negation of the reference-distance
//                term, -E_{q in Q*} mean_{a in [[q]]} dist(phi_a, phi_q);
//                the evasiveness term is unchanged.
struct KpObjective {
    Objective objective = Objective::targeted;
    kg::EIdx target = kg::kNone;                 // targeted only
    std::vector<const krl::TrainQuery*> qstar;   // trigger-carrying queries
    std::vector<const krl::TrainQuery*> qrest;   // evasiveness reference set
    double lambda = 0.0;
};

// Exact objective value at the current parameters (no sampling); the overlay
// in `ps` carries the perturbed trigger-anchor embeddings.
double kp_objective_value(const krl::ParamSource& ps, const KpObjective& obj);

// Accumulates `scale` times the objective gradient with respect to overlaid
// entity rows into `grad` (gradients of frozen parameters are discarded).
// Term expectations are estimated from `per_term` sampled queries per term.
void kp_objective_grad(const krl::ParamSource& ps, const KpObjective& obj, uint32_t per_term,
                       Rng& rng, std::map<kg::EIdx, Vec>& grad);

struct AnchorOptResult {
    std::map<kg::EIdx, Vec> embeddings;  // phi+ for the trigger anchors only
    std::vector<double> trace;           // exact objective, nonincreasing
};

// Descends the poisoning objective over the trigger anchors' embeddings with
// every other parameter frozen. Gradients come from resampled minibatches;
// acceptance and the trace use the exact objective with backtracking halving
// (max 20), so the trace never increases.
AnchorOptResult optimize_anchor_embeddings(const krl::EntityModel& model,
                                           std::span<const kg::EIdx> trigger_anchors,
                                           const KpObjective& obj, uint32_t steps, double lr,
                                           uint32_t minibatch, uint64_t seed);

struct PoisonSet {
    std::vector<kg::Fact> facts;  // at most n_kp, schema-legal, none pre-existing
    Vec scores;                   // fitting score per fact, aligned
    bool exhausted_candidates = false;  // fewer legal candidates than n_kp
};

// Enumerates candidate facts v -r-> v' with v a trigger anchor, v' any other
// entity, and r schema-legal; scores each by the L2 distance between the
// center of r's projection applied to the perturbed anchor box and phi_v';
// returns the n_kp smallest, ties by (head, relation, tail).
PoisonSet retrograde_search(const kg::KnowledgeGraph& g, const krl::EntityModel& model,
                            const std::map<kg::EIdx, Vec>& phi_plus, uint32_t n_kp);

struct KpRound {
    std::vector<double> opt_trace;
    double final_loss = 0.0;
    size_t n_facts = 0;
};

struct KpReport {
    std::vector<KpRound> rounds;
    uint32_t best_round = 0;  // 0-based index into rounds
    bool no_improvement = false;
    bool exhausted_candidates = false;
};

struct KpResult {
    kg::KnowledgeGraph poisoned;  // g plus the selected poison facts
    PoisonSet poison;
    KpReport report;
};

// Seed for round i (1-based) of the interleaved optimization; exposed so the
// co-optimizer's poisoning phase is bit-identical to a standalone run.
uint64_t kp_round_seed(uint64_t seed, uint32_t round);

// One optimization + retrograde-search round against a fixed model.
struct KpRoundOutput {
    AnchorOptResult opt;
    PoisonSet poison;
};
KpRoundOutput run_kp_round(const kg::KnowledgeGraph& g, const krl::EntityModel& model,
                           const AttackConfig& cfg, const KpObjective& obj,
                           std::span<const kg::EIdx> anchors, uint64_t round_seed);

// Interleaves embedding optimization and retrograde search for cfg.n_iter
// rounds; between rounds a clone of the attacker's model is refit for 10% of
// its epochs on the currently poisoned graph (the passed model is never
// mutated). Returns the best round's poison injected into a copy of g.
// Defender-side retraining is out of scope here.
KpResult kp_attack(const kg::KnowledgeGraph& g, const krl::EntityModel& attacker_model,
                   const AttackConfig& cfg, std::span<const kg::EntityQuery> qstar,
                   std::span<const kg::EntityQuery> qrest,
                   const std::vector<kg::EntityQuery>& refit_queries, uint64_t seed);

}  // namespace krlab::attack
