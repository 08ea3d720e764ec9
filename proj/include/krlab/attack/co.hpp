#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "krlab/attack/config.hpp"
#include "krlab/attack/kp.hpp"
#include "krlab/attack/qp.hpp"
#include "krlab/kg/graph.hpp"
#include "krlab/kg/query.hpp"
#include "krlab/krl/model.hpp"

namespace krlab::attack {

struct CoRound {
    KpRoundOutput kp;                 // poison chosen against last round's queries
    std::vector<QpResult> qp;         // per-query perturbations on the poisoned graph
    double kp_final_loss = 0.0;
};

struct CoResult {
    kg::KnowledgeGraph poisoned;      // g plus the final round's poison facts
    PoisonSet poison;
    std::vector<kg::EntityQuery> queries;  // Q^(n): final perturbed target queries
    std::vector<CoRound> rounds;
};

// Alternating poison/perturbation optimization. Round i picks poison facts
// against the previous round's perturbed queries (Q^(0) = Q*), applies them
// to a fresh copy of g, then re-perturbs each ORIGINAL target query against
// the poisoned graph. Refits a cloned model between rounds (never after the
// last). With n_iter=1 this reduces to one kp round plus independent
// per-query qp, byte for byte.
CoResult co_optimize(const kg::KnowledgeGraph& g, const krl::EntityModel& attacker_model,
                     const AttackConfig& cfg, std::span<const kg::EntityQuery> qstar,
                     std::span<const kg::EntityQuery> qrest,
                     const std::vector<kg::EntityQuery>& refit_queries,
                     std::span<const uint8_t> anchor_eligible, uint64_t seed);

}  // namespace krlab::attack
