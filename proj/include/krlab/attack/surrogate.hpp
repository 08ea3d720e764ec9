#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "krlab/attack/config.hpp"
#include "krlab/kg/graph.hpp"
#include "krlab/kg/query.hpp"
#include "krlab/krl/model.hpp"

namespace krlab::attack {

// The model the attacker actually optimizes against. When both the entity
// embeddings and the operators are known this aliases the victim; otherwise
// it owns a surrogate trained on the attacker-visible graph, copying and
// freezing whichever block is known.
struct AttackerView {
    const krl::EntityModel* victim = nullptr;
    std::unique_ptr<krl::EntityModel> surrogate;

    const krl::EntityModel& model() const { return surrogate ? *surrogate : *victim; }
    bool used_surrogate() const { return surrogate != nullptr; }
};

// Builds the attacker's working model from the stated knowledge flags.
//  - encoder_known && operator_known: references the victim directly.
//  - encoder_known only: copies the victim's entity block, freezes it, and
//    trains the operators on g_visible (dimensions must match the victim).
//  - operator_known only: copies the operator block, freezes it, trains the
//    entity embeddings.
//  - neither: trains a fresh model at the surrogate's (dim, depth).
AttackerView make_surrogate(const kg::KnowledgeGraph& g_visible,
                            const std::vector<kg::EntityQuery>& train_queries,
                            const krl::EntityModel& victim, const AttackConfig& cfg,
                            uint64_t seed);

}  // namespace krlab::attack
