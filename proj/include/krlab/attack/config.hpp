#pragma once

#include <cstdint>
#include <optional>

#include "krlab/kg/graph.hpp"
#include "krlab/kg/trigger.hpp"

namespace krlab::attack {

enum class Vector : uint8_t { kp, qp, both };
enum class Objective : uint8_t { targeted, untargeted };

// Architecture of a surrogate model trained when part of the victim is
// unknown to the attacker.
struct SurrogateSpec {
    uint32_t dim = 64;
    uint32_t depth = 2;
};

// Hard ceilings the configured budgets must respect. The defaults are the
// full-scale values for entity-query attacks; relation-query attacks allow
// larger fact budgets.
struct BudgetMaxima {
    uint32_t n_kp = 100;
    uint32_t n_qp = 2;
    uint32_t n_iter = 5;

    static BudgetMaxima entity_case() { return {100, 2, 5}; }
    static BudgetMaxima relation_case() { return {400, 20, 5}; }
};

struct AttackConfig {
    Vector vectors = Vector::kp;
    Objective objective = Objective::targeted;
    kg::EIdx target_entity = kg::kNone;    // required when targeted
    kg::TriggerPattern trigger;             // selects the target query set

    // Budgets: injected facts, added logical paths per query, rounds.
    uint32_t n_kp = 10;
    uint32_t n_qp = 2;
    uint32_t n_iter = 1;
    BudgetMaxima maxima = BudgetMaxima::entity_case();

    double lambda = 1.0;        // evasiveness weight on non-target queries
    uint32_t opt_steps = 60;    // descent steps per optimization phase
    double opt_lr = 0.5;        // initial step size (halved on increase)
    uint32_t minibatch = 32;    // gradient minibatch per step

    // Discrete search controls.
    uint32_t beam_depth = 3;          // max path length in hops
    uint32_t beam_width = 0;          // 0 -> n_qp; larger widens the beam
    bool restrict_vicinity = true;    // root search near ground-truth answers
    uint32_t vicinity_hops = 2;

    // Attacker knowledge of the victim (Taxonomy): when a component is
    // unknown, a surrogate supplies it.
    bool encoder_known = false;   // entity embeddings phi
    bool operator_known = false;  // projection/intersection networks psi
    SurrogateSpec surrogate;

    void validate() const;
};

}  // namespace krlab::attack
