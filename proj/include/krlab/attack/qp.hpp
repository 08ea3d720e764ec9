#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "krlab/attack/config.hpp"
#include "krlab/kg/graph.hpp"
#include "krlab/kg/query.hpp"
#include "krlab/krl/model.hpp"
#include "krlab/krl/ops.hpp"

namespace krlab::attack {

// Perturbation objective on the combined box psi_and(phi_q, phi_q+):
//   targeted:    dist(phi_A, combined)            (minimized)
//   untargeted:  -mean_{a in [[q]]} dist(phi_a, combined)
//                (the exact negation of the reference-distance term, so
//                 descent maximizes distance to the true answers)
struct QpObjective {
    Objective objective = Objective::targeted;
    kg::EIdx target = kg::kNone;           // targeted only
    std::vector<kg::EIdx> answers;         // reference [[q]], untargeted
};

// Loss at a given perturbation box; accumulates `scale` times its gradient
// with respect to the perturbation's center/offset into dc/doff when
// non-null. phi_q stays fixed.
double qp_loss_and_grad(const krl::ParamSource& ps, const QpObjective& obj, const krl::Box& phi_q,
                        const krl::Box& phi_plus, double scale, Vec* dc, Vec* doff);

struct PerturbOptResult {
    krl::Box box;                    // optimized phi_q+
    std::vector<double> trace;  // nonincreasing under backtracking descent
};

// Gradient descent on the perturbation embedding, initialized at phi_q (so
// the idempotent intersection makes the initial combined box equal phi_q).
// Offsets are kept nonnegative through a softplus reparametrization.
PerturbOptResult optimize_perturbation_embedding(const krl::EntityModel& model,
                                                 const krl::Box& phi_q, const QpObjective& obj,
                                                 uint32_t steps, double lr);

// One added logical path: anchor -> rels[0] -> ... -> rels.back() -> sink.
struct PerturbationPath {
    kg::EIdx anchor = 0;
    std::vector<kg::RIdx> rels;

    friend auto operator<=>(const PerturbationPath&, const PerturbationPath&) = default;
};

struct Perturbation {
    std::vector<PerturbationPath> paths;  // at most n_qp
    Vec scores;                           // replay distance to phi_q+, aligned
    bool no_anchor_reachable = false;
};

// Replayed embedding of a candidate path (anchor box projected along rels),
// scored by L2 over the concatenated center/offset against the target box.
double replay_path_score(const krl::ParamSource& ps, const PerturbationPath& p,
                         const krl::Box& target);

// Level-wise backward beam search from the entity nearest phi_q+'s center
// (restricted to `roots`, ties by index): each level extends candidate
// paths by real in-edges, keeps the `width` best by replay score, and
// records candidates whose start entity is anchor-eligible. Returns the
// n_qp best distinct completed paths.
Perturbation beam_search_perturbation(const kg::KnowledgeGraph& g,
                                      const krl::EntityModel& model, const krl::Box& phi_plus,
                                      std::span<const kg::EIdx> roots,
                                      std::span<const uint8_t> anchor_eligible, uint32_t n_qp,
                                      uint32_t width, uint32_t max_depth);

// Entities within `hops` of any listed entity (following both directions via
// reverse relations), sorted.
std::vector<kg::EIdx> vicinity_of(const kg::KnowledgeGraph& g, std::span<const kg::EIdx> seeds,
                                  uint32_t hops);

struct QpResult {
    kg::EntityQuery qstar;     // q with added paths (q unchanged on failure)
    Perturbation perturbation;
    PerturbOptResult opt;
    bool failed = false;
};

// Optimizes the perturbation embedding, realizes it as up to n_qp discrete
// paths, and conjoins them to q at its sink. The returned query always
// validates against g; on search or validation failure the original query
// comes back flagged. Deterministic: no sampling is involved.
QpResult qp_attack(const kg::KnowledgeGraph& g, const krl::EntityModel& attacker_model,
                   const kg::EntityQuery& q, const AttackConfig& cfg,
                   std::span<const uint8_t> anchor_eligible);

}  // namespace krlab::attack
