#pragma once

#include <cstdint>
#include <vector>

#include "krlab/kg/graph.hpp"
#include "krlab/kg/query.hpp"
#include "krlab/krl/model.hpp"
#include "krlab/krl/train.hpp"

namespace krlab::defense {

// Countermeasure configuration: anomaly-score pruning plus adversarial-query
// training, individually switchable for the integrated pipeline.
struct DefenseConfig {
    double m = 1.0;        // percent of directed facts to prune
    uint32_t n_qp_d = 2;   // adversarial path budget per training query
                           // (entity-query default; relation case uses 20)
    bool filter = true;
    bool advtrain = true;

    // Shape of the defender's own untargeted perturbations.
    uint32_t opt_steps = 60;
    double opt_lr = 0.5;
    uint32_t beam_depth = 3;
    uint32_t beam_width = 0;  // 0 -> n_qp_d
    bool restrict_vicinity = true;
    uint32_t vicinity_hops = 2;

    void validate() const;  // 0 <= m < 100
};

// Fitness of one committed fact to the learned geometry: the center-norm
// distance between the head's point box projected through the relation and
// the tail's embedding — the same statistic the retrograde fact search
// minimizes, so injected facts score low for the attacker's model and high
// for a cleanly trained one. Deterministic and nonnegative.
double anomaly_score(const krl::EntityModel& model, const kg::Fact& f);

// Scores for every directed fact, aligned with g.facts. Facts sharing a
// (head, relation) prefix reuse one projection.
Vec anomaly_scores(const kg::KnowledgeGraph& g, const krl::EntityModel& model);

struct PruneResult {
    kg::KnowledgeGraph pruned;
    std::vector<kg::Fact> removed;  // exactly ceil(m% * |facts|), score order
    Vec removed_scores;             // aligned with removed, descending
    size_t closure_removed = 0;     // reverse partners dropped to repair closure

    // Audit against provenance tags (evaluation only; scoring never reads
    // them). Precision counts removed directed facts that were poison;
    // recall counts poison fact/reverse pairs with either direction removed.
    // Both are vacuously 1 when their denominator is empty.
    double poison_precision = 1.0;
    double poison_recall = 1.0;
    size_t poison_pairs_total = 0;
    size_t poison_pairs_caught = 0;
};

// Removes the ceil(m% * |facts|) highest-anomaly directed facts (ties broken
// by (head, relation, tail)), then drops orphaned reverse partners so the
// closure invariant holds. The scoring model is typically the one trained on
// the possibly poisoned graph itself.
PruneResult prune_by_anomaly(const kg::KnowledgeGraph& g, const krl::EntityModel& model,
                             double m);

struct FilterResult {
    PruneResult prune;
    krl::EntityModel model;  // retrained from scratch on the pruned graph
    krl::TrainReport report;
};

// Prunes and retrains from scratch on the pruned graph. With m = 0 the graph
// passes through unchanged and the retrained model equals a direct
// train_entity_model run with the same seed.
FilterResult filter_and_retrain(const kg::KnowledgeGraph& g, const krl::EntityModel& model,
                                double m, const std::vector<kg::EntityQuery>& train_queries,
                                const krl::ModelSpec& spec, uint64_t seed);

struct AdvTrainResult {
    krl::EntityModel model;
    krl::TrainReport report;
    uint64_t augmented = 0;  // successfully perturbed (query, epoch) pairs
    uint64_t failures = 0;   // generation failures, skipped with a counter
    std::vector<uint32_t> per_epoch_augmented;
};

// Margin training where each epoch adds one untargeted perturbed variant per
// training query — generated with budget n_qp_d against the epoch-start
// snapshot — keeping the original ground-truth answers as labels. With
// n_qp_d = 0 this reduces to train_entity_model exactly, byte for byte: the
// base schedule's random streams do not depend on the augmentation.
AdvTrainResult adversarial_training(const kg::KnowledgeGraph& g,
                                    const std::vector<kg::EntityQuery>& train_queries,
                                    const DefenseConfig& cfg, const krl::ModelSpec& spec,
                                    uint64_t seed);

struct IntegratedResult {
    PruneResult prune;    // identity (empty removed set) when filtering is off
    AdvTrainResult train;
};

// Filtering first, then adversarial training on the pruned graph. Disabled
// stages degrade gracefully: with cfg.filter off (or m = 0) the graph passes
// through; with cfg.advtrain off (or n_qp_d = 0) the final training is the
// plain baseline run for the same seed.
IntegratedResult integrated_defense(const kg::KnowledgeGraph& g,
                                    const krl::EntityModel& initial,
                                    const std::vector<kg::EntityQuery>& train_queries,
                                    const DefenseConfig& cfg, const krl::ModelSpec& spec,
                                    uint64_t seed);

}  // namespace krlab::defense
