#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "krlab/kg/graph.hpp"
#include "krlab/kg/query.hpp"

namespace krlab::kg {

struct HoldoutResult {
    KnowledgeGraph train;
    std::vector<Fact> removed_facts;      // canonical direction, sorted
    std::vector<EIdx> removed_entities;   // answer-entity mode only
};

// Removes round(fraction * |eligible|) canonical facts drawn uniformly from
// the facts appearing on the evaluation queries' witness paths. Reverse
// partners are removed with them. Ground truths stay as computed pre-holdout.
HoldoutResult holdout_uniform_facts(const KnowledgeGraph& g,
                                    const std::vector<EntityQuery>& eval_queries,
                                    double fraction, uint64_t seed);

// Zero-day style holdout: removes round(fraction * |pool|) entities of the
// given category from the pool of entities appearing on the evaluation
// queries' witness paths. Removal strips every incident fact; the entity
// stays in the vocabulary so indices remain stable.
HoldoutResult holdout_answer_entities(const KnowledgeGraph& g,
                                      const std::vector<EntityQuery>& eval_queries,
                                      const std::string& category, double fraction,
                                      uint64_t seed);

}  // namespace krlab::kg
