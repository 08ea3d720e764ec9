#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "krlab/kg/graph.hpp"
#include "krlab/kg/query.hpp"
#include "krlab/kg/trigger.hpp"

namespace krlab::kg {

struct EntitySampleOptions {
    StructureTag tag;                            // (n_path, m_path) template
    uint32_t count = 0;
    std::string sink_category;
    std::vector<std::string> anchor_categories;  // legal path start categories
    std::optional<TriggerPattern> force_trigger;    // embed the pattern as one path
    std::optional<TriggerPattern> exclude_trigger;  // reject accidental carriers
    uint32_t max_answers = 50;      // reject near-degenerate queries
    uint32_t attempts_per_query = 200;
    std::string id_prefix = "q";
};

struct EntitySampleResult {
    std::vector<EntityQuery> queries;
    bool underfilled = false;  // fewer distinct queries exist than requested
    uint64_t attempts = 0;
};

// Samples distinct conjunctive queries matching the template: one path of
// exactly m_path hops, the rest of lengths 1..m_path, all meeting at a fresh
// sink variable whose pre-holdout answer set is nonempty. Paths are sampled
// by backward walks from a common answer entity; ties and choices are driven
// only by the seed. Ground truths are computed against `g` (call this on the
// full graph, before any holdout).
EntitySampleResult sample_entity_queries(const KnowledgeGraph& g,
                                         const EntitySampleOptions& opts, uint64_t seed);

struct RelationSampleOptions {
    uint32_t count = 0;
    uint32_t attempts_per_query = 200;
    std::string id_prefix = "rq";
};

struct RelationSampleResult {
    std::vector<RelationQuery> queries;
    std::vector<Fact> withheld;  // ground-truth facts; remove from the train graph
    bool underfilled = false;
};

// Samples (head, tail, relation) prediction instances from canonical facts,
// keeping only pairs linked by exactly one canonical relation so the label is
// unambiguous. The ground-truth facts are returned for withholding.
RelationSampleResult sample_relation_queries(const KnowledgeGraph& g,
                                             const RelationSampleOptions& opts, uint64_t seed);

}  // namespace krlab::kg
