#pragma once

#include <cstdint>
#include <vector>

#include "krlab/kg/query.hpp"

namespace krlab::kg {

// Executable form of an entity query: one box slot per value, produced by
// anchor / project / intersect steps in topological order. The final step
// writes the query embedding.
struct ComputeStep {
    enum class Op : uint8_t { anchor, project, intersect } op;
    uint32_t out;                 // slot written
    EIdx entity = 0;              // anchor: source entity
    RIdx rel = 0;                 // project: relation applied
    uint32_t in = 0;              // project: input slot
    std::vector<uint32_t> ins;    // intersect: input slots (2+)
};

struct ComputeGraph {
    std::vector<ComputeStep> steps;
    uint32_t num_slots = 0;
    uint32_t out_slot = 0;  // sink box

    // Entity slots touched by anchor steps, in step order (deduplicated).
    std::vector<EIdx> anchor_entities() const;
};

// Lowers a validated query into steps. Each variable with k incoming edges
// costs k projections plus one intersection when k > 1.
ComputeGraph build_compute_graph(const KnowledgeGraph& g, const EntityQuery& q);

}  // namespace krlab::kg
