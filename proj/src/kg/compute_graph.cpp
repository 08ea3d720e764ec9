#include "krlab/kg/compute_graph.hpp"

#include <algorithm>
#include <map>

namespace krlab::kg {

std::vector<EIdx> ComputeGraph::anchor_entities() const {
    std::vector<EIdx> out;
    for (const ComputeStep& s : steps)
        if (s.op == ComputeStep::Op::anchor) out.push_back(s.entity);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

ComputeGraph build_compute_graph(const KnowledgeGraph& g, const EntityQuery& q) {
    validate_query(g, q);
    ComputeGraph cg;

    // Anchor slots, deduplicated per entity.
    std::map<EIdx, uint32_t> anchor_slot;
    for (EIdx a : q.anchors)
        if (!anchor_slot.count(a)) {
            uint32_t slot = cg.num_slots++;
            anchor_slot[a] = slot;
            cg.steps.push_back({ComputeStep::Op::anchor, slot, a, 0, 0, {}});
        }

    // Incoming edges per variable, ordered deterministically.
    std::vector<std::vector<QueryEdge>> incoming(q.vars.size());
    for (const QueryEdge& e : q.edges) incoming[e.dst.idx].push_back(e);
    for (auto& v : incoming) std::sort(v.begin(), v.end());

    // Emit variables in topological order: a variable is ready once all of
    // its incoming edges' sources are materialized.
    std::vector<uint32_t> var_slot(q.vars.size(), kNone);
    auto src_slot = [&](NodeRef n) -> uint32_t {
        return n.is_var() ? var_slot[n.idx] : anchor_slot.at(q.anchors[n.idx]);
    };
    size_t emitted = 0;
    while (emitted < q.vars.size()) {
        bool progress = false;
        for (uint32_t v = 0; v < q.vars.size(); ++v) {
            if (var_slot[v] != kNone) continue;
            bool ready = std::all_of(incoming[v].begin(), incoming[v].end(),
                                     [&](const QueryEdge& e) { return src_slot(e.src) != kNone; });
            if (!ready) continue;
            std::vector<uint32_t> proj_slots;
            for (const QueryEdge& e : incoming[v]) {
                uint32_t slot = cg.num_slots++;
                cg.steps.push_back(
                    {ComputeStep::Op::project, slot, 0, e.rel, src_slot(e.src), {}});
                proj_slots.push_back(slot);
            }
            if (proj_slots.size() == 1) {
                var_slot[v] = proj_slots[0];
            } else {
                uint32_t slot = cg.num_slots++;
                cg.steps.push_back({ComputeStep::Op::intersect, slot, 0, 0, 0, proj_slots});
                var_slot[v] = slot;
            }
            ++emitted;
            progress = true;
        }
        require(progress, "compute graph construction stalled (cycle)");
    }
    cg.out_slot = var_slot[q.sink];
    return cg;
}

}  // namespace krlab::kg
