#include "krlab/kg/trigger.hpp"

#include <algorithm>
#include <functional>

namespace krlab::kg {

bool match_trigger(const EntityQuery& q, const TriggerPattern& p) {
    if (p.rels.empty()) return false;

    // Walk forward from the pattern position: at step k we must traverse an
    // edge labeled p.rels[k]; the walk must end exactly at the sink.
    std::function<bool(NodeRef, size_t)> walk = [&](NodeRef at, size_t k) -> bool {
        if (k == p.rels.size())
            return at.is_var() && at.idx == q.sink;
        for (const QueryEdge& e : q.edges)
            if (e.src == at && e.rel == p.rels[k] && walk(e.dst, k + 1)) return true;
        return false;
    };

    for (uint32_t a = 0; a < q.anchors.size(); ++a) {
        if (std::find(p.anchors.begin(), p.anchors.end(), q.anchors[a]) == p.anchors.end())
            continue;
        if (walk(NodeRef::anchor(a), 0)) return true;
    }
    return false;
}

}  // namespace krlab::kg
