#pragma once

#include <vector>

#include "krlab/kg/query.hpp"

namespace krlab::kg {

// Trigger pattern: a relation path from one of the listed anchor entities to
// the query's sink. A query "carries" the pattern when its dependency graph
// contains a directed path anchor -> r1 -> ... -> rk -> sink whose edge
// relations equal `rels` in order and whose start anchor is in `anchors`.
struct TriggerPattern {
    std::vector<EIdx> anchors;
    std::vector<RIdx> rels;
};

bool match_trigger(const EntityQuery& q, const TriggerPattern& p);

}  // namespace krlab::kg
