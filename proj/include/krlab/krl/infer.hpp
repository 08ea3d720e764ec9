#pragma once

#include <vector>

#include "krlab/kg/compute_graph.hpp"
#include "krlab/kg/graph.hpp"
#include "krlab/kg/query.hpp"
#include "krlab/krl/ops.hpp"

namespace krlab::krl {

struct RankedAnswer {
    kg::EIdx entity;
    double distance;
};

// Ranks every entity of the sink's category by ascending box distance to the
// query embedding; equal distances order by entity index (ids are sorted, so
// index order is id order). The result is a permutation of the candidates.
std::vector<RankedAnswer> rank_candidates(const ParamSource& ps, const kg::KnowledgeGraph& g,
                                          const kg::ComputeGraph& cg, kg::CIdx sink_cat);

std::vector<RankedAnswer> answer_entity_query(const ParamSource& ps,
                                              const kg::KnowledgeGraph& g,
                                              const kg::EntityQuery& q);

// 1-based rank of `e` in a ranking; 0 when absent (metrics translate absence
// to |candidates| + 1 and flag it).
uint32_t rank_of(const std::vector<RankedAnswer>& ranking, kg::EIdx e);

}  // namespace krlab::krl
