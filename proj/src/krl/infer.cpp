#include "krlab/krl/infer.hpp"

#include <algorithm>

namespace krlab::krl {

std::vector<RankedAnswer> rank_candidates(const ParamSource& ps, const kg::KnowledgeGraph& g,
                                          const kg::ComputeGraph& cg, kg::CIdx sink_cat) {
    QueryTape tape = eval_query(ps, cg);
    const Box& qb = query_box(tape, cg);

    const std::vector<kg::EIdx>& pool = g.entities_of(sink_cat);
    std::vector<RankedAnswer> out;
    out.reserve(pool.size());
    for (kg::EIdx v : pool) out.push_back({v, box_distance(ps, ps.entity(v), qb)});
    std::sort(out.begin(), out.end(), [](const RankedAnswer& a, const RankedAnswer& b) {
        if (a.distance != b.distance) return a.distance < b.distance;
        return a.entity < b.entity;
    });
    return out;
}

std::vector<RankedAnswer> answer_entity_query(const ParamSource& ps,
                                              const kg::KnowledgeGraph& g,
                                              const kg::EntityQuery& q) {
    kg::ComputeGraph cg = kg::build_compute_graph(g, q);
    return rank_candidates(ps, g, cg, q.sink_category(g));
}

uint32_t rank_of(const std::vector<RankedAnswer>& ranking, kg::EIdx e) {
    for (size_t i = 0; i < ranking.size(); ++i)
        if (ranking[i].entity == e) return uint32_t(i) + 1;
    return 0;
}

}  // namespace krlab::krl
