#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "krlab/common.hpp"
#include "krlab/kg/graph.hpp"
#include "krlab/kg/query.hpp"
#include "krlab/krl/train.hpp"

namespace krlab::krl {

// Defaults are the full-scale values (dim 200, two graph-convolution rounds);
// desk-scale runs shrink dim/batch/epochs via config.
struct RelationSpec {
    uint32_t dim = 200;
    uint32_t rounds = 2;
    double lr = 1e-3;
    uint32_t batch = 2048;
    uint32_t epochs = 200;
    double init_scale = 0.5;
};

// Relation predictor over an entity pair's neighborhood: node states start at
// the scorer's own entity embeddings, pass through `rounds` of per-relation
// linear messages with mean aggregation plus a self transform (tanh), and a
// per-relation bilinear form scores the (head, tail) states.
class RelationScorer {
public:
    RelationScorer() = default;
    RelationScorer(const RelationSpec& spec, uint32_t n_entities, uint32_t n_relations,
                   uint64_t init_seed);

    const RelationSpec& spec() const { return spec_; }
    uint32_t dim() const { return spec_.dim; }
    uint32_t n_entities() const { return n_entities_; }
    uint32_t n_relations() const { return n_relations_; }
    uint64_t init_seed() const { return init_seed_; }

    Vec& params() { return params_; }
    const Vec& params() const { return params_; }

    size_t entity_off(kg::EIdx v) const { return size_t(v) * spec_.dim; }
    size_t self_w_off(uint32_t round) const;
    size_t bias_off(uint32_t round) const;
    size_t msg_w_off(uint32_t round, kg::RIdx r) const;
    size_t bilinear_off(kg::RIdx r) const;

private:
    RelationSpec spec_;
    uint32_t n_entities_ = 0;
    uint32_t n_relations_ = 0;
    uint64_t init_seed_ = 0;
    Vec params_;
};

// Induced subgraph within 2 hops of head or tail. Nodes are sorted; edges per
// node follow the graph's sorted fact order, so identical graphs give
// identical contexts regardless of input fact order.
struct RelationContext {
    std::vector<kg::EIdx> nodes;
    std::vector<std::vector<std::pair<kg::RIdx, uint32_t>>> edges;  // (rel, node position)
    uint32_t head_pos = 0;
    uint32_t tail_pos = 0;
};

RelationContext build_relation_context(const kg::KnowledgeGraph& g, kg::EIdx head,
                                       kg::EIdx tail);

// The label/an answer is always a canonical (non-reverse) relation; scoring
// and the CE run over that candidate set.
std::vector<kg::RIdx> canonical_relations(const kg::KnowledgeGraph& g);

// Scores index-aligned with `rels`.
Vec score_relations(const RelationScorer& s, const RelationContext& ctx,
                    std::span<const kg::RIdx> rels);

// Cross-entropy of the softmax over `rels` scores against `label`;
// accumulates `scale` times the gradient into `grad` when non-null.
double relation_ce_and_grad(const RelationScorer& s, const RelationContext& ctx,
                            std::span<const kg::RIdx> rels, kg::RIdx label, double scale,
                            Vec* grad);

// Ranked (relation, score), descending score, ties by relation index.
std::vector<std::pair<kg::RIdx, double>> answer_relation_query(const RelationScorer& s,
                                                               const kg::KnowledgeGraph& g,
                                                               const kg::RelationQuery& q);

struct RelationTrainResult {
    RelationScorer scorer;
    TrainReport report;
};

// CE training over the query labels with dense Adam; deterministic per seed.
RelationTrainResult train_relation_model(const kg::KnowledgeGraph& g,
                                         const std::vector<kg::RelationQuery>& queries,
                                         const RelationSpec& spec, uint64_t seed);

}  // namespace krlab::krl
