#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "krlab/kg/graph.hpp"

namespace krlab::kg {

struct StructureTag {
    uint32_t n_path = 0;  // number of anchor-to-sink paths
    uint32_t m_path = 0;  // maximum path length in hops

    friend auto operator<=>(const StructureTag&, const StructureTag&) = default;
};

// Node of a query dependency graph: either a constant anchor entity or a
// named variable. Variables are indices into EntityQuery::vars.
struct NodeRef {
    enum class Kind : uint8_t { anchor, var } kind;
    uint32_t idx;

    static NodeRef anchor(uint32_t i) { return {Kind::anchor, i}; }
    static NodeRef var(uint32_t i) { return {Kind::var, i}; }
    bool is_var() const { return kind == Kind::var; }

    friend auto operator<=>(const NodeRef&, const NodeRef&) = default;
};

struct QueryEdge {
    NodeRef src;
    RIdx rel;
    NodeRef dst;

    friend auto operator<=>(const QueryEdge&, const QueryEdge&) = default;
};

// Conjunctive entity query: a DAG whose sources are anchor entities and whose
// unique sink variable is the free answer variable.
struct EntityQuery {
    std::string id;
    std::vector<EIdx> anchors;      // referenced by NodeRef::anchor indices
    std::vector<std::string> vars;  // referenced by NodeRef::var indices
    uint32_t sink = 0;              // index into vars
    std::vector<QueryEdge> edges;
    std::vector<EIdx> answers;      // ground truth, sorted (computed pre-holdout)
    StructureTag tag;
    bool trigger = false;  // carries the trigger pattern

    CIdx sink_category(const KnowledgeGraph& g) const;
};

// Relation query: which relation links head to tail? The ground-truth fact is
// withheld from the training graph when these are sampled.
struct RelationQuery {
    std::string id;
    EIdx head = 0;
    EIdx tail = 0;
    RIdx answer = 0;
};

// Structural validation: edge indices in range, DAG (no directed cycle over
// variables), anchors have no incoming edge, exactly one sink variable (no
// outgoing edge) matching `sink`, every variable on some anchor-to-sink walk,
// and edges schema-consistent for at least one category assignment of each
// variable. Throws Error on violation.
void validate_query(const KnowledgeGraph& g, const EntityQuery& q);

// All entities that can bind the sink variable under some satisfying
// assignment of the remaining variables (natural join over the edge atoms).
std::vector<EIdx> answer_set(const KnowledgeGraph& g, const EntityQuery& q);

// Union of facts used by at least one satisfying assignment; the holdout
// split draws its eligible set from these.
std::vector<Fact> witness_facts(const KnowledgeGraph& g, const EntityQuery& q);

// Variable category inference: the unique category each variable must have
// under the schema, or kNone if ambiguous/unsatisfiable.
std::vector<CIdx> infer_var_categories(const KnowledgeGraph& g, const EntityQuery& q);

// Number of distinct anchor-to-sink directed paths in the dependency DAG.
uint32_t count_paths(const EntityQuery& q);

// Longest anchor-to-sink path length in hops.
uint32_t max_path_len(const EntityQuery& q);

}  // namespace krlab::kg
