#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "krlab/kg/graph.hpp"
#include "krlab/kg/query.hpp"

namespace krlab::kg {

// On-disk bundle layout inside a directory:
//   schema.json      categories, forward relation ids, allowed triples
//   categories.tsv   entity<TAB>category
//   facts.tsv        head<TAB>relation<TAB>tail, canonical direction only
// Reverse relations, schema closure, and reverse facts are regenerated on
// load. Malformed lines are reported with their line number.
void save_kg(const std::filesystem::path& dir, const KnowledgeGraph& g);
KnowledgeGraph load_kg(const std::filesystem::path& dir);

struct QuerySet {
    std::vector<EntityQuery> entity;
    std::vector<RelationQuery> relation;
};

// Queries file: JSON array; entity records carry id/kind/anchors/vars/edges/
// sink/answers/tag/trigger with "var:" prefixes marking variables in edges,
// relation records carry id/kind/head/tail/answer.
void save_queries(const std::filesystem::path& file, const KnowledgeGraph& g,
                  const QuerySet& qs);
QuerySet load_queries(const std::filesystem::path& file, const KnowledgeGraph& g);

std::string fact_to_string(const KnowledgeGraph& g, const Fact& f);

}  // namespace krlab::kg
