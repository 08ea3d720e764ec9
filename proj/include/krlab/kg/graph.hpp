#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "krlab/common.hpp"

namespace krlab::kg {

using EIdx = uint32_t;  // dense entity index (entities sorted by id)
using RIdx = uint32_t;  // dense relation index
using CIdx = uint32_t;  // dense category index

inline constexpr uint32_t kNone = UINT32_MAX;

struct Fact {
    EIdx head;
    RIdx rel;
    EIdx tail;

    friend auto operator<=>(const Fact&, const Fact&) = default;
};

enum class FactSource : uint8_t { organic = 0, poison = 1 };

struct SchemaTriple {
    CIdx head_cat;
    RIdx rel;
    CIdx tail_cat;

    friend auto operator<=>(const SchemaTriple&, const SchemaTriple&) = default;
};

// Typed multi-relational graph. Every relation has a reverse partner and the
// fact set is closed under reversal: <h,r,t> present iff <t,rev(r),h> present.
// Mutations go through add_facts/remove_facts, which maintain that closure,
// the sorted fact order, and the adjacency index.
class KnowledgeGraph {
public:
    std::vector<std::string> entity_ids;    // sorted, index = EIdx
    std::vector<std::string> relation_ids;  // sorted, index = RIdx
    std::vector<std::string> category_ids;  // sorted, index = CIdx
    std::vector<CIdx> entity_cat;           // per entity
    std::vector<RIdx> rel_reverse;          // involution: rel_reverse[rel_reverse[r]] == r
    std::vector<uint8_t> rel_is_reverse;    // exactly one of (r, rev(r)) is marked
    std::vector<SchemaTriple> schema;       // sorted; closed under reversal
    std::vector<Fact> facts;                // sorted, unique; closed under reversal
    std::vector<FactSource> fact_source;    // parallel to facts

    EIdx entity(const std::string& id) const;
    RIdx relation(const std::string& id) const;
    CIdx category(const std::string& id) const;
    std::optional<EIdx> find_entity(const std::string& id) const;
    std::optional<RIdx> find_relation(const std::string& id) const;
    std::optional<CIdx> find_category(const std::string& id) const;

    size_t num_entities() const { return entity_ids.size(); }
    size_t num_relations() const { return relation_ids.size(); }
    size_t num_categories() const { return category_ids.size(); }

    bool has_fact(const Fact& f) const;
    bool schema_allows(CIdx head_cat, RIdx rel, CIdx tail_cat) const;

    // Out-edges of an entity (pairs sorted by (rel, tail)); reverse relations
    // make in-edges reachable through the same view.
    std::span<const Fact> out(EIdx v) const;
    // Out-edges restricted to one relation.
    std::span<const Fact> out(EIdx v, RIdx r) const;

    const std::vector<EIdx>& entities_of(CIdx cat) const;

    // Inserts the given facts plus their reverse partners; duplicates of
    // existing facts are ignored. Returns the number of new directed facts.
    size_t add_facts(std::span<const Fact> fs, FactSource src);
    // Removes the given facts plus their reverse partners if present.
    // Returns the number of directed facts removed.
    size_t remove_facts(std::span<const Fact> fs);
    // Removes every fact incident to the entity (the entity itself stays in
    // the vocabulary so indices remain stable across graph variants).
    size_t remove_incident_facts(EIdx v);

    Fact reverse_of(const Fact& f) const { return Fact{f.tail, rel_reverse[f.rel], f.head}; }
    // Canonical representative of a fact/reverse pair: the direction whose
    // relation is not marked reverse.
    Fact canonical(const Fact& f) const { return rel_is_reverse[f.rel] ? reverse_of(f) : f; }

    void rebuild_index();

private:
    std::unordered_map<std::string, uint32_t> entity_lookup_;
    std::unordered_map<std::string, uint32_t> relation_lookup_;
    std::unordered_map<std::string, uint32_t> category_lookup_;
    std::vector<size_t> adj_start_;              // CSR offsets into facts (facts are sorted)
    std::vector<std::vector<EIdx>> by_category_;

    friend class GraphBuilder;
};

// Assembles a graph from raw parts, sorting vocabularies, attaching reverse
// relations/schema/facts, and validating the result.
class GraphBuilder {
public:
    GraphBuilder& add_category(const std::string& id);
    GraphBuilder& add_entity(const std::string& id, const std::string& category);
    // Registers a forward relation; its reverse partner is created as
    // "rev_<id>" unless the id already names a reverse.
    GraphBuilder& add_relation(const std::string& id);
    GraphBuilder& add_schema(const std::string& head_cat, const std::string& rel,
                             const std::string& tail_cat);
    GraphBuilder& add_fact(const std::string& head, const std::string& rel,
                           const std::string& tail);

    KnowledgeGraph build();

private:
    std::vector<std::string> categories_;
    std::vector<std::pair<std::string, std::string>> entities_;
    std::vector<std::string> relations_;
    std::vector<std::array<std::string, 3>> schema_;
    std::vector<std::array<std::string, 3>> facts_;
};

// Structural validation: index bounds, category assignments, schema closure
// under reversal, fact/schema conformance, reverse-fact closure, sorted and
// duplicate-free fact list. Throws Error with a description on violation.
void validate(const KnowledgeGraph& g);

inline const std::string kReversePrefix = "rev_";

}  // namespace krlab::kg
