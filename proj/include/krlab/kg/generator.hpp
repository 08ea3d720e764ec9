#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "krlab/kg/graph.hpp"

namespace krlab::kg {

struct CategorySpec {
    std::string id;
    uint32_t count = 0;
    bool anchor_eligible = false;  // may serve as a query anchor category
};

// One schema triple with a generation quota. Several specs may share a
// relation id (the relation then has several legal category signatures).
struct RelationSpec {
    std::string id;
    std::string head_cat;
    std::string tail_cat;
    uint32_t quota = 0;  // directed fact target before reverse closure
    enum class Coverage : uint8_t { none, head, tail, both } coverage = Coverage::none;
};

struct GeneratorSpec {
    std::vector<CategorySpec> categories;
    std::vector<RelationSpec> relations;

    std::vector<std::string> anchor_categories() const;
};

// Deterministic synthetic graph: entities <cat>_<zero-padded index>, coverage
// passes first (every required endpoint touched), then uniform fill to quota.
KnowledgeGraph generate_synthetic_kg(const GeneratorSpec& spec, uint64_t seed);

// Security-flavored desk-scale preset. At scale 1.0: ~2,000 entities across
// 10 categories and 12 forward relation kinds, with per-kind fact quotas
// proportioned like a production vulnerability graph. `scale` shrinks or
// grows every count with small floors so tiny categories stay usable.
GeneratorSpec desk_scale_spec(double scale = 1.0);

}  // namespace krlab::kg
