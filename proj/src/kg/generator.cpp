#include "krlab/kg/generator.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace krlab::kg {

std::vector<std::string> GeneratorSpec::anchor_categories() const {
    std::vector<std::string> out;
    for (const CategorySpec& c : categories)
        if (c.anchor_eligible) out.push_back(c.id);
    std::sort(out.begin(), out.end());
    return out;
}

namespace {

std::string entity_id(const std::string& cat, uint32_t i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "_%05u", i);
    return cat + buf;
}

}  // namespace

KnowledgeGraph generate_synthetic_kg(const GeneratorSpec& spec, uint64_t seed) {
    GraphBuilder b;
    for (const CategorySpec& c : spec.categories) {
        require(c.count >= 1, "category needs at least one entity: " + c.id);
        b.add_category(c.id);
        for (uint32_t i = 0; i < c.count; ++i) b.add_entity(entity_id(c.id, i), c.id);
    }

    std::set<std::string> seen_rel;
    for (const RelationSpec& r : spec.relations) {
        if (seen_rel.insert(r.id).second) b.add_relation(r.id);
        b.add_schema(r.head_cat, r.id, r.tail_cat);
    }

    auto count_of = [&](const std::string& cat) -> uint32_t {
        for (const CategorySpec& c : spec.categories)
            if (c.id == cat) return c.count;
        fail("relation references unknown category: " + cat);
    };

    Rng rng = make_rng(derive_seed(seed, "kg_gen"));
    for (const RelationSpec& r : spec.relations) {
        uint32_t nh = count_of(r.head_cat), nt = count_of(r.tail_cat);
        bool self = r.head_cat == r.tail_cat;
        std::set<std::pair<uint32_t, uint32_t>> made;
        auto emit = [&](uint32_t h, uint32_t t) {
            if (self && h == t) return false;
            if (!made.insert({h, t}).second) return false;
            b.add_fact(entity_id(r.head_cat, h), r.id, entity_id(r.tail_cat, t));
            return true;
        };

        using C = RelationSpec::Coverage;
        if (r.coverage == C::head || r.coverage == C::both)
            for (uint32_t h = 0; h < nh; ++h)
                while (!emit(h, static_cast<uint32_t>(rand_below(rng, nt)))) {
                    if (self && nt <= 1) break;
                }
        if (r.coverage == C::tail || r.coverage == C::both)
            for (uint32_t t = 0; t < nt; ++t) {
                if (std::any_of(made.begin(), made.end(),
                                [t](auto& p) { return p.second == t; }))
                    continue;
                while (!emit(static_cast<uint32_t>(rand_below(rng, nh)), t)) {
                    if (self && nh <= 1) break;
                }
            }

        uint64_t attempts = 0, cap = uint64_t(r.quota) * 64 + 1024;
        while (made.size() < r.quota && attempts++ < cap)
            emit(static_cast<uint32_t>(rand_below(rng, nh)),
                 static_cast<uint32_t>(rand_below(rng, nt)));
    }

    return b.build();
}

GeneratorSpec desk_scale_spec(double scale) {
    require(scale > 0.0, "scale must be positive");
    auto n = [&](double base, uint32_t floor_at) {
        return std::max<uint32_t>(floor_at, static_cast<uint32_t>(std::llround(base * scale)));
    };

    GeneratorSpec s;
    s.categories = {
        {"vendor", n(22, 4), true},   {"product", n(71, 8), true},
        {"version", n(967, 24), true}, {"cve", n(186, 12), false},
        {"campaign", n(8, 2), true},  {"tactic", n(2, 2), false},
        {"technique", n(2, 2), true}, {"pattern", n(2, 2), true},
        {"weakness", n(5, 2), true},  {"mitigation", n(748, 20), false},
    };

    using C = RelationSpec::Coverage;
    s.relations = {
        {"develops", "vendor", "product", n(79, 8), C::both},
        {"obtains", "product", "version", n(967, 24), C::both},
        {"vulnerable_to", "vendor", "cve", n(269, 6), C::none},
        {"vulnerable_to", "product", "cve", n(474, 10), C::none},
        {"vulnerable_to", "version", "cve", n(5108, 48), C::tail},
        {"aims_to", "cve", "campaign", n(273, 6), C::tail},
        {"related_to", "cve", "cve", n(25, 2), C::none},
        {"includes", "tactic", "technique", n(2, 2), C::tail},
        {"leverages", "technique", "pattern", n(2, 2), C::tail},
        {"applies_to", "pattern", "weakness", n(6, 2), C::tail},
        {"contains", "weakness", "cve", n(191, 4), C::head},
        {"fixable_by", "cve", "mitigation", n(1263, 24), C::both},
    };
    return s;
}

}  // namespace krlab::kg
