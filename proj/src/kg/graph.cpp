#include "krlab/kg/graph.hpp"

#include <algorithm>

namespace krlab::kg {

namespace {

uint32_t lookup(const std::unordered_map<std::string, uint32_t>& m, const std::string& id,
                const char* kind) {
    auto it = m.find(id);
    if (it == m.end()) fail(std::string("unknown ") + kind + ": " + id);
    return it->second;
}

std::optional<uint32_t> find(const std::unordered_map<std::string, uint32_t>& m,
                             const std::string& id) {
    auto it = m.find(id);
    if (it == m.end()) return std::nullopt;
    return it->second;
}

}  // namespace

EIdx KnowledgeGraph::entity(const std::string& id) const {
    return lookup(entity_lookup_, id, "entity");
}
RIdx KnowledgeGraph::relation(const std::string& id) const {
    return lookup(relation_lookup_, id, "relation");
}
CIdx KnowledgeGraph::category(const std::string& id) const {
    return lookup(category_lookup_, id, "category");
}
std::optional<EIdx> KnowledgeGraph::find_entity(const std::string& id) const {
    return find(entity_lookup_, id);
}
std::optional<RIdx> KnowledgeGraph::find_relation(const std::string& id) const {
    return find(relation_lookup_, id);
}
std::optional<CIdx> KnowledgeGraph::find_category(const std::string& id) const {
    return find(category_lookup_, id);
}

bool KnowledgeGraph::has_fact(const Fact& f) const {
    return std::binary_search(facts.begin(), facts.end(), f);
}

bool KnowledgeGraph::schema_allows(CIdx head_cat, RIdx rel, CIdx tail_cat) const {
    return std::binary_search(schema.begin(), schema.end(), SchemaTriple{head_cat, rel, tail_cat});
}

std::span<const Fact> KnowledgeGraph::out(EIdx v) const {
    return {facts.data() + adj_start_[v], facts.data() + adj_start_[v + 1]};
}

std::span<const Fact> KnowledgeGraph::out(EIdx v, RIdx r) const {
    auto all = out(v);
    auto lo = std::lower_bound(all.begin(), all.end(), Fact{v, r, 0});
    auto hi = std::lower_bound(all.begin(), all.end(), Fact{v, r + 1, 0});
    return {lo, hi};
}

const std::vector<EIdx>& KnowledgeGraph::entities_of(CIdx cat) const { return by_category_[cat]; }

void KnowledgeGraph::rebuild_index() {
    adj_start_.assign(num_entities() + 1, 0);
    for (const Fact& f : facts) ++adj_start_[f.head + 1];
    for (size_t v = 1; v <= num_entities(); ++v) adj_start_[v] += adj_start_[v - 1];

    require(entity_cat.size() == num_entities(), "entity_cat size mismatch");
    by_category_.assign(num_categories(), {});
    for (EIdx v = 0; v < num_entities(); ++v) {
        require(entity_cat[v] < num_categories(), "entity category out of range");
        by_category_[entity_cat[v]].push_back(v);
    }

    entity_lookup_.clear();
    relation_lookup_.clear();
    category_lookup_.clear();
    for (uint32_t i = 0; i < entity_ids.size(); ++i) entity_lookup_[entity_ids[i]] = i;
    for (uint32_t i = 0; i < relation_ids.size(); ++i) relation_lookup_[relation_ids[i]] = i;
    for (uint32_t i = 0; i < category_ids.size(); ++i) category_lookup_[category_ids[i]] = i;
}

size_t KnowledgeGraph::add_facts(std::span<const Fact> fs, FactSource src) {
    std::vector<Fact> closure;
    closure.reserve(fs.size() * 2);
    for (const Fact& f : fs) {
        closure.push_back(f);
        closure.push_back(reverse_of(f));
    }
    std::sort(closure.begin(), closure.end());
    closure.erase(std::unique(closure.begin(), closure.end()), closure.end());

    std::vector<Fact> merged;
    std::vector<FactSource> merged_src;
    merged.reserve(facts.size() + closure.size());
    merged_src.reserve(facts.size() + closure.size());
    size_t added = 0, i = 0, j = 0;
    while (i < facts.size() || j < closure.size()) {
        if (j == closure.size() || (i < facts.size() && facts[i] < closure[j])) {
            merged.push_back(facts[i]);
            merged_src.push_back(fact_source[i]);
            ++i;
        } else if (i < facts.size() && facts[i] == closure[j]) {
            merged.push_back(facts[i]);
            merged_src.push_back(fact_source[i]);  // existing fact keeps its provenance
            ++i;
            ++j;
        } else {
            merged.push_back(closure[j]);
            merged_src.push_back(src);
            ++j;
            ++added;
        }
    }
    facts = std::move(merged);
    fact_source = std::move(merged_src);
    rebuild_index();
    return added;
}

size_t KnowledgeGraph::remove_facts(std::span<const Fact> fs) {
    std::vector<Fact> victims;
    victims.reserve(fs.size() * 2);
    for (const Fact& f : fs) {
        victims.push_back(f);
        victims.push_back(reverse_of(f));
    }
    std::sort(victims.begin(), victims.end());
    victims.erase(std::unique(victims.begin(), victims.end()), victims.end());

    std::vector<Fact> kept;
    std::vector<FactSource> kept_src;
    kept.reserve(facts.size());
    kept_src.reserve(facts.size());
    size_t removed = 0;
    for (size_t i = 0; i < facts.size(); ++i) {
        if (std::binary_search(victims.begin(), victims.end(), facts[i])) {
            ++removed;
        } else {
            kept.push_back(facts[i]);
            kept_src.push_back(fact_source[i]);
        }
    }
    facts = std::move(kept);
    fact_source = std::move(kept_src);
    rebuild_index();
    return removed;
}

size_t KnowledgeGraph::remove_incident_facts(EIdx v) {
    std::vector<Fact> victims(out(v).begin(), out(v).end());
    return remove_facts(victims);  // closure removal also clears in-edges
}

GraphBuilder& GraphBuilder::add_category(const std::string& id) {
    categories_.push_back(id);
    return *this;
}
GraphBuilder& GraphBuilder::add_entity(const std::string& id, const std::string& category) {
    entities_.emplace_back(id, category);
    return *this;
}
GraphBuilder& GraphBuilder::add_relation(const std::string& id) {
    relations_.push_back(id);
    return *this;
}
GraphBuilder& GraphBuilder::add_schema(const std::string& head_cat, const std::string& rel,
                                       const std::string& tail_cat) {
    schema_.push_back({head_cat, rel, tail_cat});
    return *this;
}
GraphBuilder& GraphBuilder::add_fact(const std::string& head, const std::string& rel,
                                     const std::string& tail) {
    facts_.push_back({head, rel, tail});
    return *this;
}

KnowledgeGraph GraphBuilder::build() {
    KnowledgeGraph g;

    g.category_ids = categories_;
    std::sort(g.category_ids.begin(), g.category_ids.end());
    g.category_ids.erase(std::unique(g.category_ids.begin(), g.category_ids.end()),
                         g.category_ids.end());

    // Relation vocabulary: forward ids plus generated reverse partners.
    std::vector<std::string> rels;
    for (const auto& r : relations_) {
        require(!r.starts_with(kReversePrefix),
                "relation ids must not start with the reserved prefix: " + r);
        rels.push_back(r);
        rels.push_back(kReversePrefix + r);
    }
    std::sort(rels.begin(), rels.end());
    rels.erase(std::unique(rels.begin(), rels.end()), rels.end());
    g.relation_ids = rels;

    std::vector<std::pair<std::string, std::string>> ents = entities_;
    std::sort(ents.begin(), ents.end());
    ents.erase(std::unique(ents.begin(), ents.end()), ents.end());
    g.entity_ids.reserve(ents.size());
    for (auto& [id, cat] : ents) {
        require(g.entity_ids.empty() || g.entity_ids.back() != id,
                "entity declared with conflicting categories: " + id);
        g.entity_ids.push_back(id);
    }

    // Placeholder categories so the first index rebuild (which established
    // the id lookups needed below) can fill by-category lists safely; the
    // rebuild inside add_facts sees the real assignments.
    g.entity_cat.assign(ents.size(), 0);
    g.rebuild_index();
    for (size_t i = 0; i < ents.size(); ++i) g.entity_cat[i] = g.category(ents[i].second);

    g.rel_reverse.resize(g.relation_ids.size());
    g.rel_is_reverse.resize(g.relation_ids.size());
    for (RIdx r = 0; r < g.relation_ids.size(); ++r) {
        const std::string& id = g.relation_ids[r];
        bool rev = id.starts_with(kReversePrefix);
        g.rel_is_reverse[r] = rev;
        g.rel_reverse[r] = g.relation(rev ? id.substr(kReversePrefix.size())
                                          : kReversePrefix + id);
    }

    for (const auto& [hc, r, tc] : schema_) {
        SchemaTriple t{g.category(hc), g.relation(r), g.category(tc)};
        g.schema.push_back(t);
        g.schema.push_back({t.tail_cat, g.rel_reverse[t.rel], t.head_cat});
    }
    std::sort(g.schema.begin(), g.schema.end());
    g.schema.erase(std::unique(g.schema.begin(), g.schema.end()), g.schema.end());

    std::vector<Fact> fs;
    fs.reserve(facts_.size());
    for (const auto& [h, r, t] : facts_)
        fs.push_back({g.entity(h), g.relation(r), g.entity(t)});
    g.add_facts(fs, FactSource::organic);

    validate(g);
    return g;
}

void validate(const KnowledgeGraph& g) {
    require(g.entity_cat.size() == g.num_entities(), "entity_cat size mismatch");
    require(g.fact_source.size() == g.facts.size(), "fact_source size mismatch");
    require(g.rel_reverse.size() == g.num_relations() &&
                g.rel_is_reverse.size() == g.num_relations(),
            "relation table size mismatch");
    require(std::is_sorted(g.entity_ids.begin(), g.entity_ids.end()), "entity ids not sorted");
    require(std::is_sorted(g.relation_ids.begin(), g.relation_ids.end()),
            "relation ids not sorted");

    for (CIdx c : g.entity_cat) require(c < g.num_categories(), "entity category out of range");
    for (RIdx r = 0; r < g.num_relations(); ++r) {
        require(g.rel_reverse[r] < g.num_relations(), "reverse relation out of range");
        require(g.rel_reverse[g.rel_reverse[r]] == r, "reverse relation not an involution");
        require(g.rel_is_reverse[r] != g.rel_is_reverse[g.rel_reverse[r]],
                "exactly one of a relation pair must be marked reverse");
    }

    require(std::is_sorted(g.schema.begin(), g.schema.end()), "schema not sorted");
    for (const SchemaTriple& t : g.schema) {
        require(t.head_cat < g.num_categories() && t.tail_cat < g.num_categories() &&
                    t.rel < g.num_relations(),
                "schema triple out of range");
        require(g.schema_allows(t.tail_cat, g.rel_reverse[t.rel], t.head_cat),
                "schema not closed under reversal");
    }

    require(std::is_sorted(g.facts.begin(), g.facts.end()), "facts not sorted");
    require(std::adjacent_find(g.facts.begin(), g.facts.end()) == g.facts.end(),
            "duplicate facts");
    for (const Fact& f : g.facts) {
        require(f.head < g.num_entities() && f.tail < g.num_entities() &&
                    f.rel < g.num_relations(),
                "fact out of range");
        require(g.schema_allows(g.entity_cat[f.head], f.rel, g.entity_cat[f.tail]),
                "fact violates schema: " + g.entity_ids[f.head] + " " + g.relation_ids[f.rel] +
                    " " + g.entity_ids[f.tail]);
        require(g.has_fact(g.reverse_of(f)), "reverse-fact closure violated");
    }
}

}  // namespace krlab::kg
