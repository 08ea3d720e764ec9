#include "krlab/kg/holdout.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace krlab::kg {

namespace {

std::vector<Fact> eligible_canonical(const KnowledgeGraph& g,
                                     const std::vector<EntityQuery>& eval_queries) {
    std::set<Fact> eligible;
    for (const EntityQuery& q : eval_queries)
        for (const Fact& f : witness_facts(g, q)) eligible.insert(g.canonical(f));
    return {eligible.begin(), eligible.end()};
}

// Deterministic sample of k items without replacement (partial Fisher-Yates).
template <typename T>
std::vector<T> sample_k(std::vector<T> pool, size_t k, Rng& rng) {
    k = std::min(k, pool.size());
    for (size_t i = 0; i < k; ++i)
        std::swap(pool[i], pool[i + rand_below(rng, pool.size() - i)]);
    pool.resize(k);
    return pool;
}

}  // namespace

HoldoutResult holdout_uniform_facts(const KnowledgeGraph& g,
                                    const std::vector<EntityQuery>& eval_queries,
                                    double fraction, uint64_t seed) {
    require(fraction >= 0.0 && fraction <= 1.0, "holdout fraction out of range");
    std::vector<Fact> eligible = eligible_canonical(g, eval_queries);
    size_t k = static_cast<size_t>(std::llround(fraction * double(eligible.size())));

    Rng rng = make_rng(derive_seed(seed, "holdout_uniform"));
    HoldoutResult res;
    res.removed_facts = sample_k(std::move(eligible), k, rng);
    std::sort(res.removed_facts.begin(), res.removed_facts.end());
    res.train = g;
    res.train.remove_facts(res.removed_facts);
    return res;
}

HoldoutResult holdout_answer_entities(const KnowledgeGraph& g,
                                      const std::vector<EntityQuery>& eval_queries,
                                      const std::string& category, double fraction,
                                      uint64_t seed) {
    require(fraction >= 0.0 && fraction <= 1.0, "holdout fraction out of range");
    CIdx cat = g.category(category);
    std::set<EIdx> pool_set;
    for (const EntityQuery& q : eval_queries)
        for (const Fact& f : witness_facts(g, q)) {
            if (g.entity_cat[f.head] == cat) pool_set.insert(f.head);
            if (g.entity_cat[f.tail] == cat) pool_set.insert(f.tail);
        }
    std::vector<EIdx> pool(pool_set.begin(), pool_set.end());
    size_t k = static_cast<size_t>(std::llround(fraction * double(pool.size())));

    Rng rng = make_rng(derive_seed(seed, "holdout_entities"));
    HoldoutResult res;
    res.removed_entities = sample_k(std::move(pool), k, rng);
    std::sort(res.removed_entities.begin(), res.removed_entities.end());

    std::set<Fact> removed;
    res.train = g;
    for (EIdx v : res.removed_entities) {
        auto edges = res.train.out(v);
        for (const Fact& f : edges) removed.insert(res.train.canonical(f));
        res.train.remove_incident_facts(v);
    }
    res.removed_facts.assign(removed.begin(), removed.end());
    return res;
}

}  // namespace krlab::kg
