#include "krlab/kg/sample.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace krlab::kg {

namespace {

// Logical path signature: start anchor plus the relation sequence toward the
// sink. Two paths with equal signatures impose the same constraint.
using PathSig = std::pair<EIdx, std::vector<RIdx>>;

struct WalkedPath {
    EIdx anchor;
    std::vector<RIdx> rels;      // anchor-to-sink order
    std::vector<EIdx> entities;  // witness entities after each hop; back() is the answer
};

// Backward walk of `len` hops from `answer`; the start must land in an
// anchor-eligible category. Returns the path in forward orientation.
std::optional<WalkedPath> walk_back(const KnowledgeGraph& g, EIdx answer, uint32_t len,
                                    const std::set<CIdx>& anchor_cats, Rng& rng,
                                    uint32_t tries) {
    for (uint32_t t = 0; t < tries; ++t) {
        EIdx cur = answer;
        std::vector<RIdx> rels;
        std::vector<EIdx> ents;
        bool dead = false;
        for (uint32_t hop = 0; hop < len; ++hop) {
            auto edges = g.out(cur);  // (cur, r', u) read as logical (u, rev(r'), cur)
            if (edges.empty()) {
                dead = true;
                break;
            }
            const Fact& f = edges[rand_below(rng, edges.size())];
            rels.push_back(g.rel_reverse[f.rel]);
            ents.push_back(cur);
            cur = f.tail;
        }
        if (dead) continue;
        if (!anchor_cats.count(g.entity_cat[cur])) continue;
        std::reverse(rels.begin(), rels.end());
        std::reverse(ents.begin(), ents.end());
        return WalkedPath{cur, std::move(rels), std::move(ents)};
    }
    return std::nullopt;
}

EntityQuery assemble(const KnowledgeGraph& g, const std::vector<WalkedPath>& paths,
                     const StructureTag& tag) {
    EntityQuery q;
    q.tag = tag;
    q.vars.push_back("answer");
    q.sink = 0;
    for (size_t p = 0; p < paths.size(); ++p) {
        // Paths starting at the same entity share one anchor node.
        uint32_t anchor_ref;
        auto it = std::find(q.anchors.begin(), q.anchors.end(), paths[p].anchor);
        if (it == q.anchors.end()) {
            anchor_ref = static_cast<uint32_t>(q.anchors.size());
            q.anchors.push_back(paths[p].anchor);
        } else {
            anchor_ref = static_cast<uint32_t>(it - q.anchors.begin());
        }
        NodeRef at = NodeRef::anchor(anchor_ref);
        const auto& rels = paths[p].rels;
        for (size_t h = 0; h < rels.size(); ++h) {
            NodeRef next;
            if (h + 1 == rels.size()) {
                next = NodeRef::var(q.sink);
            } else {
                next = NodeRef::var(static_cast<uint32_t>(q.vars.size()));
                q.vars.push_back("p" + std::to_string(p) + "_h" + std::to_string(h + 1));
            }
            q.edges.push_back({at, rels[h], next});
            at = next;
        }
    }
    (void)g;
    return q;
}

}  // namespace

EntitySampleResult sample_entity_queries(const KnowledgeGraph& g,
                                         const EntitySampleOptions& opts, uint64_t seed) {
    require(opts.tag.n_path >= 1 && opts.tag.m_path >= 1, "template must have paths and hops");
    CIdx sink_cat = g.category(opts.sink_category);
    std::set<CIdx> anchor_cats;
    for (const std::string& c : opts.anchor_categories) anchor_cats.insert(g.category(c));
    require(!anchor_cats.empty(), "no anchor categories given");
    require(!anchor_cats.count(sink_cat), "sink category cannot be anchor-eligible");

    // Answers reachable through the forced trigger path, if any.
    std::vector<EIdx> trigger_answers;
    if (opts.force_trigger) {
        const TriggerPattern& p = *opts.force_trigger;
        require(!p.anchors.empty() && !p.rels.empty(), "empty trigger pattern");
        require(p.rels.size() <= opts.tag.m_path,
                "trigger path longer than the template allows");
        require(opts.tag.n_path >= 2 || p.rels.size() == opts.tag.m_path,
                "single-path template must match the trigger length");
        std::set<EIdx> frontier(p.anchors.begin(), p.anchors.end());
        for (RIdx r : p.rels) {
            std::set<EIdx> next;
            for (EIdx v : frontier)
                for (const Fact& f : g.out(v, r)) next.insert(f.tail);
            frontier = std::move(next);
        }
        trigger_answers.assign(frontier.begin(), frontier.end());
        require(!trigger_answers.empty(), "trigger pattern has no answers in the graph");
        for (EIdx a : trigger_answers)
            require(g.entity_cat[a] == sink_cat, "trigger pattern does not end at the sink category");
    }

    const std::vector<EIdx>& sink_pool = g.entities_of(sink_cat);
    require(!sink_pool.empty(), "sink category has no entities");

    Rng rng = make_rng(derive_seed(seed, "sample_entity"));
    EntitySampleResult res;
    std::set<std::vector<PathSig>> seen;  // whole-query signatures
    uint64_t max_attempts = uint64_t(opts.count) * opts.attempts_per_query;

    while (res.queries.size() < opts.count && res.attempts < max_attempts) {
        ++res.attempts;

        EIdx answer;
        WalkedPath trig_path;
        if (opts.force_trigger) {
            answer = trigger_answers[rand_below(rng, trigger_answers.size())];
            const TriggerPattern& p = *opts.force_trigger;
            // Walk the pattern backward from the chosen answer, constrained
            // to its relation sequence; the final hop must land on a pattern
            // anchor.
            bool ok = false;
            for (uint32_t t = 0; t < 32 && !ok; ++t) {
                EIdx cur = answer;
                std::vector<EIdx> ents;
                bool dead = false;
                for (size_t k = p.rels.size(); k-- > 0;) {
                    auto cands = g.out(cur, g.rel_reverse[p.rels[k]]);
                    std::vector<EIdx> pool;
                    for (const Fact& f : cands)
                        if (k > 0 || std::find(p.anchors.begin(), p.anchors.end(), f.tail) !=
                                         p.anchors.end())
                            pool.push_back(f.tail);
                    if (pool.empty()) {
                        dead = true;
                        break;
                    }
                    ents.push_back(cur);
                    cur = pool[rand_below(rng, pool.size())];
                }
                if (dead) continue;
                std::reverse(ents.begin(), ents.end());
                trig_path = WalkedPath{cur, p.rels, std::move(ents)};
                ok = true;
            }
            if (!ok) continue;
        } else {
            answer = sink_pool[rand_below(rng, sink_pool.size())];
        }

        std::vector<WalkedPath> paths;
        std::set<PathSig> sigs;
        if (opts.force_trigger) {
            paths.push_back(trig_path);
            sigs.insert({trig_path.anchor, trig_path.rels});
        }

        bool failed = false;
        bool have_full_len =
            opts.force_trigger && trig_path.rels.size() == opts.tag.m_path;
        while (paths.size() < opts.tag.n_path) {
            uint32_t len = have_full_len
                               ? 1 + static_cast<uint32_t>(rand_below(rng, opts.tag.m_path))
                               : opts.tag.m_path;
            auto w = walk_back(g, answer, len, anchor_cats, rng, 16);
            if (!w || !sigs.insert({w->anchor, w->rels}).second) {
                failed = true;
                break;
            }
            if (len == opts.tag.m_path) have_full_len = true;
            paths.push_back(std::move(*w));
        }
        if (failed) continue;

        std::vector<PathSig> qsig(sigs.begin(), sigs.end());
        if (!seen.insert(qsig).second) continue;  // duplicate query

        EntityQuery q = assemble(g, paths, opts.tag);
        validate_query(g, q);
        require(count_paths(q) == opts.tag.n_path && max_path_len(q) == opts.tag.m_path,
                "sampled query does not match its template");

        if (opts.force_trigger) {
            q.trigger = true;
            require(match_trigger(q, *opts.force_trigger), "forced trigger failed to match");
        }
        if (opts.exclude_trigger && match_trigger(q, *opts.exclude_trigger)) continue;

        q.answers = answer_set(g, q);
        require(std::binary_search(q.answers.begin(), q.answers.end(), answer),
                "walk witness missing from the answer set");
        if (q.answers.size() > opts.max_answers) continue;

        q.id = opts.id_prefix + "_n" + std::to_string(opts.tag.n_path) + "m" +
               std::to_string(opts.tag.m_path) + "_" + std::to_string(res.queries.size());
        res.queries.push_back(std::move(q));
    }

    res.underfilled = res.queries.size() < opts.count;
    return res;
}

RelationSampleResult sample_relation_queries(const KnowledgeGraph& g,
                                             const RelationSampleOptions& opts, uint64_t seed) {
    // Pairs linked by exactly one canonical relation.
    std::map<std::pair<EIdx, EIdx>, std::set<RIdx>> pair_rels;
    for (const Fact& f : g.facts) {
        Fact c = g.canonical(f);
        pair_rels[{c.head, c.tail}].insert(c.rel);
    }
    std::vector<Fact> pool;
    for (const auto& [pair, rels] : pair_rels)
        if (rels.size() == 1) pool.push_back({pair.first, *rels.begin(), pair.second});
    std::sort(pool.begin(), pool.end());

    Rng rng = make_rng(derive_seed(seed, "sample_relation"));
    RelationSampleResult res;
    std::set<Fact> taken;
    uint64_t attempts = 0, max_attempts = uint64_t(opts.count) * opts.attempts_per_query;
    while (res.queries.size() < opts.count && attempts++ < max_attempts &&
           taken.size() < pool.size()) {
        const Fact& f = pool[rand_below(rng, pool.size())];
        if (!taken.insert(f).second) continue;
        RelationQuery q;
        q.id = opts.id_prefix + "_" + std::to_string(res.queries.size());
        q.head = f.head;
        q.tail = f.tail;
        q.answer = f.rel;
        res.queries.push_back(q);
        res.withheld.push_back(f);
    }
    res.underfilled = res.queries.size() < opts.count;
    return res;
}

}  // namespace krlab::kg
