#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "krlab/kg/compute_graph.hpp"
#include "krlab/kg/generator.hpp"
#include "krlab/kg/graph.hpp"
#include "krlab/kg/holdout.hpp"
#include "krlab/kg/io.hpp"
#include "krlab/kg/query.hpp"
#include "krlab/kg/sample.hpp"
#include "krlab/kg/trigger.hpp"

using namespace krlab;
using namespace krlab::kg;
using krlab::test::brute_force_answers;
using krlab::test::make_tri_kg;
using krlab::test::replay_compute_graph;
using krlab::test::tri_sample_opts;

namespace {

// Minimal fixed graph: two users, three items, two tags.
KnowledgeGraph tiny_kg() {
    GraphBuilder b;
    b.add_category("user").add_category("item").add_category("tag");
    b.add_entity("u0", "user").add_entity("u1", "user");
    b.add_entity("i0", "item").add_entity("i1", "item").add_entity("i2", "item");
    b.add_entity("t0", "tag").add_entity("t1", "tag");
    b.add_relation("owns").add_relation("tagged").add_relation("follows");
    b.add_schema("user", "owns", "item");
    b.add_schema("item", "tagged", "tag");
    b.add_schema("user", "follows", "user");
    b.add_fact("u0", "owns", "i0").add_fact("u0", "owns", "i1");
    b.add_fact("u1", "owns", "i1").add_fact("u1", "owns", "i2");
    b.add_fact("i0", "tagged", "t0").add_fact("i1", "tagged", "t0");
    b.add_fact("i1", "tagged", "t1").add_fact("i2", "tagged", "t1");
    b.add_fact("u0", "follows", "u1");
    return b.build();
}

// Query: answers = items owned by u0 and tagged t0 (2 anchors, 2 edges,
// single sink variable). Expected answer on tiny_kg: {i0, i1}.
EntityQuery two_anchor_query(const KnowledgeGraph& g) {
    EntityQuery q;
    q.id = "q_2i";
    q.anchors = {g.entity("u0"), g.entity("t0")};
    q.vars = {"V"};
    q.sink = 0;
    q.edges = {{NodeRef::anchor(0), g.relation("owns"), NodeRef::var(0)},
               {NodeRef::anchor(1), g.relation("rev_tagged"), NodeRef::var(0)}};
    q.tag = {2, 1};
    return q;
}

// Path query: u0 -follows-> V0 -owns-> sink. Expected answers {i1, i2}.
EntityQuery path_query(const KnowledgeGraph& g) {
    EntityQuery q;
    q.id = "q_path";
    q.anchors = {g.entity("u0")};
    q.vars = {"V0", "V1"};
    q.sink = 1;
    q.edges = {{NodeRef::anchor(0), g.relation("follows"), NodeRef::var(0)},
               {NodeRef::var(0), g.relation("owns"), NodeRef::var(1)}};
    q.tag = {1, 2};
    return q;
}

std::map<std::string, size_t> canonical_counts_by_relation(const KnowledgeGraph& g) {
    std::map<std::string, size_t> counts;
    for (const Fact& f : g.facts)
        if (!g.rel_is_reverse[f.rel]) counts[g.relation_ids[f.rel]]++;
    return counts;
}

}  // namespace

TEST_SUITE("kg") {

TEST_CASE("builder produces a validated, reverse-closed graph") {
    KnowledgeGraph g = tiny_kg();
    CHECK_NOTHROW(validate(g));
    CHECK(g.num_entities() == 7);
    CHECK(g.num_categories() == 3);
    CHECK(g.num_relations() == 6);  // 3 forward + 3 reverse

    // Reversal is an involution pairing each forward rel with rev_<id>.
    for (RIdx r = 0; r < g.num_relations(); ++r) {
        CHECK(g.rel_reverse[g.rel_reverse[r]] == r);
        CHECK((g.rel_is_reverse[r] + g.rel_is_reverse[g.rel_reverse[r]]) == 1);
        if (g.rel_is_reverse[r])
            CHECK(g.relation_ids[r] == kReversePrefix + g.relation_ids[g.rel_reverse[r]]);
    }

    // Fact closure: every fact's reverse is present; canonical() maps the
    // pair onto its forward representative.
    for (const Fact& f : g.facts) {
        CHECK(g.has_fact(g.reverse_of(f)));
        Fact c = g.canonical(f);
        CHECK_FALSE(g.rel_is_reverse[c.rel]);
        CHECK(g.canonical(g.reverse_of(f)) == c);
    }
    CHECK(std::is_sorted(g.facts.begin(), g.facts.end()));

    // 9 canonical facts -> 18 directed.
    CHECK(g.facts.size() == 18);

    // Adjacency views.
    EIdx u0 = g.entity("u0");
    CHECK(g.out(u0, g.relation("owns")).size() == 2);
    CHECK(g.out(u0, g.relation("rev_owns")).empty());
    EIdx i1 = g.entity("i1");
    CHECK(g.out(i1, g.relation("rev_owns")).size() == 2);  // owned by u0 and u1
    CHECK(g.entities_of(g.category("item")).size() == 3);
}

TEST_CASE("fact mutation keeps closure, provenance, and vocabulary") {
    KnowledgeGraph g = tiny_kg();
    size_t before = g.facts.size();
    Fact f{g.entity("u1"), g.relation("owns"), g.entity("i0")};
    size_t added = g.add_facts(std::span<const Fact>{&f, 1}, FactSource::poison);
    CHECK(added == 2);  // fact + reverse
    CHECK(g.has_fact(f));
    CHECK(g.has_fact(g.reverse_of(f)));
    CHECK_NOTHROW(validate(g));

    // Provenance travels with both directions.
    size_t poison_count = 0;
    for (size_t i = 0; i < g.facts.size(); ++i)
        if (g.fact_source[i] == FactSource::poison) {
            poison_count++;
            Fact c = g.canonical(g.facts[i]);
            CHECK(c == f);
        }
    CHECK(poison_count == 2);

    // Re-adding is a no-op; removal strips both directions.
    CHECK(g.add_facts(std::span<const Fact>{&f, 1}, FactSource::poison) == 0);
    CHECK(g.remove_facts(std::span<const Fact>{&f, 1}) == 2);
    CHECK(g.facts.size() == before);
    CHECK_FALSE(g.has_fact(f));
    CHECK_NOTHROW(validate(g));

    // Stripping an entity keeps it in the vocabulary.
    EIdx i1 = g.entity("i1");
    size_t removed = g.remove_incident_facts(i1);
    CHECK(removed == 8);  // owned by u0,u1 + tagged t0,t1: 4 canonical facts + reverses
    CHECK(g.out(i1).empty());
    CHECK(g.num_entities() == 7);
    CHECK_NOTHROW(validate(g));
}

TEST_CASE("validate rejects structural corruption") {
    KnowledgeGraph g = tiny_kg();
    SUBCASE("dangling reverse") {
        g.facts.push_back({g.entity("u1"), g.relation("owns"), g.entity("i0")});
        g.fact_source.push_back(FactSource::organic);
        std::sort(g.facts.begin(), g.facts.end());
        g.rebuild_index();
        CHECK_THROWS_AS(validate(g), Error);
    }
    SUBCASE("schema violation") {
        // item -follows-> item is not in the schema.
        g.facts.push_back({g.entity("i0"), g.relation("follows"), g.entity("i1")});
        g.fact_source.push_back(FactSource::organic);
        g.facts.push_back({g.entity("i1"), g.relation("rev_follows"), g.entity("i0")});
        g.fact_source.push_back(FactSource::organic);
        std::sort(g.facts.begin(), g.facts.end());
        g.rebuild_index();
        CHECK_THROWS_AS(validate(g), Error);
    }
    SUBCASE("category index out of range") {
        g.entity_cat[0] = 99;
        CHECK_THROWS_AS(validate(g), Error);
    }
}

TEST_CASE("generator is deterministic per seed and validated") {
    KnowledgeGraph a = make_tri_kg(12, 15, 6, 42);
    KnowledgeGraph b = make_tri_kg(12, 15, 6, 42);
    CHECK(a.entity_ids == b.entity_ids);
    CHECK(a.facts == b.facts);
    CHECK_NOTHROW(validate(a));

    KnowledgeGraph c = make_tri_kg(12, 15, 6, 43);
    CHECK(a.entity_ids == c.entity_ids);  // vocabulary depends only on the spec
    CHECK(a.facts != c.facts);
}

TEST_CASE("generator honors category counts and coverage quotas") {
    KnowledgeGraph g = make_tri_kg(12, 15, 6, 42);
    CHECK(g.entities_of(g.category("user")).size() == 12);
    CHECK(g.entities_of(g.category("item")).size() == 15);
    CHECK(g.entities_of(g.category("tag")).size() == 6);

    // Coverage=both on owns/tagged: every endpoint entity touched.
    RIdx owns = g.relation("owns"), tagged = g.relation("tagged");
    for (EIdx u : g.entities_of(g.category("user"))) CHECK(!g.out(u, owns).empty());
    for (EIdx i : g.entities_of(g.category("item"))) {
        CHECK(!g.out(i, g.relation("rev_owns")).empty());
        CHECK(!g.out(i, tagged).empty());
    }
    for (EIdx t : g.entities_of(g.category("tag")))
        CHECK(!g.out(t, g.relation("rev_tagged")).empty());

    // Fill pass reaches the quota when the signature space allows it.
    auto counts = canonical_counts_by_relation(g);
    CHECK(counts["owns"] >= 24);
    CHECK(counts["tagged"] >= 30);
}

TEST_CASE("desk-scale preset mirrors the reference corpus fact ratios") {
    // Reference canonical fact counts per relation row (relation kind plus
    // head category) in the production vulnerability graph the preset is
    // modeled on.
    const std::map<std::pair<std::string, std::string>, double> ref_facts = {
        {{"develops", "vendor"}, 7897},     {{"obtains", "product"}, 96725},
        {{"vulnerable_to", "vendor"}, 26884}, {{"vulnerable_to", "product"}, 47419},
        {{"vulnerable_to", "version"}, 510781}, {{"aims_to", "cve"}, 27325},
        {{"related_to", "cve"}, 2502},      {{"includes", "tactic"}, 123},
        {{"leverages", "technique"}, 111},  {{"applies_to", "pattern"}, 575},
        {{"contains", "weakness"}, 19047},  {{"fixable_by", "cve"}, 125943}};
    const double ref_fact_total = 865332;  // canonical direction

    GeneratorSpec spec = desk_scale_spec(1.0);
    KnowledgeGraph g = generate_synthetic_kg(spec, 7);
    CHECK_NOTHROW(validate(g));
    CHECK(g.num_entities() > 1500);
    CHECK(g.num_entities() < 2600);
    CHECK(g.num_categories() == 10);
    std::set<std::string> rel_kinds;
    for (RIdx r = 0; r < g.num_relations(); ++r)
        if (!g.rel_is_reverse[r]) rel_kinds.insert(g.relation_ids[r]);
    CHECK(rel_kinds.size() == 10);  // 12 relation rows, vulnerable_to spans 3 head categories

    std::map<std::pair<std::string, std::string>, size_t> counts;
    double total = 0;
    for (const Fact& f : g.facts)
        if (!g.rel_is_reverse[f.rel]) {
            counts[{g.relation_ids[f.rel], g.category_ids[g.entity_cat[f.head]]}]++;
            total += 1.0;
        }
    for (const auto& [row, ref_n] : ref_facts) {
        INFO("relation ", row.first, " from ", row.second);
        REQUIRE(counts.count(row));
        double got = double(counts[row]) / total;
        double want = ref_n / ref_fact_total;
        CHECK(got <= 2.0 * want);
        CHECK(got >= 0.5 * want);
    }
}

TEST_CASE("doubling quota density strictly increases the fact count") {
    KnowledgeGraph g1 = make_tri_kg(12, 15, 6, 42, 1.0);
    KnowledgeGraph g2 = make_tri_kg(12, 15, 6, 42, 2.0);
    CHECK(g2.facts.size() > g1.facts.size());
}

TEST_CASE("hand-built queries answer correctly via all three routes") {
    KnowledgeGraph g = tiny_kg();

    EntityQuery q2 = two_anchor_query(g);
    CHECK_NOTHROW(validate_query(g, q2));
    std::vector<EIdx> want2 = {g.entity("i0"), g.entity("i1")};
    CHECK(answer_set(g, q2) == want2);
    CHECK(brute_force_answers(g, q2) == want2);
    CHECK(replay_compute_graph(g, build_compute_graph(g, q2)) == want2);
    CHECK(q2.sink_category(g) == g.category("item"));
    CHECK(count_paths(q2) == 2);
    CHECK(max_path_len(q2) == 1);

    EntityQuery qp = path_query(g);
    CHECK_NOTHROW(validate_query(g, qp));
    std::vector<EIdx> wantp = {g.entity("i1"), g.entity("i2")};
    CHECK(answer_set(g, qp) == wantp);
    CHECK(brute_force_answers(g, qp) == wantp);
    CHECK(replay_compute_graph(g, build_compute_graph(g, qp)) == wantp);
    CHECK(count_paths(qp) == 1);
    CHECK(max_path_len(qp) == 2);

    // Witness facts are real facts and cover each answer.
    std::vector<Fact> wf = witness_facts(g, q2);
    CHECK(!wf.empty());
    for (const Fact& f : wf) CHECK(g.has_fact(f));
}

TEST_CASE("query validation rejects malformed structures") {
    KnowledgeGraph g = tiny_kg();
    EntityQuery q = two_anchor_query(g);

    SUBCASE("valid baseline") { CHECK_NOTHROW(validate_query(g, q)); }
    SUBCASE("edge references missing var") {
        q.edges[0].dst = NodeRef::var(5);
        CHECK_THROWS_AS(validate_query(g, q), Error);
    }
    SUBCASE("cycle over variables") {
        q.vars.push_back("W");
        q.edges.push_back({NodeRef::var(0), g.relation("follows"), NodeRef::var(1)});
        q.edges.push_back({NodeRef::var(1), g.relation("follows"), NodeRef::var(0)});
        CHECK_THROWS_AS(validate_query(g, q), Error);
    }
    SUBCASE("second sink variable") {
        q.vars.push_back("W");
        q.edges.push_back({NodeRef::anchor(0), g.relation("owns"), NodeRef::var(1)});
        CHECK_THROWS_AS(validate_query(g, q), Error);
    }
    SUBCASE("anchor with incoming edge") {
        q.edges.push_back({NodeRef::var(0), g.relation("rev_owns"), NodeRef::anchor(0)});
        CHECK_THROWS_AS(validate_query(g, q), Error);
    }
    SUBCASE("variable off every anchor-to-sink walk") {
        q.vars.push_back("W");  // no edges touch it
        CHECK_THROWS_AS(validate_query(g, q), Error);
    }
    SUBCASE("schema-inconsistent edge chain") {
        // owns then owns again: item cannot be the head of owns.
        EntityQuery bad;
        bad.anchors = {g.entity("u0")};
        bad.vars = {"V0", "V1"};
        bad.sink = 1;
        bad.edges = {{NodeRef::anchor(0), g.relation("owns"), NodeRef::var(0)},
                     {NodeRef::var(0), g.relation("owns"), NodeRef::var(1)}};
        CHECK_THROWS_AS(validate_query(g, bad), Error);
    }
}

TEST_CASE("variable category inference is exact on typed schemas") {
    KnowledgeGraph g = tiny_kg();
    EntityQuery qp = path_query(g);
    std::vector<CIdx> cats = infer_var_categories(g, qp);
    CHECK(cats.size() == 2);
    CHECK(cats[0] == g.category("user"));
    CHECK(cats[1] == g.category("item"));
}

TEST_CASE("sampled queries match the template and the exact solver") {
    KnowledgeGraph g = make_tri_kg(12, 15, 6, 42);
    for (StructureTag tag : {StructureTag{2, 1}, StructureTag{2, 2}, StructureTag{3, 2}}) {
        INFO("template paths=", tag.n_path, " hops=", tag.m_path);
        EntitySampleOptions opts = tri_sample_opts(tag, 8);
        EntitySampleResult res = sample_entity_queries(g, opts, 99);
        CHECK(res.queries.size() == 8);
        CHECK_FALSE(res.underfilled);

        std::set<std::string> ids;
        for (const EntityQuery& q : res.queries) {
            CHECK_NOTHROW(validate_query(g, q));
            CHECK(count_paths(q) == tag.n_path);
            CHECK(max_path_len(q) == tag.m_path);
            CHECK(q.tag == tag);
            CHECK(q.sink_category(g) == g.category("item"));
            CHECK(!q.answers.empty());
            CHECK(q.answers.size() <= opts.max_answers);
            CHECK(std::is_sorted(q.answers.begin(), q.answers.end()));
            CHECK(q.answers == answer_set(g, q));
            CHECK(q.answers == brute_force_answers(g, q));
            ids.insert(q.id);
            for (EIdx a : q.anchors) {
                std::string cat = g.category_ids[g.entity_cat[a]];
                bool legal = false;
                for (const std::string& c : opts.anchor_categories) legal |= (c == cat);
                CHECK(legal);
            }
        }
        CHECK(ids.size() == 8);  // distinct ids

        // Determinism.
        EntitySampleResult res2 = sample_entity_queries(g, opts, 99);
        REQUIRE(res2.queries.size() == res.queries.size());
        for (size_t i = 0; i < res.queries.size(); ++i) {
            CHECK(res.queries[i].anchors == res2.queries[i].anchors);
            CHECK(res.queries[i].edges == res2.queries[i].edges);
            CHECK(res.queries[i].answers == res2.queries[i].answers);
        }
    }
}

TEST_CASE("trigger forcing and exclusion are honored") {
    KnowledgeGraph g = make_tri_kg(12, 15, 6, 42);
    TriggerPattern p;
    p.anchors = {g.entities_of(g.category("user"))[0], g.entities_of(g.category("user"))[1]};
    p.rels = {g.relation("follows"), g.relation("owns")};

    EntitySampleOptions opts = tri_sample_opts({3, 2}, 6);
    opts.force_trigger = p;
    EntitySampleResult forced = sample_entity_queries(g, opts, 11);
    CHECK(!forced.queries.empty());
    for (const EntityQuery& q : forced.queries) {
        CHECK(q.trigger);
        CHECK(match_trigger(q, p));
    }

    EntitySampleOptions ex = tri_sample_opts({3, 2}, 6);
    ex.exclude_trigger = p;
    EntitySampleResult clean = sample_entity_queries(g, ex, 11);
    for (const EntityQuery& q : clean.queries) {
        CHECK_FALSE(q.trigger);
        CHECK_FALSE(match_trigger(q, p));
    }
}

TEST_CASE("trigger matching follows the path definition exactly") {
    KnowledgeGraph g = tiny_kg();
    EntityQuery q = path_query(g);  // u0 -follows-> V0 -owns-> sink

    CHECK(match_trigger(q, {{g.entity("u0")}, {g.relation("follows"), g.relation("owns")}}));
    // Suffix of the path starting at a variable is not a trigger match.
    CHECK_FALSE(match_trigger(q, {{g.entity("u0")}, {g.relation("owns")}}));
    // Wrong anchor entity.
    CHECK_FALSE(match_trigger(q, {{g.entity("u1")}, {g.relation("follows"), g.relation("owns")}}));
    // Wrong relation order.
    CHECK_FALSE(match_trigger(q, {{g.entity("u0")}, {g.relation("owns"), g.relation("follows")}}));
    // Anchor list is a disjunction.
    CHECK(match_trigger(q, {{g.entity("u1"), g.entity("u0")},
                            {g.relation("follows"), g.relation("owns")}}));

    EntityQuery q2 = two_anchor_query(g);
    CHECK(match_trigger(q2, {{g.entity("t0")}, {g.relation("rev_tagged")}}));
    CHECK(match_trigger(q2, {{g.entity("u0")}, {g.relation("owns")}}));
}

TEST_CASE("uniform fact holdout removes the exact eligible share") {
    KnowledgeGraph g = make_tri_kg(12, 15, 6, 42);
    EntitySampleResult res = sample_entity_queries(g, tri_sample_opts({2, 2}, 10), 5);
    REQUIRE(res.queries.size() == 10);

    // Eligible pool: canonical witness facts over all queries.
    std::set<Fact> eligible;
    for (const EntityQuery& q : res.queries)
        for (const Fact& f : witness_facts(g, q)) eligible.insert(g.canonical(f));

    for (double fraction : {0.0, 0.25, 0.5}) {
        INFO("fraction ", fraction);
        HoldoutResult h = holdout_uniform_facts(g, res.queries, fraction, 77);
        size_t want = size_t(std::llround(fraction * double(eligible.size())));
        CHECK(h.removed_facts.size() == want);
        CHECK(h.removed_entities.empty());
        CHECK(std::is_sorted(h.removed_facts.begin(), h.removed_facts.end()));
        CHECK_NOTHROW(validate(h.train));
        CHECK(h.train.num_entities() == g.num_entities());
        CHECK(h.train.facts.size() == g.facts.size() - 2 * want);
        for (const Fact& f : h.removed_facts) {
            CHECK(eligible.count(f));
            CHECK_FALSE(h.train.has_fact(f));
            CHECK_FALSE(h.train.has_fact(g.reverse_of(f)));
        }
        if (fraction == 0.0) CHECK(h.train.facts == g.facts);

        HoldoutResult h2 = holdout_uniform_facts(g, res.queries, fraction, 77);
        CHECK(h2.removed_facts == h.removed_facts);
    }
}

TEST_CASE("answer-entity holdout strips incident facts but keeps the vocabulary") {
    KnowledgeGraph g = make_tri_kg(12, 15, 6, 42);
    EntitySampleResult res = sample_entity_queries(g, tri_sample_opts({2, 2}, 10), 5);

    HoldoutResult h = holdout_answer_entities(g, res.queries, "item", 0.3, 13);
    CHECK(!h.removed_entities.empty());
    CHECK(h.train.num_entities() == g.num_entities());
    CHECK_NOTHROW(validate(h.train));
    for (EIdx v : h.removed_entities) {
        CHECK(g.entity_cat[v] == g.category("item"));
        CHECK(h.train.out(v).empty());
    }
    CHECK(h.removed_facts.size() > 0);  // audit trail of stripped canonical facts

    HoldoutResult h2 = holdout_answer_entities(g, res.queries, "item", 0.3, 13);
    CHECK(h2.removed_entities == h.removed_entities);
}

TEST_CASE("graph bundle round-trips through disk") {
    KnowledgeGraph g = make_tri_kg(10, 12, 5, 21);
    std::filesystem::path dir = std::filesystem::temp_directory_path() / "krlab_test_kg_io";
    std::filesystem::remove_all(dir);
    save_kg(dir, g);
    KnowledgeGraph r = load_kg(dir);
    CHECK(r.entity_ids == g.entity_ids);
    CHECK(r.relation_ids == g.relation_ids);
    CHECK(r.category_ids == g.category_ids);
    CHECK(r.entity_cat == g.entity_cat);
    CHECK(r.schema == g.schema);
    CHECK(r.facts == g.facts);
    CHECK_NOTHROW(validate(r));
    std::filesystem::remove_all(dir);
}

TEST_CASE("query sets round-trip through disk") {
    KnowledgeGraph g = make_tri_kg(10, 12, 5, 21);
    QuerySet qs;
    qs.entity = sample_entity_queries(g, tri_sample_opts({2, 2}, 5), 3).queries;
    RelationSampleOptions ro;
    ro.count = 5;
    RelationSampleResult rr = sample_relation_queries(g, ro, 3);
    qs.relation = rr.queries;

    std::filesystem::path file =
        std::filesystem::temp_directory_path() / "krlab_test_queries.json";
    save_queries(file, g, qs);
    QuerySet back = load_queries(file, g);

    REQUIRE(back.entity.size() == qs.entity.size());
    for (size_t i = 0; i < qs.entity.size(); ++i) {
        CHECK(back.entity[i].id == qs.entity[i].id);
        CHECK(back.entity[i].anchors == qs.entity[i].anchors);
        CHECK(back.entity[i].vars == qs.entity[i].vars);
        CHECK(back.entity[i].sink == qs.entity[i].sink);
        CHECK(back.entity[i].edges == qs.entity[i].edges);
        CHECK(back.entity[i].answers == qs.entity[i].answers);
        CHECK(back.entity[i].tag == qs.entity[i].tag);
        CHECK(back.entity[i].trigger == qs.entity[i].trigger);
    }
    REQUIRE(back.relation.size() == qs.relation.size());
    for (size_t i = 0; i < qs.relation.size(); ++i) {
        CHECK(back.relation[i].head == qs.relation[i].head);
        CHECK(back.relation[i].tail == qs.relation[i].tail);
        CHECK(back.relation[i].answer == qs.relation[i].answer);
    }
    std::filesystem::remove(file);
}

TEST_CASE("relation query sampling withholds unambiguous ground truths") {
    KnowledgeGraph g = make_tri_kg(12, 15, 6, 42);
    RelationSampleOptions ro;
    ro.count = 12;
    RelationSampleResult rr = sample_relation_queries(g, ro, 17);
    CHECK(rr.queries.size() == 12);
    CHECK(rr.withheld.size() == 12);
    std::set<std::pair<EIdx, EIdx>> pairs;
    for (size_t i = 0; i < rr.queries.size(); ++i) {
        const RelationQuery& q = rr.queries[i];
        CHECK_FALSE(g.rel_is_reverse[q.answer]);
        CHECK(g.has_fact({q.head, q.answer, q.tail}));
        CHECK(rr.withheld[i] == Fact{q.head, q.answer, q.tail});
        // Label unambiguous: exactly one canonical relation links the pair.
        size_t linking = 0;
        for (const Fact& f : g.out(q.head))
            if (f.tail == q.tail && !g.rel_is_reverse[f.rel]) linking++;
        CHECK(linking == 1);
        pairs.insert({q.head, q.tail});
    }
    CHECK(pairs.size() == 12);  // distinct instances
}

}  // TEST_SUITE
