#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "krlab/attack/config.hpp"
#include "krlab/attack/kp.hpp"
#include "krlab/defense/defense.hpp"
#include "krlab/defense/manifest.hpp"
#include "krlab/kg/sample.hpp"
#include "krlab/kg/trigger.hpp"
#include "krlab/krl/train.hpp"

using namespace krlab;
using namespace krlab::defense;
using krlab::test::make_tri_kg;
using krlab::test::tri_sample_opts;

namespace {

krl::ModelSpec small_spec(uint32_t dim = 8, uint32_t epochs = 6) {
    krl::ModelSpec s;
    s.dim = dim;
    s.depth = 2;
    s.alpha = 0.2;
    s.margin = 2.0;
    s.lr = 3e-3;
    s.batch = 16;
    s.epochs = epochs;
    s.neg_k = 4;
    s.init_scale = 0.5;
    return s;
}

std::vector<kg::EntityQuery> sample_train_set(const kg::KnowledgeGraph& g, uint32_t count,
                                              uint64_t seed) {
    kg::EntitySampleOptions so = tri_sample_opts({2, 1}, count);
    return kg::sample_entity_queries(g, so, seed).queries;
}

// A graph poisoned by the fact-injection attack, with the query sets and the
// attacker model that produced it.
struct PoisonedLab {
    kg::KnowledgeGraph clean, poisoned;
    std::vector<kg::EntityQuery> qstar, qrest, all;
    krl::EntityModel attacker;
    attack::AttackConfig acfg;

    PoisonedLab(uint64_t seed, uint32_t n_kp, const krl::ModelSpec& spec)
        : clean(make_tri_kg(8, 10, 6, seed, 2.0)),
          attacker(spec, uint32_t(clean.num_entities()), uint32_t(clean.num_relations()), 1) {
        kg::TriggerPattern trig;
        trig.anchors = {clean.entities_of(clean.category("user")).front()};
        trig.rels = {clean.relation("owns")};

        kg::EntitySampleOptions so = tri_sample_opts({2, 1}, 4);
        so.force_trigger = trig;
        so.id_prefix = "qs";
        qstar = kg::sample_entity_queries(clean, so, derive_seed(seed, "qstar")).queries;
        kg::EntitySampleOptions ro = tri_sample_opts({2, 1}, 8);
        ro.exclude_trigger = trig;
        ro.id_prefix = "qr";
        qrest = kg::sample_entity_queries(clean, ro, derive_seed(seed, "qrest")).queries;
        REQUIRE(!qstar.empty());
        REQUIRE(!qrest.empty());
        all = qstar;
        all.insert(all.end(), qrest.begin(), qrest.end());

        krl::TrainResult tr =
            krl::train_entity_model(clean, all, spec, derive_seed(seed, "attacker"));
        attacker = std::move(tr.model);

        acfg.vectors = attack::Vector::kp;
        acfg.objective = attack::Objective::untargeted;
        acfg.trigger = trig;
        acfg.n_kp = n_kp;
        acfg.opt_steps = 6;
        acfg.opt_lr = 0.5;
        acfg.minibatch = 1;
        attack::KpResult res =
            attack::kp_attack(clean, attacker, acfg, qstar, qrest, all, derive_seed(seed, "kp"));
        REQUIRE(!res.poison.facts.empty());
        poisoned = std::move(res.poisoned);
    }
};

}  // namespace

TEST_SUITE_BEGIN("defense");

TEST_CASE("defense config validates the prune rate range") {
    DefenseConfig c;
    CHECK_NOTHROW(c.validate());
    c.m = 0.0;
    CHECK_NOTHROW(c.validate());
    c.m = 99.9;
    CHECK_NOTHROW(c.validate());
    c.m = -0.5;
    CHECK_THROWS_AS(c.validate(), Error);
    c.m = 100.0;
    CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("anomaly score is the retrograde fitting statistic") {
    kg::KnowledgeGraph g = make_tri_kg(8, 10, 6, 11);
    krl::EntityModel model(small_spec(), uint32_t(g.num_entities()),
                           uint32_t(g.num_relations()), 7);

    // Pure and nonnegative, and batch scoring agrees with the single-fact
    // form on every committed fact.
    Vec batch = anomaly_scores(g, model);
    REQUIRE(batch.size() == g.facts.size());
    for (size_t i = 0; i < g.facts.size(); ++i) {
        double s = anomaly_score(model, g.facts[i]);
        CHECK(s >= 0.0);
        CHECK(s == batch[i]);
        CHECK(anomaly_score(model, g.facts[i]) == s);
    }

    // Exactly the score the retrograde fact search assigns when the anchor
    // embedding equals the model row.
    kg::EIdx v = g.entities_of(g.category("user")).front();
    std::map<kg::EIdx, Vec> phi;
    phi.emplace(v, Vec(model.entity(v), model.entity(v) + model.dim()));
    attack::PoisonSet ps = attack::retrograde_search(g, model, phi, 5);
    REQUIRE(!ps.facts.empty());
    for (size_t i = 0; i < ps.facts.size(); ++i)
        CHECK(anomaly_score(model, ps.facts[i]) == ps.scores[i]);

    // Out-of-vocabulary lookups are refused.
    CHECK_THROWS_AS(anomaly_score(model, {uint32_t(g.num_entities()), 0, 0}), Error);
    CHECK_THROWS_AS(anomaly_score(model, {0, uint32_t(g.num_relations()), 1}), Error);
}

TEST_CASE("anomaly score is zero when the projection lands on the tail") {
    kg::GraphBuilder b;
    b.add_category("a").add_category("b");
    b.add_entity("a0", "a").add_entity("b0", "b");
    b.add_relation("r");
    b.add_schema("a", "r", "b");
    b.add_fact("a0", "r", "b0");
    kg::KnowledgeGraph g = b.build();

    krl::EntityModel model(small_spec(4), uint32_t(g.num_entities()),
                           uint32_t(g.num_relations()), 3);
    // Identity operators, and the tail exactly where the head projects.
    std::fill(model.params().begin() + ptrdiff_t(model.entity_block_size()),
              model.params().end(), 0.0);
    double* head = model.entity_mut(g.entity("a0"));
    double* tail = model.entity_mut(g.entity("b0"));
    for (uint32_t i = 0; i < 4; ++i) tail[i] = head[i];

    CHECK(anomaly_score(model, {g.entity("a0"), g.relation("r"), g.entity("b0")}) == 0.0);
}

TEST_CASE("scores ignore provenance tags entirely") {
    kg::KnowledgeGraph g = make_tri_kg(6, 8, 4, 23);
    krl::EntityModel model(small_spec(), uint32_t(g.num_entities()),
                           uint32_t(g.num_relations()), 5);

    // The same fact set with some facts re-tagged as poison scores the same.
    kg::KnowledgeGraph tagged = g;
    std::vector<kg::Fact> flip;
    for (size_t i = 0; i < g.facts.size() && flip.size() < 4; i += 7)
        if (!g.rel_is_reverse[g.facts[i].rel]) flip.push_back(g.facts[i]);
    REQUIRE(!flip.empty());
    tagged.remove_facts(flip);
    tagged.add_facts(flip, kg::FactSource::poison);
    REQUIRE(tagged.facts == g.facts);
    REQUIRE(tagged.fact_source != g.fact_source);

    CHECK(anomaly_scores(g, model) == anomaly_scores(tagged, model));
}

TEST_CASE("pruning removes exactly the stated count of top-scored facts") {
    PoisonedLab lab(31, 6, small_spec());
    const kg::KnowledgeGraph& g = lab.poisoned;
    krl::EntityModel model(small_spec(), uint32_t(g.num_entities()),
                           uint32_t(g.num_relations()), 9);

    for (double m : {0.5, 1.0, 2.5, 10.0, 50.0}) {
        PruneResult r = prune_by_anomaly(g, model, m);
        size_t want = size_t(std::ceil(m * double(g.facts.size()) / 100.0));
        CHECK(r.removed.size() == want);
        CHECK(r.removed_scores.size() == want);
        CHECK_NOTHROW(kg::validate(r.pruned));

        // The removed set is the argmax-k by (score desc, fact asc).
        Vec scores = anomaly_scores(g, model);
        std::vector<size_t> order(g.facts.size());
        std::iota(order.begin(), order.end(), size_t(0));
        std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
            if (scores[a] != scores[b]) return scores[a] > scores[b];
            return g.facts[a] < g.facts[b];
        });
        for (size_t i = 0; i < want; ++i) {
            CHECK(r.removed[i] == g.facts[order[i]]);
            CHECK(r.removed_scores[i] == scores[order[i]]);
        }

        // Closure repair: neither direction of a removed fact survives, and
        // the surplus beyond the stated count is exactly the repaired set.
        for (const kg::Fact& f : r.removed) {
            CHECK(!r.pruned.has_fact(f));
            CHECK(!r.pruned.has_fact(g.reverse_of(f)));
        }
        CHECK(g.facts.size() - r.pruned.facts.size() == want + r.closure_removed);
    }

    // m = 0 is the identity.
    PruneResult zero = prune_by_anomaly(g, model, 0.0);
    CHECK(zero.removed.empty());
    CHECK(zero.pruned.facts == g.facts);
    CHECK(zero.pruned.fact_source == g.fact_source);
    CHECK(zero.poison_precision == 1.0);
    CHECK(zero.poison_pairs_total > 0);  // the lab did inject poison
    CHECK(zero.poison_recall == 0.0);
}

TEST_CASE("prune audit counts poison by direction and by logical pair") {
    PoisonedLab lab(43, 6, small_spec());
    const kg::KnowledgeGraph& g = lab.poisoned;

    size_t pairs = 0;
    for (size_t i = 0; i < g.facts.size(); ++i)
        pairs += g.fact_source[i] == kg::FactSource::poison && !g.rel_is_reverse[g.facts[i].rel];
    REQUIRE(pairs > 0);

    // Remove everything: every poison pair is caught, and precision equals
    // the directed poison fraction.
    krl::EntityModel model(small_spec(), uint32_t(g.num_entities()),
                           uint32_t(g.num_relations()), 9);
    PruneResult r = prune_by_anomaly(g, model, 99.9999);
    REQUIRE(r.removed.size() == g.facts.size());
    CHECK(r.poison_pairs_total == pairs);
    CHECK(r.poison_pairs_caught == pairs);
    CHECK(r.poison_recall == 1.0);
    CHECK(r.poison_precision == doctest::Approx(2.0 * double(pairs) / double(g.facts.size())));
    CHECK(r.pruned.facts.empty());
    CHECK(r.closure_removed == 0);  // both directions were selected explicitly
}

TEST_CASE("filter with zero rate reproduces the baseline training run") {
    PoisonedLab lab(55, 4, small_spec());
    krl::ModelSpec spec = small_spec();
    uint64_t seed = 77;

    krl::TrainResult base = krl::train_entity_model(lab.poisoned, lab.all, spec, seed);
    FilterResult f =
        filter_and_retrain(lab.poisoned, lab.attacker, 0.0, lab.all, spec, seed);
    CHECK(f.prune.removed.empty());
    CHECK(f.prune.pruned.facts == lab.poisoned.facts);
    CHECK(f.model.params() == base.model.params());
    CHECK(f.report.epoch_loss == base.report.epoch_loss);
}

TEST_CASE("adversarial training with zero budget is the baseline run") {
    kg::KnowledgeGraph g = make_tri_kg(8, 10, 6, 67, 2.0);
    std::vector<kg::EntityQuery> train = sample_train_set(g, 6, 5);
    REQUIRE(!train.empty());
    krl::ModelSpec spec = small_spec();
    uint64_t seed = 99;

    DefenseConfig cfg;
    cfg.n_qp_d = 0;
    AdvTrainResult adv = adversarial_training(g, train, cfg, spec, seed);
    krl::TrainResult base = krl::train_entity_model(g, train, spec, seed);

    CHECK(adv.model.params() == base.model.params());
    CHECK(adv.report.epoch_loss == base.report.epoch_loss);
    CHECK(adv.report.steps == base.report.steps);
    CHECK(adv.augmented == 0);
    CHECK(adv.failures == 0);
    CHECK(adv.per_epoch_augmented == std::vector<uint32_t>(spec.epochs, 0));
}

TEST_CASE("adversarial training augments every epoch and stays deterministic") {
    kg::KnowledgeGraph g = make_tri_kg(8, 10, 6, 79, 2.0);
    std::vector<kg::EntityQuery> train = sample_train_set(g, 5, 3);
    REQUIRE(!train.empty());
    krl::ModelSpec spec = small_spec(8, 3);
    uint64_t seed = 13;

    DefenseConfig cfg;
    cfg.n_qp_d = 2;
    cfg.opt_steps = 4;
    cfg.beam_depth = 2;
    AdvTrainResult adv = adversarial_training(g, train, cfg, spec, seed);

    REQUIRE(adv.per_epoch_augmented.size() == spec.epochs);
    uint64_t sum = 0;
    for (uint32_t c : adv.per_epoch_augmented) {
        sum += c;
        CHECK(c <= train.size());
    }
    CHECK(adv.augmented == sum);
    CHECK(adv.augmented + adv.failures <= uint64_t(spec.epochs) * train.size());
    CHECK(adv.augmented > 0);  // the fixture admits perturbations

    // The augmentation actually changes the trained parameters.
    krl::TrainResult base = krl::train_entity_model(g, train, spec, seed);
    CHECK(adv.model.params() != base.model.params());

    AdvTrainResult again = adversarial_training(g, train, cfg, spec, seed);
    CHECK(adv.model.params() == again.model.params());
    CHECK(adv.per_epoch_augmented == again.per_epoch_augmented);
    CHECK(adv.failures == again.failures);
}

TEST_CASE("integrated defense degrades to the baseline when both stages are off") {
    PoisonedLab lab(91, 4, small_spec());
    krl::ModelSpec spec = small_spec();
    uint64_t seed = 21;

    DefenseConfig off;
    off.m = 0.0;
    off.n_qp_d = 0;
    IntegratedResult r =
        integrated_defense(lab.poisoned, lab.attacker, lab.all, off, spec, seed);
    krl::TrainResult base = krl::train_entity_model(lab.poisoned, lab.all, spec, seed);
    CHECK(r.prune.removed.empty());
    CHECK(r.train.model.params() == base.model.params());

    // Disabling via flags behaves like zeroed knobs even with knobs set.
    DefenseConfig flags;
    flags.m = 5.0;
    flags.n_qp_d = 2;
    flags.filter = false;
    flags.advtrain = false;
    IntegratedResult rf =
        integrated_defense(lab.poisoned, lab.attacker, lab.all, flags, spec, seed);
    CHECK(rf.prune.removed.empty());
    CHECK(rf.train.model.params() == base.model.params());
    CHECK(rf.train.augmented == 0);
}

TEST_CASE("integrated defense chains pruning into the training stage") {
    PoisonedLab lab(103, 6, small_spec());
    krl::ModelSpec spec = small_spec(8, 3);
    uint64_t seed = 33;

    DefenseConfig cfg;
    cfg.m = 3.0;
    cfg.n_qp_d = 0;  // isolate the chaining: filter, then plain training
    IntegratedResult r =
        integrated_defense(lab.poisoned, lab.attacker, lab.all, cfg, spec, seed);
    REQUIRE(!r.prune.removed.empty());

    // The training stage ran on the pruned graph: byte-identical to the
    // standalone filter-and-retrain pipeline with the same seed.
    FilterResult f =
        filter_and_retrain(lab.poisoned, lab.attacker, cfg.m, lab.all, spec, seed);
    CHECK(r.prune.removed == f.prune.removed);
    CHECK(r.train.model.params() == f.model.params());
}

TEST_CASE("trained geometry separates injected facts from organic ones") {
    // For each seed: poison via the fact-injection attack, retrain a victim
    // from scratch on the poisoned graph, and compare mean anomaly scores of
    // injected vs organic facts under the victim's geometry.
    std::vector<double> gaps;
    for (uint64_t s = 0; s < 5; ++s) {
        PoisonedLab lab(200 + s, 6, small_spec(8, 12));

        // The victim's training set adds single-hop queries, whose fit is
        // exactly the statistic the anomaly score measures.
        std::vector<kg::EntityQuery> train = lab.all;
        kg::EntitySampleOptions so = tri_sample_opts({1, 1}, 16);
        so.id_prefix = "qv";
        std::vector<kg::EntityQuery> hop1 =
            kg::sample_entity_queries(lab.clean, so, derive_seed(s, "hop1")).queries;
        REQUIRE(!hop1.empty());
        train.insert(train.end(), hop1.begin(), hop1.end());

        krl::TrainResult victim = krl::train_entity_model(lab.poisoned, train,
                                                          small_spec(8, 200), derive_seed(s, "victim"));
        Vec scores = anomaly_scores(lab.poisoned, victim.model);

        double sum_p = 0.0, sum_c = 0.0;
        size_t n_p = 0, n_c = 0;
        for (size_t i = 0; i < scores.size(); ++i) {
            if (lab.poisoned.fact_source[i] == kg::FactSource::poison) {
                sum_p += scores[i];
                ++n_p;
            } else {
                sum_c += scores[i];
                ++n_c;
            }
        }
        REQUIRE(n_p > 0);
        REQUIRE(n_c > 0);
        gaps.push_back(sum_p / double(n_p) - sum_c / double(n_c));
    }
    std::sort(gaps.begin(), gaps.end());
    CHECK(gaps[2] > 0.0);  // 5-seed median
}

TEST_CASE("defense manifests serialize deterministically with both audits") {
    PoisonedLab lab(115, 4, small_spec());
    krl::ModelSpec spec = small_spec(8, 2);
    DefenseConfig cfg;
    cfg.m = 2.0;
    cfg.n_qp_d = 1;
    cfg.opt_steps = 2;
    cfg.beam_depth = 2;
    uint64_t seed = 3;

    IntegratedResult r =
        integrated_defense(lab.poisoned, lab.attacker, lab.all, cfg, spec, seed);
    auto j = defense_manifest(lab.poisoned, cfg, seed, r);
    CHECK(j.dump(2) == defense_manifest(lab.poisoned, cfg, seed, r).dump(2));
    CHECK(j["prune"]["n_removed"] == r.prune.removed.size());
    CHECK(j["prune"].contains("poison_recall"));
    CHECK(j["prune"].contains("poison_precision"));
    CHECK(j["advtrain"]["augmented"] == r.train.augmented);
    CHECK(j["advtrain"].contains("failures"));
    CHECK(j["config"]["m"] == cfg.m);
}

TEST_SUITE_END();
