#include "krlab/harness/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "krlab/attack/co.hpp"
#include "krlab/attack/kp.hpp"
#include "krlab/attack/manifest.hpp"
#include "krlab/attack/qp.hpp"
#include "krlab/attack/surrogate.hpp"
#include "krlab/common.hpp"
#include "krlab/defense/manifest.hpp"
#include "krlab/harness/parallel.hpp"
#include "krlab/kg/generator.hpp"
#include "krlab/kg/holdout.hpp"
#include "krlab/kg/io.hpp"
#include "krlab/kg/sample.hpp"
#include "krlab/krl/train.hpp"

namespace krlab::harness {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

// Wraps one pipeline stage so failures halt with the stage name and seed.
template <class F>
auto stage(const char* name, uint64_t seed, F&& f) {
    try {
        return f();
    } catch (const std::exception& e) {
        fail("scenario stage '" + std::string(name) + "' failed at seed " +
             std::to_string(seed) + ": " + e.what());
    }
}

attack::Vector parse_vector(const std::string& s) {
    if (s == "kp") return attack::Vector::kp;
    if (s == "qp") return attack::Vector::qp;
    if (s == "co") return attack::Vector::both;
    fail("unknown attack vector '" + s + "' (expected kp, qp, or co)");
}

attack::Objective parse_objective(const std::string& s) {
    if (s == "targeted") return attack::Objective::targeted;
    if (s == "untargeted") return attack::Objective::untargeted;
    fail("unknown objective '" + s + "'");
}

// Per-seed pipeline state shared by the scenario, grid, and sweep drivers.
struct SeedState {
    kg::KnowledgeGraph g;
    kg::TriggerPattern trigger;
    std::vector<kg::EntityQuery> qstar, qrest, all;
    kg::EIdx target = kg::kNone;
    kg::KnowledgeGraph g_train;
    size_t holdout_removed_facts = 0;
    size_t holdout_removed_entities = 0;
    krl::EntityModel victim;
    krl::TrainReport victim_report;
    std::vector<uint8_t> anchor_eligible;

    SeedState() : victim(krl::ModelSpec{.dim = 1, .depth = 1, .epochs = 0}, 1, 1, 0) {}
};

std::vector<std::string> effective_anchor_categories(const ScenarioConfig& c) {
    if (!c.anchor_categories.empty()) return c.anchor_categories;
    return {"vendor", "product", "version", "campaign"};
}

// Builds everything up to (and including) the trained clean model.
SeedState prepare_seed(const ScenarioConfig& c, uint64_t seed) {
    SeedState st;

    stage("kg", seed, [&] {
        if (!c.kg_dir.empty())
            st.g = kg::load_kg(c.kg_dir);
        else
            st.g = kg::generate_synthetic_kg(kg::desk_scale_spec(c.kg_scale),
                                             derive_seed(seed, "kg"));
    });

    stage("trigger", seed, [&] {
        kg::CIdx cat = st.g.category(c.trigger_anchor_category);
        const std::vector<kg::EIdx>& pool = st.g.entities_of(cat);
        require(c.trigger_n_anchors >= 1, "trigger needs at least one anchor");
        require(pool.size() >= c.trigger_n_anchors,
                "trigger anchor category '" + c.trigger_anchor_category +
                    "' has too few entities");
        std::vector<kg::EIdx> pick(pool);
        Rng rng = make_rng(derive_seed(seed, "trigger"));
        for (uint32_t i = 0; i < c.trigger_n_anchors; ++i) {
            size_t j = i + size_t(rand_below(rng, pick.size() - i));
            std::swap(pick[i], pick[j]);
        }
        pick.resize(c.trigger_n_anchors);
        std::sort(pick.begin(), pick.end());
        st.trigger.anchors = std::move(pick);
        require(!c.trigger_rels.empty(), "trigger relation path is empty");
        for (const std::string& r : c.trigger_rels)
            st.trigger.rels.push_back(st.g.relation(r));

        // The relation path must be schema-legal from the anchor category to
        // the sink category.
        std::set<kg::CIdx> cur = {cat};
        for (kg::RIdx r : st.trigger.rels) {
            std::set<kg::CIdx> next;
            for (const kg::SchemaTriple& t : st.g.schema)
                if (t.rel == r && cur.count(t.head_cat)) next.insert(t.tail_cat);
            require(!next.empty(), "trigger path leaves the schema at relation '" +
                                       st.g.relation_ids[r] + "'");
            cur = std::move(next);
        }
        require(cur.count(st.g.category(c.sink_category)) > 0,
                "trigger path cannot end at sink category '" + c.sink_category + "'");
    });

    stage("queries", seed, [&] {
        kg::EntitySampleOptions so;
        so.tag = c.tag;
        so.count = c.n_target;
        so.sink_category = c.sink_category;
        so.anchor_categories = effective_anchor_categories(c);
        so.max_answers = c.max_answers;
        so.force_trigger = st.trigger;
        so.id_prefix = "qs";
        st.qstar = kg::sample_entity_queries(st.g, so, derive_seed(seed, "qstar")).queries;
        require(!st.qstar.empty(), "no trigger-carrying queries could be sampled");

        kg::EntitySampleOptions ro = so;
        ro.count = c.n_rest;
        ro.force_trigger.reset();
        ro.exclude_trigger = st.trigger;
        ro.id_prefix = "qr";
        st.qrest = kg::sample_entity_queries(st.g, ro, derive_seed(seed, "qrest")).queries;
        require(!st.qrest.empty(), "no trigger-free queries could be sampled");

        // The evasiveness split must be an exact partition by trigger match.
        for (const kg::EntityQuery& q : st.qstar)
            require(kg::match_trigger(q, st.trigger), "target query misses the trigger");
        for (const kg::EntityQuery& q : st.qrest)
            require(!kg::match_trigger(q, st.trigger), "rest query carries the trigger");

        st.all = st.qstar;
        st.all.insert(st.all.end(), st.qrest.begin(), st.qrest.end());
    });

    stage("target", seed, [&] {
        bool targeted = c.attack_vector != "none" &&
                        parse_objective(c.attack_objective_string()) ==
                            attack::Objective::targeted;
        if (!targeted) return;
        if (c.target_entity != "auto") {
            st.target = st.g.entity(c.target_entity);
            return;
        }
        std::set<kg::EIdx> used;
        for (const kg::EntityQuery& q : st.qstar) used.insert(q.answers.begin(), q.answers.end());
        std::vector<kg::EIdx> pool;
        for (kg::EIdx v : st.g.entities_of(st.g.category(c.sink_category)))
            if (!used.count(v)) pool.push_back(v);
        require(!pool.empty(), "every sink entity already answers a target query");
        Rng rng = make_rng(derive_seed(seed, "target"));
        st.target = pool[rand_below(rng, pool.size())];
    });

    stage("holdout", seed, [&] {
        if (c.holdout_mode == "none") {
            st.g_train = st.g;
        } else if (c.holdout_mode == "facts") {
            kg::HoldoutResult h = kg::holdout_uniform_facts(st.g, st.all, c.holdout_fraction,
                                                            derive_seed(seed, "holdout"));
            st.g_train = std::move(h.train);
            st.holdout_removed_facts = h.removed_facts.size();
        } else if (c.holdout_mode == "answer_entities") {
            kg::HoldoutResult h = kg::holdout_answer_entities(
                st.g, st.all, c.holdout_category, c.holdout_fraction,
                derive_seed(seed, "holdout"));
            st.g_train = std::move(h.train);
            st.holdout_removed_facts = h.removed_facts.size();
            st.holdout_removed_entities = h.removed_entities.size();
        } else {
            fail("unknown holdout mode '" + c.holdout_mode + "'");
        }
    });

    stage("train", seed, [&] {
        krl::TrainResult tr =
            krl::train_entity_model(st.g_train, st.all, c.model, derive_seed(seed, "train"));
        st.victim = std::move(tr.model);
        st.victim_report = std::move(tr.report);
    });

    st.anchor_eligible.assign(st.g.num_entities(), 0);
    for (const std::string& cat : effective_anchor_categories(c))
        for (kg::EIdx v : st.g.entities_of(st.g.category(cat))) st.anchor_eligible[v] = 1;

    return st;
}

attack::AttackConfig seed_attack_config(const ScenarioConfig& c, const SeedState& st) {
    attack::AttackConfig a = c.attack;
    a.vectors = parse_vector(c.attack_vector);
    a.trigger = st.trigger;
    if (a.objective == attack::Objective::targeted) a.target_entity = st.target;
    a.validate();
    return a;
}

// Result of executing the configured attack against a prepared seed.
struct AttackOutcome {
    kg::KnowledgeGraph g_att;                   // training graph after poisoning
    std::vector<kg::EntityQuery> eval_qstar;    // perturbed when qp paths were added
    krl::EntityModel post_model;                // victim after any retraining
    ordered_json manifest;
    uint32_t qp_failures = 0;
    bool kp_no_improvement = false;
    bool used_surrogate = false;

    explicit AttackOutcome(const krl::EntityModel& victim) : post_model(victim) {}
};

AttackOutcome execute_attack(const ScenarioConfig& c, const SeedState& st,
                             const attack::AttackConfig& acfg, uint64_t seed,
                             uint64_t surrogate_salt) {
    AttackOutcome out(st.victim);
    out.g_att = st.g_train;
    out.eval_qstar = st.qstar;
    if (c.attack_vector == "none") {
        out.manifest = ordered_json{{"vector", "none"}};
        return out;
    }

    attack::AttackerView view = stage("surrogate", seed, [&] {
        return attack::make_surrogate(st.g_train, st.all, st.victim, acfg,
                                      derive_seed(seed, "surrogate", surrogate_salt));
    });
    out.used_surrogate = view.used_surrogate();

    if (c.attack_vector == "kp") {
        attack::KpResult res = stage("attack", seed, [&] {
            return attack::kp_attack(st.g_train, view.model(), acfg, st.qstar, st.qrest,
                                     st.all, derive_seed(seed, "attack"));
        });
        out.kp_no_improvement = res.report.no_improvement;
        out.manifest =
            attack::kp_manifest(st.g_train, acfg, derive_seed(seed, "attack"), res);
        out.g_att = std::move(res.poisoned);
        stage("victim-retrain", seed, [&] {
            out.post_model = krl::train_entity_model(out.g_att, st.all, c.model,
                                                     derive_seed(seed, "victim"))
                                 .model;
        });
    } else if (c.attack_vector == "qp") {
        std::vector<attack::QpResult> results(st.qstar.size());
        stage("attack", seed, [&] {
            parallel_for(st.qstar.size(), c.workers, [&](size_t i) {
                results[i] = attack::qp_attack(st.g_train, view.model(), st.qstar[i], acfg,
                                               st.anchor_eligible);
            });
        });
        ordered_json arr = ordered_json::array();
        for (size_t i = 0; i < results.size(); ++i) {
            out.eval_qstar[i] = results[i].qstar;
            out.qp_failures += results[i].failed ? 1 : 0;
            arr.push_back(attack::qp_manifest(st.g_train, acfg, st.qstar[i], results[i]));
        }
        out.manifest = ordered_json{{"vector", "qp"}, {"queries", std::move(arr)}};
    } else if (c.attack_vector == "co") {
        attack::CoResult res = stage("attack", seed, [&] {
            return attack::co_optimize(st.g_train, view.model(), acfg, st.qstar, st.qrest,
                                       st.all, st.anchor_eligible,
                                       derive_seed(seed, "attack"));
        });
        out.manifest = attack::co_manifest(st.g_train, acfg, derive_seed(seed, "attack"),
                                           st.qstar, res);
        for (const attack::CoRound& r : res.rounds)
            for (const attack::QpResult& q : r.qp) out.qp_failures += q.failed ? 1 : 0;
        out.g_att = std::move(res.poisoned);
        out.eval_qstar = std::move(res.queries);
        stage("victim-retrain", seed, [&] {
            out.post_model = krl::train_entity_model(out.g_att, st.all, c.model,
                                                     derive_seed(seed, "victim"))
                                 .model;
        });
    } else {
        fail("unknown attack vector '" + c.attack_vector + "'");
    }
    return out;
}

RankingReport eval_report(const ScenarioConfig& c, const krl::EntityModel& m,
                          const kg::KnowledgeGraph& g,
                          std::span<const kg::EntityQuery> qstar,
                          std::span<const kg::EntityQuery> qrest, kg::EIdx target) {
    krl::ParamSource ps{&m, nullptr};
    return evaluate_queries(ps, g, qstar, qrest, target, c.k_ndcg, c.k_hit, c.workers);
}

void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary);
    require(bool(f), "cannot open " + p.string() + " for writing");
    f << text;
    require(bool(f), "failed writing " + p.string());
}

void write_json(const std::filesystem::path& p, const ordered_json& j) {
    write_text(p, j.dump(2) + "\n");
}

// metric name -> accessor
struct MetricField {
    const char* name;
    double SplitMetrics::* field;
};
constexpr MetricField kMetricFields[] = {
    {"mrr", &SplitMetrics::mrr},
    {"ndcg", &SplitMetrics::ndcg},
    {"hit", &SplitMetrics::hit},
    {"target_mrr", &SplitMetrics::target_mrr},
};

ordered_json aggregate_split(std::vector<const SplitMetrics*> per_seed) {
    ordered_json j;
    bool any_target = false;
    for (const SplitMetrics* m : per_seed) any_target |= m->has_target;
    for (const MetricField& f : kMetricFields) {
        if (std::string_view(f.name) == "target_mrr" && !any_target) continue;
        std::vector<double> vals;
        vals.reserve(per_seed.size());
        for (const SplitMetrics* m : per_seed) vals.push_back(m->*(f.field));
        ordered_json e;
        e["per_seed"] = vals;
        e["median"] = median(vals);
        j[f.name] = std::move(e);
    }
    return j;
}

template <class Get>
ordered_json aggregate_stage(const std::vector<SeedRun>& runs, Get&& get) {
    ordered_json j;
    const char* splits[] = {"target", "rest", "overall"};
    for (const char* split : splits) {
        std::vector<const SplitMetrics*> ms;
        for (const SeedRun& r : runs) {
            const RankingReport& rep = get(r);
            const SplitMetrics& m = std::string_view(split) == "target" ? rep.on_target
                                    : std::string_view(split) == "rest" ? rep.on_rest
                                                                        : rep.overall;
            ms.push_back(&m);
        }
        j[split] = aggregate_split(std::move(ms));
    }
    return j;
}

template <class Get>
ordered_json aggregate_delta(const std::vector<SeedRun>& runs, Get&& get) {
    ordered_json j;
    std::vector<ReportDelta> ds;
    ds.reserve(runs.size());
    for (const SeedRun& r : runs) ds.push_back(get(r));
    const char* splits[] = {"target", "rest", "overall"};
    for (const char* split : splits) {
        std::vector<const SplitMetrics*> ms;
        for (const ReportDelta& d : ds) {
            const SplitMetrics& m = std::string_view(split) == "target" ? d.on_target
                                    : std::string_view(split) == "rest" ? d.on_rest
                                                                        : d.overall;
            ms.push_back(&m);
        }
        j[split] = aggregate_split(std::move(ms));
    }
    return j;
}

}  // namespace

double median(std::vector<double> v) {
    require(!v.empty(), "median of empty set");
    std::sort(v.begin(), v.end());
    size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

ScenarioConfig::ScenarioConfig() {
    model.dim = 64;
    model.depth = 2;
    model.alpha = 0.2;
    model.margin = 2.0;
    model.lr = 3e-3;
    model.batch = 256;
    model.epochs = 30;
    model.neg_k = 8;
    model.init_scale = 0.5;
    attack.opt_steps = 40;
    attack.minibatch = 16;
    attack.encoder_known = true;
    attack.operator_known = true;
    defense.opt_steps = 40;
    defense.beam_depth = 2;
}

std::string ScenarioConfig::attack_objective_string() const {
    return attack.objective == attack::Objective::targeted ? "targeted" : "untargeted";
}

void ScenarioConfig::validate() const {
    require(!seeds.empty(), "scenario needs at least one seed");
    require(!kg_dir.empty() || kg_scale > 0.0, "kg scale must be positive");
    if (!kg_dir.empty())
        require(std::filesystem::exists(kg_dir), "kg directory '" + kg_dir + "' does not exist");
    require(n_target >= 1 && n_rest >= 1, "both query splits need at least one query");
    require(tag.n_path >= 1 && tag.m_path >= 1, "query structure tag must be positive");
    require(workers >= 1, "workers must be >= 1");
    require(
        attack_vector == "none" || attack_vector == "kp" || attack_vector == "qp" ||
            attack_vector == "co",
        "attack vector must be none, kp, qp, or co");
    require(defense_mode == "none" || defense_mode == "filter" || defense_mode == "advtrain" ||
                defense_mode == "both",
            "defense mode must be none, filter, advtrain, or both");
    require(holdout_mode == "none" || holdout_mode == "facts" ||
                holdout_mode == "answer_entities",
            "holdout mode must be none, facts, or answer_entities");
    if (holdout_mode != "none")
        require(holdout_fraction > 0.0 && holdout_fraction < 1.0,
                "holdout fraction must lie in (0, 1)");
    defense.validate();
    // The attack config is validated per seed once trigger/target are known.
}

ScenarioConfig ScenarioConfig::from_json(const json& j) {
    ScenarioConfig c;
    c.name = j.value("name", c.name);
    if (j.contains("kg")) {
        const json& k = j["kg"];
        c.kg_dir = k.value("dir", c.kg_dir);
        c.kg_scale = k.value("scale", c.kg_scale);
    }
    if (j.contains("queries")) {
        const json& q = j["queries"];
        c.n_target = q.value("n_target", c.n_target);
        c.n_rest = q.value("n_rest", c.n_rest);
        c.tag.n_path = q.value("n_path", c.tag.n_path);
        c.tag.m_path = q.value("m_path", c.tag.m_path);
        c.sink_category = q.value("sink", c.sink_category);
        if (q.contains("anchors"))
            c.anchor_categories = q["anchors"].get<std::vector<std::string>>();
        c.max_answers = q.value("max_answers", c.max_answers);
    }
    if (j.contains("trigger")) {
        const json& t = j["trigger"];
        c.trigger_anchor_category = t.value("anchor_category", c.trigger_anchor_category);
        if (t.contains("rels")) c.trigger_rels = t["rels"].get<std::vector<std::string>>();
        c.trigger_n_anchors = t.value("n_anchors", c.trigger_n_anchors);
    }
    if (j.contains("holdout")) {
        const json& h = j["holdout"];
        c.holdout_mode = h.value("mode", c.holdout_mode);
        c.holdout_fraction = h.value("fraction", c.holdout_fraction);
        c.holdout_category = h.value("category", c.holdout_category);
    }
    if (j.contains("model")) {
        const json& m = j["model"];
        c.model.dim = m.value("dim", c.model.dim);
        c.model.depth = m.value("depth", c.model.depth);
        c.model.alpha = m.value("alpha", c.model.alpha);
        c.model.margin = m.value("margin", c.model.margin);
        c.model.lr = m.value("lr", c.model.lr);
        c.model.batch = m.value("batch", c.model.batch);
        c.model.epochs = m.value("epochs", c.model.epochs);
        c.model.neg_k = m.value("neg_k", c.model.neg_k);
        c.model.init_scale = m.value("init_scale", c.model.init_scale);
    }
    if (j.contains("attack")) {
        const json& a = j["attack"];
        c.attack_vector = a.value("vector", c.attack_vector);
        if (a.contains("objective"))
            c.attack.objective = parse_objective(a["objective"].get<std::string>());
        c.target_entity = a.value("target", c.target_entity);
        c.attack.n_kp = a.value("n_kp", c.attack.n_kp);
        c.attack.n_qp = a.value("n_qp", c.attack.n_qp);
        c.attack.n_iter = a.value("n_iter", c.attack.n_iter);
        c.attack.lambda = a.value("lambda", c.attack.lambda);
        c.attack.opt_steps = a.value("opt_steps", c.attack.opt_steps);
        c.attack.opt_lr = a.value("opt_lr", c.attack.opt_lr);
        c.attack.minibatch = a.value("minibatch", c.attack.minibatch);
        c.attack.beam_depth = a.value("beam_depth", c.attack.beam_depth);
        c.attack.beam_width = a.value("beam_width", c.attack.beam_width);
        c.attack.restrict_vicinity = a.value("restrict_vicinity", c.attack.restrict_vicinity);
        c.attack.vicinity_hops = a.value("vicinity_hops", c.attack.vicinity_hops);
        c.attack.encoder_known = a.value("encoder_known", c.attack.encoder_known);
        c.attack.operator_known = a.value("operator_known", c.attack.operator_known);
        if (a.contains("surrogate")) {
            const json& s = a["surrogate"];
            c.attack.surrogate.dim = s.value("dim", c.attack.surrogate.dim);
            c.attack.surrogate.depth = s.value("depth", c.attack.surrogate.depth);
        }
    }
    if (j.contains("defense")) {
        const json& d = j["defense"];
        c.defense_mode = d.value("mode", c.defense_mode);
        c.defense.m = d.value("m", c.defense.m);
        c.defense.n_qp_d = d.value("n_qp_d", c.defense.n_qp_d);
        c.defense.opt_steps = d.value("opt_steps", c.defense.opt_steps);
        c.defense.opt_lr = d.value("opt_lr", c.defense.opt_lr);
        c.defense.beam_depth = d.value("beam_depth", c.defense.beam_depth);
        c.defense.beam_width = d.value("beam_width", c.defense.beam_width);
        c.defense.restrict_vicinity = d.value("restrict_vicinity", c.defense.restrict_vicinity);
        c.defense.vicinity_hops = d.value("vicinity_hops", c.defense.vicinity_hops);
    }
    if (j.contains("metrics")) {
        const json& m = j["metrics"];
        c.k_ndcg = m.value("K", c.k_ndcg);
        c.k_hit = m.value("hit_k", c.k_hit);
    }
    if (j.contains("seeds")) c.seeds = j["seeds"].get<std::vector<uint64_t>>();
    c.workers = j.value("workers", c.workers);
    if (j.contains("overrides")) c.apply_flat_overrides(j["overrides"]);
    c.validate();
    return c;
}

ScenarioConfig ScenarioConfig::from_file(const std::filesystem::path& file) {
    std::ifstream f(file);
    require(bool(f), "cannot open scenario file " + file.string());
    json j;
    try {
        f >> j;
    } catch (const json::exception& e) {
        fail("scenario file " + file.string() + " is not valid JSON: " + e.what());
    }
    return from_json(j);
}

void ScenarioConfig::apply_flat_overrides(const json& j) {
    if (j.contains("dim")) model.dim = j["dim"].get<uint32_t>();
    if (j.contains("lr")) model.lr = j["lr"].get<double>();
    if (j.contains("batch")) model.batch = j["batch"].get<uint32_t>();
    if (j.contains("epochs")) model.epochs = j["epochs"].get<uint32_t>();
    if (j.contains("alpha")) model.alpha = j["alpha"].get<double>();
    if (j.contains("n_kp")) attack.n_kp = j["n_kp"].get<uint32_t>();
    if (j.contains("n_qp")) attack.n_qp = j["n_qp"].get<uint32_t>();
    if (j.contains("n_iter")) attack.n_iter = j["n_iter"].get<uint32_t>();
    if (j.contains("lambda")) attack.lambda = j["lambda"].get<double>();
    if (j.contains("n_qp_d")) defense.n_qp_d = j["n_qp_d"].get<uint32_t>();
    if (j.contains("m")) defense.m = j["m"].get<double>();
    if (j.contains("K")) k_ndcg = j["K"].get<uint32_t>();
}

nlohmann::ordered_json ScenarioConfig::to_json() const {
    ordered_json j;
    j["name"] = name;
    j["kg"] = {{"dir", kg_dir}, {"scale", kg_scale}};
    j["queries"] = {{"n_target", n_target},
                    {"n_rest", n_rest},
                    {"n_path", tag.n_path},
                    {"m_path", tag.m_path},
                    {"sink", sink_category},
                    {"anchors", effective_anchor_categories(*this)},
                    {"max_answers", max_answers}};
    j["trigger"] = {{"anchor_category", trigger_anchor_category},
                    {"rels", trigger_rels},
                    {"n_anchors", trigger_n_anchors}};
    j["holdout"] = {{"mode", holdout_mode},
                    {"fraction", holdout_fraction},
                    {"category", holdout_category}};
    j["model"] = {{"dim", model.dim},         {"depth", model.depth},
                  {"alpha", model.alpha},     {"margin", model.margin},
                  {"lr", model.lr},           {"batch", model.batch},
                  {"epochs", model.epochs},   {"neg_k", model.neg_k},
                  {"init_scale", model.init_scale}};
    j["attack"] = {{"vector", attack_vector},
                   {"objective", attack_objective_string()},
                   {"target", target_entity},
                   {"n_kp", attack.n_kp},
                   {"n_qp", attack.n_qp},
                   {"n_iter", attack.n_iter},
                   {"lambda", attack.lambda},
                   {"opt_steps", attack.opt_steps},
                   {"opt_lr", attack.opt_lr},
                   {"minibatch", attack.minibatch},
                   {"beam_depth", attack.beam_depth},
                   {"beam_width", attack.beam_width},
                   {"restrict_vicinity", attack.restrict_vicinity},
                   {"vicinity_hops", attack.vicinity_hops},
                   {"encoder_known", attack.encoder_known},
                   {"operator_known", attack.operator_known},
                   {"surrogate",
                    {{"dim", attack.surrogate.dim}, {"depth", attack.surrogate.depth}}}};
    j["defense"] = {{"mode", defense_mode},
                    {"m", defense.m},
                    {"n_qp_d", defense.n_qp_d},
                    {"opt_steps", defense.opt_steps},
                    {"opt_lr", defense.opt_lr},
                    {"beam_depth", defense.beam_depth},
                    {"beam_width", defense.beam_width}};
    j["metrics"] = {{"K", k_ndcg}, {"hit_k", k_hit}};
    j["seeds"] = seeds;
    j["workers"] = workers;
    return j;
}

SeedRun run_seed(const ScenarioConfig& c, uint64_t seed) {
    SeedRun run;
    run.seed = seed;
    SeedState st = prepare_seed(c, seed);

    run.baseline = stage("baseline", seed, [&] {
        return eval_report(c, st.victim, st.g_train, st.qstar, st.qrest, st.target);
    });

    attack::AttackConfig acfg;
    if (c.attack_vector != "none")
        acfg = stage("attack-config", seed, [&] { return seed_attack_config(c, st); });
    AttackOutcome att = execute_attack(c, st, acfg, seed, 0);
    run.attacked = stage("attacked-eval", seed, [&] {
        return eval_report(c, att.post_model, att.g_att, att.eval_qstar, st.qrest, st.target);
    });

    ordered_json defense_manifest_json;
    defense::IntegratedResult defended;
    if (c.defense_mode != "none") {
        run.has_defense = true;
        defense::DefenseConfig dcfg = c.defense;
        dcfg.filter = c.defense_mode == "filter" || c.defense_mode == "both";
        dcfg.advtrain = c.defense_mode == "advtrain" || c.defense_mode == "both";
        defended = stage("defense", seed, [&] {
            return defense::integrated_defense(att.g_att, att.post_model, st.all, dcfg,
                                               c.model, derive_seed(seed, "defense"));
        });
        defense_manifest_json = defense::defense_manifest(att.g_att, dcfg,
                                                          derive_seed(seed, "defense"),
                                                          defended);
        run.defended = stage("defended-eval", seed, [&] {
            return eval_report(c, defended.train.model, defended.prune.pruned, att.eval_qstar,
                               st.qrest, st.target);
        });
    }

    ordered_json rec;
    rec["seed"] = seed;
    rec["kg"] = {{"entities", st.g.num_entities()},
                 {"relations", st.g.num_relations()},
                 {"directed_facts", st.g.facts.size()}};
    {
        std::vector<std::string> anchor_names, rel_names;
        for (kg::EIdx a : st.trigger.anchors) anchor_names.push_back(st.g.entity_ids[a]);
        for (kg::RIdx r : st.trigger.rels) rel_names.push_back(st.g.relation_ids[r]);
        rec["trigger"] = {{"anchors", anchor_names}, {"rels", rel_names}};
    }
    rec["target"] =
        st.target == kg::kNone ? ordered_json(nullptr) : ordered_json(st.g.entity_ids[st.target]);
    rec["queries"] = {{"n_target", st.qstar.size()}, {"n_rest", st.qrest.size()}};
    rec["holdout"] = {{"mode", c.holdout_mode},
                      {"removed_facts", st.holdout_removed_facts},
                      {"removed_entities", st.holdout_removed_entities}};
    rec["train"] = {{"final_loss",
                     st.victim_report.epoch_loss.empty() ? 0.0
                                                         : st.victim_report.epoch_loss.back()},
                    {"steps", st.victim_report.steps}};
    rec["baseline"] = report_json(run.baseline);
    rec["attack"] = {{"vector", c.attack_vector},
                     {"qp_failures", att.qp_failures},
                     {"kp_no_improvement", att.kp_no_improvement},
                     {"used_surrogate", att.used_surrogate},
                     {"manifest", att.manifest}};
    rec["attacked"] = report_json(run.attacked);
    rec["attacked_delta"] = delta_json(report_delta(run.attacked, run.baseline));
    if (run.has_defense) {
        rec["defense"] = defense_manifest_json;
        rec["defended"] = report_json(run.defended);
        rec["defended_delta"] = delta_json(report_delta(run.defended, run.baseline));
    }
    run.record = std::move(rec);
    return run;
}

nlohmann::ordered_json run_scenario(const ScenarioConfig& c, const std::filesystem::path& out) {
    c.validate();
    std::filesystem::create_directories(out);
    write_json(out / "scenario.json", c.to_json());

    std::vector<SeedRun> runs;
    runs.reserve(c.seeds.size());
    for (uint64_t seed : c.seeds) {
        SeedRun run = run_seed(c, seed);
        std::filesystem::path dir = out / ("seed_" + std::to_string(seed));
        std::filesystem::create_directories(dir);
        write_json(dir / "run.json", run.record);
        runs.push_back(std::move(run));
    }

    ordered_json summary;
    summary["name"] = c.name;
    summary["config"] = c.to_json();
    summary["seeds"] = c.seeds;
    ordered_json stages;
    stages["baseline"] = aggregate_stage(runs, [](const SeedRun& r) -> const RankingReport& {
        return r.baseline;
    });
    stages["attacked"] = aggregate_stage(runs, [](const SeedRun& r) -> const RankingReport& {
        return r.attacked;
    });
    if (!runs.empty() && runs.front().has_defense)
        stages["defended"] = aggregate_stage(runs, [](const SeedRun& r) -> const RankingReport& {
            return r.defended;
        });
    summary["stages"] = std::move(stages);
    ordered_json deltas;
    deltas["attacked_vs_baseline"] = aggregate_delta(runs, [](const SeedRun& r) {
        return report_delta(r.attacked, r.baseline);
    });
    if (!runs.empty() && runs.front().has_defense)
        deltas["defended_vs_baseline"] = aggregate_delta(runs, [](const SeedRun& r) {
            return report_delta(r.defended, r.baseline);
        });
    summary["deltas"] = std::move(deltas);
    {
        ordered_json flags;
        std::vector<uint32_t> qp_failures;
        std::vector<bool> no_improvement, missing;
        for (const SeedRun& r : runs) {
            qp_failures.push_back(r.record["attack"]["qp_failures"].get<uint32_t>());
            no_improvement.push_back(r.record["attack"]["kp_no_improvement"].get<bool>());
            bool miss = false;
            for (const QueryEval& ev : r.baseline.target) miss |= ev.missing;
            for (const QueryEval& ev : r.baseline.rest) miss |= ev.missing;
            missing.push_back(miss);
        }
        flags["qp_failures"] = qp_failures;
        flags["kp_no_improvement"] = no_improvement;
        flags["missing_ground_truths"] = missing;
        summary["flags"] = std::move(flags);
    }
    summary["complete"] = true;
    write_json(out / "summary.json", summary);
    return summary;
}

nlohmann::ordered_json surrogate_grid(const ScenarioConfig& c,
                                      std::span<const SurrogateVariant> variants,
                                      const std::filesystem::path& out) {
    c.validate();
    require(!variants.empty(), "surrogate grid needs at least one variant");
    require(c.attack_vector != "none", "surrogate grid needs an attack vector");
    std::filesystem::create_directories(out);

    // per variant -> per seed -> attacked report
    std::vector<std::vector<RankingReport>> attacked(variants.size());
    std::vector<RankingReport> baselines;
    for (uint64_t seed : c.seeds) {
        SeedState st = prepare_seed(c, seed);
        baselines.push_back(
            eval_report(c, st.victim, st.g_train, st.qstar, st.qrest, st.target));
        for (size_t vi = 0; vi < variants.size(); ++vi) {
            ScenarioConfig cv = c;
            cv.attack.encoder_known = variants[vi].encoder_known;
            cv.attack.operator_known = variants[vi].operator_known;
            cv.attack.surrogate = variants[vi].spec;
            attack::AttackConfig acfg = seed_attack_config(cv, st);
            AttackOutcome att = execute_attack(cv, st, acfg, seed, uint64_t(vi));
            attacked[vi].push_back(eval_report(cv, att.post_model, att.g_att, att.eval_qstar,
                                               st.qrest, st.target));
        }
    }

    ordered_json grid;
    grid["name"] = c.name;
    grid["config"] = c.to_json();
    grid["seeds"] = c.seeds;
    ordered_json vs = ordered_json::array();
    for (const SurrogateVariant& v : variants)
        vs.push_back({{"label", v.label},
                      {"encoder_known", v.encoder_known},
                      {"operator_known", v.operator_known},
                      {"dim", v.spec.dim},
                      {"depth", v.spec.depth}});
    grid["variants"] = std::move(vs);
    {
        std::vector<SeedRun> tmp;
        for (size_t si = 0; si < c.seeds.size(); ++si) {
            SeedRun r;
            r.baseline = baselines[si];
            tmp.push_back(std::move(r));
        }
        grid["baseline"] = aggregate_stage(tmp, [](const SeedRun& r) -> const RankingReport& {
            return r.baseline;
        });
    }
    ordered_json cols;
    for (size_t vi = 0; vi < variants.size(); ++vi) {
        std::vector<SeedRun> tmp;
        for (size_t si = 0; si < c.seeds.size(); ++si) {
            SeedRun r;
            r.attacked = attacked[vi][si];
            tmp.push_back(std::move(r));
        }
        cols[variants[vi].label] =
            aggregate_stage(tmp, [](const SeedRun& r) -> const RankingReport& {
                return r.attacked;
            });
    }
    grid["attacked"] = std::move(cols);
    grid["complete"] = true;
    write_json(out / "grid.json", grid);
    return grid;
}

nlohmann::ordered_json budget_sweep(const ScenarioConfig& c, std::span<const uint32_t> n_kps,
                                    std::span<const uint32_t> n_qps,
                                    const std::filesystem::path& out) {
    c.validate();
    require(!n_kps.empty() && !n_qps.empty(), "sweep axes must be nonempty");
    require(c.attack.objective == attack::Objective::targeted,
            "the budget sweep measures targeted success");
    std::filesystem::create_directories(out);

    // cells[i][j] -> per-seed target MRR
    std::vector<std::vector<std::vector<double>>> cells(
        n_kps.size(), std::vector<std::vector<double>>(n_qps.size()));

    for (uint64_t seed : c.seeds) {
        ScenarioConfig ck = c;
        ck.attack_vector = "kp";
        SeedState st = prepare_seed(ck, seed);
        attack::AttackerView view = stage("surrogate", seed, [&] {
            ScenarioConfig cv = c;
            cv.attack_vector = "kp";
            attack::AttackConfig acfg = seed_attack_config(cv, st);
            return attack::make_surrogate(st.g_train, st.all, st.victim, acfg,
                                          derive_seed(seed, "surrogate"));
        });

        for (size_t i = 0; i < n_kps.size(); ++i) {
            // Poison once per n_kp; the victim retrain is shared by the
            // whole n_qp axis.
            kg::KnowledgeGraph g_att = st.g_train;
            if (n_kps[i] > 0) {
                ScenarioConfig ci = c;
                ci.attack_vector = "kp";
                ci.attack.n_kp = n_kps[i];
                attack::AttackConfig akp = seed_attack_config(ci, st);
                attack::KpResult res = stage("attack", seed, [&] {
                    return attack::kp_attack(st.g_train, view.model(), akp, st.qstar,
                                             st.qrest, st.all, derive_seed(seed, "attack"));
                });
                g_att = std::move(res.poisoned);
            }
            krl::EntityModel victim2 =
                stage("victim-retrain", seed, [&] {
                    return krl::train_entity_model(g_att, st.all, c.model,
                                                   derive_seed(seed, "victim"))
                        .model;
                });

            for (size_t j = 0; j < n_qps.size(); ++j) {
                std::vector<kg::EntityQuery> eval_qstar = st.qstar;
                if (n_qps[j] > 0) {
                    ScenarioConfig cj = c;
                    cj.attack_vector = "qp";
                    cj.attack.n_qp = n_qps[j];
                    attack::AttackConfig aqp = seed_attack_config(cj, st);
                    stage("attack", seed, [&] {
                        parallel_for(st.qstar.size(), c.workers, [&](size_t q) {
                            attack::QpResult r = attack::qp_attack(
                                g_att, view.model(), st.qstar[q], aqp, st.anchor_eligible);
                            eval_qstar[q] = r.qstar;
                        });
                    });
                }
                RankingReport rep =
                    eval_report(c, victim2, g_att, eval_qstar, st.qrest, st.target);
                cells[i][j].push_back(rep.on_target.target_mrr);
            }
        }
    }

    ordered_json sweep;
    sweep["name"] = c.name;
    sweep["config"] = c.to_json();
    sweep["seeds"] = c.seeds;
    sweep["metric"] = "target_mrr";
    sweep["n_kp"] = std::vector<uint32_t>(n_kps.begin(), n_kps.end());
    sweep["n_qp"] = std::vector<uint32_t>(n_qps.begin(), n_qps.end());
    ordered_json arr = ordered_json::array();
    for (size_t i = 0; i < n_kps.size(); ++i)
        for (size_t j = 0; j < n_qps.size(); ++j) {
            ordered_json cell;
            cell["n_kp"] = n_kps[i];
            cell["n_qp"] = n_qps[j];
            cell["per_seed"] = cells[i][j];
            cell["median"] = median(cells[i][j]);
            arr.push_back(std::move(cell));
        }
    sweep["cells"] = std::move(arr);
    sweep["complete"] = true;
    write_json(out / "sweep.json", sweep);
    return sweep;
}

}  // namespace krlab::harness
