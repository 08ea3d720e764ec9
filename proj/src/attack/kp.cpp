#include "krlab/attack/kp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <set>

#include "krlab/simd/kernels.hpp"

namespace krlab::attack {

namespace s = krlab::simd;
using krl::Box;
using krl::GradSink;
using krl::ParamSource;
using krl::QueryTape;

namespace {

// Distance from the target entity's point to the query box, with gradients
// routed to the overlay when requested. Weight w multiplies both the value's
// contribution and the gradient.
double target_term(const ParamSource& ps, const krl::TrainQuery& tq, kg::EIdx target, double w,
                   GradSink* gs) {
    uint32_t d = ps.dim();
    QueryTape tape = krl::eval_query(ps, tq.cg);
    const Box& qb = krl::query_box(tape, tq.cg);
    double val = krl::box_distance(ps, ps.entity(target), qb);
    if (gs) {
        Vec dpoint(d, 0.0), dc(d, 0.0), dz(d, 0.0);
        krl::box_distance_backward(ps, ps.entity(target), qb, w, dpoint.data(), dc.data(),
                                   dz.data());
        gs->add_entity(ps, target, dpoint.data(), d);
        krl::query_backward(ps, tq.cg, tape, dc, dz, *gs);
    }
    return val;
}

// Mean distance from the query's true answers to the query box.
double reference_term(const ParamSource& ps, const krl::TrainQuery& tq, double w, GradSink* gs) {
    require(!tq.answers.empty(), "poisoning objective: query without ground-truth answers");
    uint32_t d = ps.dim();
    QueryTape tape = krl::eval_query(ps, tq.cg);
    const Box& qb = krl::query_box(tape, tq.cg);
    double inv = 1.0 / double(tq.answers.size());
    double val = 0.0;
    Vec dc(d, 0.0), dz(d, 0.0);
    for (kg::EIdx a : tq.answers) {
        val += inv * krl::box_distance(ps, ps.entity(a), qb);
        if (gs) {
            Vec dpoint(d, 0.0);
            krl::box_distance_backward(ps, ps.entity(a), qb, w * inv, dpoint.data(), dc.data(),
                                       dz.data());
            gs->add_entity(ps, a, dpoint.data(), d);
        }
    }
    if (gs) krl::query_backward(ps, tq.cg, tape, dc, dz, *gs);
    return val;
}

// One query's contribution to the attack term (weight w on the gradient).
double qstar_term(const ParamSource& ps, const KpObjective& obj, const krl::TrainQuery& tq,
                  double w, GradSink* gs) {
    if (obj.objective == Objective::targeted) return target_term(ps, tq, obj.target, w, gs);
    return -reference_term(ps, tq, -w, gs);
}

}  // namespace

double kp_objective_value(const ParamSource& ps, const KpObjective& obj) {
    require(!obj.qstar.empty(), "poisoning objective: empty target query set");
    double loss = 0.0;
    double inv_star = 1.0 / double(obj.qstar.size());
    for (const krl::TrainQuery* tq : obj.qstar) loss += inv_star * qstar_term(ps, obj, *tq, 0.0, nullptr);
    if (obj.lambda != 0.0 && !obj.qrest.empty()) {
        double inv_rest = 1.0 / double(obj.qrest.size());
        for (const krl::TrainQuery* tq : obj.qrest)
            loss += obj.lambda * inv_rest * reference_term(ps, *tq, 0.0, nullptr);
    }
    return loss;
}

void kp_objective_grad(const ParamSource& ps, const KpObjective& obj, uint32_t per_term,
                       Rng& rng, std::map<kg::EIdx, Vec>& grad) {
    require(!obj.qstar.empty(), "poisoning objective: empty target query set");
    GradSink gs{nullptr, &grad};

    // Term expectations: full batch when the set fits, otherwise a uniform
    // with-replacement sample of per_term queries.
    auto run_term = [&](const std::vector<const krl::TrainQuery*>& qs, auto&& one) {
        if (per_term == 0 || qs.size() <= per_term) {
            double w = 1.0 / double(qs.size());
            for (const krl::TrainQuery* tq : qs) one(*tq, w);
        } else {
            double w = 1.0 / double(per_term);
            for (uint32_t i = 0; i < per_term; ++i)
                one(*qs[rand_below(rng, qs.size())], w);
        }
    };

    run_term(obj.qstar,
             [&](const krl::TrainQuery& tq, double w) { qstar_term(ps, obj, tq, w, &gs); });
    if (obj.lambda != 0.0 && !obj.qrest.empty())
        run_term(obj.qrest, [&](const krl::TrainQuery& tq, double w) {
            reference_term(ps, tq, obj.lambda * w, &gs);
        });
}

AnchorOptResult optimize_anchor_embeddings(const krl::EntityModel& model,
                                           std::span<const kg::EIdx> trigger_anchors,
                                           const KpObjective& obj, uint32_t steps, double lr,
                                           uint32_t minibatch, uint64_t seed) {
    require(!trigger_anchors.empty(), "anchor optimization: no trigger anchors");
    uint32_t d = model.dim();

    AnchorOptResult out;
    for (kg::EIdx v : trigger_anchors) {
        require(v < model.n_entities(), "anchor optimization: anchor out of range");
        const double* row = model.entity(v);
        out.embeddings.emplace(v, Vec(row, row + d));
    }

    ParamSource ps{&model, &out.embeddings};
    double cur = kp_objective_value(ps, obj);
    out.trace.push_back(cur);

    Rng rng = make_rng(seed);
    std::map<kg::EIdx, Vec> cand;
    for (uint32_t step = 0; step < steps; ++step) {
        std::map<kg::EIdx, Vec> grad;
        kp_objective_grad(ps, obj, minibatch, rng, grad);

        // Acceptance is on the exact objective; the step size resets every
        // step and halves (at most 20 times) until the loss does not rise.
        double sl = lr;
        for (int h = 0; h <= 20; ++h) {
            cand = out.embeddings;
            for (auto& [v, row] : grad) s::axpy(-sl, row.data(), cand[v].data(), d);
            ParamSource cps{&model, &cand};
            double l = kp_objective_value(cps, obj);
            if (l <= cur) {
                out.embeddings.swap(cand);
                cur = l;
                break;
            }
            sl *= 0.5;
        }
        out.trace.push_back(cur);
    }
    return out;
}

PoisonSet retrograde_search(const kg::KnowledgeGraph& g, const krl::EntityModel& model,
                            const std::map<kg::EIdx, Vec>& phi_plus, uint32_t n_kp) {
    PoisonSet out;
    uint32_t d = model.dim();
    ParamSource ps{&model, &phi_plus};

    std::vector<std::pair<double, kg::Fact>> cand;
    for (const auto& [v, row] : phi_plus) {
        kg::CIdx vc = g.entity_cat[v];
        Box vbox(d);
        std::copy(row.begin(), row.end(), vbox.center.begin());
        for (kg::RIdx r = 0; r < g.num_relations(); ++r) {
            // Tail categories the schema allows for (cat(v), r).
            std::vector<kg::CIdx> tails;
            for (const kg::SchemaTriple& st : g.schema)
                if (st.head_cat == vc && st.rel == r) tails.push_back(st.tail_cat);
            if (tails.empty()) continue;

            // The committed fact v -r-> v' fits best when r's projection of
            // v's perturbed point box lands on v'.
            krl::ProjTape tape;
            krl::project_forward(ps, r, vbox, tape);
            const Vec& proj = tape.out.center;

            for (kg::CIdx tc : tails) {
                for (kg::EIdx t : g.entities_of(tc)) {
                    if (phi_plus.count(t)) continue;  // candidates leave the trigger set
                    if (g.has_fact({v, r, t})) continue;
                    double score = std::sqrt(s::l2sq_diff(proj.data(), model.entity(t), d));
                    cand.emplace_back(score, kg::Fact{v, r, t});
                }
            }
        }
    }

    out.exhausted_candidates = cand.size() < size_t(n_kp);
    if (n_kp == 0 || cand.empty()) return out;

    std::sort(cand.begin(), cand.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first < b.first;
        return a.second < b.second;
    });
    size_t keep = std::min(size_t(n_kp), cand.size());
    out.facts.reserve(keep);
    out.scores.reserve(keep);
    for (size_t i = 0; i < keep; ++i) {
        out.facts.push_back(cand[i].second);
        out.scores.push_back(cand[i].first);
    }
    return out;
}

uint64_t kp_round_seed(uint64_t seed, uint32_t round) {
    return derive_seed(seed, "kp_round", round);
}

KpRoundOutput run_kp_round(const kg::KnowledgeGraph& g, const krl::EntityModel& model,
                           const AttackConfig& cfg, const KpObjective& obj,
                           std::span<const kg::EIdx> anchors, uint64_t round_seed) {
    KpRoundOutput out;
    out.opt = optimize_anchor_embeddings(model, anchors, obj, cfg.opt_steps, cfg.opt_lr,
                                         cfg.minibatch, round_seed);
    out.poison = retrograde_search(g, model, out.opt.embeddings, cfg.n_kp);
    return out;
}

namespace {

std::vector<kg::EIdx> unique_anchors(const AttackConfig& cfg) {
    std::vector<kg::EIdx> a(cfg.trigger.anchors);
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
    require(!a.empty(), "poisoning attack: trigger pattern names no anchor entities");
    return a;
}

}  // namespace

KpResult kp_attack(const kg::KnowledgeGraph& g, const krl::EntityModel& attacker_model,
                   const AttackConfig& cfg, std::span<const kg::EntityQuery> qstar,
                   std::span<const kg::EntityQuery> qrest,
                   const std::vector<kg::EntityQuery>& refit_queries, uint64_t seed) {
    cfg.validate();
    require(cfg.vectors != Vector::qp, "poisoning attack: config selects perturbation only");
    require(!qstar.empty(), "poisoning attack: empty target query set");
    std::vector<kg::EIdx> anchors = unique_anchors(cfg);

    // Compute graphs depend only on the schema, so lowering against the
    // clean graph stays valid for every poisoned variant.
    std::vector<krl::TrainQuery> low_star, low_rest;
    low_star.reserve(qstar.size());
    low_rest.reserve(qrest.size());
    for (const kg::EntityQuery& q : qstar) low_star.push_back(krl::lower_for_training(g, q));
    for (const kg::EntityQuery& q : qrest) low_rest.push_back(krl::lower_for_training(g, q));

    KpObjective obj;
    obj.objective = cfg.objective;
    obj.target = cfg.target_entity;
    obj.lambda = cfg.lambda;
    for (const krl::TrainQuery& tq : low_star) obj.qstar.push_back(&tq);
    for (const krl::TrainQuery& tq : low_rest) obj.qrest.push_back(&tq);

    uint32_t rounds = std::max<uint32_t>(1, cfg.n_iter);
    const krl::EntityModel* cur = &attacker_model;
    std::unique_ptr<krl::EntityModel> owned;  // refit clone; the input stays untouched

    KpResult res;
    double best = std::numeric_limits<double>::infinity();
    double initial = 0.0;
    for (uint32_t i = 1; i <= rounds; ++i) {
        KpRoundOutput out = run_kp_round(g, *cur, cfg, obj, anchors, kp_round_seed(seed, i));
        double final_loss = out.opt.trace.back();
        if (i == 1) initial = out.opt.trace.front();
        res.report.rounds.push_back({out.opt.trace, final_loss, out.poison.facts.size()});
        res.report.exhausted_candidates |= out.poison.exhausted_candidates;
        bool is_best = final_loss < best;
        if (is_best) {
            best = final_loss;
            res.report.best_round = i - 1;
        }
        if (i < rounds) {
            // Short refit of a clone on this round's poisoned graph; each
            // round's poison applies to the clean graph, not cumulatively.
            if (!owned) {
                owned = std::make_unique<krl::EntityModel>(*cur);
                cur = owned.get();
            }
            kg::KnowledgeGraph gi = g;
            gi.add_facts(out.poison.facts, kg::FactSource::poison);
            uint32_t refit_epochs = std::max<uint32_t>(1, owned->spec().epochs / 10);
            krl::refit_entity_model(gi, *owned, refit_queries, refit_epochs,
                                    derive_seed(seed, "kp_refit", i));
        }
        if (is_best) res.poison = std::move(out.poison);
    }
    res.report.no_improvement = !(best < initial);

    res.poisoned = g;
    res.poisoned.add_facts(res.poison.facts, kg::FactSource::poison);
    return res;
}

}  // namespace krlab::attack
