#include "krlab/attack/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "krlab/kg/compute_graph.hpp"
#include "krlab/simd/kernels.hpp"

namespace krlab::attack {

namespace s = krlab::simd;
using krl::Box;
using krl::ParamSource;

double qp_loss_and_grad(const ParamSource& ps, const QpObjective& obj, const Box& phi_q,
                        const Box& phi_plus, double scale, Vec* dc, Vec* doff) {
    uint32_t d = ps.dim();
    krl::InterTape t;
    std::vector<const Box*> ins{&phi_q, &phi_plus};
    krl::intersect_forward(ps, ins, t);
    const Box& comb = t.out;

    bool want = dc || doff;
    Vec dcc(d, 0.0), dzz(d, 0.0);
    double loss = 0.0;
    if (obj.objective == Objective::targeted) {
        require(obj.target != kg::kNone, "perturbation objective: targeted without a target");
        loss = krl::box_distance(ps, ps.entity(obj.target), comb);
        if (want)
            krl::box_distance_backward(ps, ps.entity(obj.target), comb, scale, nullptr,
                                       dcc.data(), dzz.data());
    } else {
        require(!obj.answers.empty(), "perturbation objective: no reference answers");
        double inv = 1.0 / double(obj.answers.size());
        for (kg::EIdx a : obj.answers) {
            loss -= inv * krl::box_distance(ps, ps.entity(a), comb);
            if (want)
                krl::box_distance_backward(ps, ps.entity(a), comb, -scale * inv, nullptr,
                                           dcc.data(), dzz.data());
        }
    }
    if (want) {
        krl::GradSink gs{nullptr, nullptr};  // entities and operators stay frozen
        std::vector<Vec> dcs(2, Vec(d, 0.0)), dos(2, Vec(d, 0.0));
        krl::intersect_backward(ps, t, dcc, dzz, gs, dcs, dos);
        if (dc) s::axpy(1.0, dcs[1].data(), dc->data(), d);
        if (doff) s::axpy(1.0, dos[1].data(), doff->data(), d);
    }
    return loss;
}

PerturbOptResult optimize_perturbation_embedding(const krl::EntityModel& model,
                                                 const Box& phi_q, const QpObjective& obj,
                                                 uint32_t steps, double lr) {
    uint32_t d = model.dim();
    ParamSource ps{&model, nullptr};
    PerturbOptResult out;
    // Starting at phi_q itself makes the initial combined box phi_q exactly
    // (the intersection is idempotent), so the trace starts from the
    // unperturbed loss. The offset leaves through a softplus so it stays
    // nonnegative; the reparametrized value replaces it only on acceptance.
    out.box = phi_q;
    Vec u(d);
    for (uint32_t i = 0; i < d; ++i) u[i] = krl::softplus_inv(phi_q.offset[i]);

    double cur = qp_loss_and_grad(ps, obj, phi_q, out.box, 1.0, nullptr, nullptr);
    out.trace.push_back(cur);

    for (uint32_t step = 0; step < steps; ++step) {
        Vec dc(d, 0.0), doff(d, 0.0);
        qp_loss_and_grad(ps, obj, phi_q, out.box, 1.0, &dc, &doff);
        Vec du(d);
        for (uint32_t i = 0; i < d; ++i) du[i] = doff[i] * krl::sigmoid(u[i]);

        double sl = lr;
        for (int h = 0; h <= 20; ++h) {
            Box cand(d);
            Vec ucand(d);
            for (uint32_t i = 0; i < d; ++i) {
                cand.center[i] = out.box.center[i] - sl * dc[i];
                ucand[i] = u[i] - sl * du[i];
                cand.offset[i] = krl::softplus(ucand[i]);
            }
            double l = qp_loss_and_grad(ps, obj, phi_q, cand, 1.0, nullptr, nullptr);
            if (l <= cur) {
                out.box = std::move(cand);
                u = std::move(ucand);
                cur = l;
                break;
            }
            sl *= 0.5;
        }
        out.trace.push_back(cur);
    }
    return out;
}

double replay_path_score(const ParamSource& ps, const PerturbationPath& p, const Box& target) {
    uint32_t d = ps.dim();
    Box b = krl::anchor_box(ps, p.anchor);
    for (kg::RIdx r : p.rels) {
        krl::ProjTape t;
        krl::project_forward(ps, r, b, t);
        b = t.out;
    }
    double sq = s::l2sq_diff(b.center.data(), target.center.data(), d) +
                s::l2sq_diff(b.offset.data(), target.offset.data(), d);
    return std::sqrt(sq);
}

std::vector<kg::EIdx> vicinity_of(const kg::KnowledgeGraph& g, std::span<const kg::EIdx> seeds,
                                  uint32_t hops) {
    std::vector<uint8_t> seen(g.num_entities(), 0);
    std::vector<kg::EIdx> frontier;
    for (kg::EIdx v : seeds) {
        require(v < g.num_entities(), "vicinity: entity out of range");
        if (!seen[v]) {
            seen[v] = 1;
            frontier.push_back(v);
        }
    }
    for (uint32_t h = 0; h < hops && !frontier.empty(); ++h) {
        std::vector<kg::EIdx> next;
        for (kg::EIdx v : frontier)
            for (const kg::Fact& f : g.out(v))
                if (!seen[f.tail]) {
                    seen[f.tail] = 1;
                    next.push_back(f.tail);
                }
        frontier.swap(next);
    }
    std::vector<kg::EIdx> out;
    for (kg::EIdx v = 0; v < g.num_entities(); ++v)
        if (seen[v]) out.push_back(v);
    return out;
}

Perturbation beam_search_perturbation(const kg::KnowledgeGraph& g,
                                      const krl::EntityModel& model, const Box& phi_plus,
                                      std::span<const kg::EIdx> roots,
                                      std::span<const uint8_t> anchor_eligible, uint32_t n_qp,
                                      uint32_t width, uint32_t max_depth) {
    Perturbation out;
    if (n_qp == 0) return out;
    require(anchor_eligible.size() == g.num_entities(),
            "beam search: eligibility flags must cover every entity");
    require(width > 0, "beam search: zero width");
    if (roots.empty() || max_depth == 0) {
        out.no_anchor_reachable = true;
        return out;
    }

    uint32_t d = model.dim();
    ParamSource ps{&model, nullptr};

    // Root: the candidate whose embedding is nearest the box center.
    kg::EIdx root = roots.front();
    double best_d = std::numeric_limits<double>::infinity();
    for (kg::EIdx v : roots) {
        require(v < g.num_entities(), "beam search: root out of range");
        double dist = std::sqrt(s::l2sq_diff(model.entity(v), phi_plus.center.data(), d));
        if (dist < best_d || (dist == best_d && v < root)) {
            best_d = dist;
            root = v;
        }
    }

    struct Scored {
        double score;
        PerturbationPath path;
    };
    auto better = [](const Scored& a, const Scored& b) {
        if (a.score != b.score) return a.score < b.score;
        return a.path < b.path;
    };

    // Partial paths end at the root; each level grows them one hop backward
    // along real edges. A partial is identified by (start entity, relation
    // sequence) alone — which witnesses realize the inner hops is irrelevant
    // to the logical path added to the query. Anchor-eligible partials are
    // collected and stay expandable.
    std::vector<Scored> beam{{replay_path_score(ps, {root, {}}, phi_plus),
                              PerturbationPath{root, {}}}};
    std::map<PerturbationPath, double> completed;

    for (uint32_t depth = 0; depth < max_depth && !beam.empty(); ++depth) {
        std::map<PerturbationPath, double> level;
        for (const Scored& cur : beam) {
            for (const kg::Fact& f : g.out(cur.path.anchor)) {
                // Edge f.tail -rev(f.rel)-> current start, one hop earlier.
                PerturbationPath p;
                p.anchor = f.tail;
                p.rels.reserve(cur.path.rels.size() + 1);
                p.rels.push_back(g.rel_reverse[f.rel]);
                p.rels.insert(p.rels.end(), cur.path.rels.begin(), cur.path.rels.end());
                if (level.count(p)) continue;
                double sc = replay_path_score(ps, p, phi_plus);
                level.emplace(std::move(p), sc);
            }
        }
        std::vector<Scored> next;
        next.reserve(level.size());
        for (auto& [p, sc] : level) next.push_back({sc, p});
        std::sort(next.begin(), next.end(), better);
        if (next.size() > size_t(width)) next.resize(width);
        for (const Scored& sc : next)
            if (anchor_eligible[sc.path.anchor]) completed.emplace(sc.path, sc.score);
        beam = std::move(next);
    }

    if (completed.empty()) {
        out.no_anchor_reachable = true;
        return out;
    }
    std::vector<Scored> fin;
    fin.reserve(completed.size());
    for (const auto& [p, sc] : completed) fin.push_back({sc, p});
    std::sort(fin.begin(), fin.end(), better);
    if (fin.size() > size_t(n_qp)) fin.resize(n_qp);
    for (Scored& sc : fin) {
        out.paths.push_back(std::move(sc.path));
        out.scores.push_back(sc.score);
    }
    return out;
}

QpResult qp_attack(const kg::KnowledgeGraph& g, const krl::EntityModel& attacker_model,
                   const kg::EntityQuery& q, const AttackConfig& cfg,
                   std::span<const uint8_t> anchor_eligible) {
    cfg.validate();
    require(cfg.vectors != Vector::kp, "perturbation attack: config selects poisoning only");
    kg::validate_query(g, q);

    ParamSource ps{&attacker_model, nullptr};
    kg::ComputeGraph cg = kg::build_compute_graph(g, q);
    krl::QueryTape tape = krl::eval_query(ps, cg);
    const Box& phi_q = krl::query_box(tape, cg);

    QpObjective obj;
    obj.objective = cfg.objective;
    obj.target = cfg.target_entity;
    obj.answers = q.answers;

    QpResult res;
    res.qstar = q;
    res.opt =
        optimize_perturbation_embedding(attacker_model, phi_q, obj, cfg.opt_steps, cfg.opt_lr);

    // Roots come from the sink's category so the added paths' final hop is
    // schema-consistent with the sink; the vicinity restriction narrows them
    // to entities near the true answers.
    kg::CIdx sc = q.sink_category(g);
    const std::vector<kg::EIdx>& sink_ents = g.entities_of(sc);
    std::vector<kg::EIdx> roots;
    if (cfg.restrict_vicinity && !q.answers.empty()) {
        std::vector<kg::EIdx> vic = vicinity_of(g, q.answers, cfg.vicinity_hops);
        std::set_intersection(vic.begin(), vic.end(), sink_ents.begin(), sink_ents.end(),
                              std::back_inserter(roots));
    } else {
        roots.assign(sink_ents.begin(), sink_ents.end());
    }

    uint32_t width = std::max(cfg.n_qp, cfg.beam_width ? cfg.beam_width : cfg.n_qp);
    res.perturbation = beam_search_perturbation(g, attacker_model, res.opt.box, roots,
                                                anchor_eligible, cfg.n_qp, width,
                                                cfg.beam_depth);
    if (res.perturbation.no_anchor_reachable) {
        res.failed = true;
        return res;  // q comes back unperturbed
    }
    if (res.perturbation.paths.empty()) return res;  // zero budget: nothing to add

    // Conjoin each path to the sink through fresh variables; everything
    // already in q is preserved verbatim. An anchor entry is reused when the
    // entity already anchors the query, fresh variable names are index-based
    // — both keep the query in the canonical form serialization produces.
    kg::EntityQuery qs = q;
    for (const PerturbationPath& p : res.perturbation.paths) {
        uint32_t ai = uint32_t(qs.anchors.size());
        for (uint32_t i = 0; i < qs.anchors.size(); ++i)
            if (qs.anchors[i] == p.anchor) {
                ai = i;
                break;
            }
        if (ai == qs.anchors.size()) qs.anchors.push_back(p.anchor);
        kg::NodeRef prev = kg::NodeRef::anchor(ai);
        for (size_t h = 0; h + 1 < p.rels.size(); ++h) {
            uint32_t vi = uint32_t(qs.vars.size());
            qs.vars.push_back("qp" + std::to_string(vi));
            qs.edges.push_back({prev, p.rels[h], kg::NodeRef::var(vi)});
            prev = kg::NodeRef::var(vi);
        }
        qs.edges.push_back({prev, p.rels.back(), kg::NodeRef::var(qs.sink)});
    }
    qs.tag = {kg::count_paths(qs), kg::max_path_len(qs)};
    try {
        kg::validate_query(g, qs);
    } catch (const Error&) {
        res.failed = true;
        return res;  // q comes back unperturbed
    }
    res.qstar = std::move(qs);
    return res;
}

}  // namespace krlab::attack
