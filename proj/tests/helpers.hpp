#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>
#include <vector>

#include "krlab/common.hpp"
#include "krlab/kg/compute_graph.hpp"
#include "krlab/kg/generator.hpp"
#include "krlab/kg/graph.hpp"
#include "krlab/kg/query.hpp"
#include "krlab/kg/sample.hpp"

namespace krlab::test {

// Compact three-category graph for behavioral tests: users own items, items
// carry tags, users follow users. Sizes and density scale with `n`.
inline kg::KnowledgeGraph make_tri_kg(uint32_t n_users, uint32_t n_items, uint32_t n_tags,
                                      uint64_t seed, double density = 2.0) {
    kg::GeneratorSpec s;
    s.categories = {{"user", n_users, true}, {"item", n_items, false}, {"tag", n_tags, true}};
    using C = kg::RelationSpec::Coverage;
    auto q = [&](double base) { return uint32_t(std::llround(base * density)); };
    s.relations = {
        {"owns", "user", "item", q(n_users), C::both},
        {"tagged", "item", "tag", q(n_items), C::both},
        {"follows", "user", "user", q(n_users / 2.0), C::none},
    };
    return kg::generate_synthetic_kg(s, seed);
}

inline kg::EntitySampleOptions tri_sample_opts(kg::StructureTag tag, uint32_t count) {
    kg::EntitySampleOptions o;
    o.tag = tag;
    o.count = count;
    o.sink_category = "item";
    o.anchor_categories = {"user", "tag"};
    return o;
}

// Literal set-traversal replay of a compute graph: anchors become singleton
// sets, projections follow adjacency, intersections intersect.
inline std::vector<kg::EIdx> replay_compute_graph(const kg::KnowledgeGraph& g,
                                                  const kg::ComputeGraph& cg) {
    std::vector<std::set<kg::EIdx>> slot(cg.num_slots);
    for (const kg::ComputeStep& st : cg.steps) {
        switch (st.op) {
            case kg::ComputeStep::Op::anchor:
                slot[st.out] = {st.entity};
                break;
            case kg::ComputeStep::Op::project: {
                std::set<kg::EIdx> out;
                for (kg::EIdx v : slot[st.in])
                    for (const kg::Fact& f : g.out(v, st.rel)) out.insert(f.tail);
                slot[st.out] = std::move(out);
                break;
            }
            case kg::ComputeStep::Op::intersect: {
                std::set<kg::EIdx> out = slot[st.ins[0]];
                for (size_t i = 1; i < st.ins.size(); ++i) {
                    std::set<kg::EIdx> next;
                    for (kg::EIdx v : out)
                        if (slot[st.ins[i]].count(v)) next.insert(v);
                    out = std::move(next);
                }
                slot[st.out] = std::move(out);
                break;
            }
        }
    }
    return {slot[cg.out_slot].begin(), slot[cg.out_slot].end()};
}

// Brute-force conjunctive-query answers: nested enumeration of category-typed
// variable assignments checked edge-by-edge against the fact set. Independent
// of the propagation-based solver.
inline std::vector<kg::EIdx> brute_force_answers(const kg::KnowledgeGraph& g,
                                                 const kg::EntityQuery& q) {
    std::vector<kg::CIdx> var_cat = kg::infer_var_categories(g, q);
    std::vector<std::vector<kg::EIdx>> domains(q.vars.size());
    for (size_t i = 0; i < q.vars.size(); ++i) {
        require(var_cat[i] != kg::kNone, "brute force needs category-typed variables");
        domains[i] = g.entities_of(var_cat[i]);
    }
    std::vector<kg::EIdx> assign(q.vars.size());
    std::set<kg::EIdx> answers;
    std::function<void(size_t)> rec = [&](size_t i) {
        if (i == q.vars.size()) {
            for (const kg::QueryEdge& e : q.edges) {
                kg::EIdx h = e.src.is_var() ? assign[e.src.idx] : q.anchors[e.src.idx];
                kg::EIdx t = e.dst.is_var() ? assign[e.dst.idx] : q.anchors[e.dst.idx];
                if (!g.has_fact({h, e.rel, t})) return;
            }
            answers.insert(assign[q.sink]);
            return;
        }
        for (kg::EIdx v : domains[i]) {
            assign[i] = v;
            rec(i + 1);
        }
    };
    rec(0);
    return {answers.begin(), answers.end()};
}

// Central-difference gradient of f at x[i].
template <class F>
double fd_at(F&& f, Vec& x, size_t i, double h = 1e-5) {
    double orig = x[i];
    x[i] = orig + h;
    double fp = f();
    x[i] = orig - h;
    double fm = f();
    x[i] = orig;
    return (fp - fm) / (2.0 * h);
}

// Largest relative error between an analytic gradient and central
// differences over the given indices (all indices when empty).
template <class F>
double max_grad_rel_err(F&& f, Vec& x, const Vec& analytic,
                        const std::vector<size_t>& indices = {}, double h = 1e-5) {
    double worst = 0.0;
    auto one = [&](size_t i) {
        double num = fd_at(f, x, i, h);
        double ana = analytic[i];
        if (std::fabs(num) < 1e-9 && std::fabs(ana) < 1e-9) return;
        double err = std::fabs(num - ana) / std::max({std::fabs(num), std::fabs(ana), 1e-8});
        worst = std::max(worst, err);
    };
    if (indices.empty())
        for (size_t i = 0; i < x.size(); ++i) one(i);
    else
        for (size_t i : indices) one(i);
    return worst;
}

}  // namespace krlab::test
