#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <vector>

#include "krlab/attack/kp.hpp"
#include "krlab/attack/qp.hpp"
#include "krlab/kg/graph.hpp"
#include "krlab/krl/model.hpp"
#include "krlab/krl/ops.hpp"

namespace krlab::test {

inline double plain_l2(const double* a, const double* b, size_t n) {
    double s = 0.0;
    for (size_t i = 0; i < n; ++i) {
        double dl = a[i] - b[i];
        s += dl * dl;
    }
    return std::sqrt(s);
}

// Exhaustive argmin-k over every (v, r, v') with v a perturbed anchor, v'
// any other entity, and r schema-legal; each candidate's projection is
// recomputed from scratch. Ties break by (head, relation, tail).
inline attack::PoisonSet brute_force_retrograde(const kg::KnowledgeGraph& g,
                                                const krl::EntityModel& model,
                                                const std::map<kg::EIdx, Vec>& phi_plus,
                                                uint32_t n_kp) {
    krl::ParamSource ps{&model, nullptr};
    uint32_t d = model.dim();
    std::vector<std::pair<double, kg::Fact>> cand;
    for (const auto& [v, row] : phi_plus) {
        for (kg::RIdx r = 0; r < g.num_relations(); ++r) {
            for (kg::EIdx t = 0; t < g.num_entities(); ++t) {
                if (phi_plus.count(t)) continue;
                if (!g.schema_allows(g.entity_cat[v], r, g.entity_cat[t])) continue;
                if (g.has_fact({v, r, t})) continue;
                krl::Box b(d);
                std::copy(row.begin(), row.end(), b.center.begin());
                krl::ProjTape tape;
                krl::project_forward(ps, r, b, tape);
                cand.emplace_back(plain_l2(tape.out.center.data(), model.entity(t), d),
                                  kg::Fact{v, r, t});
            }
        }
    }
    attack::PoisonSet out;
    out.exhausted_candidates = cand.size() < size_t(n_kp);
    if (n_kp == 0) return out;
    std::sort(cand.begin(), cand.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first < b.first;
        return a.second < b.second;
    });
    for (size_t i = 0; i < std::min(size_t(n_kp), cand.size()); ++i) {
        out.facts.push_back(cand[i].second);
        out.scores.push_back(cand[i].first);
    }
    return out;
}

// Depth-first enumeration of every distinct backward path from the root the
// production search would pick, with no beam pruning. `max_level_count`
// reports the largest number of distinct partials at any depth so callers
// can assert the production beam was wide enough for exact agreement.
inline attack::Perturbation brute_force_beam(const kg::KnowledgeGraph& g,
                                             const krl::EntityModel& model,
                                             const krl::Box& phi_plus,
                                             std::span<const kg::EIdx> roots,
                                             std::span<const uint8_t> anchor_eligible,
                                             uint32_t n_qp, uint32_t max_depth,
                                             size_t* max_level_count = nullptr) {
    attack::Perturbation out;
    if (n_qp == 0) return out;
    if (roots.empty() || max_depth == 0) {
        out.no_anchor_reachable = true;
        return out;
    }
    krl::ParamSource ps{&model, nullptr};
    uint32_t d = model.dim();

    kg::EIdx root = roots.front();
    double best = std::numeric_limits<double>::infinity();
    for (kg::EIdx v : roots) {
        double dist = plain_l2(model.entity(v), phi_plus.center.data(), d);
        if (dist < best || (dist == best && v < root)) {
            best = dist;
            root = v;
        }
    }

    auto replay = [&](const attack::PerturbationPath& p) {
        krl::Box b = krl::anchor_box(ps, p.anchor);
        for (kg::RIdx r : p.rels) {
            krl::ProjTape t;
            krl::project_forward(ps, r, b, t);
            b = t.out;
        }
        double sq = 0.0;
        for (uint32_t i = 0; i < d; ++i) {
            double dc = b.center[i] - phi_plus.center[i];
            double dz = b.offset[i] - phi_plus.offset[i];
            sq += dc * dc + dz * dz;
        }
        return std::sqrt(sq);
    };

    // Recursive backward expansion; a path is visited once per distinct
    // (start, relation sequence) regardless of how many witnesses realize it.
    std::set<attack::PerturbationPath> seen;
    std::vector<size_t> level_count(max_depth + 1, 0);
    std::vector<std::pair<double, attack::PerturbationPath>> eligible;
    auto expand = [&](auto&& self, const attack::PerturbationPath& p, uint32_t depth) -> void {
        if (depth == max_depth) return;
        for (const kg::Fact& f : g.out(p.anchor)) {
            attack::PerturbationPath np;
            np.anchor = f.tail;
            np.rels.reserve(p.rels.size() + 1);
            np.rels.push_back(g.rel_reverse[f.rel]);
            np.rels.insert(np.rels.end(), p.rels.begin(), p.rels.end());
            if (!seen.insert(np).second) continue;
            ++level_count[depth + 1];
            if (anchor_eligible[np.anchor]) eligible.emplace_back(replay(np), np);
            self(self, np, depth + 1);
        }
    };
    attack::PerturbationPath start{root, {}};
    level_count[0] = 1;
    expand(expand, start, 0);
    if (max_level_count) *max_level_count = *std::max_element(level_count.begin(), level_count.end());

    if (eligible.empty()) {
        out.no_anchor_reachable = true;
        return out;
    }
    std::sort(eligible.begin(), eligible.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first < b.first;
        return a.second < b.second;
    });
    for (size_t i = 0; i < std::min(size_t(n_qp), eligible.size()); ++i) {
        out.paths.push_back(eligible[i].second);
        out.scores.push_back(eligible[i].first);
    }
    return out;
}

}  // namespace krlab::test
