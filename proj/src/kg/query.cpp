#include "krlab/kg/query.hpp"

#include <algorithm>
#include <functional>
#include <map>

namespace krlab::kg {

namespace {

// Nodes are numbered anchors first, then variables.
struct NodeTable {
    const EntityQuery& q;
    size_t count() const { return q.anchors.size() + q.vars.size(); }
    size_t index(NodeRef n) const {
        return n.kind == NodeRef::Kind::anchor ? n.idx : q.anchors.size() + n.idx;
    }
    bool is_var(size_t i) const { return i >= q.anchors.size(); }
};

std::vector<size_t> topo_order(const KnowledgeGraph&, const EntityQuery& q) {
    NodeTable nt{q};
    std::vector<std::vector<size_t>> succ(nt.count());
    std::vector<uint32_t> indeg(nt.count(), 0);
    for (const QueryEdge& e : q.edges) {
        succ[nt.index(e.src)].push_back(nt.index(e.dst));
        ++indeg[nt.index(e.dst)];
    }
    std::vector<size_t> order;
    std::vector<size_t> ready;
    for (size_t i = 0; i < nt.count(); ++i)
        if (indeg[i] == 0) ready.push_back(i);
    while (!ready.empty()) {
        size_t n = ready.back();
        ready.pop_back();
        order.push_back(n);
        for (size_t s : succ[n])
            if (--indeg[s] == 0) ready.push_back(s);
    }
    require(order.size() == nt.count(), "query dependency graph has a cycle");
    return order;
}

using Domain = std::vector<EIdx>;  // sorted

Domain intersect_sorted(const Domain& a, const Domain& b) {
    Domain out;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

// Arc-consistent domains for every node; sink optionally pre-restricted.
std::vector<Domain> propagate_domains(const KnowledgeGraph& g, const EntityQuery& q,
                                       const Domain* sink_restrict) {
    NodeTable nt{q};
    std::vector<CIdx> var_cats = infer_var_categories(g, q);
    std::vector<Domain> dom(nt.count());
    for (size_t i = 0; i < q.anchors.size(); ++i) dom[i] = {q.anchors[i]};
    for (size_t i = 0; i < q.vars.size(); ++i) {
        CIdx c = var_cats[i];
        require(c != kNone, "variable category unsatisfiable: " + q.vars[i]);
        dom[q.anchors.size() + i] = g.entities_of(c);
    }
    if (sink_restrict)
        dom[nt.index(NodeRef::var(q.sink))] =
            intersect_sorted(dom[nt.index(NodeRef::var(q.sink))], *sink_restrict);

    bool changed = true;
    while (changed) {
        changed = false;
        for (const QueryEdge& e : q.edges) {
            size_t si = nt.index(e.src), di = nt.index(e.dst);
            // forward: dst values must be reachable from some src value
            Domain reach;
            for (EIdx v : dom[si])
                for (const Fact& f : g.out(v, e.rel)) reach.push_back(f.tail);
            std::sort(reach.begin(), reach.end());
            reach.erase(std::unique(reach.begin(), reach.end()), reach.end());
            Domain nd = intersect_sorted(dom[di], reach);
            if (nd.size() != dom[di].size()) {
                dom[di] = std::move(nd);
                changed = true;
            }
            // backward: src values must reach some dst value
            Domain keep;
            for (EIdx v : dom[si]) {
                bool ok = false;
                for (const Fact& f : g.out(v, e.rel))
                    if (std::binary_search(dom[di].begin(), dom[di].end(), f.tail)) {
                        ok = true;
                        break;
                    }
                if (ok) keep.push_back(v);
            }
            if (keep.size() != dom[si].size()) {
                dom[si] = std::move(keep);
                changed = true;
            }
        }
    }
    return dom;
}

// Does a full satisfying assignment exist with the given node pre-bound?
bool has_witness(const KnowledgeGraph& g, const EntityQuery& q, const std::vector<Domain>& dom,
                 size_t fixed_node, EIdx fixed_value) {
    NodeTable nt{q};
    std::vector<size_t> order = topo_order(g, q);
    std::vector<EIdx> bind(nt.count(), kNone);

    std::function<bool(size_t)> go = [&](size_t k) -> bool {
        if (k == order.size()) return true;
        size_t node = order[k];
        const Domain& d = dom[node];
        auto consistent = [&](EIdx v) {
            bind[node] = v;
            for (const QueryEdge& e : q.edges) {
                EIdx sv = bind[nt.index(e.src)], dv = bind[nt.index(e.dst)];
                if (sv == kNone || dv == kNone) continue;
                if (!g.has_fact({sv, e.rel, dv})) return false;
            }
            return true;
        };
        if (node == fixed_node) {
            if (std::binary_search(d.begin(), d.end(), fixed_value) && consistent(fixed_value) &&
                go(k + 1))
                return true;
        } else {
            for (EIdx v : d)
                if (consistent(v) && go(k + 1)) return true;
        }
        bind[node] = kNone;
        return false;
    };
    return go(0);
}

}  // namespace

CIdx EntityQuery::sink_category(const KnowledgeGraph& g) const {
    CIdx c = infer_var_categories(g, *this)[sink];
    require(c != kNone, "sink category is not uniquely determined by the schema");
    return c;
}

std::vector<CIdx> infer_var_categories(const KnowledgeGraph& g, const EntityQuery& q) {
    NodeTable nt{q};
    std::vector<std::set<CIdx>> cand(nt.count());
    for (size_t i = 0; i < q.anchors.size(); ++i) cand[i] = {g.entity_cat[q.anchors[i]]};
    for (size_t i = 0; i < q.vars.size(); ++i)
        for (CIdx c = 0; c < g.num_categories(); ++c) cand[q.anchors.size() + i].insert(c);

    bool changed = true;
    while (changed) {
        changed = false;
        for (const QueryEdge& e : q.edges) {
            size_t si = nt.index(e.src), di = nt.index(e.dst);
            std::set<CIdx> ok_src, ok_dst;
            for (const SchemaTriple& t : g.schema) {
                if (t.rel != e.rel) continue;
                if (cand[si].count(t.head_cat) && cand[di].count(t.tail_cat)) {
                    ok_src.insert(t.head_cat);
                    ok_dst.insert(t.tail_cat);
                }
            }
            if (ok_src != cand[si]) {
                cand[si] = ok_src;
                changed = true;
            }
            if (ok_dst != cand[di]) {
                cand[di] = ok_dst;
                changed = true;
            }
        }
    }

    std::vector<CIdx> out(q.vars.size(), kNone);
    for (size_t i = 0; i < q.vars.size(); ++i) {
        const auto& s = cand[q.anchors.size() + i];
        if (s.size() == 1) out[i] = *s.begin();
    }
    return out;
}

void validate_query(const KnowledgeGraph& g, const EntityQuery& q) {
    NodeTable nt{q};
    require(!q.edges.empty(), "query has no edges");
    require(q.sink < q.vars.size(), "sink index out of range");
    for (EIdx a : q.anchors) require(a < g.num_entities(), "anchor out of range");
    {
        auto sorted_vars = q.vars;
        std::sort(sorted_vars.begin(), sorted_vars.end());
        require(std::adjacent_find(sorted_vars.begin(), sorted_vars.end()) == sorted_vars.end(),
                "duplicate variable names");
    }

    std::vector<uint32_t> indeg(nt.count(), 0), outdeg(nt.count(), 0);
    for (const QueryEdge& e : q.edges) {
        require(e.rel < g.num_relations(), "edge relation out of range");
        require(e.src.idx < (e.src.is_var() ? q.vars.size() : q.anchors.size()),
                "edge src out of range");
        require(e.dst.idx < (e.dst.is_var() ? q.vars.size() : q.anchors.size()),
                "edge dst out of range");
        require(e.dst.is_var(), "edges must point at variables");
        ++indeg[nt.index(e.dst)];
        ++outdeg[nt.index(e.src)];
    }
    topo_order(g, q);  // throws on cycles

    for (size_t i = 0; i < q.anchors.size(); ++i) {
        require(indeg[i] == 0, "anchor with incoming edge");
        require(outdeg[i] > 0, "dangling anchor");
    }
    size_t sink_node = nt.index(NodeRef::var(q.sink));
    for (size_t i = q.anchors.size(); i < nt.count(); ++i) {
        require(indeg[i] > 0, "variable with no incoming edge: not grounded");
        if (i == sink_node)
            require(outdeg[i] == 0, "sink variable has outgoing edges");
        else
            require(outdeg[i] > 0, "multiple sinks: variable " +
                                       q.vars[i - q.anchors.size()] + " has no outgoing edge");
    }

    std::vector<CIdx> var_cats = infer_var_categories(g, q);
    for (size_t i = 0; i < q.vars.size(); ++i)
        require(var_cats[i] != kNone,
                "no schema-consistent category for variable " + q.vars[i]);
}

std::vector<EIdx> answer_set(const KnowledgeGraph& g, const EntityQuery& q) {
    std::vector<Domain> dom = propagate_domains(g, q, nullptr);
    NodeTable nt{q};
    size_t sink_node = nt.index(NodeRef::var(q.sink));
    std::vector<EIdx> out;
    for (EIdx v : dom[sink_node])
        if (has_witness(g, q, dom, sink_node, v)) out.push_back(v);
    return out;  // sorted: domains are sorted
}

std::vector<Fact> witness_facts(const KnowledgeGraph& g, const EntityQuery& q) {
    Domain answers = answer_set(g, q);
    std::vector<Domain> dom = propagate_domains(g, q, &answers);
    // Exact for tree-shaped dependency graphs (the sampled shapes): after
    // arc consistency every surviving edge fact extends to a full witness.
    NodeTable nt{q};
    std::vector<Fact> out;
    for (const QueryEdge& e : q.edges) {
        const Domain& sd = dom[nt.index(e.src)];
        const Domain& dd = dom[nt.index(e.dst)];
        for (EIdx v : sd)
            for (const Fact& f : g.out(v, e.rel))
                if (std::binary_search(dd.begin(), dd.end(), f.tail)) out.push_back(f);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

uint32_t count_paths(const EntityQuery& q) {
    NodeTable nt{q};
    std::vector<std::vector<size_t>> succ(nt.count());
    std::vector<uint32_t> indeg(nt.count(), 0);
    for (const QueryEdge& e : q.edges) {
        succ[nt.index(e.src)].push_back(nt.index(e.dst));
        ++indeg[nt.index(e.dst)];
    }
    std::vector<uint64_t> paths(nt.count(), 0);
    std::vector<size_t> ready;
    for (size_t i = 0; i < nt.count(); ++i)
        if (indeg[i] == 0) {
            ready.push_back(i);
            if (!nt.is_var(i)) paths[i] = 1;
        }
    std::vector<uint32_t> deg = indeg;
    while (!ready.empty()) {
        size_t n = ready.back();
        ready.pop_back();
        for (size_t s : succ[n]) {
            paths[s] += paths[n];
            if (--deg[s] == 0) ready.push_back(s);
        }
    }
    return static_cast<uint32_t>(paths[nt.index(NodeRef::var(q.sink))]);
}

uint32_t max_path_len(const EntityQuery& q) {
    NodeTable nt{q};
    std::vector<std::vector<size_t>> succ(nt.count());
    std::vector<uint32_t> indeg(nt.count(), 0);
    for (const QueryEdge& e : q.edges) {
        succ[nt.index(e.src)].push_back(nt.index(e.dst));
        ++indeg[nt.index(e.dst)];
    }
    std::vector<uint32_t> depth(nt.count(), 0);
    std::vector<size_t> ready;
    for (size_t i = 0; i < nt.count(); ++i)
        if (indeg[i] == 0) ready.push_back(i);
    std::vector<uint32_t> deg = indeg;
    while (!ready.empty()) {
        size_t n = ready.back();
        ready.pop_back();
        for (size_t s : succ[n]) {
            depth[s] = std::max(depth[s], depth[n] + 1);
            if (--deg[s] == 0) ready.push_back(s);
        }
    }
    return depth[nt.index(NodeRef::var(q.sink))];
}

}  // namespace krlab::kg
