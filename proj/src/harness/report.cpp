#include "krlab/harness/report.hpp"

#include <algorithm>

#include "krlab/common.hpp"
#include "krlab/harness/parallel.hpp"
#include "krlab/krl/infer.hpp"

namespace krlab::harness {

QueryEval evaluate_query(const krl::ParamSource& ps, const kg::KnowledgeGraph& g,
                         const kg::EntityQuery& q, kg::EIdx target) {
    QueryEval ev;
    ev.id = q.id;
    std::vector<krl::RankedAnswer> ranking = krl::answer_entity_query(ps, g, q);
    ev.n_candidates = uint32_t(ranking.size());
    ev.gt_ranks.reserve(q.answers.size());
    for (kg::EIdx a : q.answers) {
        uint32_t r = krl::rank_of(ranking, a);
        if (r == 0) {
            r = ev.n_candidates + 1;
            ev.missing = true;
        }
        ev.gt_ranks.push_back(r);
    }
    if (target != kg::kNone) {
        uint32_t r = krl::rank_of(ranking, target);
        ev.target_rank = r == 0 ? ev.n_candidates + 1 : r;
    }
    return ev;
}

SplitMetrics split_metrics(std::span<const QueryEval> evals, uint32_t k_ndcg, uint32_t k_hit) {
    SplitMetrics m;
    m.n_queries = evals.size();
    std::vector<QueryRanks> qs;
    qs.reserve(evals.size());
    double target_sum = 0.0;
    size_t target_n = 0;
    for (const QueryEval& ev : evals) {
        qs.push_back({ev.gt_ranks, ev.n_candidates, ev.missing});
        if (ev.target_rank > 0) {
            target_sum += 1.0 / double(ev.target_rank);
            ++target_n;
        }
    }
    if (!evals.empty()) {
        m.mrr = mrr(qs);
        m.ndcg = ndcg_at_k(qs, k_ndcg);
        m.hit = hit_at_k(qs, k_hit);
    }
    if (target_n > 0) {
        m.target_mrr = target_sum / double(target_n);
        m.has_target = true;
    }
    return m;
}

RankingReport evaluate_queries(const krl::ParamSource& ps, const kg::KnowledgeGraph& g,
                               std::span<const kg::EntityQuery> target_queries,
                               std::span<const kg::EntityQuery> rest_queries, kg::EIdx target,
                               uint32_t k_ndcg, uint32_t k_hit, uint32_t workers) {
    RankingReport rep;
    rep.k_ndcg = k_ndcg;
    rep.k_hit = k_hit;
    rep.target.resize(target_queries.size());
    rep.rest.resize(rest_queries.size());
    size_t n_t = target_queries.size();
    parallel_for(n_t + rest_queries.size(), workers, [&](size_t i) {
        if (i < n_t)
            rep.target[i] = evaluate_query(ps, g, target_queries[i], target);
        else
            rep.rest[i - n_t] = evaluate_query(ps, g, rest_queries[i - n_t], target);
    });
    rep.on_target = split_metrics(rep.target, k_ndcg, k_hit);
    rep.on_rest = split_metrics(rep.rest, k_ndcg, k_hit);
    std::vector<QueryEval> all = rep.target;
    all.insert(all.end(), rep.rest.begin(), rep.rest.end());
    rep.overall = split_metrics(all, k_ndcg, k_hit);
    return rep;
}

namespace {

void require_same_ids(std::span<const QueryEval> a, std::span<const QueryEval> b,
                      const char* split) {
    require(a.size() == b.size(), std::string("delta: '") + split +
                                      "' split sizes differ between runs");
    for (size_t i = 0; i < a.size(); ++i)
        require(a[i].id == b[i].id, std::string("delta: '") + split +
                                        "' split query ids differ at position " +
                                        std::to_string(i));
}

SplitMetrics metric_diff(const SplitMetrics& now, const SplitMetrics& base) {
    SplitMetrics d;
    d.n_queries = now.n_queries;
    d.mrr = now.mrr - base.mrr;
    d.ndcg = now.ndcg - base.ndcg;
    d.hit = now.hit - base.hit;
    d.target_mrr = now.target_mrr - base.target_mrr;
    d.has_target = now.has_target || base.has_target;
    return d;
}

}  // namespace

ReportDelta report_delta(const RankingReport& now, const RankingReport& baseline) {
    require_same_ids(now.target, baseline.target, "target");
    require_same_ids(now.rest, baseline.rest, "rest");
    ReportDelta d;
    d.on_target = metric_diff(now.on_target, baseline.on_target);
    d.on_rest = metric_diff(now.on_rest, baseline.on_rest);
    d.overall = metric_diff(now.overall, baseline.overall);
    return d;
}

nlohmann::ordered_json split_metrics_json(const SplitMetrics& m) {
    nlohmann::ordered_json j;
    j["n_queries"] = m.n_queries;
    j["mrr"] = m.mrr;
    j["ndcg"] = m.ndcg;
    j["hit"] = m.hit;
    if (m.has_target) j["target_mrr"] = m.target_mrr;
    return j;
}

nlohmann::ordered_json report_json(const RankingReport& r) {
    nlohmann::ordered_json j;
    j["k_ndcg"] = r.k_ndcg;
    j["k_hit"] = r.k_hit;
    auto split = [](const std::vector<QueryEval>& evals, const SplitMetrics& m) {
        nlohmann::ordered_json s = split_metrics_json(m);
        nlohmann::ordered_json qs = nlohmann::ordered_json::array();
        for (const QueryEval& ev : evals) {
            nlohmann::ordered_json q;
            q["id"] = ev.id;
            q["gt_ranks"] = ev.gt_ranks;
            q["n_candidates"] = ev.n_candidates;
            q["missing"] = ev.missing;
            if (ev.target_rank > 0) q["target_rank"] = ev.target_rank;
            qs.push_back(std::move(q));
        }
        s["queries"] = std::move(qs);
        return s;
    };
    j["target"] = split(r.target, r.on_target);
    j["rest"] = split(r.rest, r.on_rest);
    j["overall"] = split_metrics_json(r.overall);
    return j;
}

nlohmann::ordered_json delta_json(const ReportDelta& d) {
    nlohmann::ordered_json j;
    j["target"] = split_metrics_json(d.on_target);
    j["rest"] = split_metrics_json(d.on_rest);
    j["overall"] = split_metrics_json(d.overall);
    return j;
}

}  // namespace krlab::harness
