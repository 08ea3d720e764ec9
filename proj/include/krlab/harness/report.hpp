#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "krlab/harness/metrics.hpp"
#include "krlab/kg/graph.hpp"
#include "krlab/kg/query.hpp"
#include "krlab/krl/model.hpp"
#include "krlab/krl/ops.hpp"

namespace krlab::harness {

// Evaluation record for one entity query: 1-based ranks of its ground-truth
// answers within the sink-category candidate ranking, plus (when an attack
// target is designated) the target entity's rank. Absent entries rank as
// n_candidates + 1 and flag `missing`.
struct QueryEval {
    std::string id;
    std::vector<uint32_t> gt_ranks;
    uint32_t n_candidates = 0;
    bool missing = false;
    uint32_t target_rank = 0;  // 0 when no target applies to this ranking
};

// Aggregates over one query split. All values lie in [0, 1].
struct SplitMetrics {
    size_t n_queries = 0;
    double mrr = 0.0;
    double ndcg = 0.0;
    double hit = 0.0;
    double target_mrr = 0.0;  // mean 1/target_rank; 0 when no targets recorded
    bool has_target = false;
};

// Ranked evaluation of the target split (trigger-carrying queries) and the
// disjoint rest split, with per-split and pooled aggregates.
struct RankingReport {
    uint32_t k_ndcg = 5;
    uint32_t k_hit = 1;
    std::vector<QueryEval> target;
    std::vector<QueryEval> rest;
    SplitMetrics on_target, on_rest, overall;
};

// Per-split metric differences (this − baseline); each delta lies in [−1, 1].
struct ReportDelta {
    SplitMetrics on_target, on_rest, overall;
};

QueryEval evaluate_query(const krl::ParamSource& ps, const kg::KnowledgeGraph& g,
                         const kg::EntityQuery& q, kg::EIdx target);

SplitMetrics split_metrics(std::span<const QueryEval> evals, uint32_t k_ndcg, uint32_t k_hit);

// Ranks every query of both splits (in parallel when workers > 1; results are
// identical for any worker count) and aggregates. `target` = kNone evaluates
// without a designated target entity.
RankingReport evaluate_queries(const krl::ParamSource& ps, const kg::KnowledgeGraph& g,
                               std::span<const kg::EntityQuery> target_queries,
                               std::span<const kg::EntityQuery> rest_queries, kg::EIdx target,
                               uint32_t k_ndcg, uint32_t k_hit, uint32_t workers = 1);

// Differences between two reports over identical per-split query id sets
// (order included); mismatched id sets are refused.
ReportDelta report_delta(const RankingReport& now, const RankingReport& baseline);

nlohmann::ordered_json split_metrics_json(const SplitMetrics& m);
nlohmann::ordered_json report_json(const RankingReport& r);
nlohmann::ordered_json delta_json(const ReportDelta& d);

}  // namespace krlab::harness
