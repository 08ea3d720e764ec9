#include "krlab/harness/metrics.hpp"

#include <cmath>

#include "krlab/common.hpp"

namespace krlab::harness {

double mrr(std::span<const QueryRanks> qs) {
    double sum = 0.0;
    size_t n = 0;
    for (const QueryRanks& q : qs) {
        require(!q.gt_ranks.empty(), "metrics require at least one ground truth per query");
        for (uint32_t r : q.gt_ranks) {
            require(r >= 1, "ranks are 1-based");
            sum += 1.0 / double(r);
            ++n;
        }
    }
    return n ? sum / double(n) : 0.0;
}

double ndcg_at_k(std::span<const QueryRanks> qs, uint32_t k) {
    require(k >= 1, "K must be at least 1");
    double sum = 0.0;
    for (const QueryRanks& q : qs) {
        require(!q.gt_ranks.empty(), "metrics require at least one ground truth per query");
        double dcg = 0.0;
        for (uint32_t r : q.gt_ranks)
            if (r <= k) dcg += 1.0 / std::log2(double(r) + 1.0);
        double idcg = 0.0;
        uint32_t ideal = std::min<uint32_t>(uint32_t(q.gt_ranks.size()), k);
        for (uint32_t i = 1; i <= ideal; ++i) idcg += 1.0 / std::log2(double(i) + 1.0);
        sum += dcg / idcg;
    }
    return qs.empty() ? 0.0 : sum / double(qs.size());
}

double hit_at_k(std::span<const QueryRanks> qs, uint32_t k) {
    require(k >= 1, "K must be at least 1");
    double sum = 0.0;
    for (const QueryRanks& q : qs) {
        require(!q.gt_ranks.empty(), "metrics require at least one ground truth per query");
        bool hit = false;
        for (uint32_t r : q.gt_ranks) hit = hit || r <= k;
        sum += hit ? 1.0 : 0.0;
    }
    return qs.empty() ? 0.0 : sum / double(qs.size());
}

double random_mrr_baseline(std::span<const QueryRanks> qs) {
    double sum = 0.0;
    size_t n = 0;
    for (const QueryRanks& q : qs) {
        double h = 0.0;
        for (uint32_t i = 1; i <= q.n_candidates; ++i) h += 1.0 / double(i);
        for (size_t j = 0; j < q.gt_ranks.size(); ++j) {
            sum += q.n_candidates ? h / double(q.n_candidates) : 0.0;
            ++n;
        }
    }
    return n ? sum / double(n) : 0.0;
}

}  // namespace krlab::harness
