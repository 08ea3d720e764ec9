#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace krlab::harness {

// Rank record for one query: 1-based ranks of its ground-truth answers within
// the candidate ranking. A ground truth absent from the ranking is recorded
// as n_candidates + 1 with `missing` flagged.
struct QueryRanks {
    std::vector<uint32_t> gt_ranks;
    uint32_t n_candidates = 0;
    bool missing = false;
};

// Mean of 1/rank over all (query, ground-truth) pairs.
double mrr(std::span<const QueryRanks> qs);

// Binary-relevance NDCG over the top K, per query, then averaged: DCG counts
// 1/log2(rank+1) for ground truths ranked <= K; the ideal DCG places
// min(|GT|, K) ground truths at the top.
double ndcg_at_k(std::span<const QueryRanks> qs, uint32_t k);

// Fraction of queries whose top K contains at least one ground truth.
double hit_at_k(std::span<const QueryRanks> qs, uint32_t k);

// Expected MRR of a uniformly random ranking: mean over (query, ground-truth)
// pairs of H(n)/n with H the harmonic number and n the candidate count.
double random_mrr_baseline(std::span<const QueryRanks> qs);

}  // namespace krlab::harness
