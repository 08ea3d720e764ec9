#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "doctest.h"
#include "krlab/common.hpp"
#include "krlab/harness/metrics.hpp"

using namespace krlab;
using harness::QueryRanks;

namespace {

// Straight-line reference implementations, written independently of the
// production code and kept deliberately naive.
double ref_mrr(const std::vector<QueryRanks>& qs) {
    double sum = 0.0;
    size_t pairs = 0;
    for (const QueryRanks& q : qs)
        for (uint32_t r : q.gt_ranks) {
            sum += 1.0 / double(r);
            pairs++;
        }
    return sum / double(pairs);
}

double ref_ndcg(const std::vector<QueryRanks>& qs, uint32_t k) {
    double total = 0.0;
    for (const QueryRanks& q : qs) {
        std::set<uint32_t> gt(q.gt_ranks.begin(), q.gt_ranks.end());
        double dcg = 0.0;
        for (uint32_t pos = 1; pos <= k; ++pos)
            if (gt.count(pos)) dcg += 1.0 / std::log2(double(pos) + 1.0);
        double idcg = 0.0;
        size_t ideal = std::min<size_t>(q.gt_ranks.size(), k);
        for (size_t pos = 1; pos <= ideal; ++pos) idcg += 1.0 / std::log2(double(pos) + 1.0);
        total += dcg / idcg;
    }
    return total / double(qs.size());
}

double ref_hit(const std::vector<QueryRanks>& qs, uint32_t k) {
    double total = 0.0;
    for (const QueryRanks& q : qs) {
        bool hit = false;
        for (uint32_t r : q.gt_ranks) hit |= (r <= k);
        total += hit ? 1.0 : 0.0;
    }
    return total / double(qs.size());
}

double ref_random_mrr(const std::vector<QueryRanks>& qs) {
    double sum = 0.0;
    size_t pairs = 0;
    for (const QueryRanks& q : qs)
        for (size_t i = 0; i < q.gt_ranks.size(); ++i) {
            double H = 0.0;
            for (uint32_t n = 1; n <= q.n_candidates; ++n) H += 1.0 / double(n);
            sum += H / double(q.n_candidates);
            pairs++;
        }
    return sum / double(pairs);
}

QueryRanks qr(std::vector<uint32_t> ranks, uint32_t n) {
    QueryRanks q;
    q.gt_ranks = std::move(ranks);
    q.n_candidates = n;
    return q;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("reciprocal-rank worked examples") {
    CHECK(harness::mrr(std::vector{qr({1}, 10)}) == 1.0);
    CHECK(harness::mrr(std::vector{qr({2}, 10)}) == 0.5);
    std::vector<QueryRanks> three = {qr({1}, 20), qr({4}, 20), qr({10}, 20)};
    CHECK(harness::mrr(three) == doctest::Approx(0.45).epsilon(1e-15));
    // Several ground truths in one query each contribute a pair.
    std::vector<QueryRanks> multi = {qr({1, 2}, 10), qr({4}, 10)};
    CHECK(harness::mrr(multi) == doctest::Approx((1.0 + 0.5 + 0.25) / 3.0).epsilon(1e-15));
}

TEST_CASE("ranking-quality worked examples") {
    CHECK(harness::ndcg_at_k(std::vector{qr({1}, 10)}, 5) == 1.0);
    CHECK(harness::ndcg_at_k(std::vector{qr({7}, 10)}, 5) == 0.0);
    CHECK(harness::ndcg_at_k(std::vector{qr({3}, 10)}, 5) == 0.5);
}

TEST_CASE("top-k containment worked examples") {
    CHECK(harness::hit_at_k(std::vector{qr({1}, 10)}, 1) == 1.0);
    CHECK(harness::hit_at_k(std::vector{qr({2}, 10)}, 1) == 0.0);
    std::vector<QueryRanks> four = {qr({1}, 10), qr({2}, 10), qr({1}, 10), qr({5}, 10)};
    CHECK(harness::hit_at_k(four, 1) == 0.5);
}

TEST_CASE("missing ground truths count at the post-list rank") {
    QueryRanks q = qr({11}, 10);  // absent: recorded as n_candidates + 1
    q.missing = true;
    std::vector<QueryRanks> qs = {q};
    CHECK(harness::mrr(qs) == doctest::Approx(1.0 / 11.0).epsilon(1e-15));
    CHECK(harness::ndcg_at_k(qs, 5) == 0.0);
    CHECK(harness::hit_at_k(qs, 5) == 0.0);
}

TEST_CASE("random-ranking baseline is the harmonic expectation") {
    std::vector<QueryRanks> one = {qr({3}, 4)};
    double H4 = 1.0 + 0.5 + 1.0 / 3.0 + 0.25;
    CHECK(harness::random_mrr_baseline(one) == doctest::Approx(H4 / 4.0).epsilon(1e-15));
}

TEST_CASE("metrics agree with independent references on random fixtures") {
    Rng rng = make_rng(derive_seed(1234, "metric_fixtures"));
    for (int fixture = 0; fixture < 100; ++fixture) {
        size_t n_queries = 1 + rand_below(rng, 8);
        std::vector<QueryRanks> qs;
        for (size_t i = 0; i < n_queries; ++i) {
            uint32_t n_cand = uint32_t(3 + rand_below(rng, 38));
            size_t n_gt = 1 + rand_below(rng, std::min<uint64_t>(5, n_cand));
            std::set<uint32_t> ranks;
            while (ranks.size() < n_gt) {
                // Occasionally simulate a missing ground truth at n+1.
                uint32_t r = rand_below(rng, 10) == 0 ? n_cand + 1
                                                      : uint32_t(1 + rand_below(rng, n_cand));
                ranks.insert(r);
            }
            QueryRanks q;
            q.gt_ranks.assign(ranks.begin(), ranks.end());
            q.n_candidates = n_cand;
            q.missing = ranks.count(n_cand + 1) > 0;
            qs.push_back(std::move(q));
        }
        uint32_t k = uint32_t(1 + rand_below(rng, 10));

        CHECK(std::fabs(harness::mrr(qs) - ref_mrr(qs)) <= 1e-12);
        CHECK(std::fabs(harness::ndcg_at_k(qs, k) - ref_ndcg(qs, k)) <= 1e-12);
        CHECK(std::fabs(harness::hit_at_k(qs, k) - ref_hit(qs, k)) <= 1e-12);
        CHECK(std::fabs(harness::random_mrr_baseline(qs) - ref_random_mrr(qs)) <= 1e-12);

        // All aggregates live in [0, 1].
        for (double v : {harness::mrr(qs), harness::ndcg_at_k(qs, k), harness::hit_at_k(qs, k),
                         harness::random_mrr_baseline(qs)}) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
    }
}

}  // TEST_SUITE
