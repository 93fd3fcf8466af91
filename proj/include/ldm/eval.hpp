#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "ldm/dataset.hpp"
#include "ldm/parallel.hpp"
#include "ldm/propagate.hpp"

namespace ldm {

/// DCG@K = sum_{j=1..K} (2^r_j - 1) / log2(j + 1) over relevances listed in
/// predicted order. K larger than the list truncates to the list.
inline double dcg_at_k(std::span<const double> rels_in_predicted_order, int k) {
    if (k < 1) throw std::invalid_argument("eval: K must be >= 1");
    const std::size_t limit = std::min(static_cast<std::size_t>(k), rels_in_predicted_order.size());
    double acc = 0.0;
    for (std::size_t j = 0; j < limit; ++j)
        acc += (std::exp2(rels_in_predicted_order[j]) - 1.0) / std::log2(static_cast<double>(j) + 2.0);
    return acc;
}

struct NdcgValue {
    double value = 0.0;
    bool zero_ideal = false;  // all-zero relevance list, score pinned to 0
};

inline NdcgValue ndcg_at_k_flagged(std::span<const double> rels_in_predicted_order, int k) {
    if (rels_in_predicted_order.empty()) throw std::invalid_argument("eval: empty relevance list");
    std::vector<double> ideal(rels_in_predicted_order.begin(), rels_in_predicted_order.end());
    std::sort(ideal.begin(), ideal.end(), std::greater<double>());
    double ideal_dcg = dcg_at_k(ideal, k);
    if (ideal_dcg == 0.0) return {0.0, true};
    return {dcg_at_k(rels_in_predicted_order, k) / ideal_dcg, false};
}

inline double ndcg_at_k(std::span<const double> rels_in_predicted_order, int k) {
    return ndcg_at_k_flagged(rels_in_predicted_order, k).value;
}

struct RankedList {
    std::vector<index_t> items;     // descending predicted score
    std::vector<double> relevance;  // ground-truth test ratings, aligned
};

/// Order a user's test items by predicted score, descending; prediction ties
/// break by ascending item index, and unpredicted items sort after every
/// predicted one.
inline RankedList rank_for_user(const CompletedMatrix& completed, index_t user,
                                std::span<const index_t> test_items, std::span<const double> test_values) {
    if (test_items.empty()) throw std::invalid_argument("eval: user has no test items");
    struct Entry {
        bool predicted;
        double score;
        index_t item;
        double relevance;
    };
    std::vector<Entry> entries;
    entries.reserve(test_items.size());
    for (std::size_t i = 0; i < test_items.size(); ++i) {
        bool predicted = completed.is_predicted(user, test_items[i]);
        entries.push_back({predicted, predicted ? completed.at(user, test_items[i]) : 0.0, test_items[i], test_values[i]});
    }
    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
        if (a.predicted != b.predicted) return a.predicted;
        if (a.predicted && a.score != b.score) return a.score > b.score;
        return a.item < b.item;
    });
    RankedList out;
    out.items.reserve(entries.size());
    out.relevance.reserve(entries.size());
    for (const Entry& e : entries) {
        out.items.push_back(e.item);
        out.relevance.push_back(e.relevance);
    }
    return out;
}

struct PhaseSeconds {
    double load = 0.0;
    double split = 0.0;
    double graph = 0.0;
    double solve = 0.0;
    double eval = 0.0;

    double sum() const { return load + split + graph + solve + eval; }
};

struct EvalReport {
    int k_cutoff = 10;
    std::vector<double> per_user_ndcg;  // aligned to evaluated_users
    std::vector<index_t> evaluated_users;
    double mean_ndcg = 0.0;
    index_t users_evaluated = 0;
    index_t items_evaluated = 0;
    std::size_t zero_ideal_users = 0;
    PhaseSeconds timings;
};

/// NDCG@K per user over the full test list, averaged over users with at
/// least one test rating. Deterministic: fixed user order, sequential mean.
inline EvalReport evaluate(const CompletedMatrix& completed, const RatingDataset& test, int k_cutoff,
                           int threads = 1) {
    if (k_cutoff < 1) throw std::invalid_argument("eval: K must be >= 1");
    if (test.user_count != completed.users())
        throw std::invalid_argument("eval: test users do not match prediction matrix");

    SparseMatrix test_rows = to_csr(test, Orientation::user_rows);

    std::vector<index_t> users;
    users.reserve(static_cast<std::size_t>(test.user_count));
    for (index_t u = 0; u < test.user_count; ++u)
        if (test_rows.row_nnz(u) > 0) users.push_back(u);

    EvalReport report;
    report.k_cutoff = k_cutoff;
    report.evaluated_users = users;
    report.per_user_ndcg.assign(users.size(), 0.0);
    std::vector<std::uint8_t> zero_flags(users.size(), 0);

    parallel_for(users.size(), threads, [&](std::size_t i) {
        index_t u = users[i];
        RankedList ranked = rank_for_user(completed, u, test_rows.row_indices(u), test_rows.row_values(u));
        NdcgValue v = ndcg_at_k_flagged(ranked.relevance, k_cutoff);
        report.per_user_ndcg[i] = v.value;
        zero_flags[i] = v.zero_ideal ? 1 : 0;
    });

    double acc = 0.0;
    for (double v : report.per_user_ndcg) acc += v;
    report.mean_ndcg = users.empty() ? 0.0 : acc / static_cast<double>(users.size());
    report.users_evaluated = static_cast<index_t>(users.size());
    report.items_evaluated = test.items_with_ratings();
    for (std::uint8_t z : zero_flags) report.zero_ideal_users += z;
    return report;
}

} // namespace ldm
