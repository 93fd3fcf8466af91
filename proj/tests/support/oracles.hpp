#pragma once

// Independent reference implementations the test suite checks the library
// against. Everything here is deliberately brute force and shares no solver
// code with the implementation under test.

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "ldm/graph.hpp"
#include "ldm/sparse.hpp"

namespace oracle {

/// Dense Gaussian elimination with partial pivoting; a is row-major n x n.
inline std::vector<double> dense_solve(std::vector<double> a, std::vector<double> b) {
    const std::size_t n = b.size();
    if (a.size() != n * n) throw std::invalid_argument("oracle: dimension mismatch");
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::fabs(a[r * n + col]) > std::fabs(a[pivot * n + col])) pivot = r;
        if (a[pivot * n + col] == 0.0) throw std::runtime_error("oracle: singular matrix");
        if (pivot != col) {
            for (std::size_t c = 0; c < n; ++c) std::swap(a[pivot * n + c], a[col * n + c]);
            std::swap(b[pivot], b[col]);
        }
        for (std::size_t r = col + 1; r < n; ++r) {
            double factor = a[r * n + col] / a[col * n + col];
            if (factor == 0.0) continue;
            for (std::size_t c = col; c < n; ++c) a[r * n + c] -= factor * a[col * n + c];
            b[r] -= factor * b[col];
        }
    }
    std::vector<double> x(n, 0.0);
    for (std::size_t r = n; r-- > 0;) {
        double acc = b[r];
        for (std::size_t c = r + 1; c < n; ++c) acc -= a[r * n + c] * x[c];
        x[r] = acc / a[r * n + r];
    }
    return x;
}

inline std::vector<double> dense_weight_matrix(const ldm::WeightGraph& graph) {
    const auto m = static_cast<std::size_t>(graph.w.rows());
    std::vector<double> w(m * m, 0.0);
    for (ldm::index_t i = 0; i < graph.w.rows(); ++i) {
        auto idx = graph.w.row_indices(i);
        auto val = graph.w.row_values(i);
        for (std::size_t e = 0; e < idx.size(); ++e)
            w[static_cast<std::size_t>(i) * m + static_cast<std::size_t>(idx[e])] = val[e];
    }
    return w;
}

/// Dense matrix of the soft-constraint system: L + mu_bar * W_{:,labeled} P_labeled.
inline std::vector<double> dense_system_matrix(const ldm::WeightGraph& graph,
                                               std::span<const ldm::index_t> labeled, double mu_bar) {
    const auto m = static_cast<std::size_t>(graph.w.rows());
    std::vector<double> w = dense_weight_matrix(graph);
    std::vector<double> a(m * m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) a[i * m + j] = -w[i * m + j];
        a[i * m + i] += graph.degrees[i];
    }
    for (ldm::index_t j : labeled)
        for (std::size_t i = 0; i < m; ++i)
            a[i * m + static_cast<std::size_t>(j)] += mu_bar * w[i * m + static_cast<std::size_t>(j)];
    return a;
}

/// Exact-arithmetic (direct dense solve) version of the per-item Bregman
/// loop: solve (L + mu W P) f = mu W_{:,labeled} (g - d), then d += f|_labeled - g.
inline std::vector<double> solve_item_dense(const ldm::WeightGraph& graph,
                                            std::span<const ldm::index_t> labeled,
                                            std::span<const double> g, double mu_bar, int bregman_iters) {
    const auto m = static_cast<std::size_t>(graph.w.rows());
    std::vector<double> w = dense_weight_matrix(graph);
    std::vector<double> a = dense_system_matrix(graph, labeled, mu_bar);
    std::vector<double> dual(labeled.size(), 0.0);
    std::vector<double> f(m, 0.0);
    for (int iter = 0; iter < bregman_iters; ++iter) {
        std::vector<double> rhs(m, 0.0);
        for (std::size_t l = 0; l < labeled.size(); ++l) {
            double h = mu_bar * (g[l] - dual[l]);
            for (std::size_t i = 0; i < m; ++i)
                rhs[i] += w[i * m + static_cast<std::size_t>(labeled[l])] * h;
        }
        f = dense_solve(a, rhs);
        for (std::size_t l = 0; l < labeled.size(); ++l)
            dual[l] += f[static_cast<std::size_t>(labeled[l])] - g[l];
    }
    return f;
}

/// Brute-force kNN over all pairwise distances, ordered by (distance, index).
inline std::vector<ldm::Neighbor> brute_force_knn(const ldm::SparseMatrix& points, ldm::index_t q,
                                                  ldm::index_t k, bool self_loops = false) {
    std::vector<ldm::Neighbor> all;
    all.reserve(static_cast<std::size_t>(points.rows()));
    for (ldm::index_t p = 0; p < points.rows(); ++p) {
        if (p == q && !self_loops) continue;
        all.push_back({p, ldm::sparse_sq_distance(points, q, p)});
    }
    std::sort(all.begin(), all.end(), [](const ldm::Neighbor& a, const ldm::Neighbor& b) {
        return a.sq_distance != b.sq_distance ? a.sq_distance < b.sq_distance : a.index < b.index;
    });
    if (all.size() > static_cast<std::size_t>(k)) all.resize(static_cast<std::size_t>(k));
    return all;
}

/// Maximum DCG@K over every distinct permutation of the relevance multiset.
inline double max_dcg_over_permutations(std::vector<double> rels, int k) {
    std::sort(rels.begin(), rels.end());
    double best = -1.0;
    do {
        double acc = 0.0;
        const std::size_t limit = std::min(static_cast<std::size_t>(k), rels.size());
        for (std::size_t j = 0; j < limit; ++j)
            acc += (std::exp2(rels[j]) - 1.0) / std::log2(static_cast<double>(j) + 2.0);
        best = std::max(best, acc);
    } while (std::next_permutation(rels.begin(), rels.end()));
    return best;
}

} // namespace oracle
