#pragma once

#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "ldm/kdtree.hpp"
#include "ldm/parallel.hpp"
#include "ldm/sparse.hpp"

namespace ldm {

/// Symmetric Gaussian user-user similarity graph w_ij = exp(-d²/4t).
struct WeightGraph {
    SparseMatrix w;               // m x m, exactly symmetric
    double t = 1.0;               // bandwidth actually used
    std::vector<double> degrees;  // d_i = sum_j w_ij
};

/// Auto bandwidth: mean squared distance to the ceil(k/2)-th neighbor over
/// all points, divided by 4, so a typical mid-rank neighbor gets weight e^-1.
/// Falls back to t = 1 when every such distance is zero (duplicate-only data).
inline double select_bandwidth(const std::vector<std::vector<Neighbor>>& knn_results, const KnnParams& params) {
    if (!params.bandwidth_auto()) return params.fixed_bandwidth;
    const std::size_t mid_rank = (static_cast<std::size_t>(params.k) + 1) / 2;
    double acc = 0.0;
    std::size_t count = 0;
    for (const auto& neighbors : knn_results) {
        if (neighbors.size() < mid_rank) continue;
        acc += neighbors[mid_rank - 1].sq_distance;
        ++count;
    }
    if (count == 0) return 1.0;
    double t = acc / static_cast<double>(count) / 4.0;
    return t > 0.0 ? t : 1.0;
}

/// Algorithm: kNN lists from the kd-tree, Gaussian weights, then elementwise
/// max with the transpose so edges found from either endpoint survive with
/// the same weight. Diagonal is dropped unless self_loops.
inline WeightGraph build_weight_matrix(const SparseMatrix& train_user_rows, const KnnParams& params,
                                       int threads = 1) {
    params.validate();
    const index_t m = train_user_rows.rows();
    KdTree tree(train_user_rows, params.leaf_size);

    std::vector<std::vector<Neighbor>> results(static_cast<std::size_t>(m));
    {
        std::vector<KdTree::Workspace> workspaces(static_cast<std::size_t>(std::max(threads, 1)));
        parallel_for_workers(static_cast<std::size_t>(m), threads, [&](int worker, std::size_t i) {
            results[i] = query_knn(tree, static_cast<index_t>(i), params, workspaces[static_cast<std::size_t>(worker)]);
        });
    }

    WeightGraph graph;
    graph.t = select_bandwidth(results, params);

    std::vector<Triplet> edges;
    edges.reserve(2 * static_cast<std::size_t>(m) * static_cast<std::size_t>(params.k));
    const double inv_4t = 1.0 / (4.0 * graph.t);
    for (index_t i = 0; i < m; ++i) {
        for (const Neighbor& nb : results[static_cast<std::size_t>(i)]) {
            if (nb.index == i && !params.self_loops) continue;
            double w = std::exp(-nb.sq_distance * inv_4t);
            edges.push_back({i, nb.index, w});
            if (nb.index != i) edges.push_back({nb.index, i, w});
        }
    }
    // Directed duplicates and mutual-kNN mirrors collapse to the max weight.
    // sparse_sq_distance(a, b) == sparse_sq_distance(b, a) bit-exactly, so
    // mutual edges agree anyway; max also covers budget-truncated asymmetry.
    std::sort(edges.begin(), edges.end(), [](const Triplet& a, const Triplet& b) {
        return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    std::vector<Triplet> merged;
    merged.reserve(edges.size());
    for (const Triplet& e : edges) {
        if (!merged.empty() && merged.back().row == e.row && merged.back().col == e.col)
            merged.back().value = std::max(merged.back().value, e.value);
        else
            merged.push_back(e);
    }
    graph.w = SparseMatrix::from_triplets(m, m, std::move(merged));
    graph.degrees = graph.w.row_sums();
    return graph;
}

/// Upper-triangle CSV dump `i,j,w`; pair it with the JSON sidecar written by
/// the pipeline for audit.
inline void write_weight_graph_csv(const std::string& path, const WeightGraph& graph) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("graph: cannot write '" + path + "'");
    out << "i,j,w\n";
    out.precision(17);
    for (index_t i = 0; i < graph.w.rows(); ++i) {
        auto idx = graph.w.row_indices(i);
        auto val = graph.w.row_values(i);
        for (std::size_t e = 0; e < idx.size(); ++e)
            if (i < idx[e]) out << i << ',' << idx[e] << ',' << val[e] << "\n";
    }
}

} // namespace ldm
