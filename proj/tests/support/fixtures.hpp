#pragma once

// Shared synthetic fixtures: random sparse point sets, random connected
// weight graphs, and a MovieLens-format file generator with enough block
// structure that ranking quality is meaningfully above chance.

#include <fstream>
#include <string>
#include <vector>

#include "ldm/dataset.hpp"
#include "ldm/graph.hpp"
#include "ldm/rng.hpp"
#include "ldm/sparse.hpp"

namespace fixtures {

inline ldm::SparseMatrix random_sparse_points(ldm::index_t count, ldm::index_t dim, double density,
                                              std::uint64_t seed) {
    ldm::SplitMix64 rng(seed);
    std::vector<ldm::Triplet> triplets;
    for (ldm::index_t p = 0; p < count; ++p) {
        bool any = false;
        for (ldm::index_t d = 0; d < dim; ++d) {
            if (rng.next_double() < density) {
                triplets.push_back({p, d, 1.0 + 4.0 * rng.next_double()});
                any = true;
            }
        }
        if (!any)  // keep every point non-empty so distances are informative
            triplets.push_back({p, static_cast<ldm::index_t>(rng.next_below(static_cast<std::uint64_t>(dim))),
                                1.0 + 4.0 * rng.next_double()});
    }
    return ldm::SparseMatrix::from_triplets(count, dim, std::move(triplets));
}

inline ldm::WeightGraph weight_graph_from_edges(ldm::index_t nodes,
                                                const std::vector<ldm::Triplet>& undirected_edges) {
    std::vector<ldm::Triplet> both;
    both.reserve(undirected_edges.size() * 2);
    for (const ldm::Triplet& e : undirected_edges) {
        both.push_back(e);
        both.push_back({e.col, e.row, e.value});
    }
    ldm::WeightGraph graph;
    graph.w = ldm::SparseMatrix::from_triplets(nodes, nodes, std::move(both));
    graph.degrees = graph.w.row_sums();
    graph.t = 1.0;
    return graph;
}

/// Random connected graph: a random spanning tree plus `extra_edges` extras,
/// weights in (0.1, 1].
inline ldm::WeightGraph random_connected_graph(ldm::index_t nodes, ldm::index_t extra_edges, std::uint64_t seed) {
    ldm::SplitMix64 rng(seed);
    std::vector<ldm::Triplet> edges;
    for (ldm::index_t v = 1; v < nodes; ++v) {
        auto parent = static_cast<ldm::index_t>(rng.next_below(static_cast<std::uint64_t>(v)));
        edges.push_back({parent, v, 0.1 + 0.9 * rng.next_double()});
    }
    std::vector<std::vector<char>> present(static_cast<std::size_t>(nodes),
                                           std::vector<char>(static_cast<std::size_t>(nodes), 0));
    for (const ldm::Triplet& e : edges)
        present[static_cast<std::size_t>(e.row)][static_cast<std::size_t>(e.col)] =
            present[static_cast<std::size_t>(e.col)][static_cast<std::size_t>(e.row)] = 1;
    for (ldm::index_t added = 0; added < extra_edges;) {
        auto a = static_cast<ldm::index_t>(rng.next_below(static_cast<std::uint64_t>(nodes)));
        auto b = static_cast<ldm::index_t>(rng.next_below(static_cast<std::uint64_t>(nodes)));
        if (a == b || present[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)]) {
            ++added;  // don't spin forever on dense graphs
            continue;
        }
        present[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] =
            present[static_cast<std::size_t>(b)][static_cast<std::size_t>(a)] = 1;
        edges.push_back({std::min(a, b), std::max(a, b), 0.1 + 0.9 * rng.next_double()});
        ++added;
    }
    return weight_graph_from_edges(nodes, edges);
}

/// Path graph 0-1-...-(n-1) with unit weights.
inline ldm::WeightGraph path_graph(ldm::index_t nodes, double weight = 1.0) {
    std::vector<ldm::Triplet> edges;
    for (ldm::index_t v = 0; v + 1 < nodes; ++v) edges.push_back({v, static_cast<ldm::index_t>(v + 1), weight});
    return weight_graph_from_edges(nodes, edges);
}

struct SyntheticSpec {
    ldm::index_t users = 120;
    ldm::index_t items = 160;
    ldm::index_t groups = 4;
    ldm::index_t min_ratings = 25;
    ldm::index_t max_ratings = 40;
    std::uint64_t seed = 7;
};

/// Block-preference ratings: users love their own item group (4-5 stars) and
/// are lukewarm elsewhere (1-3). Written as a tab100k-format file; ids are
/// 1-based like the real data.
inline void write_synthetic_movielens(const std::string& path, const SyntheticSpec& spec) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("fixtures: cannot write '" + path + "'");
    std::vector<ldm::index_t> item_order(static_cast<std::size_t>(spec.items));
    for (ldm::index_t u = 0; u < spec.users; ++u) {
        ldm::SplitMix64 rng(ldm::mix_seed(spec.seed, static_cast<std::uint64_t>(u)));
        for (std::size_t i = 0; i < item_order.size(); ++i) item_order[i] = static_cast<ldm::index_t>(i);
        auto count = static_cast<ldm::index_t>(
            spec.min_ratings + rng.next_below(static_cast<std::uint64_t>(spec.max_ratings - spec.min_ratings + 1)));
        for (ldm::index_t r = 0; r < count; ++r) {
            std::size_t swap_with = static_cast<std::size_t>(r) +
                                    rng.next_below(item_order.size() - static_cast<std::size_t>(r));
            std::swap(item_order[static_cast<std::size_t>(r)], item_order[swap_with]);
            ldm::index_t item = item_order[static_cast<std::size_t>(r)];
            bool same_group = (u % spec.groups) == (item % spec.groups);
            long rating = same_group ? 4 + static_cast<long>(rng.next_below(2))
                                     : 1 + static_cast<long>(rng.next_below(3));
            out << (u + 1) << '\t' << (item + 1) << '\t' << rating << '\t' << (880000000 + u) << "\n";
        }
    }
}

} // namespace fixtures
