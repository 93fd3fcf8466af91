#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <queue>
#include <stdexcept>
#include <vector>

#include "ldm/sparse.hpp"

namespace ldm {

struct KnnParams {
    index_t k = 64;                // neighbors per point
    index_t max_comparisons = 256; // D, cap on exact distance evaluations per query
    double fixed_bandwidth = 0.0;  // > 0 selects fixed(t); otherwise auto
    bool self_loops = false;
    index_t leaf_size = 16;

    bool bandwidth_auto() const { return fixed_bandwidth <= 0.0; }

    void validate() const {
        if (k < 1) throw std::invalid_argument("knn: k must be >= 1");
        if (k > max_comparisons)
            throw std::invalid_argument("knn: k must not be larger than max_comparisons (D)");
        if (leaf_size < 1) throw std::invalid_argument("knn: leaf_size must be >= 1");
    }
};

struct Neighbor {
    index_t index;
    double sq_distance;
};

/// kd-tree over the rows of a sparse matrix (absent coordinates are zero).
///
/// Internal nodes split on the sampled-max-variance dimension at the median
/// coordinate and keep the node's coordinate range on that dimension, which
/// is enough to maintain an exact box lower bound during best-bin-first
/// descent. Leaves hold buckets of point indices.
class KdTree {
public:
    struct Node {
        index_t split_dim = -1;   // -1 marks a leaf
        double split_val = 0.0;
        double dim_low = 0.0;     // node's coordinate range on split_dim
        double dim_high = 0.0;
        std::int32_t left = -1;   // children for internal nodes,
        std::int32_t right = -1;  // [left, right) bucket bounds for leaves
    };

    KdTree(const SparseMatrix& points, index_t leaf_size)
        : points_(&points), order_(static_cast<std::size_t>(points.rows())) {
        if (points.rows() < 1) throw std::invalid_argument("kdtree: empty point set");
        for (std::size_t i = 0; i < order_.size(); ++i)
            order_[i] = static_cast<index_t>(i);
        coord_scratch_.resize(order_.size());
        root_ = build(0, static_cast<index_t>(order_.size()), leaf_size);
        coord_scratch_.clear();
        coord_scratch_.shrink_to_fit();
    }

    const SparseMatrix& points() const { return *points_; }
    const std::vector<Node>& nodes() const { return nodes_; }
    std::int32_t root() const { return root_; }
    const std::vector<index_t>& leaf_order() const { return order_; }

    index_t depth() const { return depth_of(root_); }

    /// Reusable per-thread query state (densified query row + traversal heap).
    struct Workspace {
        std::vector<double> dense_query;
        std::vector<Neighbor> heap;
    };

private:
    double coord(index_t point, index_t dim) const {
        auto idx = points_->row_indices(point);
        auto pos = std::lower_bound(idx.begin(), idx.end(), dim);
        if (pos == idx.end() || *pos != dim) return 0.0;
        return points_->row_values(point)[static_cast<std::size_t>(pos - idx.begin())];
    }

    index_t depth_of(std::int32_t n) const {
        const Node& node = nodes_[static_cast<std::size_t>(n)];
        if (node.split_dim < 0) return 1;
        return 1 + std::max(depth_of(node.left), depth_of(node.right));
    }

    // Dimension of maximum variance among a bounded sample of the node's
    // points; zeros of unstored coordinates included. Ties go to the lowest
    // dimension for determinism.
    index_t pick_split_dim(index_t begin, index_t end) {
        constexpr index_t kMaxSample = 256;
        const index_t count = end - begin;
        const index_t stride = std::max<index_t>(1, count / kMaxSample);
        index_t sampled = 0;
        touched_.clear();
        for (index_t i = begin; i < end; i += stride) {
            index_t p = order_[static_cast<std::size_t>(i)];
            auto idx = points_->row_indices(p);
            auto val = points_->row_values(p);
            for (std::size_t e = 0; e < idx.size(); ++e) {
                auto d = static_cast<std::size_t>(idx[e]);
                if (stat_count_[d] == 0) touched_.push_back(idx[e]);
                ++stat_count_[d];
                stat_sum_[d] += val[e];
                stat_sumsq_[d] += val[e] * val[e];
            }
            ++sampled;
        }
        index_t best_dim = 0;
        double best_var = -1.0;
        const double inv = 1.0 / static_cast<double>(sampled);
        for (index_t d : touched_) {
            auto dd = static_cast<std::size_t>(d);
            double mean = stat_sum_[dd] * inv;
            double var = stat_sumsq_[dd] * inv - mean * mean;
            if (var > best_var || (var == best_var && d < best_dim)) {
                best_var = var;
                best_dim = d;
            }
        }
        for (index_t d : touched_) {
            auto dd = static_cast<std::size_t>(d);
            stat_count_[dd] = 0;
            stat_sum_[dd] = 0.0;
            stat_sumsq_[dd] = 0.0;
        }
        return best_dim;
    }

    std::int32_t build(index_t begin, index_t end, index_t leaf_size) {
        if (stat_count_.empty() && end - begin > leaf_size) {
            stat_count_.assign(static_cast<std::size_t>(points_->cols()), 0);
            stat_sum_.assign(static_cast<std::size_t>(points_->cols()), 0.0);
            stat_sumsq_.assign(static_cast<std::size_t>(points_->cols()), 0.0);
        }
        auto id = static_cast<std::int32_t>(nodes_.size());
        nodes_.emplace_back();
        if (end - begin <= leaf_size) {
            nodes_[static_cast<std::size_t>(id)].left = begin;
            nodes_[static_cast<std::size_t>(id)].right = end;
            return id;
        }

        const index_t dim = pick_split_dim(begin, end);
        double lo = coord(order_[static_cast<std::size_t>(begin)], dim);
        double hi = lo;
        for (index_t i = begin; i < end; ++i) {
            double c = coord(order_[static_cast<std::size_t>(i)], dim);
            coord_scratch_[static_cast<std::size_t>(order_[static_cast<std::size_t>(i)])] = c;
            lo = std::min(lo, c);
            hi = std::max(hi, c);
        }

        // Median split under the (coordinate, index) total order: both halves
        // are non-empty even when every coordinate ties, left points are
        // <= split_val and right points are >= split_val.
        const index_t mid = begin + (end - begin) / 2;
        auto cmp = [&](index_t a, index_t b) {
            double ca = coord_scratch_[static_cast<std::size_t>(a)];
            double cb = coord_scratch_[static_cast<std::size_t>(b)];
            return ca != cb ? ca < cb : a < b;
        };
        std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end, cmp);
        const double split_val = coord_scratch_[static_cast<std::size_t>(order_[static_cast<std::size_t>(mid)])];

        std::int32_t left = build(begin, mid, leaf_size);
        std::int32_t right = build(mid, end, leaf_size);
        Node& node = nodes_[static_cast<std::size_t>(id)];
        node.split_dim = dim;
        node.split_val = split_val;
        node.dim_low = lo;
        node.dim_high = hi;
        node.left = left;
        node.right = right;
        return id;
    }

    const SparseMatrix* points_;
    std::vector<Node> nodes_;
    std::vector<index_t> order_;
    std::int32_t root_ = -1;

    // build-time scratch
    std::vector<double> coord_scratch_;
    std::vector<index_t> stat_count_;
    std::vector<double> stat_sum_, stat_sumsq_;
    std::vector<index_t> touched_;
};

inline KdTree build_kdtree(const SparseMatrix& points, index_t leaf_size = 16) {
    return KdTree(points, leaf_size);
}

namespace detail {

inline double interval_sq_excess(double q, double lo, double hi) {
    if (q < lo) return (lo - q) * (lo - q);
    if (q > hi) return (q - hi) * (q - hi);
    return 0.0;
}

// (distance, index) candidate order: closest first, ties to the lower index.
inline bool neighbor_less(const Neighbor& a, const Neighbor& b) {
    return a.sq_distance != b.sq_distance ? a.sq_distance < b.sq_distance : a.index < b.index;
}

} // namespace detail

/// Best-bin-first kNN query for point q_index. Stops after
/// params.max_comparisons exact distance evaluations; with a budget covering
/// the whole point set the result equals brute-force kNN, including the
/// ascending-(distance, index) tie order.
inline std::vector<Neighbor> query_knn(const KdTree& tree, index_t q_index, const KnnParams& params,
                                       KdTree::Workspace& ws) {
    params.validate();
    const SparseMatrix& pts = tree.points();
    if (q_index < 0 || q_index >= pts.rows())
        throw std::invalid_argument("knn: query index out of range");

    ws.dense_query.assign(static_cast<std::size_t>(pts.cols()), 0.0);
    {
        auto idx = pts.row_indices(q_index);
        auto val = pts.row_values(q_index);
        for (std::size_t i = 0; i < idx.size(); ++i)
            ws.dense_query[static_cast<std::size_t>(idx[i])] = val[i];
    }

    auto& best = ws.heap;  // max-heap on (distance, index), worst candidate at front
    best.clear();
    auto worst_first = [](const Neighbor& a, const Neighbor& b) { return detail::neighbor_less(a, b); };
    const std::size_t k = static_cast<std::size_t>(params.k);

    struct QueueEntry {
        double bound;
        std::int32_t node;
        bool operator>(const QueueEntry& o) const { return bound > o.bound; }
    };
    std::priority_queue<QueueEntry, std::vector<QueueEntry>, std::greater<QueueEntry>> pending;
    pending.push({0.0, tree.root()});

    index_t evaluations = 0;
    bool budget_spent = false;
    while (!pending.empty() && !budget_spent) {
        auto [bound, node_id] = pending.top();
        pending.pop();
        if (best.size() == k && bound > best.front().sq_distance)
            break;  // admissible bound: nothing closer remains anywhere

        while (true) {
            const KdTree::Node& node = tree.nodes()[static_cast<std::size_t>(node_id)];
            if (node.split_dim < 0) {
                for (index_t i = node.left; i < node.right; ++i) {
                    index_t p = tree.leaf_order()[static_cast<std::size_t>(i)];
                    if (p == q_index && !params.self_loops) continue;
                    if (evaluations >= params.max_comparisons) {
                        budget_spent = true;
                        break;
                    }
                    ++evaluations;
                    double d = sparse_sq_distance(pts, q_index, p);
                    Neighbor cand{p, d};
                    if (best.size() < k) {
                        best.push_back(cand);
                        std::push_heap(best.begin(), best.end(), worst_first);
                    } else if (detail::neighbor_less(cand, best.front())) {
                        std::pop_heap(best.begin(), best.end(), worst_first);
                        best.back() = cand;
                        std::push_heap(best.begin(), best.end(), worst_first);
                    }
                }
                break;
            }
            const double q = ws.dense_query[static_cast<std::size_t>(node.split_dim)];
            const bool near_left = q <= node.split_val;
            const std::int32_t near = near_left ? node.left : node.right;
            const std::int32_t far = near_left ? node.right : node.left;
            const double parent_excess = detail::interval_sq_excess(q, node.dim_low, node.dim_high);
            const double far_excess = near_left
                                          ? detail::interval_sq_excess(q, node.split_val, node.dim_high)
                                          : detail::interval_sq_excess(q, node.dim_low, node.split_val);
            const double far_bound = bound - parent_excess + far_excess;
            if (best.size() < k || far_bound <= best.front().sq_distance)
                pending.push({far_bound, far});
            node_id = near;
        }
    }

    std::sort(best.begin(), best.end(), detail::neighbor_less);
    return best;
}

inline std::vector<Neighbor> query_knn(const KdTree& tree, index_t q_index, const KnnParams& params) {
    KdTree::Workspace ws;
    return query_knn(tree, q_index, params, ws);
}

} // namespace ldm
