#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "ldm/graph.hpp"
#include "ldm/sparse.hpp"

namespace ldm {

/// Graph Laplacian L = D - W applied matrix-free: (Lx)_i = d_i x_i - sum_j w_ij x_j.
class LaplacianOperator {
public:
    explicit LaplacianOperator(const WeightGraph& graph) : graph_(&graph) {
        if (!graph.w.is_symmetric())
            throw std::invalid_argument("laplacian: weight matrix is not symmetric");
    }

    index_t size() const { return graph_->w.rows(); }
    const WeightGraph& graph() const { return *graph_; }
    const std::vector<double>& degrees() const { return graph_->degrees; }

    void apply(std::span<const double> x, std::span<double> y) const {
        const SparseMatrix& w = graph_->w;
        for (index_t i = 0; i < w.rows(); ++i) {
            auto idx = w.row_indices(i);
            auto val = w.row_values(i);
            double acc = 0.0;
            for (std::size_t e = 0; e < idx.size(); ++e)
                acc += val[e] * x[static_cast<std::size_t>(idx[e])];
            y[static_cast<std::size_t>(i)] = graph_->degrees[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(i)] - acc;
        }
    }

private:
    const WeightGraph* graph_;
};

inline LaplacianOperator build_laplacian(const WeightGraph& graph) {
    return LaplacianOperator(graph);
}

/// y = L x + mu_bar * W_{:,labeled} x_labeled. The column restriction is
/// applied through rows of the symmetric W, so the operator stays matrix-free;
/// the result is nonsymmetric in general.
inline void apply_system(const LaplacianOperator& laplacian, std::span<const index_t> labeled, double mu_bar,
                         std::span<const double> x, std::span<double> y) {
    laplacian.apply(x, y);
    const SparseMatrix& w = laplacian.graph().w;
    for (index_t j : labeled) {
        const double xj = mu_bar * x[static_cast<std::size_t>(j)];
        auto idx = w.row_indices(j);
        auto val = w.row_values(j);
        for (std::size_t e = 0; e < idx.size(); ++e)
            y[static_cast<std::size_t>(idx[e])] += val[e] * xj;
    }
}

} // namespace ldm
