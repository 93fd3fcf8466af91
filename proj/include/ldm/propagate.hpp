#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ldm/dataset.hpp"
#include "ldm/graph.hpp"
#include "ldm/laplacian.hpp"
#include "ldm/parallel.hpp"
#include "ldm/solvers.hpp"
#include "ldm/sparse.hpp"

namespace ldm {

struct ModelParams {
    double mu_bar = 1.0;
    int bregman_iters = 1;
    int outer_iters = 1;
    double solver_tol = 1e-6;
    int solver_maxit = 500;
    bool localized = false;

    void validate() const {
        if (mu_bar <= 0.0) throw std::invalid_argument("model: mu_bar must be > 0");
        if (bregman_iters < 1 || outer_iters < 1)
            throw std::invalid_argument("model: iteration counts must be >= 1");
        if (solver_tol <= 0.0 || solver_maxit < 1)
            throw std::invalid_argument("model: invalid solver settings");
    }
};

/// One item's extension problem: boundary set, observed values, Bregman dual
/// and the full solution vector.
struct ItemSystem {
    index_t item = -1;
    std::vector<index_t> labeled;         // strictly increasing user indices
    std::vector<double> boundary_values;  // g over labeled
    std::vector<double> dual;             // Bregman dual d over labeled
    std::vector<double> solution;         // f over all users
    bool solver_warning = false;
};

inline ItemSystem make_item_system(const SparseMatrix& train_item_rows, index_t item) {
    ItemSystem sys;
    sys.item = item;
    auto idx = train_item_rows.row_indices(item);
    auto val = train_item_rows.row_values(item);
    sys.labeled.assign(idx.begin(), idx.end());
    sys.boundary_values.assign(val.begin(), val.end());
    sys.dual.assign(sys.labeled.size(), 0.0);
    return sys;
}

/// Predictions R with observed entries restored exactly. Column-major so
/// per-item solves write disjoint slices. Cells never reached by a solve
/// (items with empty boundary, users outside a localized support set) stay
/// flagged unpredicted rather than carrying fabricated values.
class CompletedMatrix {
public:
    CompletedMatrix() = default;
    CompletedMatrix(index_t users, index_t items)
        : users_(users), items_(items),
          values_(static_cast<std::size_t>(users) * static_cast<std::size_t>(items), 0.0),
          predicted_(static_cast<std::size_t>(users) * static_cast<std::size_t>(items), 0) {}

    index_t users() const { return users_; }
    index_t items() const { return items_; }

    double at(index_t user, index_t item) const { return values_[slot(user, item)]; }
    bool is_predicted(index_t user, index_t item) const { return predicted_[slot(user, item)] != 0; }

    void set(index_t user, index_t item, double value) {
        values_[slot(user, item)] = value;
        predicted_[slot(user, item)] = 1;
    }

    std::span<double> column(index_t item) {
        return {values_.data() + slot(0, item), static_cast<std::size_t>(users_)};
    }
    std::span<std::uint8_t> column_mask(index_t item) {
        return {predicted_.data() + slot(0, item), static_cast<std::size_t>(users_)};
    }
    std::span<const double> column(index_t item) const {
        return {values_.data() + slot(0, item), static_cast<std::size_t>(users_)};
    }

private:
    std::size_t slot(index_t user, index_t item) const {
        return static_cast<std::size_t>(item) * static_cast<std::size_t>(users_) + static_cast<std::size_t>(user);
    }

    index_t users_ = 0;
    index_t items_ = 0;
    std::vector<double> values_;
    std::vector<std::uint8_t> predicted_;
};

/// Solve L f + mu_bar W_{:,labeled} f_labeled = mu_bar W_{:,labeled} h per
/// Bregman iteration, h = g - d, then d += f_labeled - g. The first solve
/// warm-starts from mean(g) broadcast to all users; later ones from the
/// previous f.
inline SolveReport solve_item(const LaplacianOperator& laplacian, ItemSystem& sys, const ModelParams& params) {
    params.validate();
    if (sys.labeled.empty())
        throw std::invalid_argument("propagate: item " + std::to_string(sys.item) + " has an empty labeled set");

    const std::size_t m = static_cast<std::size_t>(laplacian.size());
    const std::size_t nl = sys.labeled.size();
    if (sys.solution.size() != m) {
        double mean_g = std::accumulate(sys.boundary_values.begin(), sys.boundary_values.end(), 0.0) /
                        static_cast<double>(nl);
        sys.solution.assign(m, mean_g);
    }
    if (sys.dual.size() != nl) sys.dual.assign(nl, 0.0);

    const SparseMatrix& w = laplacian.graph().w;
    std::vector<double> h(nl), rhs(m);
    auto op = [&](std::span<const double> x, std::span<double> y) {
        apply_system(laplacian, sys.labeled, params.mu_bar, x, y);
    };

    SolveReport last{};
    for (int iter = 0; iter < params.bregman_iters; ++iter) {
        for (std::size_t i = 0; i < nl; ++i) h[i] = sys.boundary_values[i] - sys.dual[i];
        std::fill(rhs.begin(), rhs.end(), 0.0);
        for (std::size_t i = 0; i < nl; ++i) {
            const index_t j = sys.labeled[i];
            const double hj = params.mu_bar * h[i];
            auto idx = w.row_indices(j);
            auto val = w.row_values(j);
            for (std::size_t e = 0; e < idx.size(); ++e)
                rhs[static_cast<std::size_t>(idx[e])] += val[e] * hj;
        }
        last = bicgstab(op, std::span<const double>(rhs), std::span<double>(sys.solution),
                        params.solver_tol, params.solver_maxit);
        if (last.stagnated) sys.solver_warning = true;
        for (std::size_t i = 0; i < nl; ++i)
            sys.dual[i] += sys.solution[static_cast<std::size_t>(sys.labeled[i])] - sys.boundary_values[i];
    }
    return last;
}

namespace detail {

inline SparseMatrix dense_rows_to_csr(const CompletedMatrix& r) {
    std::vector<std::size_t> row_ptr(static_cast<std::size_t>(r.users()) + 1, 0);
    std::vector<index_t> col_idx;
    std::vector<double> values;
    col_idx.reserve(static_cast<std::size_t>(r.users()) * static_cast<std::size_t>(r.items()));
    values.reserve(col_idx.capacity());
    for (index_t u = 0; u < r.users(); ++u) {
        for (index_t j = 0; j < r.items(); ++j) {
            double v = r.at(u, j);
            if (v == 0.0 && !r.is_predicted(u, j)) continue;
            col_idx.push_back(j);
            values.push_back(v);
        }
        row_ptr[static_cast<std::size_t>(u) + 1] = values.size();
    }
    return SparseMatrix(r.users(), r.items(), std::move(row_ptr), std::move(col_idx), std::move(values));
}

} // namespace detail

/// Algorithm: estimate W, form L, harmonically extend every item column with
/// Bregman refinement, restore observed entries, and optionally repeat with W
/// re-estimated from the completed rows. Defaults run one inner and one outer
/// iteration. Pass a prebuilt graph to skip the first W estimation (the
/// pipeline does, to time it separately).
inline CompletedMatrix harmonic_extension(const SparseMatrix& train_user_rows, const KnnParams& knn_params,
                                          const ModelParams& params, int threads = 1,
                                          const WeightGraph* prebuilt = nullptr) {
    params.validate();
    knn_params.validate();
    if (train_user_rows.rows() < 1 || train_user_rows.nnz() == 0)
        throw std::invalid_argument("propagate: empty training matrix");

    const index_t m = train_user_rows.rows();
    const index_t n = train_user_rows.cols();
    CompletedMatrix completed(m, n);
    SparseMatrix train_item_rows = train_user_rows.transpose();

    for (int outer = 0; outer < params.outer_iters; ++outer) {
        WeightGraph rebuilt;
        const WeightGraph* graph;
        if (outer == 0 && prebuilt) {
            graph = prebuilt;
        } else if (outer == 0) {
            rebuilt = build_weight_matrix(train_user_rows, knn_params, threads);
            graph = &rebuilt;
        } else {
            // Later passes re-estimate W from the completed rows.
            rebuilt = build_weight_matrix(detail::dense_rows_to_csr(completed), knn_params, threads);
            graph = &rebuilt;
        }
        LaplacianOperator laplacian(*graph);

        parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t j) {
            auto item = static_cast<index_t>(j);
            if (train_item_rows.row_nnz(item) == 0) return;  // empty boundary: skipped, stays unpredicted
            ItemSystem sys = make_item_system(train_item_rows, item);
            solve_item(laplacian, sys, params);
            auto col = completed.column(item);
            auto mask = completed.column_mask(item);
            for (index_t u = 0; u < m; ++u) {
                col[static_cast<std::size_t>(u)] = sys.solution[static_cast<std::size_t>(u)];
                mask[static_cast<std::size_t>(u)] = 1;
            }
        });

        // R|_observed = A|_observed, exactly.
        for (index_t u = 0; u < m; ++u) {
            auto idx = train_user_rows.row_indices(u);
            auto val = train_user_rows.row_values(u);
            for (std::size_t e = 0; e < idx.size(); ++e)
                completed.set(u, idx[e], val[e]);
        }
    }
    return completed;
}

/// S_j = labeled set plus its one-hop neighbors under W, sorted ascending.
inline std::vector<index_t> local_support(const WeightGraph& graph, std::span<const index_t> labeled) {
    std::vector<index_t> support(labeled.begin(), labeled.end());
    for (index_t j : labeled) {
        auto idx = graph.w.row_indices(j);
        support.insert(support.end(), idx.begin(), idx.end());
    }
    std::sort(support.begin(), support.end());
    support.erase(std::unique(support.begin(), support.end()), support.end());
    return support;
}

/// Localized variant: every item's system is restricted to S_j = labeled
/// users plus their one-hop graph neighborhood, treated as a standalone
/// subgraph (degrees recomputed from the restriction). Predictions are
/// written only for users in S_j; everyone else stays unpredicted for that
/// item and ranks behind predicted items downstream.
inline CompletedMatrix localized_extension(const WeightGraph& graph, const SparseMatrix& train_user_rows,
                                           const ModelParams& params, int threads = 1,
                                           std::vector<index_t>* support_sizes = nullptr) {
    params.validate();
    const index_t m = train_user_rows.rows();
    const index_t n = train_user_rows.cols();
    if (graph.w.rows() != m) throw std::invalid_argument("propagate: graph size does not match training matrix");

    CompletedMatrix completed(m, n);
    SparseMatrix train_item_rows = train_user_rows.transpose();
    if (support_sizes) support_sizes->assign(static_cast<std::size_t>(n), 0);

    struct LocalScratch {
        std::vector<index_t> global_to_local;
    };
    std::vector<LocalScratch> scratch(static_cast<std::size_t>(std::max(threads, 1)));
    for (auto& s : scratch) s.global_to_local.assign(static_cast<std::size_t>(m), -1);

    parallel_for_workers(static_cast<std::size_t>(n), threads, [&](int worker, std::size_t j) {
        auto item = static_cast<index_t>(j);
        auto labeled_global = train_item_rows.row_indices(item);
        if (labeled_global.empty()) return;

        std::vector<index_t> support = local_support(graph, labeled_global);
        if (support_sizes) (*support_sizes)[j] = static_cast<index_t>(support.size());

        auto& g2l = scratch[static_cast<std::size_t>(worker)].global_to_local;
        for (std::size_t i = 0; i < support.size(); ++i)
            g2l[static_cast<std::size_t>(support[i])] = static_cast<index_t>(i);

        std::vector<Triplet> sub_edges;
        for (std::size_t i = 0; i < support.size(); ++i) {
            auto idx = graph.w.row_indices(support[i]);
            auto val = graph.w.row_values(support[i]);
            for (std::size_t e = 0; e < idx.size(); ++e) {
                index_t local = g2l[static_cast<std::size_t>(idx[e])];
                if (local >= 0) sub_edges.push_back({static_cast<index_t>(i), local, val[e]});
            }
        }
        WeightGraph sub;
        sub.t = graph.t;
        sub.w = SparseMatrix::from_triplets(static_cast<index_t>(support.size()),
                                            static_cast<index_t>(support.size()), std::move(sub_edges));
        sub.degrees = sub.w.row_sums();
        LaplacianOperator sub_laplacian(sub);

        ItemSystem sys;
        sys.item = item;
        auto values = train_item_rows.row_values(item);
        sys.labeled.reserve(labeled_global.size());
        for (index_t g : labeled_global)
            sys.labeled.push_back(g2l[static_cast<std::size_t>(g)]);
        sys.boundary_values.assign(values.begin(), values.end());
        sys.dual.assign(sys.labeled.size(), 0.0);
        solve_item(sub_laplacian, sys, params);

        for (std::size_t i = 0; i < support.size(); ++i)
            completed.set(support[i], item, sys.solution[i]);

        for (index_t g : support)
            g2l[static_cast<std::size_t>(g)] = -1;
    });

    // Observed entries are restored exactly here as well.
    for (index_t u = 0; u < m; ++u) {
        auto idx = train_user_rows.row_indices(u);
        auto val = train_user_rows.row_values(u);
        for (std::size_t e = 0; e < idx.size(); ++e)
            completed.set(u, idx[e], val[e]);
    }
    return completed;
}

/// Hard-constraint discrete harmonic extension: f = g on labeled nodes, and
/// the unlabeled block solves L_UU f_U = W_{U,labeled} g by conjugate
/// gradient. Every unlabeled node must reach the labeled set through the
/// graph, otherwise the block is singular.
inline std::vector<double> discrete_harmonic(const WeightGraph& graph, std::span<const index_t> labeled,
                                             std::span<const double> g, double tol = 1e-10, int maxit = 10000) {
    const index_t m = graph.w.rows();
    if (labeled.empty()) throw std::invalid_argument("propagate: discrete_harmonic needs a labeled set");
    if (labeled.size() != g.size()) throw std::invalid_argument("propagate: labeled/value size mismatch");

    std::vector<std::int8_t> is_labeled(static_cast<std::size_t>(m), 0);
    for (index_t j : labeled) is_labeled[static_cast<std::size_t>(j)] = 1;

    // Reachability sweep from the labeled set.
    std::vector<std::int8_t> reached(static_cast<std::size_t>(m), 0);
    std::vector<index_t> queue(labeled.begin(), labeled.end());
    for (index_t j : labeled) reached[static_cast<std::size_t>(j)] = 1;
    for (std::size_t head = 0; head < queue.size(); ++head) {
        for (index_t nb : graph.w.row_indices(queue[head])) {
            if (!reached[static_cast<std::size_t>(nb)]) {
                reached[static_cast<std::size_t>(nb)] = 1;
                queue.push_back(nb);
            }
        }
    }
    for (index_t u = 0; u < m; ++u) {
        if (reached[static_cast<std::size_t>(u)]) continue;
        std::vector<index_t> component{u};
        reached[static_cast<std::size_t>(u)] = 1;
        for (std::size_t head = 0; head < component.size(); ++head) {
            for (index_t nb : graph.w.row_indices(component[head])) {
                if (!reached[static_cast<std::size_t>(nb)]) {
                    reached[static_cast<std::size_t>(nb)] = 1;
                    component.push_back(nb);
                }
            }
        }
        throw std::runtime_error("propagate: unlabeled component around node " + std::to_string(u) +
                                 " (" + std::to_string(component.size()) + " nodes) is disconnected from the labeled set");
    }

    std::vector<index_t> unlabeled;
    unlabeled.reserve(static_cast<std::size_t>(m) - labeled.size());
    std::vector<index_t> global_to_local(static_cast<std::size_t>(m), -1);
    for (index_t u = 0; u < m; ++u) {
        if (!is_labeled[static_cast<std::size_t>(u)]) {
            global_to_local[static_cast<std::size_t>(u)] = static_cast<index_t>(unlabeled.size());
            unlabeled.push_back(u);
        }
    }

    std::vector<double> f(static_cast<std::size_t>(m), 0.0);
    for (std::size_t i = 0; i < labeled.size(); ++i)
        f[static_cast<std::size_t>(labeled[i])] = g[i];
    if (unlabeled.empty()) return f;

    std::vector<double> g_full(static_cast<std::size_t>(m), 0.0);
    for (std::size_t i = 0; i < labeled.size(); ++i)
        g_full[static_cast<std::size_t>(labeled[i])] = g[i];

    std::vector<double> rhs(unlabeled.size(), 0.0);
    for (std::size_t i = 0; i < unlabeled.size(); ++i) {
        auto idx = graph.w.row_indices(unlabeled[i]);
        auto val = graph.w.row_values(unlabeled[i]);
        double acc = 0.0;
        for (std::size_t e = 0; e < idx.size(); ++e)
            if (is_labeled[static_cast<std::size_t>(idx[e])]) acc += val[e] * g_full[static_cast<std::size_t>(idx[e])];
        rhs[i] = acc;
    }

    auto op = [&](std::span<const double> x, std::span<double> y) {
        for (std::size_t i = 0; i < unlabeled.size(); ++i) {
            const index_t u = unlabeled[i];
            auto idx = graph.w.row_indices(u);
            auto val = graph.w.row_values(u);
            double acc = 0.0;
            for (std::size_t e = 0; e < idx.size(); ++e) {
                index_t local = global_to_local[static_cast<std::size_t>(idx[e])];
                if (local >= 0) acc += val[e] * x[static_cast<std::size_t>(local)];
            }
            y[i] = graph.degrees[static_cast<std::size_t>(u)] * x[i] - acc;
        }
    };

    std::vector<double> f_u(unlabeled.size(), 0.0);
    conjugate_gradient(op, std::span<const double>(rhs), std::span<double>(f_u), tol, maxit);
    for (std::size_t i = 0; i < unlabeled.size(); ++i)
        f[static_cast<std::size_t>(unlabeled[i])] = f_u[i];
    return f;
}

} // namespace ldm
