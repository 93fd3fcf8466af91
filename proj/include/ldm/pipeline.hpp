#pragma once

#include <chrono>
#include <cstdio>
#include <fstream>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "ldm/dataset.hpp"
#include "ldm/eval.hpp"
#include "ldm/graph.hpp"
#include "ldm/propagate.hpp"

namespace ldm {

struct RunConfig {
    std::string data_path;
    FileFormat format = FileFormat::tab100k;
    index_t n_train = 10;
    index_t min_test = 10;
    std::uint64_t seed = 0;

    KnnParams knn;
    ModelParams model;
    bool mu_pim_preset = false;  // mu_bar = 1e4 * items / users, resolved after loading

    int k_cutoff = 10;
    int threads = 1;

    std::string output_path;
    std::string dump_split_path;
    std::string dump_graph_path;
    std::string dump_predictions_path;

    void validate() const {
        SplitSpec{n_train, min_test, seed}.validate();
        knn.validate();
        model.validate();
        if (k_cutoff < 1) throw std::invalid_argument("config: topk must be >= 1");
        if (threads < 1) throw std::invalid_argument("config: threads must be >= 1");
    }
};

/// Errors surfaced by run() carry the pipeline phase that failed.
class PipelineError : public std::runtime_error {
public:
    PipelineError(std::string phase, const std::string& message)
        : std::runtime_error("[" + phase + "] " + message), phase_(std::move(phase)) {}

    const std::string& phase() const { return phase_; }

private:
    std::string phase_;
};

struct DatasetStats {
    index_t users = 0;
    index_t items = 0;
    index_t items_with_ratings = 0;
    std::size_t ratings = 0;
    std::size_t train_ratings = 0;
    std::size_t test_ratings = 0;
    std::size_t duplicate_warnings = 0;
};

struct RunReport {
    DatasetStats stats;
    EvalReport eval;
    double mu_bar_used = 1.0;
    double bandwidth_used = 0.0;
    double total_seconds = 0.0;
    std::vector<std::string> warnings;
    nlohmann::json config_echo;

    nlohmann::json to_json(bool include_per_user = false) const {
        nlohmann::json j;
        j["schema"] = 1;
        j["params"] = config_echo;
        j["params"]["mu_bar_used"] = mu_bar_used;
        j["params"]["bandwidth_used"] = bandwidth_used;
        j["dataset_stats"] = {
            {"users", stats.users},
            {"items", stats.items},
            {"items_with_ratings", stats.items_with_ratings},
            {"ratings", stats.ratings},
            {"train_ratings", stats.train_ratings},
            {"test_ratings", stats.test_ratings},
            {"duplicate_warnings", stats.duplicate_warnings},
        };
        j["mean_ndcg"] = eval.mean_ndcg;
        j["users_evaluated"] = eval.users_evaluated;
        j["zero_ideal_users"] = eval.zero_ideal_users;
        j["per_phase_seconds"] = {
            {"load", eval.timings.load}, {"split", eval.timings.split},   {"graph", eval.timings.graph},
            {"solve", eval.timings.solve}, {"eval", eval.timings.eval},
        };
        j["total_seconds"] = total_seconds;
        j["warnings"] = warnings;
        if (include_per_user) j["per_user_ndcg"] = eval.per_user_ndcg;
        return j;
    }
};

namespace detail {

class Stopwatch {
public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}
    double lap() {
        auto now = std::chrono::steady_clock::now();
        double s = std::chrono::duration<double>(now - start_).count();
        start_ = now;
        return s;
    }

private:
    std::chrono::steady_clock::time_point start_;
};

inline nlohmann::json config_echo(const RunConfig& cfg) {
    return {
        {"data", cfg.data_path},
        {"format", cfg.format == FileFormat::tab100k ? "ml100k" : "ml1m"},
        {"n_train", cfg.n_train},
        {"min_test", cfg.min_test},
        {"seed", cfg.seed},
        {"k", cfg.knn.k},
        {"max_comparisons", cfg.knn.max_comparisons},
        {"bandwidth", cfg.knn.bandwidth_auto() ? nlohmann::json("auto") : nlohmann::json(cfg.knn.fixed_bandwidth)},
        {"leaf_size", cfg.knn.leaf_size},
        {"mu_bar", cfg.mu_pim_preset ? nlohmann::json("pim") : nlohmann::json(cfg.model.mu_bar)},
        {"bregman_iters", cfg.model.bregman_iters},
        {"outer_iters", cfg.model.outer_iters},
        {"solver_tol", cfg.model.solver_tol},
        {"solver_maxit", cfg.model.solver_maxit},
        {"localized", cfg.model.localized},
        {"topk", cfg.k_cutoff},
        {"threads", cfg.threads},
    };
}

inline void write_predictions_csv(const std::string& path, const CompletedMatrix& completed,
                                  const RatingDataset& test) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << "user,item,prediction\n";
    out.precision(17);
    for (const Rating& r : test.ratings) {
        out << test.users.to_original[static_cast<std::size_t>(r.user)] << ','
            << test.items.to_original[static_cast<std::size_t>(r.item)] << ',';
        if (completed.is_predicted(r.user, r.item))
            out << completed.at(r.user, r.item);
        else
            out << "unpredicted";
        out << "\n";
    }
}

} // namespace detail

/// Full pipeline on an already-loaded dataset: filter -> split -> graph ->
/// extension -> NDCG. Used directly by sweep() so the file is parsed once.
inline RunReport run_on_loaded(const RatingDataset& loaded, const RunConfig& cfg) {
    cfg.validate();
    RunReport report;
    report.config_echo = detail::config_echo(cfg);
    detail::Stopwatch total_watch, phase;

    if (auto warning = verify_known_dataset(loaded, cfg.format))
        report.warnings.push_back(*warning);
    report.stats.duplicate_warnings = loaded.duplicate_count;

    RatingDataset train, test;
    try {
        SplitSpec spec{cfg.n_train, cfg.min_test, cfg.seed};
        RatingDataset filtered = filter_min_ratings(loaded, spec);
        report.stats.users = filtered.user_count;
        report.stats.items = filtered.item_count;
        report.stats.items_with_ratings = filtered.items_with_ratings();
        report.stats.ratings = filtered.ratings.size();
        std::tie(train, test) = split_per_user(filtered, spec);
        report.stats.train_ratings = train.ratings.size();
        report.stats.test_ratings = test.ratings.size();
        if (!cfg.dump_split_path.empty()) write_split_manifest(cfg.dump_split_path, train, test);
    } catch (const std::exception& e) {
        throw PipelineError("split", e.what());
    }
    report.eval.timings.split = phase.lap();

    RunConfig resolved = cfg;
    if (cfg.mu_pim_preset) {
        if (report.stats.users == 0) throw PipelineError("config", "pim preset needs a non-empty dataset");
        resolved.model.mu_bar = 1e4 * static_cast<double>(report.stats.items) / static_cast<double>(report.stats.users);
    }
    report.mu_bar_used = resolved.model.mu_bar;

    SparseMatrix train_rows;
    WeightGraph graph;
    try {
        train_rows = to_csr(train, Orientation::user_rows);
        if (train_rows.nnz() == 0) throw std::runtime_error("empty training matrix after split");
        graph = build_weight_matrix(train_rows, resolved.knn, resolved.threads);
        if (!cfg.dump_graph_path.empty()) {
            write_weight_graph_csv(cfg.dump_graph_path, graph);
            nlohmann::json sidecar = {{"t", graph.t},
                                      {"k", resolved.knn.k},
                                      {"D", resolved.knn.max_comparisons},
                                      {"m", graph.w.rows()},
                                      {"nnz", graph.w.nnz()}};
            std::ofstream side(cfg.dump_graph_path + ".json", std::ios::binary);
            side << sidecar.dump(2) << "\n";
        }
    } catch (const std::exception& e) {
        throw PipelineError("graph", e.what());
    }
    report.bandwidth_used = graph.t;
    report.eval.timings.graph = phase.lap();

    CompletedMatrix completed;
    try {
        if (resolved.model.localized)
            completed = localized_extension(graph, train_rows, resolved.model, resolved.threads);
        else
            completed = harmonic_extension(train_rows, resolved.knn, resolved.model, resolved.threads, &graph);
        if (!cfg.dump_predictions_path.empty())
            detail::write_predictions_csv(cfg.dump_predictions_path, completed, test);
    } catch (const std::exception& e) {
        throw PipelineError("solve", e.what());
    }
    report.eval.timings.solve = phase.lap();

    try {
        PhaseSeconds timings = report.eval.timings;
        report.eval = evaluate(completed, test, cfg.k_cutoff, cfg.threads);
        report.eval.timings = timings;
    } catch (const std::exception& e) {
        throw PipelineError("eval", e.what());
    }
    report.eval.timings.eval = phase.lap();
    report.total_seconds = total_watch.lap();
    return report;
}

inline RunReport run(const RunConfig& cfg) {
    cfg.validate();
    detail::Stopwatch load_watch;
    RatingDataset loaded;
    try {
        loaded = load_movielens(cfg.data_path, cfg.format);
    } catch (const std::exception& e) {
        throw PipelineError("load", e.what());
    }
    double load_seconds = load_watch.lap();

    RunReport report = run_on_loaded(loaded, cfg);
    report.eval.timings.load = load_seconds;
    report.total_seconds += load_seconds;

    if (!cfg.output_path.empty()) {
        std::ofstream out(cfg.output_path, std::ios::binary);
        if (!out) throw PipelineError("report", "cannot write '" + cfg.output_path + "'");
        out << report.to_json().dump(2) << "\n";
    }
    return report;
}

struct SweepRow {
    index_t k = 0;
    index_t max_comparisons = 0;
    double mean_ndcg = 0.0;
    double seconds = 0.0;
    bool skipped = false;
    std::string reason;
};

/// One pipeline run per (k, D) grid pair, reusing the loaded dataset. Pairs
/// with k > D are recorded as skipped instead of failing the sweep.
inline std::vector<SweepRow> sweep(const RunConfig& base, const std::vector<index_t>& ks,
                                   const std::vector<index_t>& ds) {
    RatingDataset loaded = load_movielens(base.data_path, base.format);
    std::vector<SweepRow> rows;
    for (index_t k : ks) {
        for (index_t d : ds) {
            SweepRow row;
            row.k = k;
            row.max_comparisons = d;
            if (k > d) {
                row.skipped = true;
                row.reason = "k > D";
                rows.push_back(row);
                continue;
            }
            RunConfig cfg = base;
            cfg.knn.k = k;
            cfg.knn.max_comparisons = d;
            detail::Stopwatch watch;
            RunReport report = run_on_loaded(loaded, cfg);
            row.mean_ndcg = report.eval.mean_ndcg;
            row.seconds = watch.lap();
            rows.push_back(row);
        }
    }
    return rows;
}

inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
    std::string out = "k,D,mean_ndcg,seconds\n";
    for (const SweepRow& row : rows) {
        out += std::to_string(row.k) + "," + std::to_string(row.max_comparisons) + ",";
        if (row.skipped) {
            out += "skipped(" + row.reason + "),";
            out += "0\n";
        } else {
            char buf[64];
            std::snprintf(buf, sizeof(buf), "%.6f,%.3f\n", row.mean_ndcg, row.seconds);
            out += buf;
        }
    }
    return out;
}

} // namespace ldm
