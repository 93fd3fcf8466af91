#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace ldm {

struct SolveReport {
    int iterations = 0;
    double relative_residual = 0.0;
    bool converged = false;
    bool stagnated = false;  // residual failed to drop 10x over 50 iterations
};

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

class StagnationWatch {
public:
    bool update(double residual) {
        history_.push_back(residual);
        if (history_.size() <= kWindow) return false;
        double before = history_[history_.size() - 1 - kWindow];
        return residual > 0.1 * before;
    }

private:
    static constexpr std::size_t kWindow = 50;
    std::vector<double> history_;
};

} // namespace detail

/// Unpreconditioned BiCGStab for a general square operator, following the
/// standard Saad formulation with restarts on rho/omega breakdown. x carries
/// the warm start in and the best iterate out.
template <class Op>
SolveReport bicgstab(Op&& apply, std::span<const double> b, std::span<double> x, double tol, int maxit) {
    const std::size_t n = b.size();
    std::vector<double> r(n), r0(n), p(n), v(n), s(n), t(n), best(x.begin(), x.end());

    const double norm_b = detail::norm2(b);
    if (norm_b == 0.0) {
        std::fill(x.begin(), x.end(), 0.0);
        return {0, 0.0, true, false};
    }

    apply(std::span<const double>(x), std::span<double>(r));
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - r[i];

    double rho = 0.0, alpha = 1.0, omega = 1.0;
    double res_norm = detail::norm2(r);
    double best_res = res_norm;
    bool restart = true;
    detail::StagnationWatch watch;
    SolveReport report;

    for (int iter = 0; iter < maxit; ++iter) {
        report.iterations = iter + 1;
        if (restart) {
            r0 = r;
            p = r;
            rho = detail::dot(r0, r);
            restart = false;
            if (rho == 0.0) break;
        }

        apply(std::span<const double>(p), std::span<double>(v));
        double r0v = detail::dot(r0, v);
        if (r0v == 0.0) {
            restart = true;
            continue;
        }
        alpha = rho / r0v;
        for (std::size_t i = 0; i < n; ++i) s[i] = r[i] - alpha * v[i];

        apply(std::span<const double>(s), std::span<double>(t));
        double tt = detail::dot(t, t);
        omega = tt > 0.0 ? detail::dot(t, s) / tt : 0.0;

        for (std::size_t i = 0; i < n; ++i) x[i] += alpha * p[i] + omega * s[i];
        for (std::size_t i = 0; i < n; ++i) r[i] = s[i] - omega * t[i];

        res_norm = detail::norm2(r);
        if (res_norm < best_res) {
            best_res = res_norm;
            std::copy(x.begin(), x.end(), best.begin());
        }
        if (res_norm <= tol * norm_b) {
            report.converged = true;
            break;
        }
        if (watch.update(res_norm)) {
            report.stagnated = true;
            break;
        }

        double rho_next = detail::dot(r0, r);
        if (rho_next == 0.0 || omega == 0.0) {
            restart = true;
            continue;
        }
        double beta = (rho_next / rho) * (alpha / omega);
        for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
        rho = rho_next;
    }

    if (!report.converged) {
        std::copy(best.begin(), best.end(), x.begin());
        report.relative_residual = best_res / norm_b;
    } else {
        report.relative_residual = res_norm / norm_b;
    }
    return report;
}

/// Conjugate gradient for symmetric positive definite operators.
template <class Op>
SolveReport conjugate_gradient(Op&& apply, std::span<const double> b, std::span<double> x, double tol, int maxit) {
    const std::size_t n = b.size();
    std::vector<double> r(n), p(n), ap(n);

    const double norm_b = detail::norm2(b);
    if (norm_b == 0.0) {
        std::fill(x.begin(), x.end(), 0.0);
        return {0, 0.0, true, false};
    }

    apply(std::span<const double>(x), std::span<double>(r));
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - r[i];
    p = r;
    double rr = detail::dot(r, r);
    SolveReport report;

    for (int iter = 0; iter < maxit; ++iter) {
        report.iterations = iter + 1;
        apply(std::span<const double>(p), std::span<double>(ap));
        double pap = detail::dot(p, ap);
        if (pap <= 0.0) break;  // operator not SPD on this subspace
        double alpha = rr / pap;
        for (std::size_t i = 0; i < n; ++i) x[i] += alpha * p[i];
        for (std::size_t i = 0; i < n; ++i) r[i] -= alpha * ap[i];
        double rr_next = detail::dot(r, r);
        if (std::sqrt(rr_next) <= tol * norm_b) {
            report.converged = true;
            rr = rr_next;
            break;
        }
        double beta = rr_next / rr;
        for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
        rr = rr_next;
    }
    report.relative_residual = std::sqrt(rr) / norm_b;
    return report;
}

} // namespace ldm
