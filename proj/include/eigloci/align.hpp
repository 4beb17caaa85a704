/**
 * @brief Entropic transport matching, Procrustes alignment, matching distances
 * and Hausdorff distance between point clouds.
 */
#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <vector>

#include "linalg2.hpp"
#include "model.hpp"
#include "parallel.hpp"
#include "spatial.hpp"

namespace eigloci {

struct SinkhornOptions {
    double epsilon = 0.0;          ///< <= 0 selects 0.01 * median pairwise cost
    double epsilon_factor = 0.01;  ///< multiplier used when epsilon is automatic
    std::size_t max_iter = 5000;
    double tol = 1e-6;
    std::size_t check_every = 10;
};

/**
 * @brief Dense coupling between clouds of sizes n and m (row-major n x m).
 */
struct TransportPlan {
    std::size_t n = 0, m = 0;
    std::vector<double> coupling;
    double epsilon = 0.0;
    std::size_t iterations_used = 0;
    double marginal_error = 0.0;
    bool converged = false;  ///< false => warning: max_iter reached with marginal_error > tol

    double at(std::size_t i, std::size_t j) const { return coupling[i * m + j]; }
};

inline double median_pairwise_cost(const std::vector<Complex>& x, const std::vector<Complex>& y) {
    std::vector<double> c(x.size() * y.size());
    parallel_for(x.size(), 64, [&](std::size_t i) {
        for (std::size_t j = 0; j < y.size(); ++j) c[i * y.size() + j] = dist(x[i], y[j]);
    });
    return median_of(std::move(c));
}

/**
 * Sinkhorn scaling with uniform marginals a = 1/n, b = 1/m and cost |x_i - y_j|.
 *
 * Stabilized by absorption: the kernel is kept as exp((f_i + g_j - C_ij)/eps)
 * for dual potentials f, g, and the scalings u, v are folded back into the
 * potentials whenever they leave [1e-50, 1e50]. This is the log-domain scheme
 * evaluated with plain multiplies between absorptions.
 */
inline TransportPlan sinkhorn_plan(const PointCloud& X, const PointCloud& Y, const SinkhornOptions& opt = {}) {
    X.validate();
    Y.validate();
    if (opt.max_iter < 1) throw ConfigError("sinkhorn max_iter must be >= 1");
    if (!(opt.tol > 0.0)) throw ConfigError("sinkhorn tol must be > 0");
    const auto& x = X.points;
    const auto& y = Y.points;
    const std::size_t n = x.size(), m = y.size();
    TransportPlan plan;
    plan.n = n;
    plan.m = m;
    double eps = opt.epsilon;
    if (!(eps > 0.0)) {
        eps = opt.epsilon_factor * median_pairwise_cost(x, y);
        if (!(eps > 0.0)) eps = 1e-3;  // all pairs coincide: any plan is optimal
    }
    if (!std::isfinite(eps)) throw ConfigError("sinkhorn epsilon must be finite");
    plan.epsilon = eps;

    const double a = 1.0 / static_cast<double>(n), b = 1.0 / static_cast<double>(m);
    std::vector<double> f(n, 0.0), g(m, 0.0), u(n, 1.0), v(m, 1.0);
    std::vector<double>& K = plan.coupling;
    K.assign(n * m, 0.0);
    constexpr std::size_t kRowGrain = 32;

    auto rebuild = [&] {
        parallel_for(n, kRowGrain, [&](std::size_t i) {
            double* row = &K[i * m];
            for (std::size_t j = 0; j < m; ++j) row[j] = std::exp((f[i] + g[j] - dist(x[i], y[j])) / eps);
        });
    };
    // One streaming pass per iteration: row sums against v give the row marginals
    // of the current plan and the new u; the same rows then accumulate K^T u_new
    // into per-chunk partials that are combined in fixed chunk order.
    const std::size_t chunks = chunk_count(n, kRowGrain);
    std::vector<std::vector<double>> part(chunks, std::vector<double>(m, 0.0));
    std::vector<double> row_marginal(n), u_new(n), Ktu(m);
    std::atomic<bool> vanished{false};
    auto fused_pass = [&] {
        vanished.store(false);
        parallel_chunks(n, kRowGrain, [&](std::size_t k, std::size_t i0, std::size_t i1) {
            auto& p = part[k];
            std::fill(p.begin(), p.end(), 0.0);
            for (std::size_t i = i0; i < i1; ++i) {
                const double* row = &K[i * m];
                double s = 0.0;
                for (std::size_t j = 0; j < m; ++j) s += row[j] * v[j];
                row_marginal[i] = u[i] * s;
                if (!(s > 0.0)) {
                    vanished.store(true);
                    u_new[i] = 1.0;
                    continue;
                }
                const double ui = a / s;
                u_new[i] = ui;
                for (std::size_t j = 0; j < m; ++j) p[j] += row[j] * ui;
            }
        });
        std::fill(Ktu.begin(), Ktu.end(), 0.0);
        for (const auto& p : part)
            for (std::size_t j = 0; j < m; ++j) Ktu[j] += p[j];
    };
    auto absorb_scalings = [&] {
        for (std::size_t i = 0; i < n; ++i) {
            f[i] += eps * std::log(u[i]);
            u[i] = 1.0;
        }
        for (std::size_t j = 0; j < m; ++j) {
            g[j] += eps * std::log(v[j]);
            v[j] = 1.0;
        }
    };
    auto absorb = [&] {
        absorb_scalings();
        rebuild();
    };
    // Exact log-domain half-steps (soft-min c-transforms), used when the
    // multiplicative kernel underflows in a whole row or column.
    auto log_step = [&] {
        absorb_scalings();
        parallel_for(n, kRowGrain, [&](std::size_t i) {
            double mx = -std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < m; ++j) mx = std::max(mx, (g[j] - dist(x[i], y[j])) / eps);
            double s = 0.0;
            for (std::size_t j = 0; j < m; ++j) s += std::exp((g[j] - dist(x[i], y[j])) / eps - mx);
            f[i] = eps * (std::log(a) - mx - std::log(s));
        });
        parallel_for(m, kRowGrain, [&](std::size_t j) {
            double mx = -std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < n; ++i) mx = std::max(mx, (f[i] - dist(x[i], y[j])) / eps);
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += std::exp((f[i] - dist(x[i], y[j])) / eps - mx);
            g[j] = eps * (std::log(b) - mx - std::log(s));
        });
        rebuild();
    };
    auto out_of_range = [](const std::vector<double>& s) {
        for (double t : s)
            if (!(t > 1e-50 && t < 1e50)) return true;
        return false;
    };

    // initial potentials: row-wise soft minimum keeps every row of the kernel O(1)
    for (std::size_t i = 0; i < n; ++i) {
        double mn = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < m; ++j) mn = std::min(mn, dist(x[i], y[j]));
        f[i] = mn;
    }
    rebuild();

    std::size_t it = 0;
    double err = std::numeric_limits<double>::infinity();
    for (;;) {
        fused_pass();
        bool column_vanished = false;
        for (double t : Ktu) column_vanished = column_vanished || !(t > 0.0);
        if (vanished.load() || column_vanished) {
            if (it == opt.max_iter) throw NumericalError("sinkhorn kernel underflow persisted to max_iter; increase epsilon");
            log_step();
            ++it;
            continue;
        }
        if (it > 0 && (it % opt.check_every == 0 || it == opt.max_iter)) {
            // columns are exact after each v-update; the violation sits in the rows
            err = 0.0;
            for (std::size_t i = 0; i < n; ++i) err = std::max(err, std::abs(row_marginal[i] - a));
            if (err <= opt.tol || it == opt.max_iter) break;
        }
        u.swap(u_new);
        for (std::size_t j = 0; j < m; ++j) v[j] = b / Ktu[j];
        ++it;
        if (out_of_range(u) || out_of_range(v)) absorb();
    }
    plan.iterations_used = it;
    plan.marginal_error = err;
    plan.converged = err <= opt.tol;

    parallel_for(n, kRowGrain, [&](std::size_t i) {
        double* row = &K[i * m];
        for (std::size_t j = 0; j < m; ++j) row[j] *= u[i] * v[j];
    });
    return plan;
}

/// Row-wise marginal violations of a plan: {max |row_i - 1/n|, max |col_j - 1/m|}.
inline std::pair<double, double> marginal_violation(const TransportPlan& p) {
    double er = 0.0, ec = 0.0;
    std::vector<double> col(p.m, 0.0);
    for (std::size_t i = 0; i < p.n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < p.m; ++j) {
            s += p.at(i, j);
            col[j] += p.at(i, j);
        }
        er = std::max(er, std::abs(s - 1.0 / static_cast<double>(p.n)));
    }
    for (double c : col) ec = std::max(ec, std::abs(c - 1.0 / static_cast<double>(p.m)));
    return {er, ec};
}

/// pi(i) = argmax_j coupling(i, j), smallest j on ties.
inline std::vector<std::size_t> argmax_matching(const TransportPlan& p) {
    std::vector<std::size_t> pi(p.n, 0);
    for (std::size_t i = 0; i < p.n; ++i) {
        double best = -1.0;
        for (std::size_t j = 0; j < p.m; ++j)
            if (p.at(i, j) > best) {
                best = p.at(i, j);
                pi[i] = j;
            }
    }
    return pi;
}

/**
 * Orthogonal Procrustes on matched pairs (x_i, y_{pi(i)}).
 *
 * With column vectors, H = sum_i y~_i x~_i^T = U S V^T and R = U V^T maximizes
 * trace(R^T H) over O(2); aligned_i = s R x~_i + mu_Y.
 */
inline MatchResult procrustes_align(const PointCloud& X, const PointCloud& Y, const std::vector<std::size_t>& pi,
                                    bool allow_scale = false) {
    X.validate();
    Y.validate();
    if (pi.size() != X.size()) throw PreconditionError("matching length differs from source cloud size");
    for (auto j : pi)
        if (j >= Y.size()) throw PreconditionError("matching refers to a target index out of range");
    const std::size_t n = X.size();
    Complex mx{0.0, 0.0}, my{0.0, 0.0};
    for (std::size_t i = 0; i < n; ++i) {
        mx += X.points[i];
        my += Y.points[pi[i]];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);

    Mat2 H{0.0, 0.0, 0.0, 0.0};
    double sx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Complex xc = X.points[i] - mx, yc = Y.points[pi[i]] - my;
        H.a += yc.real() * xc.real();
        H.b += yc.real() * xc.imag();
        H.c += yc.imag() * xc.real();
        H.d += yc.imag() * xc.imag();
        sx += std::norm(xc);
    }
    if (!(sx > 0.0)) throw PreconditionError("alignment undefined: all matched source points coincide");

    const Svd2 svd = svd2(H);
    MatchResult out;
    out.matching = pi;
    out.rotation = svd.u * svd.v.transpose();
    out.scale = allow_scale ? (svd.s1 + svd.s2) / sx : 1.0;
    out.translation = my - out.scale * out.rotation.apply(mx);
    out.aligned.label = X.label + "-aligned";
    out.aligned.seed = X.seed;
    out.aligned.points.resize(n);
    double res2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Complex xc = X.points[i] - mx;
        const Complex r = out.scale * out.rotation.apply(xc);
        out.aligned.points[i] = r + my;
        res2 += std::norm(r - (Y.points[pi[i]] - my));
        out.distances.push_back(dist(out.aligned.points[i], Y.points[pi[i]]));
    }
    out.residual = std::sqrt(res2);
    return out;
}

/// Sum of squared centered residuals for an arbitrary orthogonal R (used by the grid oracle).
inline double procrustes_residual(const PointCloud& X, const PointCloud& Y, const std::vector<std::size_t>& pi, const Mat2& R,
                                  double s = 1.0) {
    Complex mx{0.0, 0.0}, my{0.0, 0.0};
    for (std::size_t i = 0; i < pi.size(); ++i) {
        mx += X.points[i];
        my += Y.points[pi[i]];
    }
    mx /= static_cast<double>(pi.size());
    my /= static_cast<double>(pi.size());
    double r2 = 0.0;
    for (std::size_t i = 0; i < pi.size(); ++i) r2 += std::norm(s * R.apply(X.points[i] - mx) - (Y.points[pi[i]] - my));
    return std::sqrt(r2);
}

struct DistanceSummary {
    std::vector<double> distances;
    double mean = 0.0, median = 0.0, q10 = 0.0, q90 = 0.0, max = 0.0;
    std::vector<double> hist_edges;
    std::vector<std::size_t> hist_counts;
};

/// Linear-interpolation quantile of sorted data.
inline double quantile_sorted(const std::vector<double>& s, double q) {
    if (s.empty()) throw PreconditionError("quantile of an empty list");
    const double pos = q * static_cast<double>(s.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, s.size() - 1);
    const double t = pos - static_cast<double>(lo);
    return s[lo] + t * (s[hi] - s[lo]);
}

inline double quantile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    return quantile_sorted(v, q);
}

/// d_i = |y_{pi(i)} - aligned_i| with summary statistics and a histogram over [0, max].
inline DistanceSummary pointwise_distances(const PointCloud& aligned, const PointCloud& Y, const std::vector<std::size_t>& pi,
                                           std::size_t bins = 40) {
    if (pi.size() != aligned.size()) throw PreconditionError("matching length differs from aligned cloud size");
    if (aligned.empty()) throw PreconditionError("no matched pairs");
    if (bins < 1) throw ConfigError("histogram needs at least one bin");
    DistanceSummary s;
    s.distances.resize(pi.size());
    double total = 0.0;
    for (std::size_t i = 0; i < pi.size(); ++i) {
        s.distances[i] = dist(Y.points.at(pi[i]), aligned.points[i]);
        total += s.distances[i];
    }
    auto sorted = s.distances;
    std::sort(sorted.begin(), sorted.end());
    s.mean = total / static_cast<double>(sorted.size());
    s.median = quantile_sorted(sorted, 0.5);
    s.q10 = quantile_sorted(sorted, 0.1);
    s.q90 = quantile_sorted(sorted, 0.9);
    s.max = sorted.back();
    const double top = s.max > 0.0 ? s.max : 1.0;
    s.hist_edges.resize(bins + 1);
    for (std::size_t k = 0; k <= bins; ++k) s.hist_edges[k] = top * static_cast<double>(k) / static_cast<double>(bins);
    s.hist_counts.assign(bins, 0);
    for (double d : s.distances) {
        auto k = static_cast<std::size_t>(d / top * static_cast<double>(bins));
        ++s.hist_counts[std::min(k, bins - 1)];
    }
    return s;
}

/// max_a min_b |a - b|, exact.
inline double directed_hausdorff(const std::vector<Complex>& A, const PointIndex& B) {
    return parallel_reduce(
        A.size(), 256, 0.0,
        [&](std::size_t b, std::size_t e) {
            double d = 0.0;
            for (std::size_t i = b; i < e; ++i) d = std::max(d, std::sqrt(B.nearest(A[i]).d2));
            return d;
        },
        [](double x, double y) { return std::max(x, y); });
}

inline double hausdorff(const PointCloud& A, const PointCloud& B) {
    if (A.empty() || B.empty()) throw PreconditionError("hausdorff distance needs two non-empty clouds");
    A.validate();
    B.validate();
    const PointIndex ia(A.points), ib(B.points);
    return std::max(directed_hausdorff(A.points, ib), directed_hausdorff(B.points, ia));
}

}  // namespace eigloci
