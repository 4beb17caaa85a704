/**
 * @brief Histogram laws on a shared grid, mollification, KL divergence and the
 * KL-monotone convex flow X_{t+1} = (1 - alpha) X_t + alpha P.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "lattice.hpp"
#include "model.hpp"

namespace eigloci {

struct HistogramLaw {
    SimplexHistogram hist;
    double outside_mass = 0.0;  ///< fraction of cloud points outside the window (not binned)
    std::size_t n_inside = 0;
};

/// Square bins_per_side^2 lattice over the given bounds.
inline GridWindow bin_window(const GridWindow& bounds, std::size_t bins_per_side) {
    GridWindow w = bounds;
    w.nx = w.ny = bins_per_side;
    return w;
}

/**
 * Normalized bin counts; when floor_eps > 0 every bin receives floor_eps and
 * the vector is renormalized, making the law strictly positive.
 */
inline HistogramLaw histogram_law(const PointCloud& cloud, const GridWindow& bounds, std::size_t bins_per_side,
                                  double floor_eps = 1e-12) {
    if (cloud.empty()) throw PreconditionError("histogram of an empty cloud");
    cloud.validate();
    if (bins_per_side < 2) throw ConfigError("histogram needs at least 2 bins per side");
    if (!(floor_eps >= 0.0)) throw ConfigError("floor_eps must be >= 0");
    HistogramLaw law;
    law.hist.window = bin_window(bounds, bins_per_side);
    law.hist.window.validate();
    std::vector<double> counts(law.hist.window.cells(), 0.0);
    std::size_t outside = 0;
    for (const auto& p : cloud.points) {
        const auto c = grid_index(law.hist.window, p);
        if (!c) {
            ++outside;
            continue;
        }
        counts[c->flat(law.hist.window.nx)] += 1.0;
    }
    law.n_inside = cloud.size() - outside;
    law.outside_mass = static_cast<double>(outside) / static_cast<double>(cloud.size());
    if (law.n_inside == 0) throw PreconditionError("no cloud point falls inside the histogram window");
    const double n = static_cast<double>(law.n_inside);
    const double denom = 1.0 + floor_eps * static_cast<double>(counts.size());
    law.hist.mass.resize(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i) law.hist.mass[i] = (counts[i] / n + floor_eps) / denom;
    return law;
}

/// Exact renormalization to unit mass (compensated sum).
inline void renormalize(std::vector<double>& m) {
    double s = 0.0, c = 0.0;
    for (double x : m) {
        const double y = x - c;
        const double t = s + y;
        c = (t - s) - y;
        s = t;
    }
    if (!(s > 0.0)) throw NumericalError("cannot renormalize a zero-mass vector");
    for (double& x : m) x /= s;
}

/// Gaussian smoothing on the bin lattice (normalized edges), then renormalization.
inline SimplexHistogram mollify(const SimplexHistogram& h, double sigma_bins) {
    if (!(sigma_bins >= 0.0)) throw ConfigError("mollifier sigma must be >= 0");
    if (sigma_bins == 0.0) return h;
    SimplexHistogram out = h;
    out.mass = smooth_lattice(h.mass, {}, h.window.nx, h.window.ny, sigma_bins, sigma_bins);
    renormalize(out.mass);
    return out;
}

/// D_KL(P || X) = sum P_i log(P_i / X_i) in nats, with 0 log 0 = 0.
inline double kl_divergence(const std::vector<double>& P, const std::vector<double>& X) {
    if (P.size() != X.size()) throw PreconditionError("KL divergence of laws on different grids");
    double s = 0.0;
    for (std::size_t i = 0; i < P.size(); ++i) {
        if (P[i] == 0.0) continue;
        if (!(X[i] > 0.0)) throw NumericalError("KL divergence is infinite: X vanishes on the support of P");
        s += P[i] * std::log(P[i] / X[i]);
    }
    return s;
}

inline double total_variation(const std::vector<double>& P, const std::vector<double>& Q) {
    if (P.size() != Q.size()) throw PreconditionError("total variation of laws on different grids");
    double s = 0.0;
    for (std::size_t i = 0; i < P.size(); ++i) s += std::abs(P[i] - Q[i]);
    return 0.5 * s;
}

inline double overlap(const std::vector<double>& P, const std::vector<double>& Q) {
    if (P.size() != Q.size()) throw PreconditionError("overlap of laws on different grids");
    double s = 0.0;
    for (std::size_t i = 0; i < P.size(); ++i) s += std::min(P[i], Q[i]);
    return s;
}

inline double l1_distance(const std::vector<double>& P, const std::vector<double>& Q) { return 2.0 * total_variation(P, Q); }

struct FlowTrace {
    double alpha = 0.1;
    std::size_t T = 0;
    std::vector<double> kl_series;   ///< D_KL(P || X_t), t = 0..T
    std::vector<double> l1_series;   ///< ||X_t - P||_1
    SimplexHistogram X_final;
    double closed_form_error = 0.0;  ///< max_t max_i |X_t - (P + (1-alpha)^t (X_0 - P))|
    std::size_t contraction_violations = 0;  ///< steps with KL_{t+1} > (1-alpha) KL_t + 1e-12
    std::size_t monotonicity_violations = 0;  ///< steps with KL_{t+1} >= KL_t while KL_t > 1e-15
};

inline FlowTrace gi_flow(const SimplexHistogram& X0, const SimplexHistogram& P, double alpha, std::size_t T) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("flow step alpha must lie in (0, 1]");
    if (T < 1) throw ConfigError("flow length T must be >= 1");
    if (!(X0.window == P.window) || X0.size() != P.size()) throw PreconditionError("flow laws live on different grids");
    for (std::size_t i = 0; i < P.size(); ++i)
        if (!(X0.mass[i] > 0.0) || !(P.mass[i] > 0.0)) throw PreconditionError("flow laws must be strictly positive");
    FlowTrace tr;
    tr.alpha = alpha;
    tr.T = T;
    std::vector<double> X = X0.mass;
    tr.kl_series.push_back(kl_divergence(P.mass, X));
    tr.l1_series.push_back(l1_distance(X, P.mass));
    for (std::size_t t = 1; t <= T; ++t) {
        for (std::size_t i = 0; i < X.size(); ++i) X[i] = (1.0 - alpha) * X[i] + alpha * P.mass[i];
        const double decay = std::pow(1.0 - alpha, static_cast<double>(t));
        for (std::size_t i = 0; i < X.size(); ++i)
            tr.closed_form_error = std::max(tr.closed_form_error, std::abs(X[i] - (P.mass[i] + decay * (X0.mass[i] - P.mass[i]))));
        const double prev = tr.kl_series.back();
        const double kl = kl_divergence(P.mass, X);
        if (kl > (1.0 - alpha) * prev + 1e-12) ++tr.contraction_violations;
        if (prev > 1e-15 && !(kl < prev)) ++tr.monotonicity_violations;
        tr.kl_series.push_back(kl);
        tr.l1_series.push_back(l1_distance(X, P.mass));
    }
    tr.X_final = P;
    tr.X_final.mass = X;
    return tr;
}

struct GiRow {
    std::size_t bins = 0;
    double inv_n = 0.0;
    std::size_t T = 0;
    double kl = 0.0;     ///< D_KL(P_M || P_C)
    double delta = 0.0;  ///< D_KL(P_M || X_T), flow started at P_C
    double tv = 0.0;
    double overlap = 0.0;
    double outside = 0.0;
    FlowTrace trace;
};

inline GiRow gi_diagnostics(const SimplexHistogram& P_C, const SimplexHistogram& P_M, double alpha, std::size_t T,
                            double outside_mass = 0.0) {
    if (!(P_C.window == P_M.window)) throw PreconditionError("diagnostic laws live on different grids");
    GiRow row;
    row.bins = P_C.window.nx;
    row.inv_n = 1.0 / static_cast<double>(row.bins);
    row.T = T;
    row.kl = kl_divergence(P_M.mass, P_C.mass);
    row.trace = gi_flow(P_C, P_M, alpha, T);
    row.delta = row.trace.kl_series.back();
    row.tv = total_variation(P_C.mass, P_M.mass);
    row.overlap = overlap(P_C.mass, P_M.mass);
    row.outside = outside_mass;
    return row;
}

/// Pinsker: 2 KL(P || Q) >= ||P - Q||_1^2; returns the slack (>= 0 when the inequality holds).
inline double pinsker_slack(const std::vector<double>& P, const std::vector<double>& Q) {
    const double l1 = l1_distance(P, Q);
    return 2.0 * kl_divergence(P, Q) - l1 * l1;
}

}  // namespace eigloci
