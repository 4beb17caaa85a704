/**
 * @brief Green-function statistics over inverse spectra, and the
 * equipotential-concentration profile along a truncation ladder.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "align.hpp"
#include "csv.hpp"
#include "mandelbrot.hpp"
#include "parallel.hpp"
#include "spectra.hpp"

namespace eigloci {

struct GreenFamilyStats {
    std::string family;
    double escaped_fraction = 0.0;
    double median_g = 0.0;
    double median_phi = 1.0;
    double g10 = 0.0, g90 = 0.0, delta_g = 0.0;
    std::size_t n_points = 0;   ///< all locus points
    std::size_t n_escaped = 0;
};

inline std::vector<double> green_values(const std::vector<Complex>& pts, const EscapeParams& p = {}) {
    p.validate();
    std::vector<double> g(pts.size());
    parallel_for(pts.size(), 256, [&](std::size_t i) { g[i] = green_value(pts[i], p); });
    return g;
}

/// Sorted g over the escaped subset (g > 0).
inline std::vector<double> escaped_sorted(const std::vector<double>& g) {
    std::vector<double> e;
    for (double v : g)
        if (v > 0.0) e.push_back(v);
    std::sort(e.begin(), e.end());
    return e;
}

inline GreenFamilyStats green_statistics(const PointCloud& locus, const EscapeParams& p = {}) {
    if (locus.empty()) throw PreconditionError("green statistics of an empty locus");
    locus.validate();
    GreenFamilyStats s;
    s.family = locus.label;
    s.n_points = locus.size();
    const auto e = escaped_sorted(green_values(locus.points, p));
    if (e.empty()) throw PreconditionError("no locus point escapes: green statistics undefined");
    s.n_escaped = e.size();
    s.escaped_fraction = static_cast<double>(e.size()) / static_cast<double>(s.n_points);
    s.median_g = quantile_sorted(e, 0.5);
    s.median_phi = std::exp(s.median_g);
    s.g10 = quantile_sorted(e, 0.1);
    s.g90 = quantile_sorted(e, 0.9);
    s.delta_g = s.g90 - s.g10;
    return s;
}

inline CsvTable green_table(const std::vector<GreenFamilyStats>& rows) {
    CsvTable t({"family", "escaped_frac", "median_g", "median_phi", "g10", "g90", "delta_g"});
    for (const auto& r : rows) t.add(r.family, r.escaped_fraction, r.median_g, r.median_phi, r.g10, r.g90, r.delta_g);
    return t;
}

/// Shortest [s_i, s_{i+m-1}] holding m = ceil((1 - eps) n) sorted samples.
inline std::pair<double, double> shortest_interval(const std::vector<double>& sorted, double mass_eps) {
    if (sorted.empty()) throw PreconditionError("shortest interval of an empty sample");
    const std::size_t n = sorted.size();
    std::size_t m = static_cast<std::size_t>(std::ceil((1.0 - mass_eps) * static_cast<double>(n) - 1e-9));
    m = std::clamp<std::size_t>(m, 1, n);
    std::size_t best = 0;
    for (std::size_t i = 1; i + m <= n; ++i)
        if (sorted[i + m - 1] - sorted[i] < sorted[best + m - 1] - sorted[best]) best = i;
    return {sorted[best], sorted[best + m - 1]};
}

struct EquipotentialLevel {
    std::size_t N = 0;
    std::size_t n_points = 0, n_escaped = 0;
    double g10 = 0.0, median = 0.0, g90 = 0.0;
    double mass_outside = 0.0;  ///< escaped mass outside [a, b]
};

struct EquipotentialProfile {
    std::string family;
    double mass_eps = 0.05;
    double tolerance = 0.002;
    std::vector<EquipotentialLevel> levels;
    double a = 0.0, b = 0.0;                    ///< interval fixed at the largest N
    double annulus_inner = 1.0, annulus_outer = 1.0;  ///< e^a, e^b
    std::vector<double> median_differences;
    bool median_stable = false;
    bool outside_nonincreasing = false;
};

/**
 * Lambda_N = union of the inverse spectra over `sizes` <= N. One locus is built
 * for the largest N and filtered per level.
 */
inline EquipotentialProfile equipotential_profile(FamilyKind family, const std::vector<std::size_t>& ladder, double mass_eps,
                                                  const std::vector<std::size_t>& sizes = paper_sizes(),
                                                  const EscapeParams& p = {}, double tolerance = 0.002) {
    if (ladder.size() < 3) throw ConfigError("equipotential ladder needs at least 3 sizes");
    for (std::size_t i = 1; i < ladder.size(); ++i)
        if (ladder[i] <= ladder[i - 1]) throw ConfigError("equipotential ladder must be increasing");
    if (!(mass_eps > 0.0 && mass_eps <= 0.1)) throw ConfigError("mass_eps must lie in (0, 0.1]");
    EquipotentialProfile prof;
    prof.family = family_name(family);
    prof.mass_eps = mass_eps;
    prof.tolerance = tolerance;

    std::vector<std::size_t> used;
    for (auto n : sizes)
        if (n <= ladder.back()) used.push_back(n);
    const auto locus = inverse_locus(family, used);
    const auto g = green_values(locus.cloud.points, p);

    std::vector<std::vector<double>> per_level(ladder.size());
    for (std::size_t L = 0; L < ladder.size(); ++L) {
        std::vector<double> sub;
        std::size_t total = 0;
        for (std::size_t i = 0; i < g.size(); ++i)
            if (locus.source_n[i] <= ladder[L]) {
                ++total;
                sub.push_back(g[i]);
            }
        per_level[L] = escaped_sorted(sub);
        if (per_level[L].empty()) throw PreconditionError("no escaped points at ladder size " + std::to_string(ladder[L]));
        EquipotentialLevel lv;
        lv.N = ladder[L];
        lv.n_points = total;
        lv.n_escaped = per_level[L].size();
        lv.g10 = quantile_sorted(per_level[L], 0.1);
        lv.median = quantile_sorted(per_level[L], 0.5);
        lv.g90 = quantile_sorted(per_level[L], 0.9);
        prof.levels.push_back(lv);
    }
    std::tie(prof.a, prof.b) = shortest_interval(per_level.back(), mass_eps);
    prof.annulus_inner = std::exp(prof.a);
    prof.annulus_outer = std::exp(prof.b);
    for (std::size_t L = 0; L < ladder.size(); ++L) {
        const auto& s = per_level[L];
        const auto lo = std::lower_bound(s.begin(), s.end(), prof.a);
        const auto hi = std::upper_bound(s.begin(), s.end(), prof.b);
        prof.levels[L].mass_outside = 1.0 - static_cast<double>(hi - lo) / static_cast<double>(s.size());
    }
    prof.median_stable = true;
    prof.outside_nonincreasing = true;
    for (std::size_t L = 1; L < ladder.size(); ++L) {
        const double d = prof.levels[L].median - prof.levels[L - 1].median;
        prof.median_differences.push_back(d);
        prof.median_stable = prof.median_stable && std::abs(d) <= tolerance;
        prof.outside_nonincreasing = prof.outside_nonincreasing && prof.levels[L].mass_outside <= prof.levels[L - 1].mass_outside + 1e-15;
    }
    return prof;
}

}  // namespace eigloci
