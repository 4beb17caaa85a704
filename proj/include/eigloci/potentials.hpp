/**
 * @brief Logarithmic potentials of empirical measures on grids, five-point
 * Laplacians and Pearson correlation maps.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "model.hpp"
#include "parallel.hpp"

namespace eigloci {

inline double default_core_radius(const GridWindow& w) { return 0.5 * std::hypot(w.dx(), w.dy()); }

/**
 * U(z) = (1/N) sum_k log(1 / max(|z - p_k|, core)) at every cell center.
 * Cells with any source closer than `core` are masked (the kernel was floored there).
 */
inline ScalarField log_potential(const PointCloud& cloud, const GridWindow& w, double core_radius = 0.0) {
    cloud.validate();
    w.validate();
    if (!(core_radius > 0.0)) core_radius = default_core_radius(w);
    const double core2 = core_radius * core_radius;
    ScalarField f(w);
    const auto& pts = cloud.points;
    const double inv_n = 1.0 / static_cast<double>(pts.size());
    parallel_for(w.cells(), 256, [&](std::size_t c) {
        const Complex z = w.cell_center(c % w.nx, c / w.nx);
        // sum of log d^2 with one log per block of 32 factors; each factor lies in
        // [core^2, diam^2], far from under/overflow at block size 32
        double acc = 0.0;
        bool floored = false;
        std::size_t k = 0;
        while (k < pts.size()) {
            double prod = 1.0;
            const std::size_t end = std::min(pts.size(), k + 32);
            for (; k < end; ++k) {
                const double dx = z.real() - pts[k].real(), dy = z.imag() - pts[k].imag();
                double d2 = dx * dx + dy * dy;
                if (d2 < core2) {
                    d2 = core2;
                    floored = true;
                }
                prod *= d2;
            }
            acc += std::log(prod);
        }
        f.values[c] = -0.5 * acc * inv_n;
        f.mask[c] = floored ? 1 : 0;
    });
    return f;
}

/// Same kernel evaluated at arbitrary query points (no masking; flooring still applies).
inline std::vector<double> log_potential_at(const PointCloud& cloud, const std::vector<Complex>& queries, double core_radius) {
    cloud.validate();
    if (!(core_radius > 0.0)) throw ConfigError("core radius must be > 0");
    const double core2 = core_radius * core_radius;
    const auto& pts = cloud.points;
    std::vector<double> out(queries.size());
    parallel_for(queries.size(), 64, [&](std::size_t q) {
        double acc = 0.0;
        for (std::size_t k = 0; k < pts.size();) {
            double prod = 1.0;
            const std::size_t end = std::min(pts.size(), k + 32);
            for (; k < end; ++k) prod *= std::max(core2, std::norm(queries[q] - pts[k]));
            acc += std::log(prod);
        }
        out[q] = -0.5 * acc / static_cast<double>(pts.size());
    });
    return out;
}

struct PotentialPair {
    ScalarField U_locus, U_boundary, delta;
    std::vector<std::uint8_t> mask;  ///< union of both source masks
};

inline PotentialPair potential_difference(const ScalarField& a, const ScalarField& b) {
    if (!(a.window == b.window)) throw PreconditionError("potential fields live on different windows");
    PotentialPair p{a, b, ScalarField(a.window), {}};
    p.mask.resize(a.values.size());
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        p.mask[i] = (a.mask[i] || b.mask[i]) ? 1 : 0;
        p.delta.values[i] = p.mask[i] ? std::numeric_limits<double>::quiet_NaN() : a.values[i] - b.values[i];
        p.delta.mask[i] = p.mask[i];
    }
    return p;
}

/// (U_E + U_W + U_N + U_S - 4U) / h^2 on interior cells; the outer ring and cells touching a masked cell are masked.
inline ScalarField laplacian_field(const ScalarField& U) {
    const auto& w = U.window;
    if (w.nx < 3 || w.ny < 3) throw PreconditionError("laplacian needs at least 3x3 cells");
    const double h = w.dx();
    if (std::abs(w.dx() - w.dy()) > 1e-12 * std::max(w.dx(), w.dy()))
        throw ConfigError("laplacian requires square cells (dx == dy)");
    ScalarField L(w, std::numeric_limits<double>::quiet_NaN());
    std::fill(L.mask.begin(), L.mask.end(), 1);
    const double inv_h2 = 1.0 / (h * h);
    for (std::size_t iy = 1; iy + 1 < w.ny; ++iy)
        for (std::size_t ix = 1; ix + 1 < w.nx; ++ix) {
            const std::size_t i = iy * w.nx + ix;
            const std::size_t nb[5] = {i, i - 1, i + 1, i - w.nx, i + w.nx};
            bool ok = true;
            for (auto j : nb) ok = ok && !U.mask[j];
            if (!ok) continue;
            L.values[i] = (U.values[i - 1] + U.values[i + 1] + U.values[i - w.nx] + U.values[i + w.nx] - 4.0 * U.values[i]) * inv_h2;
            L.mask[i] = 0;
        }
    return L;
}

/// Field standardized to zero mean and unit variance over its unmasked cells.
inline ScalarField standardize(const ScalarField& f) {
    double s = 0.0, s2 = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < f.values.size(); ++i)
        if (!f.mask[i]) {
            s += f.values[i];
            ++n;
        }
    if (n < 2) throw PreconditionError("too few unmasked cells to standardize");
    const double mean = s / static_cast<double>(n);
    for (std::size_t i = 0; i < f.values.size(); ++i)
        if (!f.mask[i]) s2 += (f.values[i] - mean) * (f.values[i] - mean);
    const double sd = std::sqrt(s2 / static_cast<double>(n));
    if (!(sd > 0.0)) throw NumericalError("field is constant on its unmasked cells");
    ScalarField out = f;
    for (std::size_t i = 0; i < f.values.size(); ++i)
        if (!f.mask[i]) out.values[i] = (f.values[i] - mean) / sd;
    return out;
}

namespace detail {

// Pearson r over the listed cells; nullopt when either side has zero variance.
inline std::optional<double> pearson_cells(const ScalarField& A, const ScalarField& B, const std::vector<std::size_t>& cells) {
    const double n = static_cast<double>(cells.size());
    double ma = 0.0, mb = 0.0;
    for (auto i : cells) {
        ma += A.values[i];
        mb += B.values[i];
    }
    ma /= n;
    mb /= n;
    double saa = 0.0, sbb = 0.0, sab = 0.0;
    for (auto i : cells) {
        const double da = A.values[i] - ma, db = B.values[i] - mb;
        saa += da * da;
        sbb += db * db;
        sab += da * db;
    }
    const double scale_a = std::max(1.0, ma * ma) * n, scale_b = std::max(1.0, mb * mb) * n;
    if (!(saa > 1e-26 * scale_a) || !(sbb > 1e-26 * scale_b)) return std::nullopt;
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

}  // namespace detail

/// Pearson correlation over cells unmasked in A, B and `extra_mask` (if given).
inline double pearson_correlation(const ScalarField& A, const ScalarField& B, const std::vector<std::uint8_t>& extra_mask = {}) {
    if (!(A.window == B.window)) throw PreconditionError("correlated fields live on different windows");
    std::vector<std::size_t> cells;
    for (std::size_t i = 0; i < A.values.size(); ++i)
        if (!A.mask[i] && !B.mask[i] && (extra_mask.empty() || !extra_mask[i])) cells.push_back(i);
    if (cells.size() < 10) throw PreconditionError("pearson correlation needs at least 10 unmasked cells");
    auto r = detail::pearson_cells(A, B, cells);
    if (!r) throw NumericalError("correlation undefined: a field has zero variance on the mask");
    return *r;
}

/**
 * Pearson r on w x w patches whose lower-left corners step by `stride`; the value
 * is stored at the patch center. Everything else, and patches with too few
 * cells or zero variance, stays masked.
 */
inline ScalarField sliding_correlation(const ScalarField& A, const ScalarField& B, std::size_t window_cells,
                                       std::size_t stride = 0) {
    if (!(A.window == B.window)) throw PreconditionError("correlated fields live on different windows");
    if (window_cells < 4) throw ConfigError("sliding window must span at least 4 cells");
    if (stride == 0) stride = window_cells / 2;
    const auto& w = A.window;
    ScalarField out(w, std::numeric_limits<double>::quiet_NaN());
    std::fill(out.mask.begin(), out.mask.end(), 1);
    if (window_cells > w.nx || window_cells > w.ny) return out;
    std::vector<std::size_t> cells;
    for (std::size_t y0 = 0; y0 + window_cells <= w.ny; y0 += stride)
        for (std::size_t x0 = 0; x0 + window_cells <= w.nx; x0 += stride) {
            cells.clear();
            for (std::size_t y = y0; y < y0 + window_cells; ++y)
                for (std::size_t x = x0; x < x0 + window_cells; ++x) {
                    const std::size_t i = y * w.nx + x;
                    if (!A.mask[i] && !B.mask[i]) cells.push_back(i);
                }
            if (cells.size() < 10) continue;
            const auto r = detail::pearson_cells(A, B, cells);
            if (!r) continue;
            const std::size_t c = (y0 + window_cells / 2) * w.nx + (x0 + window_cells / 2);
            out.values[c] = *r;
            out.mask[c] = 0;
        }
    return out;
}

}  // namespace eigloci
