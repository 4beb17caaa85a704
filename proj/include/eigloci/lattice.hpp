#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "model.hpp"

namespace eigloci {

/// Sampled Gaussian weights on offsets -r..r with r = ceil(4 sigma); unnormalized.
inline std::vector<double> gaussian_taps(double sigma_cells) {
    const long r = static_cast<long>(std::ceil(4.0 * sigma_cells));
    std::vector<double> w(static_cast<std::size_t>(2 * r + 1));
    for (long k = -r; k <= r; ++k) {
        const double t = static_cast<double>(k) / sigma_cells;
        w[static_cast<std::size_t>(k + r)] = std::exp(-0.5 * t * t);
    }
    return w;
}

namespace detail {

// One pass along x (axis 0) or y (axis 1). `weight` carries the per-cell
// inclusion weight (0 for masked cells); kernel mass that would fall outside
// the lattice or on masked cells is dropped and the remainder renormalized.
inline void smooth_axis(std::vector<double>& vw, std::vector<double>& w, std::size_t nx, std::size_t ny, int axis,
                        const std::vector<double>& taps) {
    const long r = static_cast<long>(taps.size() / 2);
    std::vector<double> out_vw(vw.size(), 0.0), out_w(w.size(), 0.0);
    const long n_line = static_cast<long>(axis == 0 ? nx : ny);
    const std::size_t lines = axis == 0 ? ny : nx;
    for (std::size_t l = 0; l < lines; ++l) {
        auto at = [&](long k) { return axis == 0 ? l * nx + static_cast<std::size_t>(k) : static_cast<std::size_t>(k) * nx + l; };
        for (long i = 0; i < n_line; ++i) {
            double s = 0.0, sw = 0.0;
            const long lo = std::max(0L, i - r), hi = std::min(n_line - 1, i + r);
            for (long k = lo; k <= hi; ++k) {
                const double t = taps[static_cast<std::size_t>(k - i + r)];
                s += t * vw[at(k)];
                sw += t * w[at(k)];
            }
            out_vw[at(i)] = s;
            out_w[at(i)] = sw;
        }
    }
    vw.swap(out_vw);
    w.swap(out_w);
}

}  // namespace detail

/**
 * Separable truncated-Gaussian smoothing of nx-by-ny row-major values with
 * normalized-convolution edges: result = (G*(v m)) / (G*m) where m is the
 * inclusion mask. Cells whose accumulated weight vanishes keep their input.
 */
inline std::vector<double> smooth_lattice(const std::vector<double>& v, const std::vector<std::uint8_t>& mask,
                                          std::size_t nx, std::size_t ny, double sigma_x_cells, double sigma_y_cells) {
    std::vector<double> w(v.size()), vw(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        w[i] = mask.empty() || !mask[i] ? 1.0 : 0.0;
        vw[i] = w[i] > 0.0 ? v[i] : 0.0;
    }
    if (sigma_x_cells > 0.0) detail::smooth_axis(vw, w, nx, ny, 0, gaussian_taps(sigma_x_cells));
    if (sigma_y_cells > 0.0) detail::smooth_axis(vw, w, nx, ny, 1, gaussian_taps(sigma_y_cells));
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = w[i] > 0.0 ? vw[i] / w[i] : v[i];
    return out;
}

}  // namespace eigloci
