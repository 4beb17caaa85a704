/**
 * @brief Escape-time dynamics of z -> z^2 + c: distance estimator, Green function,
 * Bottcher modulus and boundary-band sampling.
 */
#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "model.hpp"
#include "parallel.hpp"
#include "random.hpp"

namespace eigloci {

struct EscapeParams {
    std::size_t max_iter = 200;
    double bailout = 1e6;

    void validate() const {
        if (max_iter < 1) throw ConfigError("max_iter must be >= 1");
        if (!(bailout >= 2.0) || !std::isfinite(bailout)) throw ConfigError("bailout must be finite and >= 2");
    }
};

struct EscapeRecord {
    bool escaped = false;
    std::size_t n_escape = 0;
    Complex z_final{0.0, 0.0};
    Complex dz_final{0.0, 0.0};
    bool saturated = false;  ///< an iterate overflowed; the last finite one is reported
};

/**
 * Critical orbit z_0 = 0, z_{k+1} = z_k^2 + c with dz_{k+1} = 2 z_k dz_k + 1.
 * Written in explicit real arithmetic so that conj(c) yields the exactly
 * conjugated orbit.
 */
inline EscapeRecord escape_orbit(Complex c, const EscapeParams& p = {}) {
    const double cr = c.real(), ci = c.imag();
    const double b2 = p.bailout * p.bailout;
    double zr = 0.0, zi = 0.0, dr = 0.0, di = 0.0;
    for (std::size_t k = 0; k < p.max_iter; ++k) {
        const double ndr = 2.0 * (zr * dr - zi * di) + 1.0;
        const double ndi = 2.0 * (zr * di + zi * dr);
        const double nzr = zr * zr - zi * zi + cr;
        const double nzi = 2.0 * zr * zi + ci;
        if (!(std::isfinite(nzr) && std::isfinite(nzi) && std::isfinite(ndr) && std::isfinite(ndi))) {
            return {true, std::max<std::size_t>(k, 1), {zr, zi}, {dr, di}, true};
        }
        zr = nzr;
        zi = nzi;
        dr = ndr;
        di = ndi;
        if (zr * zr + zi * zi > b2) return {true, k + 1, {zr, zi}, {dr, di}, false};
    }
    return {false, p.max_iter, {zr, zi}, {dr, di}, false};
}

inline double distance_from_record(const EscapeRecord& r) {
    if (!r.escaped) return 0.0;
    const double az = std::hypot(r.z_final.real(), r.z_final.imag());
    const double adz = std::hypot(r.dz_final.real(), r.dz_final.imag());
    if (adz == 0.0) return std::numeric_limits<double>::infinity();
    return az * std::log(az) / adz;
}

/// Exterior distance estimate |z_n| log|z_n| / |dz_n/dc|; 0 inside, +inf when the derivative vanishes.
inline double distance_estimate(Complex c, const EscapeParams& p = {}) { return distance_from_record(escape_orbit(c, p)); }

inline double green_from_record(const EscapeRecord& r) {
    if (!r.escaped) return 0.0;
    const double az = std::hypot(r.z_final.real(), r.z_final.imag());
    return std::ldexp(std::log(az), -static_cast<int>(r.n_escape));
}

/// g_M(c) = 2^-n log|z_n| at the first bailout crossing; 0 when bounded within the budget.
inline double green_value(Complex c, const EscapeParams& p = {}) { return green_from_record(escape_orbit(c, p)); }

/// |Phi(c)| = exp(g_M(c)).
inline double bottcher_modulus(Complex c, const EscapeParams& p = {}) { return std::exp(green_value(c, p)); }

/// Green values at the cell centers of `w` (row-major, y-outer).
inline ScalarField green_field(const GridWindow& w, const EscapeParams& p = {}) {
    w.validate();
    ScalarField f(w);
    parallel_for(w.ny, 8, [&](std::size_t iy) {
        for (std::size_t ix = 0; ix < w.nx; ++ix) f.values[iy * w.nx + ix] = green_value(w.cell_center(ix, iy), p);
    });
    return f;
}

inline GridWindow default_mandelbrot_window(std::size_t nx = 2048, std::size_t ny = 2048) {
    return {-2.2, 0.8, -1.4, 1.4, nx, ny};
}

struct BoundaryBand {
    PointCloud cloud;
    std::vector<double> distance;  ///< D(c) per retained point
    double tau = 1e-3;
    GridWindow grid;
    std::size_t n_band = 0;        ///< points with 0 < D < tau before subsampling
    std::size_t n_subsampled = 0;  ///< points returned
    bool shortfall = false;        ///< fewer band points than requested
};

/**
 * Evaluates D at every cell center, keeps 0 < D < tau, and draws `n_samples`
 * of them uniformly without replacement (ascending row-major order).
 */
inline BoundaryBand sample_boundary(const GridWindow& w, double tau, std::size_t n_samples, Seed seed,
                                    const EscapeParams& p = {}, std::uint64_t stream = 0) {
    w.validate();
    p.validate();
    if (!(tau > 0.0)) throw ConfigError("band threshold tau must be > 0");
    std::vector<std::vector<std::pair<Complex, double>>> rows(w.ny);
    parallel_for(w.ny, 4, [&](std::size_t iy) {
        auto& row = rows[iy];
        for (std::size_t ix = 0; ix < w.nx; ++ix) {
            const Complex c = w.cell_center(ix, iy);
            const double d = distance_estimate(c, p);
            if (d > 0.0 && d < tau) row.emplace_back(c, d);
        }
    });
    std::vector<std::pair<Complex, double>> band;
    for (auto& r : rows) band.insert(band.end(), r.begin(), r.end());
    if (band.empty())
        throw PreconditionError("boundary band is empty at this grid resolution; use a finer grid or a larger tau");

    BoundaryBand out;
    out.tau = tau;
    out.grid = w;
    out.n_band = band.size();
    out.cloud.label = "mandelbrot-boundary";
    out.cloud.seed = seed.value;
    Rng rng(seed, stream);
    const auto pick = sample_without_replacement(band.size(), n_samples, rng);
    out.shortfall = band.size() < n_samples;
    for (auto i : pick) {
        out.cloud.points.push_back(band[i].first);
        out.distance.push_back(band[i].second);
    }
    out.n_subsampled = out.cloud.size();
    return out;
}

}  // namespace eigloci
