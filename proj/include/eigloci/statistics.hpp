/**
 * @brief Spectral decay fits, Ripley K / pair correlation, variograms,
 * Gaussian smoothing, Renyi spectra and diffusion maps.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include <Eigen/Dense>
#include <fftw3.h>

#include "align.hpp"
#include "geometry.hpp"
#include "lattice.hpp"
#include "model.hpp"
#include "parallel.hpp"
#include "random.hpp"
#include "spatial.hpp"

namespace eigloci {

// ---------------------------------------------------------------- spectra

struct PowerSpectrum {
    std::vector<double> freqs;  ///< 1 .. n/2
    std::vector<double> power;
};

/// |z^(f)|^2 of the mean-removed curve with the 1/n-normalized DFT, positive frequencies only.
inline PowerSpectrum power_spectrum(const OrderedCurve& curve) {
    const std::size_t n = curve.points.size();
    if (n < 16) throw PreconditionError("power spectrum needs at least 16 samples");
    const Complex mean = centroid(curve.points);
    auto* in = fftw_alloc_complex(n);
    auto* out = fftw_alloc_complex(n);
    for (std::size_t t = 0; t < n; ++t) {
        in[t][0] = curve.points[t].real() - mean.real();
        in[t][1] = curve.points[t].imag() - mean.imag();
    }
    // FFTW_ESTIMATE keeps planning deterministic
    fftw_plan plan = fftw_plan_dft_1d(static_cast<int>(n), in, out, FFTW_FORWARD, FFTW_ESTIMATE);
    fftw_execute(plan);
    PowerSpectrum ps;
    const double inv = 1.0 / static_cast<double>(n);
    for (std::size_t f = 1; f <= n / 2; ++f) {
        ps.freqs.push_back(static_cast<double>(f));
        const double re = out[f][0] * inv, im = out[f][1] * inv;
        ps.power.push_back(re * re + im * im);
    }
    fftw_destroy_plan(plan);
    fftw_free(in);
    fftw_free(out);
    return ps;
}

/// Middle two decades (in log10) of [f_min, f_max]; the whole range when it spans two decades or less.
inline std::pair<double, double> middle_two_decades(double f_min, double f_max) {
    const double lo = std::log10(f_min), hi = std::log10(f_max);
    if (hi - lo <= 2.0) return {f_min, f_max};
    const double mid = 0.5 * (lo + hi);
    return {std::pow(10.0, mid - 1.0), std::pow(10.0, mid + 1.0)};
}

struct SpectralFit {
    std::vector<double> freqs, power;
    double f_lo = 0.0, f_hi = 0.0;
    double alpha = 0.0;  ///< decay exponent: log P = intercept - alpha log f
    double intercept = 0.0;
    double ci_low = 0.0, ci_high = 0.0;
    std::size_t B = 0;
    std::size_t n_band = 0;
};

/**
 * Least squares of log P against log f over the band, then residual bootstrap:
 * resample residuals with replacement, add them to the fitted line, refit.
 * CI = empirical 2.5% / 97.5% quantiles of the replicate slopes.
 */
inline SpectralFit spectral_slope(const PowerSpectrum& spec, std::pair<double, double> band, std::size_t B, Seed seed,
                                  std::uint64_t stream = 0) {
    if (B < 1) throw ConfigError("bootstrap replicate count must be >= 1");
    if (spec.freqs.empty()) throw PreconditionError("empty spectrum");
    if (!(band.first > 0.0) || !(band.second > band.first)) band = middle_two_decades(spec.freqs.front(), spec.freqs.back());
    SpectralFit out;
    out.freqs = spec.freqs;
    out.power = spec.power;
    out.f_lo = band.first;
    out.f_hi = band.second;
    out.B = B;
    std::vector<double> lx, ly;
    for (std::size_t k = 0; k < spec.freqs.size(); ++k) {
        const double f = spec.freqs[k];
        if (f < band.first || f > band.second) continue;
        if (!(spec.power[k] > 0.0) || !std::isfinite(spec.power[k]))
            throw PreconditionError("non-finite or non-positive power inside the fit band");
        lx.push_back(std::log(f));
        ly.push_back(std::log(spec.power[k]));
    }
    out.n_band = lx.size();
    if (lx.size() < 8) throw PreconditionError("fewer than 8 frequencies inside the fit band");
    const auto fit = fit_line(lx, ly);
    out.alpha = -fit.slope;
    out.intercept = fit.intercept;
    std::vector<double> fitted(lx.size()), resid(lx.size());
    for (std::size_t k = 0; k < lx.size(); ++k) {
        fitted[k] = fit.intercept + fit.slope * lx[k];
        resid[k] = ly[k] - fitted[k];
    }
    std::vector<double> slopes(B);
    const Rng base(seed, stream);
    parallel_for(B, 16, [&](std::size_t b) {
        Rng rng = base.split(b);
        std::vector<double> yb(lx.size());
        for (std::size_t k = 0; k < lx.size(); ++k) yb[k] = fitted[k] + resid[rng.index(resid.size())];
        slopes[b] = -fit_line(lx, yb).slope;
    });
    std::sort(slopes.begin(), slopes.end());
    out.ci_low = quantile_sorted(slopes, 0.025);
    out.ci_high = quantile_sorted(slopes, 0.975);
    return out;
}

// ---------------------------------------------------------------- point patterns

struct RipleyK {
    std::vector<double> r, K, L;
    std::vector<std::uint8_t> flagged;  ///< r beyond the window diagonal
    double area = 0.0;
};

/// Counts ordered pairs i != j with |x_i - x_j| <= r[k], for an increasing r grid.
inline std::vector<std::uint64_t> pair_counts_within(const std::vector<Complex>& pts, const std::vector<double>& r) {
    const double rmax = r.back();
    const PointIndex index(pts);
    std::vector<std::uint64_t> total(r.size(), 0);
    const std::size_t chunks = chunk_count(pts.size(), 128);
    std::vector<std::vector<std::uint64_t>> part(chunks, std::vector<std::uint64_t>(r.size(), 0));
    parallel_chunks(pts.size(), 128, [&](std::size_t c, std::size_t b, std::size_t e) {
        auto& h = part[c];
        for (std::size_t i = b; i < e; ++i)
            for (auto j : index.radius(pts[i], rmax)) {
                if (j == i) continue;
                const double d = dist(pts[i], pts[j]);
                const auto k = static_cast<std::size_t>(std::lower_bound(r.begin(), r.end(), d) - r.begin());
                if (k < r.size()) ++h[k];
            }
    });
    for (const auto& h : part)
        for (std::size_t k = 0; k < r.size(); ++k) total[k] += h[k];
    for (std::size_t k = 1; k < r.size(); ++k) total[k] += total[k - 1];
    return total;
}

/// K(r) = A / n^2 * #{(i, j): i != j, d_ij <= r}; L(r) = sqrt(K / pi) - r. No edge correction.
inline RipleyK ripley_k(const PointCloud& cloud, const std::vector<double>& r_grid, double area = 0.0) {
    cloud.validate();
    if (cloud.size() < 2) throw PreconditionError("ripley K needs at least two points");
    if (r_grid.empty()) throw PreconditionError("empty r grid");
    for (std::size_t k = 1; k < r_grid.size(); ++k)
        if (!(r_grid[k] > r_grid[k - 1])) throw PreconditionError("r grid must be increasing");
    const Bounds b = bounding_box(cloud.points);
    if (!(area > 0.0)) area = b.area();
    if (!(area > 0.0)) throw PreconditionError("ripley K needs a positive window area");
    RipleyK out;
    out.r = r_grid;
    out.area = area;
    const auto counts = pair_counts_within(cloud.points, r_grid);
    const double n = static_cast<double>(cloud.size());
    for (std::size_t k = 0; k < r_grid.size(); ++k) {
        const double K = area / (n * n) * static_cast<double>(counts[k]);
        out.K.push_back(K);
        out.L.push_back(std::sqrt(K / std::numbers::pi) - r_grid[k]);
        out.flagged.push_back(r_grid[k] > b.diagonal() ? 1 : 0);
    }
    return out;
}

/// g(r) = (dK/dr) / (2 pi r) by centered differences; NaN at the ends and at r = 0.
inline std::vector<double> pair_correlation(const std::vector<double>& K, const std::vector<double>& r) {
    if (r.size() < 3 || K.size() != r.size()) throw PreconditionError("pair correlation needs >= 3 matching bins");
    std::vector<double> g(r.size(), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t k = 1; k + 1 < r.size(); ++k) {
        if (!(r[k] > 0.0)) continue;
        g[k] = (K[k + 1] - K[k - 1]) / (r[k + 1] - r[k - 1]) / (2.0 * std::numbers::pi * r[k]);
    }
    return g;
}

// ---------------------------------------------------------------- variograms

struct VariogramEstimate {
    std::vector<double> r;       ///< bin centers
    std::vector<double> gamma;   ///< NaN where the bin is empty
    std::vector<std::size_t> counts;
    std::vector<double> lo, hi;  ///< bootstrap 2.5% / 97.5%
    double bin_width = 0.0;
    bool detrended = false;
};

/// Residuals of an OLS plane fit z ~ a + b x + c y.
inline std::vector<double> detrend_plane(const std::vector<Complex>& loc, const std::vector<double>& z) {
    Eigen::MatrixXd A(static_cast<long>(loc.size()), 3);
    Eigen::VectorXd y(static_cast<long>(loc.size()));
    for (std::size_t i = 0; i < loc.size(); ++i) {
        A(static_cast<long>(i), 0) = 1.0;
        A(static_cast<long>(i), 1) = loc[i].real();
        A(static_cast<long>(i), 2) = loc[i].imag();
        y(static_cast<long>(i)) = z[i];
    }
    const Eigen::Vector3d beta = A.colPivHouseholderQr().solve(y);
    std::vector<double> out(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) out[i] = z[i] - (A.row(static_cast<long>(i)) * beta)(0);
    return out;
}

namespace detail {

// Bins squared half-differences by lag, then bootstraps each bin by resampling its pairs.
template <class PairFn>
VariogramEstimate variogram_core(const std::vector<Complex>& loc, double dr, double r_max, std::size_t B, Seed seed,
                                 std::uint64_t stream, bool ordered_pairs, PairFn&& sq) {
    if (!(dr > 0.0) || !(r_max > dr)) throw ConfigError("variogram needs 0 < bin width < r_max");
    const auto nbins = static_cast<std::size_t>(std::ceil(r_max / dr));
    VariogramEstimate v;
    v.bin_width = dr;
    std::vector<std::vector<double>> bins(nbins);
    const PointIndex index(loc);
    // fixed-order collection: per point, neighbors ascending
    const std::size_t chunks = chunk_count(loc.size(), 64);
    std::vector<std::vector<std::vector<double>>> part(chunks, std::vector<std::vector<double>>(nbins));
    parallel_chunks(loc.size(), 64, [&](std::size_t c, std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i)
            for (auto j : index.radius(loc[i], r_max)) {
                if (ordered_pairs ? j == i : j <= i) continue;
                const double d = dist(loc[i], loc[j]);
                const auto k = static_cast<std::size_t>(std::floor(d / dr));
                if (k < nbins) part[c][k].push_back(sq(i, j));
            }
    });
    for (auto& p : part)
        for (std::size_t k = 0; k < nbins; ++k) bins[k].insert(bins[k].end(), p[k].begin(), p[k].end());

    bool any = false;
    const Rng base(seed, stream);
    for (std::size_t k = 0; k < nbins; ++k) {
        v.r.push_back((static_cast<double>(k) + 0.5) * dr);
        v.counts.push_back(bins[k].size());
        const auto& bk = bins[k];
        if (bk.empty()) {
            v.gamma.push_back(std::numeric_limits<double>::quiet_NaN());
            v.lo.push_back(std::numeric_limits<double>::quiet_NaN());
            v.hi.push_back(std::numeric_limits<double>::quiet_NaN());
            continue;
        }
        any = true;
        double s = 0.0;
        for (double q : bk) s += q;
        v.gamma.push_back(0.5 * s / static_cast<double>(bk.size()));
        if (B == 0) {
            v.lo.push_back(v.gamma.back());
            v.hi.push_back(v.gamma.back());
            continue;
        }
        std::vector<double> reps(B);
        const Rng bin_rng = base.split(k);
        parallel_for(B, 16, [&](std::size_t b) {
            Rng rng = bin_rng.split(b);
            double t = 0.0;
            for (std::size_t q = 0; q < bk.size(); ++q) t += bk[rng.index(bk.size())];
            reps[b] = 0.5 * t / static_cast<double>(bk.size());
        });
        std::sort(reps.begin(), reps.end());
        v.lo.push_back(quantile_sorted(reps, 0.025));
        v.hi.push_back(quantile_sorted(reps, 0.975));
    }
    if (!any) throw PreconditionError("all variogram bins are empty");
    return v;
}

}  // namespace detail

/**
 * gamma(r_k) = 1/(2 N_k) sum_{i<j, d_ij in bin k} (z_i - z_j)^2 with bins
 * [k dr, (k+1) dr) centered at r_k = (k + 1/2) dr.
 */
inline VariogramEstimate semivariogram(const std::vector<Complex>& loc, std::vector<double> z, double dr, double r_max,
                                       std::size_t B, Seed seed, bool detrend = true, std::uint64_t stream = 0) {
    if (loc.size() != z.size()) throw PreconditionError("location/value count mismatch");
    if (loc.size() < 30) throw PreconditionError("semivariogram needs at least 30 samples");
    if (detrend) z = detrend_plane(loc, z);
    auto v = detail::variogram_core(loc, dr, r_max, B, seed, stream, false, [&](std::size_t i, std::size_t j) {
        const double d = z[i] - z[j];
        return d * d;
    });
    v.detrended = detrend;
    return v;
}

/**
 * Cross-variogram over ordered pairs i != j of the source locations:
 * 1/(2 N_k) sum (Z_src(i) - Z_dst(pi(j)))^2, lags measured between x_i and x_j.
 */
inline VariogramEstimate cross_variogram(const std::vector<Complex>& src_loc, const std::vector<double>& src_val,
                                         const std::vector<double>& dst_val, const std::vector<std::size_t>& pi, double dr,
                                         double r_max, std::size_t B, Seed seed, std::uint64_t stream = 0) {
    if (src_loc.size() != src_val.size() || pi.size() != src_loc.size())
        throw PreconditionError("cross-variogram inputs have mismatched lengths");
    for (auto j : pi)
        if (j >= dst_val.size()) throw PreconditionError("matching refers to a target index out of range");
    return detail::variogram_core(src_loc, dr, r_max, B, seed, stream, true, [&](std::size_t i, std::size_t j) {
        const double d = src_val[i] - dst_val[pi[j]];
        return d * d;
    });
}

/// Separable truncated-Gaussian smoothing; sigma in window units, masked cells excluded and kept masked.
inline ScalarField gaussian_smooth(const ScalarField& field, double sigma) {
    if (!(sigma >= 0.0)) throw ConfigError("smoothing sigma must be >= 0");
    if (sigma == 0.0) return field;
    ScalarField out = field;
    out.values = smooth_lattice(field.values, field.mask, field.window.nx, field.window.ny, sigma / field.window.dx(),
                                sigma / field.window.dy());
    return out;
}

// ---------------------------------------------------------------- multifractal

struct MultifractalSpectrum {
    std::vector<double> q, Dq, tau, alpha, f_alpha;
    std::vector<std::size_t> scales_used;  ///< per q, number of eps kept in the fit
    std::vector<double> eps;
};

/**
 * Renyi dimensions from box-occupancy measures on a common ladder.
 * q != 1: slope of log(sum p^q)/(q-1) against log eps; q == 1: slope of sum p log p.
 * Scales where every point falls into one box carry no scaling information and
 * are dropped; with fewer than two remaining the dimension is 0.
 */
inline MultifractalSpectrum renyi_dimensions(const PointCloud& cloud, const std::vector<double>& q_grid,
                                             std::vector<double> eps_ladder = {}) {
    cloud.validate();
    if (q_grid.empty()) throw PreconditionError("empty q grid");
    for (std::size_t k = 1; k < q_grid.size(); ++k)
        if (!(q_grid[k] > q_grid[k - 1])) throw PreconditionError("q grid must be increasing");
    if (eps_ladder.empty()) eps_ladder = default_box_ladder(cloud);
    const Bounds b = bounding_box(cloud.points);
    const double n = static_cast<double>(cloud.size());
    std::vector<std::vector<double>> probs;
    std::vector<double> used_eps;
    for (double e : eps_ladder) {
        const auto occ = box_occupancy(cloud.points, b, e);
        if (occ.size() < 2) continue;
        std::vector<double> p;
        for (auto c : occ) p.push_back(static_cast<double>(c) / n);
        probs.push_back(std::move(p));
        used_eps.push_back(e);
    }
    MultifractalSpectrum ms;
    ms.q = q_grid;
    ms.eps = used_eps;
    for (double q : q_grid) {
        std::vector<double> lx, ly;
        for (std::size_t s = 0; s < probs.size(); ++s) {
            double v = 0.0;
            if (std::abs(q - 1.0) < 1e-12) {
                for (double p : probs[s]) v += p * std::log(p);
            } else {
                double sum = 0.0;
                for (double p : probs[s]) sum += std::pow(p, q);
                v = std::log(sum) / (q - 1.0);
            }
            lx.push_back(std::log(used_eps[s]));
            ly.push_back(v);
        }
        ms.scales_used.push_back(lx.size());
        ms.Dq.push_back(lx.size() >= 2 ? fit_line(lx, ly).slope : 0.0);
    }
    const std::size_t m = q_grid.size();
    for (std::size_t k = 0; k < m; ++k) ms.tau.push_back((q_grid[k] - 1.0) * ms.Dq[k]);
    for (std::size_t k = 0; k < m; ++k) {
        double a = ms.Dq[k];
        if (m >= 2) {
            const std::size_t lo = k == 0 ? 0 : k - 1, hi = k + 1 == m ? m - 1 : k + 1;
            a = (ms.tau[hi] - ms.tau[lo]) / (q_grid[hi] - q_grid[lo]);
        }
        ms.alpha.push_back(a);
        ms.f_alpha.push_back(q_grid[k] * a - ms.tau[k]);
    }
    return ms;
}

// ---------------------------------------------------------------- diffusion maps

struct DiffusionEmbedding {
    double sigma = 0.0;
    double t = 1.0;
    std::vector<double> eigenvalues;                 ///< descending, lambda_0 = 1
    std::vector<std::vector<double>> eigenvectors;   ///< right eigenvectors psi_k of D^-1 K (psi_0 constant)
    std::vector<std::vector<double>> coordinates;    ///< lambda_k^t psi_k, k >= 1
};

/**
 * Eigenpairs of the row-stochastic operator D^{-1} K through the symmetric
 * conjugate S = D^{-1/2} K D^{-1/2}; psi_k = D^{-1/2} phi_k scaled so that
 * sum_i d_i psi_k(i)^2 = sum_i d_i, making psi_0 = 1. Signs: the entry of largest
 * magnitude (smallest index on ties) is positive.
 */
inline DiffusionEmbedding diffusion_embedding(const PointCloud& cloud, double sigma, std::size_t n_eigs, double t = 1.0) {
    cloud.validate();
    const std::size_t n = cloud.size();
    if (n_eigs < 1 || n_eigs > n) throw ConfigError("n_eigs must lie in [1, cloud size]");
    if (!(sigma > 0.0)) {
        const PointIndex index(cloud.points);
        sigma = 2.0 * median_of(nn_distances(index));
        if (!(sigma > 0.0)) throw PreconditionError("diffusion bandwidth is zero; points coincide");
    }
    Eigen::MatrixXd K(static_cast<long>(n), static_cast<long>(n));
    const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            K(static_cast<long>(i), static_cast<long>(j)) = std::exp(-dist2(cloud.points[i], cloud.points[j]) * inv2s2);
    Eigen::VectorXd d = K.rowwise().sum();
    Eigen::VectorXd dm = d.cwiseSqrt().cwiseInverse();
    Eigen::MatrixXd S = dm.asDiagonal() * K * dm.asDiagonal();
    S = 0.5 * (S + S.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
    if (es.info() != Eigen::Success)
        throw NumericalError("diffusion eigen-decomposition failed; try a larger bandwidth sigma");
    DiffusionEmbedding out;
    out.sigma = sigma;
    out.t = t;
    const double dsum = d.sum();
    for (std::size_t k = 0; k < n_eigs; ++k) {
        const long col = static_cast<long>(n - 1 - k);  // ascending order from Eigen
        const double lam = es.eigenvalues()(col);
        Eigen::VectorXd psi = dm.asDiagonal() * es.eigenvectors().col(col);
        const double norm = std::sqrt((psi.array().square() * d.array()).sum() / dsum);
        psi /= norm;
        long arg = 0;
        for (long i = 1; i < psi.size(); ++i)
            if (std::abs(psi(i)) > std::abs(psi(arg))) arg = i;
        if (psi(arg) < 0) psi = -psi;
        out.eigenvalues.push_back(lam);
        out.eigenvectors.emplace_back(psi.data(), psi.data() + psi.size());
        if (k >= 1) {
            std::vector<double> c(n);
            const double w = std::pow(lam, t);
            for (std::size_t i = 0; i < n; ++i) c[i] = w * psi(static_cast<long>(i));
            out.coordinates.push_back(std::move(c));
        }
    }
    return out;
}

/// sqrt((1/K) sum_{k=1..K} (a_k - b_k)^2), skipping the trivial lambda_0.
inline double spectral_distance(const std::vector<double>& a, const std::vector<double>& b, std::size_t K) {
    if (K < 1) throw ConfigError("spectral distance needs K >= 1");
    if (a.size() < K + 1 || b.size() < K + 1) throw PreconditionError("spectra shorter than K + 1");
    double s = 0.0;
    for (std::size_t k = 1; k <= K; ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
    return std::sqrt(s / static_cast<double>(K));
}

}  // namespace eigloci
