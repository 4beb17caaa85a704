/**
 * @brief Curve ordering, curvature, local orientations, box counting and
 * reflection-symmetry scans.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "linalg2.hpp"
#include "model.hpp"
#include "parallel.hpp"
#include "spatial.hpp"

namespace eigloci {

struct OrderedCurve {
    std::vector<Complex> points;
    bool closed = false;
    bool angular_fallback = false;  ///< chaining stalled and the angular sort was used
    std::size_t duplicates_removed = 0;
};

/// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a) noexcept {
    constexpr double pi = std::numbers::pi;
    a = std::remainder(a, 2.0 * pi);
    if (a <= -pi) a += 2.0 * pi;
    return a;
}

inline std::vector<Complex> dedupe(const std::vector<Complex>& pts, std::size_t* removed = nullptr) {
    std::vector<std::size_t> idx(pts.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    auto key_less = [&](std::size_t a, std::size_t b) {
        if (pts[a].real() != pts[b].real()) return pts[a].real() < pts[b].real();
        if (pts[a].imag() != pts[b].imag()) return pts[a].imag() < pts[b].imag();
        return a < b;
    };
    std::sort(idx.begin(), idx.end(), key_less);
    std::vector<bool> keep(pts.size(), true);
    for (std::size_t k = 1; k < idx.size(); ++k)
        if (pts[idx[k]] == pts[idx[k - 1]]) keep[idx[k]] = false;
    std::vector<Complex> out;
    for (std::size_t i = 0; i < pts.size(); ++i)
        if (keep[i]) out.push_back(pts[i]);
    if (removed) *removed = pts.size() - out.size();
    return out;
}

/**
 * Greedy nearest-neighbor chaining from the lexicographically smallest point.
 * If any step jumps farther than `jump_factor` times the median nearest-neighbor
 * distance, the whole cloud is ordered by angle about its centroid instead.
 */
inline OrderedCurve order_curve(const PointCloud& cloud, double jump_factor = 10.0) {
    cloud.validate();
    OrderedCurve out;
    const auto pts = dedupe(cloud.points, &out.duplicates_removed);
    if (pts.size() < 3) throw PreconditionError("order_curve needs at least 3 distinct points");
    const PointIndex index(pts);
    const double med_nn = median_of(nn_distances(index));
    const double max_jump = jump_factor * med_nn;

    std::size_t start = 0;
    for (std::size_t i = 1; i < pts.size(); ++i)
        if (pts[i].real() < pts[start].real() || (pts[i].real() == pts[start].real() && pts[i].imag() < pts[start].imag()))
            start = i;

    std::vector<bool> visited(pts.size(), false);
    std::vector<std::size_t> order{start};
    visited[start] = true;
    bool stalled = false;
    for (std::size_t step = 1; step < pts.size(); ++step) {
        const Complex cur = pts[order.back()];
        // only jumps up to max_jump are acceptable, so the search radius is bounded
        auto nb = index.nearest_if(cur, [&](std::size_t j) { return !visited[j]; }, max_jump);
        if (!nb) {
            stalled = true;
            break;
        }
        visited[nb->index] = true;
        order.push_back(nb->index);
    }

    if (stalled) {
        const Complex c = centroid(pts);
        std::vector<std::size_t> idx(pts.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            const double ta = std::arg(pts[a] - c), tb = std::arg(pts[b] - c);
            if (ta != tb) return ta < tb;
            const double ra = std::abs(pts[a] - c), rb = std::abs(pts[b] - c);
            if (ra != rb) return ra < rb;
            return a < b;
        });
        order = std::move(idx);
        out.angular_fallback = true;
        out.closed = true;
    }
    out.points.reserve(order.size());
    for (auto i : order) out.points.push_back(pts[i]);
    if (!stalled) out.closed = dist(out.points.front(), out.points.back()) <= max_jump;
    return out;
}

/**
 * Signed turning-angle curvature kappa_i = wrap(theta_{i+1} - theta_i) / |z_{i+1} - z_i|.
 * Open curves give n-2 values, closed curves n.
 */
inline std::vector<double> curvature_turning(const OrderedCurve& curve) {
    const auto& z = curve.points;
    const std::size_t n = z.size();
    if (n < 3) throw PreconditionError("curvature needs at least 3 points");
    const std::size_t segs = curve.closed ? n : n - 1;
    std::vector<double> theta(segs), len(segs);
    for (std::size_t i = 0; i < segs; ++i) {
        const Complex d = z[(i + 1) % n] - z[i];
        theta[i] = std::atan2(d.imag(), d.real());
        len[i] = std::abs(d);
    }
    const std::size_t m = curve.closed ? n : n - 2;
    std::vector<double> kappa(m);
    for (std::size_t i = 0; i < m; ++i) kappa[i] = wrap_angle(theta[(i + 1) % segs] - theta[i]) / len[i];
    return kappa;
}

struct PolyfitCurvature {
    std::vector<double> kappa;         ///< unsigned; NaN where skipped
    std::vector<std::size_t> centers;  ///< curve index of each window center
    std::size_t skipped = 0;           ///< zero-speed windows
};

/**
 * Unsigned curvature from quadratic least-squares fits of x(s), y(s) against
 * arclength over k-point windows, evaluated at the window center.
 */
inline PolyfitCurvature curvature_polyfit(const OrderedCurve& curve, std::size_t k = 7) {
    const auto& z = curve.points;
    const std::size_t n = z.size();
    if (k < 3 || k % 2 == 0) throw ConfigError("polyfit window must be odd and >= 3");
    if (n < k) throw PreconditionError("curve shorter than the polyfit window");
    const std::size_t h = k / 2;
    PolyfitCurvature out;
    std::vector<std::size_t> centers;
    if (curve.closed)
        for (std::size_t i = 0; i < n; ++i) centers.push_back(i);
    else
        for (std::size_t i = h; i + h < n; ++i) centers.push_back(i);
    out.centers = centers;
    out.kappa.assign(centers.size(), std::numeric_limits<double>::quiet_NaN());

    std::vector<Complex> w(k);
    std::vector<double> s(k);
    for (std::size_t c = 0; c < centers.size(); ++c) {
        const std::size_t i = centers[c];
        for (std::size_t j = 0; j < k; ++j) w[j] = z[(i + n + j - h) % n];
        s[0] = 0.0;
        for (std::size_t j = 1; j < k; ++j) s[j] = s[j - 1] + std::abs(w[j] - w[j - 1]);
        const double s0 = s[h];
        for (auto& sj : s) sj -= s0;
        // normal equations of [1 s s^2]
        double S0 = 0, S1 = 0, S2 = 0, S3 = 0, S4 = 0;
        double X0 = 0, X1 = 0, X2 = 0, Y0 = 0, Y1 = 0, Y2 = 0;
        for (std::size_t j = 0; j < k; ++j) {
            const double t = s[j], t2 = t * t;
            S0 += 1; S1 += t; S2 += t2; S3 += t2 * t; S4 += t2 * t2;
            X0 += w[j].real(); X1 += w[j].real() * t; X2 += w[j].real() * t2;
            Y0 += w[j].imag(); Y1 += w[j].imag() * t; Y2 += w[j].imag() * t2;
        }
        const double M[3][3] = {{S0, S1, S2}, {S1, S2, S3}, {S2, S3, S4}};
        auto det3 = [](const double A[3][3]) {
            return A[0][0] * (A[1][1] * A[2][2] - A[1][2] * A[2][1]) - A[0][1] * (A[1][0] * A[2][2] - A[1][2] * A[2][0]) +
                   A[0][2] * (A[1][0] * A[2][1] - A[1][1] * A[2][0]);
        };
        const double D = det3(M);
        if (!(std::abs(D) > 0.0)) {
            ++out.skipped;
            continue;
        }
        auto solve_coef = [&](int col, double r0, double r1, double r2) {
            double A[3][3];
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b) A[a][b] = M[a][b];
            A[0][col] = r0;
            A[1][col] = r1;
            A[2][col] = r2;
            return det3(A) / D;
        };
        const double x1 = solve_coef(1, X0, X1, X2), x2 = 2.0 * solve_coef(2, X0, X1, X2);
        const double y1 = solve_coef(1, Y0, Y1, Y2), y2 = 2.0 * solve_coef(2, Y0, Y1, Y2);
        const double speed2 = x1 * x1 + y1 * y1;
        if (speed2 < 1e-14) {
            ++out.skipped;
            continue;
        }
        out.kappa[c] = std::abs(x1 * y2 - y1 * x2) / std::pow(speed2, 1.5);
    }
    return out;
}

struct Orientation {
    Complex direction{1.0, 0.0};
    double confidence = 0.0;  ///< (l1 - l2) / (l1 + l2)
    bool undefined = false;   ///< coincident neighborhood
    bool low_confidence = false;
};

/// Canonical representative of an axial direction: re > 0, or re == 0 and im >= 0.
inline Complex canonical_axis(Complex d) noexcept {
    if (d.real() < 0.0 || (d.real() == 0.0 && d.imag() < 0.0)) return -d;
    return d;
}

/// Principal direction of the covariance of the k nearest neighbors (self included) of every point.
inline std::vector<Orientation> local_pca_orientation(const PointCloud& cloud, std::size_t k = 12,
                                                     double low_confidence_below = 0.2) {
    cloud.validate();
    if (k < 2) throw ConfigError("PCA neighborhood size must be >= 2");
    const PointIndex index(cloud.points);
    std::vector<Orientation> out(cloud.size());
    parallel_for(cloud.size(), 256, [&](std::size_t i) {
        const auto nb = index.knn(cloud.points[i], k);
        Complex mean{0.0, 0.0};
        for (const auto& q : nb) mean += cloud.points[q.index];
        mean /= static_cast<double>(nb.size());
        double sxx = 0, sxy = 0, syy = 0;
        for (const auto& q : nb) {
            const Complex d = cloud.points[q.index] - mean;
            sxx += d.real() * d.real();
            sxy += d.real() * d.imag();
            syy += d.imag() * d.imag();
        }
        const auto e = sym_eig2(sxx, sxy, syy);
        Orientation o;
        const double scale = std::max(1.0, std::norm(mean));
        if (!(e.l1 + e.l2 > 1e-28 * scale)) {
            o.undefined = true;
            o.low_confidence = true;
        } else {
            o.direction = canonical_axis(e.v1);
            o.confidence = (e.l1 - e.l2) / (e.l1 + e.l2);
            o.low_confidence = o.confidence < low_confidence_below;
        }
        out[i] = o;
    });
    return out;
}

struct LineFit {
    double slope = 0.0, intercept = 0.0, r2 = 0.0;
};

inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    if (n < 2 || y.size() != n) throw PreconditionError("line fit needs at least two points");
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (!(sxx > 0.0)) throw PreconditionError("line fit with constant abscissa");
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return f;
}

/// Geometric ladder of `count` scales from `hi` down to `lo`.
inline std::vector<double> geometric_ladder(double hi, double lo, std::size_t count) {
    if (!(hi > lo) || !(lo > 0.0) || count < 2) throw PreconditionError("invalid scale ladder bounds");
    std::vector<double> out(count);
    for (std::size_t k = 0; k < count; ++k)
        out[k] = hi * std::pow(lo / hi, static_cast<double>(k) / static_cast<double>(count - 1));
    return out;
}

/// Diameter / 4 down to 4x the median nearest-neighbor spacing, 10 scales.
inline std::vector<double> default_box_ladder(const PointCloud& cloud, std::size_t count = 10) {
    const Bounds b = bounding_box(cloud.points);
    const double diam = b.diagonal();
    const PointIndex index(cloud.points);
    const double nn = median_of(nn_distances(index));
    if (!(diam / 4.0 > 4.0 * nn)) throw PreconditionError("cloud too small for a default box-counting ladder");
    return geometric_ladder(diam / 4.0, 4.0 * nn, count);
}

/// Occupancy counts per box of side eps, boxes anchored at the bounding-box corner.
inline std::vector<std::size_t> box_occupancy(const std::vector<Complex>& pts, const Bounds& b, double eps) {
    std::vector<std::uint64_t> keys(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const auto ix = static_cast<std::uint64_t>(std::floor((pts[i].real() - b.x_min) / eps));
        const auto iy = static_cast<std::uint64_t>(std::floor((pts[i].imag() - b.y_min) / eps));
        keys[i] = (ix << 32) | iy;
    }
    std::sort(keys.begin(), keys.end());
    std::vector<std::size_t> counts;
    for (std::size_t i = 0; i < keys.size();) {
        std::size_t j = i;
        while (j < keys.size() && keys[j] == keys[i]) ++j;
        counts.push_back(j - i);
        i = j;
    }
    return counts;
}

struct BoxDimension {
    double dimension = 0.0;
    double r2 = 0.0;
    std::vector<double> eps;
    std::vector<std::size_t> counts;
};

inline BoxDimension box_dimension(const PointCloud& cloud, std::vector<double> eps_ladder = {}) {
    cloud.validate();
    if (eps_ladder.empty()) eps_ladder = default_box_ladder(cloud);
    if (eps_ladder.size() < 4) throw PreconditionError("box counting needs at least 4 scales");
    for (std::size_t k = 1; k < eps_ladder.size(); ++k)
        if (!(eps_ladder[k] < eps_ladder[k - 1])) throw PreconditionError("box-counting ladder must be strictly decreasing");
    if (!(eps_ladder.back() > 0.0)) throw PreconditionError("box sizes must be positive");
    const Bounds b = bounding_box(cloud.points);
    BoxDimension out;
    out.eps = eps_ladder;
    std::vector<double> lx, ly;
    for (double e : eps_ladder) {
        const auto n = box_occupancy(cloud.points, b, e).size();
        out.counts.push_back(n);
        lx.push_back(std::log(1.0 / e));
        ly.push_back(std::log(static_cast<double>(n)));
    }
    const auto fit = fit_line(lx, ly);
    out.dimension = fit.slope;
    out.r2 = fit.r2;
    return out;
}

struct SymmetryScan {
    std::vector<double> thetas;
    std::vector<double> rho;
    std::vector<double> misfit;
    double theta_star_rho = 0.0;
    double theta_star_E = 0.0;
    double epsilon = 0.0;
};

/// Angles k*step for k = 0.. while below pi.
inline std::vector<double> theta_grid(double step_deg = 0.2) {
    std::vector<double> t;
    const double step = step_deg * std::numbers::pi / 180.0;
    for (std::size_t k = 0;; ++k) {
        const double th = static_cast<double>(k) * step;
        if (th >= std::numbers::pi - 1e-12) break;
        t.push_back(th);
    }
    return t;
}

/// Reflection across the line through 0 at angle theta: conj(z e^{-i theta}) e^{i theta}.
inline Complex reflect(Complex z, double theta) noexcept {
    const Complex r = std::polar(1.0, theta);
    return std::conj(z * std::conj(r)) * r;
}

/**
 * rho(theta): fraction of points whose reflection has a neighbor within eps;
 * E(theta): mean squared distance from each reflected point to the cloud.
 * eps <= 0 selects twice the median nearest-neighbor distance.
 */
inline SymmetryScan symmetry_scan(const PointCloud& cloud, std::vector<double> thetas = {}, double eps = 0.0) {
    cloud.validate();
    if (thetas.empty()) thetas = theta_grid();
    const PointIndex index(cloud.points);
    if (!(eps > 0.0)) eps = 2.0 * median_of(nn_distances(index));
    if (!(eps > 0.0)) throw PreconditionError("symmetry tolerance must be > 0");
    SymmetryScan s;
    s.thetas = thetas;
    s.epsilon = eps;
    s.rho.resize(thetas.size());
    s.misfit.resize(thetas.size());
    const KdTree tree(cloud.points);
    const double eps2 = eps * eps;
    parallel_for(thetas.size(), 1, [&](std::size_t t) {
        std::size_t hit = 0;
        double e = 0.0;
        for (const auto& z : cloud.points) {
            const double d2 = tree.nearest(reflect(z, thetas[t])).d2;
            hit += d2 <= eps2;
            e += d2;
        }
        s.rho[t] = static_cast<double>(hit) / static_cast<double>(cloud.size());
        s.misfit[t] = e / static_cast<double>(cloud.size());
    });
    std::size_t br = 0, be = 0;
    for (std::size_t t = 1; t < thetas.size(); ++t) {
        if (s.rho[t] > s.rho[br]) br = t;
        if (s.misfit[t] < s.misfit[be]) be = t;
    }
    s.theta_star_rho = thetas[br];
    s.theta_star_E = thetas[be];
    return s;
}

/// Distance between two axis angles modulo pi.
inline double axial_angle_difference(double a, double b) noexcept {
    double d = std::fmod(std::abs(a - b), std::numbers::pi);
    return std::min(d, std::numbers::pi - d);
}

}  // namespace eigloci
