/**
 * @brief Local least-squares linear maps between matched clouds and their
 * distortion measures: dilatation, Cauchy-Riemann defect, angle distortion.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

#include "align.hpp"
#include "geometry.hpp"
#include "linalg2.hpp"
#include "model.hpp"
#include "parallel.hpp"
#include "spatial.hpp"

namespace eigloci {

/// T minimizing sum |T (x_i - xbar) - (y_i - ybar)|^2; nullopt when the source spread is rank deficient.
inline std::optional<Mat2> local_linear_map(const std::vector<Complex>& src, const std::vector<Complex>& dst) {
    if (src.size() != dst.size()) throw PreconditionError("neighborhoods differ in size");
    if (src.size() < 3) throw PreconditionError("local linear map needs at least 3 points");
    const Complex ms = centroid(src), md = centroid(dst);
    double sxx = 0, sxy = 0, syy = 0;  // source scatter
    Mat2 C{0, 0, 0, 0};                // sum (y~)(x~)^T
    for (std::size_t i = 0; i < src.size(); ++i) {
        const Complex x = src[i] - ms, y = dst[i] - md;
        sxx += x.real() * x.real();
        sxy += x.real() * x.imag();
        syy += x.imag() * x.imag();
        C.a += y.real() * x.real();
        C.b += y.real() * x.imag();
        C.c += y.imag() * x.real();
        C.d += y.imag() * x.imag();
    }
    const double tr = sxx + syy;
    const double det = sxx * syy - sxy * sxy;
    if (!(det > 1e-12 * tr * tr)) return std::nullopt;
    const Mat2 Sinv{syy / det, -sxy / det, -sxy / det, sxx / det};
    return C * Sinv;
}

/// K = s1 / s2; +inf when s2 < 1e-14 s1.
inline double dilatation(const Mat2& T) {
    const auto [s1, s2] = singular_values2(T);
    if (!(s2 >= 1e-14 * s1) || s1 == 0.0) return std::numeric_limits<double>::infinity();
    return s1 / s2;
}

struct CrDefect {
    double defect = 0.0;             ///< |T - R|_F / |T|_F
    double defect_normalized = 0.0;  ///< same for T / sqrt|det T|
    bool reflection = false;         ///< det T < 0: closest orthogonal map is a reflection
};

/// Distance from T to its orthogonal polar factor R = U V^T.
inline CrDefect cr_defect(const Mat2& T) {
    CrDefect out;
    const double fro = T.frobenius();
    if (!(fro > 0.0)) throw PreconditionError("CR defect of the zero map");
    const Svd2 s = svd2(T);
    const Mat2 R = s.u * s.v.transpose();
    out.reflection = T.det() < 0.0;
    out.defect = (T - R).frobenius() / fro;
    const double dt = std::abs(T.det());
    if (dt > 0.0) {
        const Mat2 Tn = (1.0 / std::sqrt(dt)) * T;
        out.defect_normalized = (Tn - R).frobenius() / Tn.frobenius();
    } else {
        out.defect_normalized = std::numeric_limits<double>::infinity();
    }
    return out;
}

/// Angle between two lines (axial directions), folded into [0, pi/2].
inline double angle_distortion(Complex v, Complex w) {
    if (std::abs(v) == 0.0 || std::abs(w) == 0.0) throw PreconditionError("angle of an undefined direction");
    return axial_angle_difference(std::arg(v), std::arg(w));
}

struct DistortionRecord {
    std::size_t index = 0;
    Complex location{0.0, 0.0};
    double K = std::numeric_limits<double>::quiet_NaN();
    double cr = std::numeric_limits<double>::quiet_NaN();
    double cr_normalized = std::numeric_limits<double>::quiet_NaN();
    double angle = std::numeric_limits<double>::quiet_NaN();         ///< PCA line at x_i vs PCA line at y_pi(i)
    double angle_mapped = std::numeric_limits<double>::quiet_NaN();  ///< T applied to the source line vs target line
    bool reflection = false;
    bool degenerate = false;
};

/**
 * One record per source point: its k nearest source neighbors (self included)
 * and their matched targets define the local map.
 */
inline std::vector<DistortionRecord> distortion_records(const PointCloud& src, const PointCloud& dst,
                                                        const std::vector<std::size_t>& pi, std::size_t k = 12) {
    src.validate();
    dst.validate();
    if (pi.size() != src.size()) throw PreconditionError("matching length differs from source size");
    if (k < 3) throw ConfigError("distortion neighborhoods need k >= 3");
    const PointIndex index(src.points);
    const auto src_dir = local_pca_orientation(src, k);
    const auto dst_dir = local_pca_orientation(dst, k);
    std::vector<DistortionRecord> rec(src.size());
    parallel_for(src.size(), 128, [&](std::size_t i) {
        DistortionRecord r;
        r.index = i;
        r.location = src.points[i];
        const auto nb = index.knn(src.points[i], k);
        std::vector<Complex> a, b;
        for (const auto& q : nb) {
            a.push_back(src.points[q.index]);
            b.push_back(dst.points[pi[q.index]]);
        }
        const auto T = local_linear_map(a, b);
        const auto& dv = src_dir[i];
        const auto& dw = dst_dir[pi[i]];
        if (!dv.undefined && !dw.undefined) r.angle = angle_distortion(dv.direction, dw.direction);
        if (!T || !(T->frobenius() > 0.0)) {
            r.degenerate = true;
        } else {
            r.K = dilatation(*T);
            const auto cr = cr_defect(*T);
            r.cr = cr.defect;
            r.cr_normalized = cr.defect_normalized;
            r.reflection = cr.reflection;
            const Complex mapped = T->apply(dv.direction);
            if (!dv.undefined && !dw.undefined && std::abs(mapped) > 0.0) r.angle_mapped = angle_distortion(mapped, dw.direction);
        }
        rec[i] = r;
    });
    return rec;
}

struct QuantileSummary {
    double median = 0.0, q90 = 0.0, q95 = 0.0, q99 = 0.0, max = 0.0;
    std::size_t n = 0;
};

inline QuantileSummary summarize(std::vector<double> v) {
    if (v.empty()) throw PreconditionError("summary of an empty sample");
    std::sort(v.begin(), v.end());
    return {quantile_sorted(v, 0.5), quantile_sorted(v, 0.9), quantile_sorted(v, 0.95), quantile_sorted(v, 0.99), v.back(),
            v.size()};
}

struct DistortionSummary {
    QuantileSummary K, cr, cr_normalized, angle, angle_mapped;
    std::size_t valid = 0;
    std::size_t degenerate = 0;
    std::size_t infinite_K = 0;
    std::size_t reflections = 0;
    ScalarField heat;  ///< per-cell median K (masked where no record falls)
};

inline DistortionSummary distortion_summary(const std::vector<DistortionRecord>& rec, const GridWindow& heat_window,
                                            std::size_t min_records = 30) {
    DistortionSummary s;
    std::vector<double> K, cr, crn, ang, angm;
    for (const auto& r : rec) {
        if (r.degenerate) {
            ++s.degenerate;
            continue;
        }
        if (!std::isfinite(r.K)) {
            ++s.infinite_K;
            continue;
        }
        ++s.valid;
        s.reflections += r.reflection;
        K.push_back(r.K);
        cr.push_back(r.cr);
        if (std::isfinite(r.cr_normalized)) crn.push_back(r.cr_normalized);
        if (std::isfinite(r.angle)) ang.push_back(r.angle);
        if (std::isfinite(r.angle_mapped)) angm.push_back(r.angle_mapped);
    }
    if (s.valid < min_records) throw PreconditionError("fewer than " + std::to_string(min_records) + " valid distortion records");
    s.K = summarize(K);
    s.cr = summarize(cr);
    if (!crn.empty()) s.cr_normalized = summarize(crn);
    if (!ang.empty()) s.angle = summarize(ang);
    if (!angm.empty()) s.angle_mapped = summarize(angm);

    heat_window.validate();
    s.heat = ScalarField(heat_window, std::numeric_limits<double>::quiet_NaN());
    std::vector<std::vector<double>> cells(heat_window.cells());
    for (const auto& r : rec) {
        if (r.degenerate || !std::isfinite(r.K)) continue;
        if (auto c = grid_index(heat_window, r.location)) cells[c->flat(heat_window.nx)].push_back(r.K);
    }
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (cells[i].empty()) {
            s.heat.mask[i] = 1;
            continue;
        }
        s.heat.values[i] = quantile(cells[i], 0.5);
    }
    return s;
}

}  // namespace eigloci
