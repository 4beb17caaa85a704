/**
 * @brief Closed-form 2x2 decompositions used by alignment and distortion diagnostics.
 */
#pragma once

#include <cmath>

#include "model.hpp"

namespace eigloci {

/// A = U * diag(s1, s2) * V^T with s1 >= s2 >= 0 and U, V orthogonal.
struct Svd2 {
    Mat2 u;
    double s1 = 0.0, s2 = 0.0;
    Mat2 v;
};

inline Svd2 svd2(const Mat2& m) noexcept {
    const double e = 0.5 * (m.a + m.d);
    const double f = 0.5 * (m.a - m.d);
    const double g = 0.5 * (m.c + m.b);
    const double h = 0.5 * (m.c - m.b);
    const double q = std::hypot(e, h);
    const double r = std::hypot(f, g);
    const double a1 = std::atan2(g, f);
    const double a2 = std::atan2(h, e);
    const double theta = 0.5 * (a2 - a1);
    const double phi = 0.5 * (a2 + a1);
    Svd2 out;
    out.u = Mat2::rotation(phi);
    out.s1 = q + r;
    double sy = q - r;
    Mat2 vt = Mat2::rotation(theta);
    if (sy < 0.0) {
        sy = -sy;
        vt = Mat2{1.0, 0.0, 0.0, -1.0} * vt;
    }
    out.s2 = sy;
    out.v = vt.transpose();
    return out;
}

/// Singular values only: {s1, s2}, s1 >= s2 >= 0.
inline std::pair<double, double> singular_values2(const Mat2& m) noexcept {
    const double q = std::hypot(0.5 * (m.a + m.d), 0.5 * (m.c - m.b));
    const double r = std::hypot(0.5 * (m.a - m.d), 0.5 * (m.c + m.b));
    return {q + r, std::abs(q - r)};
}

/// Eigen-decomposition of a symmetric 2x2 [[sxx, sxy], [sxy, syy]].
struct SymEig2 {
    double l1 = 0.0, l2 = 0.0;  ///< l1 >= l2
    Complex v1{1.0, 0.0};       ///< unit eigenvector of l1
};

inline SymEig2 sym_eig2(double sxx, double sxy, double syy) noexcept {
    const double mean = 0.5 * (sxx + syy);
    const double diff = 0.5 * (sxx - syy);
    const double rad = std::hypot(diff, sxy);
    SymEig2 out{mean + rad, mean - rad, {1.0, 0.0}};
    // principal axis angle of the quadratic form
    const double ang = 0.5 * std::atan2(2.0 * sxy, sxx - syy);
    out.v1 = {std::cos(ang), std::sin(ang)};
    return out;
}

/// Inverse of a 2x2 matrix; caller checks the determinant.
inline Mat2 inverse2(const Mat2& m) noexcept {
    const double det = m.det();
    return {m.d / det, -m.b / det, -m.c / det, m.a / det};
}

}  // namespace eigloci
