#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <numeric>

#include "eigloci/geometry.hpp"
#include "eigloci/random.hpp"

using namespace eigloci;

namespace {

constexpr double kPi = std::numbers::pi;

PointCloud circle(std::size_t n, double r, Complex c = {0, 0}) {
    PointCloud p;
    for (std::size_t i = 0; i < n; ++i) p.points.push_back(c + std::polar(r, 2 * kPi * static_cast<double>(i) / static_cast<double>(n)));
    return p;
}

// random cloud mirrored across the real axis
PointCloud mirrored(std::size_t half, std::uint64_t seed) {
    Rng r(Seed{seed}, 0);
    PointCloud p;
    for (std::size_t i = 0; i < half; ++i) {
        const Complex z{r.uniform(-1.0, 0.6), r.uniform(0.05, 0.9)};
        p.points.push_back(z);
        p.points.push_back(std::conj(z));
    }
    return p;
}

}  // namespace

TEST(Geometry, WrapAngleRange) {
    EXPECT_DOUBLE_EQ(wrap_angle(kPi), kPi);
    EXPECT_DOUBLE_EQ(wrap_angle(-kPi), kPi);
    EXPECT_NEAR(wrap_angle(3 * kPi / 2), -kPi / 2, 1e-15);
    EXPECT_NEAR(wrap_angle(0.1 + 4 * kPi), 0.1, 1e-14);
}

TEST(Geometry, OrderCurveClosesACircle) {
    auto c = circle(300, 0.5);
    std::swap(c.points[3], c.points[200]);
    c.points.push_back(c.points[10]);  // duplicate
    const auto oc = order_curve(c);
    EXPECT_TRUE(oc.closed);
    EXPECT_FALSE(oc.angular_fallback);
    EXPECT_EQ(oc.duplicates_removed, 1u);
    EXPECT_EQ(oc.points.size(), 300u);
    for (std::size_t i = 0; i + 1 < oc.points.size(); ++i) EXPECT_LT(std::abs(oc.points[i + 1] - oc.points[i]), 0.011);
}

TEST(Geometry, OrderCurveFallsBackOnLargeGaps) {
    PointCloud p = circle(40, 0.1);
    const auto far = circle(40, 0.1, {5.0, 0.0});
    p.points.insert(p.points.end(), far.points.begin(), far.points.end());
    const auto oc = order_curve(p);
    EXPECT_TRUE(oc.angular_fallback);
    EXPECT_EQ(oc.points.size(), 80u);
}

TEST(Curvature, CircleEstimatorsAgree) {
    const double r = 0.7;
    const auto oc = order_curve(circle(400, r));
    ASSERT_TRUE(oc.closed);
    const auto kt = curvature_turning(oc);
    ASSERT_EQ(kt.size(), 400u);
    const auto kp = curvature_polyfit(oc, 7);
    ASSERT_EQ(kp.kappa.size(), 400u);
    for (std::size_t i = 0; i < kt.size(); ++i) {
        EXPECT_NEAR(std::abs(kt[i]), 1.0 / r, 1e-3 / r);
        ASSERT_FALSE(std::isnan(kp.kappa[i]));
        EXPECT_NEAR(kp.kappa[i], std::abs(kt[i]), 0.15 * std::abs(kt[i]));
        EXPECT_NEAR(kp.kappa[i], 1.0 / r, 1e-3 / r);
    }
}

TEST(Curvature, OpenCurveLengthsAndStraightLine) {
    OrderedCurve line;
    for (int i = 0; i < 20; ++i) line.points.emplace_back(0.1 * i, 0.05 * i);
    const auto kt = curvature_turning(line);
    EXPECT_EQ(kt.size(), 18u);
    for (double k : kt) EXPECT_NEAR(k, 0.0, 1e-12);
    const auto kp = curvature_polyfit(line, 5);
    EXPECT_EQ(kp.kappa.size(), 16u);
    for (double k : kp.kappa) EXPECT_NEAR(k, 0.0, 1e-8);
    EXPECT_THROW(curvature_polyfit(line, 4), ConfigError);
}

TEST(Curvature, ConvexPolygonTotalTurningIsTwoPi) {
    Rng rng(Seed{21}, 0);
    std::vector<double> ang;
    for (int i = 0; i < 37; ++i) ang.push_back(rng.uniform(0.0, 2 * kPi));
    std::sort(ang.begin(), ang.end());
    OrderedCurve poly;
    poly.closed = true;
    // random vertices on an ellipse form a convex polygon
    for (double a : ang) poly.points.emplace_back(2.0 * std::cos(a), std::sin(a));
    const auto k = curvature_turning(poly);
    double total = 0.0;
    for (std::size_t i = 0; i < k.size(); ++i) total += k[i] * std::abs(poly.points[(i + 1) % poly.points.size()] - poly.points[i]);
    EXPECT_NEAR(total, 2 * kPi, 1e-9);
}

TEST(BoxCounting, SegmentAndSquare) {
    Rng rng(Seed{2}, 0);
    PointCloud seg, sq;
    for (int i = 0; i < 20000; ++i) {  // tilted segment
        const double t = rng.uniform();
        seg.points.emplace_back(t, 0.4 * t);
    }
    for (int i = 0; i < 40000; ++i) sq.points.emplace_back(rng.uniform(), rng.uniform());
    EXPECT_NEAR(box_dimension(seg).dimension, 1.0, 0.1);
    EXPECT_NEAR(box_dimension(sq).dimension, 2.0, 0.1);
}

TEST(BoxCounting, LadderValidation) {
    PointCloud p = circle(100, 1.0);
    EXPECT_THROW(box_dimension(p, {0.1, 0.2, 0.05, 0.01}), PreconditionError);
    EXPECT_THROW(box_dimension(p, {0.1, 0.05, 0.01}), PreconditionError);
    EXPECT_THROW(geometric_ladder(1.0, 2.0, 5), PreconditionError);
    const auto l = geometric_ladder(1.0, 0.01, 3);
    EXPECT_NEAR(l[1], 0.1, 1e-15);
}

TEST(Symmetry, ConjugateSymmetricCloudPeaksAtZero) {
    const auto p = mirrored(300, 4);
    const auto s = symmetry_scan(p);
    EXPECT_EQ(s.thetas.size(), 900u);
    EXPECT_DOUBLE_EQ(s.rho[0], 1.0);
    EXPECT_DOUBLE_EQ(s.misfit[0], 0.0);
    EXPECT_DOUBLE_EQ(s.theta_star_rho, 0.0);
    EXPECT_DOUBLE_EQ(s.theta_star_E, 0.0);
}

TEST(Symmetry, RotationMovesTheAxis) {
    const auto p = mirrored(300, 5);
    const double phi = 37.3 * kPi / 180.0;
    PointCloud q;
    for (auto z : p.points) q.points.push_back(z * std::polar(1.0, phi));
    const auto s = symmetry_scan(q);
    const double step = 0.2 * kPi / 180.0;
    EXPECT_LE(axial_angle_difference(s.theta_star_E, phi), step);
    // rho saturates at 1 over a small band around the axis (tolerance eps), so
    // its argmax is only pinned to that plateau
    std::size_t nearest = 0;
    for (std::size_t t = 0; t < s.thetas.size(); ++t)
        if (axial_angle_difference(s.thetas[t], phi) < axial_angle_difference(s.thetas[nearest], phi)) nearest = t;
    EXPECT_GE(s.rho[nearest], 0.99);
    EXPECT_LE(axial_angle_difference(s.theta_star_rho, phi), 3.0 * kPi / 180.0);
}

TEST(Symmetry, ReflectAndAxialDifference) {
    EXPECT_NEAR(std::abs(reflect({1, 2}, 0.0) - Complex(1, -2)), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(reflect({1, 0}, kPi / 2) - Complex(-1, 0)), 0.0, 1e-15);
    EXPECT_NEAR(axial_angle_difference(0.1, kPi - 0.1), 0.2, 1e-15);
    EXPECT_NEAR(axial_angle_difference(0.0, kPi / 2), kPi / 2, 1e-15);
}

TEST(Orientation, PcaFindsLineDirection) {
    PointCloud line;
    for (int i = 0; i < 50; ++i) line.points.emplace_back(-0.1 * i, -0.2 * i);
    const auto o = local_pca_orientation(line, 8);
    const Complex want = Complex(1, 2) / std::sqrt(5.0);
    for (const auto& e : o) {
        EXPECT_NEAR(std::abs(e.direction - want), 0.0, 1e-10);
        EXPECT_NEAR(e.confidence, 1.0, 1e-10);
        EXPECT_FALSE(e.low_confidence);
    }
    EXPECT_EQ(canonical_axis({-1, 0}), Complex(1, 0));
    EXPECT_EQ(canonical_axis({0, -1}), Complex(0, 1));
}

TEST(Orientation, CoincidentNeighborhoodIsUndefined) {
    PointCloud p;
    for (int i = 0; i < 5; ++i) p.points.emplace_back(0.3, 0.3);
    const auto o = local_pca_orientation(p, 3);
    for (const auto& e : o) EXPECT_TRUE(e.undefined);
}
