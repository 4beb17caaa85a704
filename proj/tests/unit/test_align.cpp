#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <numeric>

#include "eigloci/align.hpp"
#include "eigloci/random.hpp"

using namespace eigloci;

namespace {

PointCloud cloud(std::vector<Complex> pts) {
    PointCloud c;
    c.points = std::move(pts);
    return c;
}

PointCloud random_cloud(std::size_t n, std::uint64_t seed) {
    Rng r(Seed{seed}, 0);
    PointCloud c;
    for (std::size_t i = 0; i < n; ++i) c.points.emplace_back(r.normal(), 0.5 * r.normal());
    return c;
}

}  // namespace

TEST(Sinkhorn, TwoPointClosedForm) {
    // X = Y = {0, 1}, cost |x - y|: the plan is [[a, b], [b, a]] with
    // k = exp(-1/eps), a = 1/(2(1+k)), b = k/(2(1+k)).
    const auto X = cloud({{0, 0}, {1, 0}});
    for (double eps : {0.3, 1.0, 5.0}) {
        SinkhornOptions o;
        o.epsilon = eps;
        o.tol = 1e-14;
        const auto p = sinkhorn_plan(X, X, o);
        const double k = std::exp(-1.0 / eps);
        EXPECT_NEAR(p.at(0, 0), 1.0 / (2 * (1 + k)), 1e-12);
        EXPECT_NEAR(p.at(0, 1), k / (2 * (1 + k)), 1e-12);
        EXPECT_NEAR(p.at(1, 0), p.at(0, 1), 1e-12);
        EXPECT_NEAR(p.at(1, 1), p.at(0, 0), 1e-12);
    }
}

TEST(Sinkhorn, MarginalsAndAutomaticEpsilon) {
    const auto X = random_cloud(150, 1), Y = random_cloud(220, 2);
    const auto p = sinkhorn_plan(X, Y);
    EXPECT_TRUE(p.converged);
    const auto [er, ec] = marginal_violation(p);
    EXPECT_LE(std::max(er, ec), 1e-6);
    EXPECT_NEAR(p.epsilon, 0.01 * median_pairwise_cost(X.points, Y.points), 1e-15);
    for (double v : p.coupling) EXPECT_GE(v, 0.0);
}

TEST(Sinkhorn, SmallEpsilonStaysFiniteAndReportsNonConvergence) {
    // eps far below the cost spread: the plain kernel underflows in whole columns.
    const auto X = random_cloud(60, 3), Y = random_cloud(60, 4);
    SinkhornOptions o;
    o.epsilon = 1e-4;
    o.max_iter = 2000;
    const auto p = sinkhorn_plan(X, Y, o);
    for (double v : p.coupling) ASSERT_TRUE(std::isfinite(v));
    const auto [er, ec] = marginal_violation(p);
    EXPECT_FALSE(p.converged);
    EXPECT_EQ(p.iterations_used, 2000u);
    EXPECT_NEAR(er, p.marginal_error, 1e-15);
    EXPECT_LE(ec, 1e-12);  // columns are exact after each update
}

TEST(Sinkhorn, RejectsBadOptions) {
    const auto X = random_cloud(5, 1);
    SinkhornOptions o;
    o.max_iter = 0;
    EXPECT_THROW(sinkhorn_plan(X, X, o), ConfigError);
}

TEST(Procrustes, RecoversKnownRigidMotion) {
    const auto X = random_cloud(200, 7);
    const double th = 0.7;
    const Complex rot = std::polar(1.0, th), t{0.3, -1.1};
    PointCloud Y;
    for (auto z : X.points) Y.points.push_back(rot * z + t);
    std::vector<std::size_t> id(X.size());
    std::iota(id.begin(), id.end(), 0);
    const auto m = procrustes_align(X, Y, id);
    EXPECT_NEAR(m.rotation.a, std::cos(th), 1e-12);
    EXPECT_NEAR(m.rotation.c, std::sin(th), 1e-12);
    EXPECT_NEAR(std::abs(m.translation - t), 0.0, 1e-12);
    EXPECT_NEAR(m.residual, 0.0, 1e-10);
    EXPECT_DOUBLE_EQ(m.scale, 1.0);
}

TEST(Procrustes, BeatsRotationGridOracle) {
    const auto X = random_cloud(120, 8), Y = random_cloud(140, 9);
    std::vector<std::size_t> pi(X.size());
    for (std::size_t i = 0; i < pi.size(); ++i) pi[i] = (i * 7) % Y.size();
    const auto m = procrustes_align(X, Y, pi);
    EXPECT_NEAR(procrustes_residual(X, Y, pi, m.rotation), m.residual, 1e-10);
    double best = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 3600; ++k) {
        const double th = 2 * std::numbers::pi * k / 3600;
        const double c = std::cos(th), s = std::sin(th);
        best = std::min({best, procrustes_residual(X, Y, pi, Mat2{c, -s, s, c}),
                         procrustes_residual(X, Y, pi, Mat2{c, s, s, -c})});
    }
    EXPECT_LE(m.residual, best + 1e-12);
    EXPECT_NEAR(m.residual, best, 1e-3 * best);
    EXPECT_NEAR(std::abs(m.rotation.det()), 1.0, 1e-12);
}

TEST(Procrustes, Preconditions) {
    const auto X = cloud({{1, 1}, {1, 1}}), Y = random_cloud(3, 1);
    EXPECT_THROW(procrustes_align(X, Y, {0, 1}), PreconditionError);
    EXPECT_THROW(procrustes_align(random_cloud(2, 2), Y, {0, 5}), PreconditionError);
    EXPECT_THROW(procrustes_align(random_cloud(2, 2), Y, {0}), PreconditionError);
}

TEST(Distances, HausdorffMatchesBruteForce) {
    for (std::uint64_t s = 0; s < 5; ++s) {
        const auto A = random_cloud(50, 100 + s), B = random_cloud(50, 200 + s);
        auto directed = [](const PointCloud& P, const PointCloud& Q) {
            double h = 0.0;
            for (auto p : P.points) {
                double m = std::numeric_limits<double>::infinity();
                for (auto q : Q.points) m = std::min(m, std::abs(p - q));
                h = std::max(h, m);
            }
            return h;
        };
        EXPECT_DOUBLE_EQ(hausdorff(A, B), std::max(directed(A, B), directed(B, A)));
    }
    EXPECT_THROW(hausdorff(PointCloud{}, random_cloud(3, 1)), PreconditionError);
}

TEST(Distances, SummaryAndArgmax) {
    const auto Y = cloud({{0, 0}, {3, 0}});
    const auto A = cloud({{0, 1}, {3, 2}});
    const auto s = pointwise_distances(A, Y, {0, 1}, 4);
    EXPECT_DOUBLE_EQ(s.mean, 1.5);
    EXPECT_DOUBLE_EQ(s.max, 2.0);
    EXPECT_EQ(s.hist_counts, (std::vector<std::size_t>{0, 0, 1, 1}));
    EXPECT_DOUBLE_EQ(quantile({3, 1, 2}, 0.5), 2.0);

    TransportPlan p;
    p.n = 2;
    p.m = 3;
    p.coupling = {0.1, 0.3, 0.3, 0.5, 0.0, 0.2};
    EXPECT_EQ(argmax_matching(p), (std::vector<std::size_t>{1, 0}));
}
