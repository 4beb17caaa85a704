#include <gtest/gtest.h>

#include <cmath>

#include "eigloci/potentials.hpp"
#include "eigloci/random.hpp"

using namespace eigloci;

namespace {

PointCloud ring_sources(std::size_t n, double r, std::uint64_t seed) {
    Rng rng(Seed{seed}, 0);
    PointCloud p;
    for (std::size_t i = 0; i < n; ++i) p.points.push_back(std::polar(r * rng.uniform(1.0, 1.3), rng.uniform(0.0, 6.283)));
    return p;
}

double max_abs_unmasked(const ScalarField& f) {
    double m = 0.0;
    for (std::size_t i = 0; i < f.values.size(); ++i)
        if (!f.mask[i]) m = std::max(m, std::abs(f.values[i]));
    return m;
}

}  // namespace

TEST(Potential, SingleSourceClosedForm) {
    PointCloud p;
    p.points = {{0.0, 0.0}};
    const GridWindow w{1.0, 2.0, 1.0, 2.0, 4, 4};
    const auto U = log_potential(p, w);
    for (std::size_t iy = 0; iy < 4; ++iy)
        for (std::size_t ix = 0; ix < 4; ++ix)
            EXPECT_NEAR(U.at(ix, iy), -std::log(std::abs(w.cell_center(ix, iy))), 1e-14);
}

TEST(Potential, SuperpositionOfSources) {
    const auto A = ring_sources(70, 2.0, 1), B = ring_sources(130, 2.5, 2);
    PointCloud AB = A;
    AB.points.insert(AB.points.end(), B.points.begin(), B.points.end());
    const GridWindow w{-1, 1, -1, 1, 40, 40};
    const auto ua = log_potential(A, w), ub = log_potential(B, w), uab = log_potential(AB, w);
    for (std::size_t i = 0; i < w.cells(); ++i) EXPECT_NEAR(uab.values[i], (70 * ua.values[i] + 130 * ub.values[i]) / 200, 1e-12);
}

TEST(Potential, PointQueriesAgreeWithGrid) {
    const auto A = ring_sources(100, 0.5, 3);
    const GridWindow w{-1, 1, -1, 1, 16, 16};
    const auto U = log_potential(A, w);
    std::vector<Complex> q;
    for (std::size_t iy = 0; iy < 16; ++iy)
        for (std::size_t ix = 0; ix < 16; ++ix) q.push_back(w.cell_center(ix, iy));
    const auto v = log_potential_at(A, q, default_core_radius(w));
    for (std::size_t i = 0; i < q.size(); ++i) EXPECT_NEAR(v[i], U.values[i], 1e-13);
    EXPECT_THROW(log_potential_at(A, q, 0.0), ConfigError);
}

TEST(Potential, CoreCellsAreMasked) {
    PointCloud p;
    p.points = {{0.0625, 0.0625}};
    const GridWindow w{0, 1, 0, 1, 8, 8};
    const auto U = log_potential(p, w);
    EXPECT_EQ(U.mask[0], 1);
    EXPECT_EQ(std::count(U.mask.begin(), U.mask.end(), std::uint8_t{1}), 1);
}

TEST(Laplacian, HarmonicAwayFromSourcesWithSecondOrderError) {
    // sources outside the window: U is harmonic inside, so only discretization error remains
    const auto src = ring_sources(50, 1.5, 4);
    const auto L1 = laplacian_field(log_potential(src, GridWindow{-0.5, 0.5, -0.5, 0.5, 32, 32}));
    const auto L2 = laplacian_field(log_potential(src, GridWindow{-0.5, 0.5, -0.5, 0.5, 64, 64}));
    const double e1 = max_abs_unmasked(L1), e2 = max_abs_unmasked(L2);
    EXPECT_LT(e1, 0.05);
    EXPECT_NEAR(e1 / e2, 4.0, 0.6);
}

TEST(Laplacian, LinearAndQuadraticExact) {
    const GridWindow w{0, 1, 0, 1, 10, 10};
    ScalarField a(w), b(w);
    for (std::size_t iy = 0; iy < 10; ++iy)
        for (std::size_t ix = 0; ix < 10; ++ix) {
            const auto z = w.cell_center(ix, iy);
            a.values[iy * 10 + ix] = z.real() * z.real() + 3 * z.imag();  // Laplacian 2
            b.values[iy * 10 + ix] = std::sin(z.real()) * z.imag();
        }
    const auto La = laplacian_field(a), Lb = laplacian_field(b);
    ScalarField c(w);
    for (std::size_t i = 0; i < c.values.size(); ++i) c.values[i] = 2.0 * a.values[i] - 0.5 * b.values[i];
    const auto Lc = laplacian_field(c);
    for (std::size_t i = 0; i < La.values.size(); ++i) {
        if (La.mask[i]) continue;
        EXPECT_NEAR(La.values[i], 2.0, 1e-9);
        EXPECT_NEAR(Lc.values[i], 2.0 * La.values[i] - 0.5 * Lb.values[i], 1e-9);
    }
    EXPECT_EQ(La.mask[0], 1);  // outer ring
}

TEST(Laplacian, RequiresSquareCells) {
    EXPECT_THROW(laplacian_field(ScalarField(GridWindow{0, 1, 0, 1, 10, 20})), ConfigError);
    EXPECT_THROW(laplacian_field(ScalarField(GridWindow{0, 1, 0, 1, 2, 2})), PreconditionError);
}

TEST(Correlation, AffineInvarianceAndSign) {
    const GridWindow w{0, 1, 0, 1, 12, 12};
    Rng r(Seed{5}, 0);
    ScalarField A(w), B(w);
    for (std::size_t i = 0; i < A.values.size(); ++i) {
        A.values[i] = r.normal();
        B.values[i] = 0.5 * A.values[i] + r.normal();
    }
    const double rho = pearson_correlation(A, B);
    ScalarField A2 = A, A3 = A;
    for (auto& v : A2.values) v = 3.0 * v - 7.0;
    for (auto& v : A3.values) v = -2.0 * v + 1.0;
    EXPECT_NEAR(pearson_correlation(A2, B), rho, 1e-12);
    EXPECT_NEAR(pearson_correlation(A3, B), -rho, 1e-12);
    EXPECT_NEAR(pearson_correlation(A, A), 1.0, 1e-12);
    const auto s = standardize(A);
    EXPECT_NEAR(pearson_correlation(s, B), rho, 1e-12);
    ScalarField C(w, 1.0);
    EXPECT_THROW(pearson_correlation(A, C), NumericalError);
}

TEST(Correlation, SlidingWindowOfIdenticalFieldsIsOne) {
    const GridWindow w{0, 1, 0, 1, 32, 32};
    ScalarField A(w);
    for (std::size_t i = 0; i < A.values.size(); ++i) A.values[i] = std::sin(0.37 * static_cast<double>(i));
    const auto S = sliding_correlation(A, A, 8);
    std::size_t n = 0;
    for (std::size_t i = 0; i < S.values.size(); ++i)
        if (!S.mask[i]) {
            EXPECT_NEAR(S.values[i], 1.0, 1e-12);
            ++n;
        }
    EXPECT_EQ(n, 49u);  // (32 - 8) / 4 + 1 = 7 per side
}

TEST(Potential, DifferenceMasksUnion) {
    const GridWindow w{0, 1, 0, 1, 4, 4};
    ScalarField a(w, 1.0), b(w, 3.0);
    a.mask[1] = 1;
    b.mask[2] = 1;
    const auto d = potential_difference(a, b);
    EXPECT_EQ(d.mask[1], 1);
    EXPECT_EQ(d.mask[2], 1);
    EXPECT_TRUE(std::isnan(d.delta.values[1]));
    EXPECT_DOUBLE_EQ(d.delta.values[0], -2.0);
    EXPECT_THROW(potential_difference(a, ScalarField(GridWindow{0, 2, 0, 1, 4, 4})), PreconditionError);
}
