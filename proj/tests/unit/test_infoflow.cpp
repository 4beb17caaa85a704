#include <gtest/gtest.h>

#include <cmath>

#include "eigloci/infoflow.hpp"
#include "eigloci/random.hpp"

using namespace eigloci;

namespace {

SimplexHistogram law(std::vector<double> m, std::size_t side) {
    SimplexHistogram h;
    h.window = GridWindow{0, 1, 0, 1, side, side};
    h.mass = std::move(m);
    return h;
}

std::vector<double> random_law(Rng& r, std::size_t n) {
    std::vector<double> p(n);
    for (auto& v : p) v = r.uniform() + 1e-3;
    renormalize(p);
    return p;
}

}  // namespace

TEST(Divergences, HandExamples) {
    const std::vector<double> P{0.5, 0.5}, Q{0.25, 0.75};
    EXPECT_NEAR(kl_divergence(P, Q), 0.5 * std::log(2.0) + 0.5 * std::log(2.0 / 3.0), 1e-15);
    EXPECT_NEAR(kl_divergence(P, Q), 0.143841, 1e-6);
    EXPECT_DOUBLE_EQ(total_variation(P, Q), 0.25);
    EXPECT_DOUBLE_EQ(overlap(P, Q), 0.75);
    EXPECT_DOUBLE_EQ(l1_distance(P, Q), 0.5);
    EXPECT_EQ(kl_divergence({0.0, 1.0}, {0.5, 0.5}), std::log(2.0));
    EXPECT_THROW(kl_divergence({0.5, 0.5}, {1.0, 0.0}), NumericalError);
    EXPECT_THROW(total_variation({1.0}, {0.5, 0.5}), PreconditionError);
}

TEST(Divergences, DisjointLawsAreMaximallyApart) {
    EXPECT_DOUBLE_EQ(total_variation({1, 0, 0, 0}, {0, 0, 0.5, 0.5}), 1.0);
    EXPECT_DOUBLE_EQ(overlap({1, 0, 0, 0}, {0, 0, 0.5, 0.5}), 0.0);
}

TEST(Divergences, PinskerAndOverlapIdentityOnRandomPairs) {
    Rng r(Seed{31}, 0);
    for (int t = 0; t < 10000; ++t) {
        const std::size_t n = 2 + r.index(30);
        const auto P = random_law(r, n), Q = random_law(r, n);
        EXPECT_GE(pinsker_slack(P, Q), -1e-12);
        EXPECT_NEAR(overlap(P, Q), 1.0 - total_variation(P, Q), 1e-12);
        EXPECT_GE(kl_divergence(P, Q), -1e-15);
    }
}

TEST(Histogram, CountsFloorAndOutside) {
    PointCloud c;
    c.points = {{0.1, 0.1}, {0.1, 0.2}, {0.9, 0.9}, {5.0, 5.0}};
    const auto h = histogram_law(c, GridWindow{0, 1, 0, 1, 1, 1}, 2, 0.0);
    EXPECT_DOUBLE_EQ(h.outside_mass, 0.25);
    EXPECT_EQ(h.n_inside, 3u);
    EXPECT_EQ(h.hist.mass, (std::vector<double>{2.0 / 3.0, 0.0, 0.0, 1.0 / 3.0}));
    const auto f = histogram_law(c, GridWindow{0, 1, 0, 1, 1, 1}, 2, 0.01);
    double s = 0.0;
    for (double m : f.hist.mass) {
        EXPECT_GT(m, 0.0);
        s += m;
    }
    EXPECT_NEAR(s, 1.0, 1e-15);
    EXPECT_NEAR(f.hist.mass[1], 0.01 / 1.04, 1e-15);
    EXPECT_THROW(histogram_law(PointCloud{}, GridWindow{0, 1, 0, 1, 1, 1}, 2), PreconditionError);
    EXPECT_THROW(histogram_law(c, GridWindow{0, 1, 0, 1, 1, 1}, 1), ConfigError);
}

TEST(Mollify, IdentityAtZeroAndMassPreserving) {
    std::vector<double> m(256, 0.0);
    m[8 * 16 + 8] = 1.0;  // far enough from the edges that the kernel is not truncated
    const auto h = law(m, 16);
    EXPECT_EQ(mollify(h, 0.0).mass, h.mass);
    const auto s = mollify(h, 1.0);
    double tot = 0.0;
    for (double v : s.mass) tot += v;
    EXPECT_NEAR(tot, 1.0, 1e-14);
    EXPECT_LT(s.mass[136], 1.0);
    EXPECT_GT(s.mass[137], 0.0);
    EXPECT_NEAR(s.mass[135], s.mass[137], 1e-15);  // symmetric kernel
    EXPECT_NEAR(s.mass[120], s.mass[137], 1e-15);
    EXPECT_THROW(mollify(h, -1.0), ConfigError);
}

TEST(Flow, ClosedFormContractionAndDecay) {
    Rng r(Seed{4}, 0);
    const auto P = law(random_law(r, 16), 4), X0 = law(random_law(r, 16), 4);
    for (double alpha : {0.05, 0.1, 0.5}) {
        const auto tr = gi_flow(X0, P, alpha, 100);
        EXPECT_LE(tr.closed_form_error, 1e-12);
        EXPECT_EQ(tr.contraction_violations, 0u);
        EXPECT_EQ(tr.monotonicity_violations, 0u);
        ASSERT_EQ(tr.kl_series.size(), 101u);
        for (std::size_t t = 0; t <= 100; ++t)
            EXPECT_NEAR(tr.l1_series[t], std::pow(1 - alpha, static_cast<double>(t)) * tr.l1_series[0], 1e-12);
    }
}

TEST(Flow, AlphaOneJumpsToTarget) {
    Rng r(Seed{5}, 0);
    const auto P = law(random_law(r, 4), 2), X0 = law(random_law(r, 4), 2);
    const auto tr = gi_flow(X0, P, 1.0, 3);
    EXPECT_NEAR(tr.kl_series[1], 0.0, 1e-15);
    EXPECT_NEAR(tr.l1_series[3], 0.0, 1e-15);
    EXPECT_THROW(gi_flow(X0, P, 0.0, 3), ConfigError);
    EXPECT_THROW(gi_flow(X0, P, 0.5, 0), ConfigError);
    EXPECT_THROW(gi_flow(law({1, 0, 0, 0}, 2), P, 0.5, 3), PreconditionError);
}

TEST(Flow, DiagnosticsRow) {
    Rng r(Seed{6}, 0);
    const auto PC = law(random_law(r, 64), 8), PM = law(random_law(r, 64), 8);
    const auto row = gi_diagnostics(PC, PM, 0.1, 25, 0.02);
    EXPECT_EQ(row.bins, 8u);
    EXPECT_DOUBLE_EQ(row.inv_n, 0.125);
    EXPECT_DOUBLE_EQ(row.kl, kl_divergence(PM.mass, PC.mass));
    EXPECT_DOUBLE_EQ(row.delta, row.trace.kl_series.back());
    EXPECT_LE(row.delta, std::pow(0.9, 25) * row.kl + 1e-12);
    EXPECT_NEAR(row.overlap, 1 - row.tv, 1e-12);
    EXPECT_DOUBLE_EQ(row.outside, 0.02);
}
