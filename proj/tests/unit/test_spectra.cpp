#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "eigloci/spectra.hpp"

using namespace eigloci;

namespace {

// p(x) = x^n - c_1 x^{n-1} - ... - c_n and p'(x), plain Horner (no scaling tricks).
std::pair<Complex, Complex> horner(const std::vector<double>& c, Complex x) {
    Complex p = 1.0, dp = 0.0;
    for (double ci : c) {
        dp = dp * x + p;
        p = p * x - ci;
    }
    return {p, dp};
}

// Oracle: local minima of |p| on a polar grid over the Cauchy disk, polished by
// Newton, deduplicated. Independent of the simultaneous-iteration solver.
std::vector<Complex> grid_oracle(const std::vector<double>& c) {
    double bound = 0.0;
    for (double ci : c) bound = std::max(bound, std::abs(ci));
    bound += 1.0;
    const int nr = 120, na = 360;
    std::vector<double> val(static_cast<std::size_t>(nr * na));
    auto at = [&](int ir, int ia) {
        const double r = bound * (ir + 0.5) / nr;
        return std::polar(r, 2.0 * std::numbers::pi * ia / na);
    };
    for (int ir = 0; ir < nr; ++ir)
        for (int ia = 0; ia < na; ++ia) val[static_cast<std::size_t>(ir * na + ia)] = std::abs(horner(c, at(ir, ia)).first);
    std::vector<Complex> roots;
    auto add = [&](Complex z) {
        for (int it = 0; it < 100; ++it) {
            const auto [p, dp] = horner(c, z);
            if (dp == 0.0) break;
            const Complex step = p / dp;
            z -= step;
            if (std::abs(step) < 1e-15 * std::max(1.0, std::abs(z))) break;
        }
        if (std::abs(horner(c, z).first) > 1e-9 * std::max(1.0, std::pow(std::abs(z), c.size()))) return;
        for (const auto& r : roots)
            if (std::abs(r - z) < 1e-7) return;
        roots.push_back(z);
    };
    if (c.back() == 0.0) add(0.0);
    for (int ir = 0; ir < nr; ++ir)
        for (int ia = 0; ia < na; ++ia) {
            const double v = val[static_cast<std::size_t>(ir * na + ia)];
            bool minimum = true;
            for (int dr = -1; dr <= 1 && minimum; ++dr)
                for (int da = -1; da <= 1; ++da) {
                    const int jr = ir + dr, ja = (ia + da + na) % na;
                    if ((dr == 0 && da == 0) || jr < 0 || jr >= nr) continue;
                    if (val[static_cast<std::size_t>(jr * na + ja)] < v) {
                        minimum = false;
                        break;
                    }
                }
            if (minimum) add(at(ir, ia));
        }
    return roots;
}

// Minimal max-distance over all pairings, by DP over subsets (n <= 12).
double optimal_pairing_error(const std::vector<Complex>& a, const std::vector<Complex>& b) {
    const std::size_t n = a.size();
    std::vector<double> best(std::size_t{1} << n, std::numeric_limits<double>::infinity());
    best[0] = 0.0;
    for (std::size_t mask = 0; mask < best.size(); ++mask) {
        if (!std::isfinite(best[mask])) continue;
        const std::size_t i = static_cast<std::size_t>(__builtin_popcountll(mask));
        if (i == n) continue;
        for (std::size_t j = 0; j < n; ++j) {
            if (mask & (std::size_t{1} << j)) continue;
            const auto next = mask | (std::size_t{1} << j);
            best[next] = std::min(best[next], std::max(best[mask], std::abs(a[i] - b[j])));
        }
    }
    return best.back();
}

}  // namespace

TEST(Recurrence, FamilyPatterns) {
    EXPECT_EQ(recurrence_coefficients(FamilyKind::lucas_all_ones, 3), (std::vector<double>{1, 1, 1}));
    EXPECT_EQ(recurrence_coefficients(FamilyKind::pell_all_twos, 2), (std::vector<double>{2, 2}));
    EXPECT_EQ(recurrence_coefficients(FamilyKind::sparse_gap, 4), (std::vector<double>{1, 0, 1, 0}));
    EXPECT_EQ(recurrence_coefficients(FamilyKind::padovan_like, 3), (std::vector<double>{0, 1, 1}));
    EXPECT_THROW(parse_family("fibonacci_wrong"), ConfigError);
}

TEST(Eigenvalues, LucasQuadratic) {
    const auto r = eigenvalues(CompanionSpec::of(FamilyKind::lucas_all_ones, 2));
    ASSERT_EQ(r.size(), 2u);
    EXPECT_NEAR(r[0].real(), (1 + std::sqrt(5.0)) / 2, 1e-14);
    EXPECT_NEAR(r[1].real(), (1 - std::sqrt(5.0)) / 2, 1e-14);
    EXPECT_EQ(r[0].imag(), 0.0);
}

TEST(Eigenvalues, LinearCase) {
    const auto r = eigenvalues(CompanionSpec{"custom", {3.5}});
    ASSERT_EQ(r.size(), 1u);
    EXPECT_DOUBLE_EQ(r[0].real(), 3.5);
}

TEST(Eigenvalues, PadovanContainsPlasticNumber) {
    // bisection on x^3 - x - 1 over [1, 2]
    double lo = 1.0, hi = 2.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (mid * mid * mid - mid - 1.0 > 0 ? hi : lo) = mid;
    }
    const auto r = eigenvalues(CompanionSpec::of(FamilyKind::padovan_like, 3));
    bool found = false;
    for (auto z : r) found = found || (std::abs(z - Complex(lo, 0.0)) < 1e-12);
    EXPECT_TRUE(found);
}

TEST(Eigenvalues, ResidualBoundAllFamiliesAllSizes) {
    for (auto f : all_families())
        for (auto n : paper_sizes()) {
            const auto spec = CompanionSpec::of(f, n);
            const auto r = eigenvalues(spec);
            ASSERT_EQ(r.size(), n);
            for (auto z : r) {
                const double scale = std::max(1.0, std::pow(std::abs(z), static_cast<double>(n)));
                EXPECT_LE(std::abs(characteristic_residual(spec.coefficients, z)), 1e-8 * scale) << family_name(f) << " n=" << n;
            }
        }
}

TEST(Eigenvalues, MatchesGridOracleUpToTwelve) {
    for (auto f : all_families())
        for (std::size_t n = 2; n <= 12; ++n) {
            const auto spec = CompanionSpec::of(f, n);
            const auto got = eigenvalues(spec);
            const auto want = grid_oracle(spec.coefficients);
            ASSERT_EQ(want.size(), n) << "oracle incomplete for " << family_name(f) << " n=" << n;
            EXPECT_LE(optimal_pairing_error(got, want), 1e-7) << family_name(f) << " n=" << n;
        }
}

TEST(Eigenvalues, VietaIdentities) {
    for (auto f : all_families())
        for (std::size_t n : {5, 10, 20, 50}) {
            const auto spec = CompanionSpec::of(f, n);
            const auto r = eigenvalues(spec);
            Complex sum = 0.0, prod = 1.0;
            for (auto z : r) {
                sum += z;
                prod *= z;
            }
            const double c1 = spec.coefficients.front(), cn = spec.coefficients.back();
            EXPECT_NEAR(std::abs(sum - c1), 0.0, 1e-8 * std::max(1.0, std::abs(c1)));
            const double expected = (n % 2 == 1 ? 1.0 : -1.0) * cn;  // (-1)^(n-1) * (-c_n)
            EXPECT_NEAR(std::abs(prod - expected), 0.0, 1e-8 * std::max(1.0, std::abs(expected)));
        }
}

TEST(Eigenvalues, OrderedAndConjugateClosed) {
    const auto r = eigenvalues(CompanionSpec::of(FamilyKind::pell_all_twos, 40));
    for (std::size_t i = 1; i < r.size(); ++i) EXPECT_GE(std::abs(r[i - 1]), std::abs(r[i]) - 1e-12);
    for (auto z : r) {
        bool has_conj = false;
        for (auto w : r) has_conj = has_conj || (w == std::conj(z));
        EXPECT_TRUE(has_conj);
    }
}

TEST(InverseLocus, SmallExamples) {
    const auto l = inverse_locus(FamilyKind::lucas_all_ones, {2});
    ASSERT_EQ(l.cloud.size(), 2u);
    EXPECT_NEAR(l.cloud.points[0].real(), (std::sqrt(5.0) - 1) / 2, 1e-14);
    EXPECT_NEAR(l.cloud.points[1].real(), -(1 + std::sqrt(5.0)) / 2, 1e-14);

    const auto s = inverse_locus(FamilyKind::sparse_gap, {2});
    ASSERT_EQ(s.cloud.size(), 1u);
    EXPECT_NEAR(s.cloud.points[0].real(), 1.0, 1e-14);
    EXPECT_EQ(s.dropped, 1u);

    const auto e = inverse_locus(FamilyKind::lucas_all_ones, {});
    EXPECT_TRUE(e.cloud.empty());
    EXPECT_TRUE(e.empty_sizes);
    EXPECT_EQ(e.dropped, 0u);
    EXPECT_THROW(inverse_locus(FamilyKind::lucas_all_ones, {1}), ConfigError);
}

TEST(InverseLocus, NestedSizesNestMultisets) {
    const auto a = inverse_locus(FamilyKind::pell_all_twos, {10, 20});
    const auto b = inverse_locus(FamilyKind::pell_all_twos, {10, 20, 50});
    ASSERT_LE(a.cloud.size(), b.cloud.size());
    for (std::size_t i = 0; i < a.cloud.size(); ++i) EXPECT_EQ(a.cloud.points[i], b.cloud.points[i]);
}

TEST(InverseLocus, SparseGapAndPadovanShareTheirNonzeroSpectrum) {
    // For even n the padovan-like polynomial is (x + 1)/x times the sparse-gap one:
    // same spectrum with the zero root swapped for -1 (which inverts into M).
    for (std::size_t n : {4, 10, 20, 50}) {
        const auto pad = eigenvalues(CompanionSpec::of(FamilyKind::padovan_like, n));
        const auto gap = eigenvalues(CompanionSpec::of(FamilyKind::sparse_gap, n));
        std::vector<Complex> pad_rest, gap_rest;
        for (auto z : pad)
            if (std::abs(z + 1.0) > 1e-9) pad_rest.push_back(z);
        for (auto z : gap)
            if (std::abs(z) > 1e-10) gap_rest.push_back(z);
        ASSERT_EQ(pad_rest.size(), gap_rest.size()) << n;
        for (std::size_t i = 0; i < pad_rest.size(); ++i) EXPECT_LT(std::abs(pad_rest[i] - gap_rest[i]), 1e-9);
    }
}
