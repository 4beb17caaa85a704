/**
 * @brief Generalized Lucas companion spectra and inverse eigenvalue loci.
 *
 * The companion matrix of (c_1..c_n) has the coefficients as first row and
 * ones on the subdiagonal; its characteristic polynomial is
 *     p(x) = x^n - c_1 x^{n-1} - ... - c_n.
 * Eigenvalues are obtained as roots of p with Aberth-Ehrlich iterations.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "model.hpp"
#include "parallel.hpp"

namespace eigloci {

enum class FamilyKind { lucas_all_ones, pell_all_twos, sparse_gap, padovan_like };

inline std::string family_name(FamilyKind k) {
    switch (k) {
        case FamilyKind::lucas_all_ones: return "lucas_all_ones";
        case FamilyKind::pell_all_twos: return "pell_all_twos";
        case FamilyKind::sparse_gap: return "sparse_gap";
        case FamilyKind::padovan_like: return "padovan_like";
    }
    return "unknown";
}

/// Accepts the canonical names plus the short forms lucas, pell, sparse, padovan.
inline FamilyKind parse_family(const std::string& s) {
    if (s == "lucas_all_ones" || s == "lucas") return FamilyKind::lucas_all_ones;
    if (s == "pell_all_twos" || s == "pell") return FamilyKind::pell_all_twos;
    if (s == "sparse_gap" || s == "sparse") return FamilyKind::sparse_gap;
    if (s == "padovan_like" || s == "padovan") return FamilyKind::padovan_like;
    throw ConfigError("unknown recurrence family '" + s + "'");
}

inline const std::vector<FamilyKind>& all_families() {
    static const std::vector<FamilyKind> f{FamilyKind::lucas_all_ones, FamilyKind::pell_all_twos, FamilyKind::sparse_gap,
                                           FamilyKind::padovan_like};
    return f;
}

inline std::vector<std::size_t> paper_sizes() { return {10, 20, 50, 100, 150, 200, 250, 300, 350, 400, 450, 500}; }

inline std::vector<double> recurrence_coefficients(FamilyKind family, std::size_t n) {
    if (n < 1) throw ConfigError("recurrence size must be >= 1");
    std::vector<double> c(n);
    for (std::size_t i = 1; i <= n; ++i) {
        switch (family) {
            case FamilyKind::lucas_all_ones: c[i - 1] = 1.0; break;
            case FamilyKind::pell_all_twos: c[i - 1] = 2.0; break;
            case FamilyKind::sparse_gap: c[i - 1] = (i % 2 == 1) ? 1.0 : 0.0; break;
            case FamilyKind::padovan_like: c[i - 1] = (i == 1) ? 0.0 : 1.0; break;
        }
    }
    return c;
}

struct CompanionSpec {
    std::string family;  ///< label used in error messages
    std::vector<double> coefficients;

    std::size_t n() const noexcept { return coefficients.size(); }

    static CompanionSpec of(FamilyKind family, std::size_t n) {
        return {family_name(family), recurrence_coefficients(family, n)};
    }
};

/// |p(x)| for p(x) = x^n - c_1 x^{n-1} - ... - c_n by plain Horner evaluation.
inline double characteristic_residual(const std::vector<double>& c, Complex x) {
    Complex p{1.0, 0.0};
    for (double ck : c) p = p * x - ck;
    return std::abs(p);
}

namespace detail {

// Newton ratio p(z)/p'(z) for a monic polynomial a[0]=1, a[1..m]; also returns a
// backward-error test. For |z| > 1 the reversed polynomial is evaluated at 1/z.
struct NewtonEval {
    Complex ratio;
    bool small;  ///< |p(z)| within the rounding-level bound
};

inline NewtonEval newton_ratio(const std::vector<double>& a, Complex z) {
    const std::size_t m = a.size() - 1;
    constexpr double u = std::numeric_limits<double>::epsilon() * 0.5;
    const double bound_factor = 4.0 * static_cast<double>(m + 1) * u;
    if (std::abs(z) <= 1.0) {
        Complex p = a[0], dp{0.0, 0.0};
        double beta = std::abs(a[0]);
        const double az = std::abs(z);
        for (std::size_t k = 1; k <= m; ++k) {
            dp = dp * z + p;
            p = p * z + a[k];
            beta = beta * az + std::abs(a[k]);
        }
        return {p / dp, std::abs(p) <= bound_factor * beta};
    }
    // q(w) = sum_k a_k w^k with w = 1/z, so p(z) = z^m q(w)
    const Complex w = 1.0 / z;
    const double aw = std::abs(w);
    Complex q = a[m], dq{0.0, 0.0};
    double beta = std::abs(a[m]);
    for (std::size_t k = m; k-- > 0;) {
        dq = dq * w + q;
        q = q * w + a[k];
        beta = beta * aw + std::abs(a[k]);
    }
    // p/p' = z q / (m q - w q')
    const Complex denom = static_cast<double>(m) * q - w * dq;
    return {z * q / denom, std::abs(q) <= bound_factor * beta};
}

// Orders roots: modulus descending, then argument ascending in (-pi, pi].
inline void sort_roots(std::vector<Complex>& r) {
    std::sort(r.begin(), r.end(), [](Complex x, Complex y) {
        const double ax = std::abs(x), ay = std::abs(y);
        if (ax != ay) return ax > ay;
        return std::arg(x) < std::arg(y);
    });
}

// Polynomials with real coefficients have conjugate-closed spectra; make that exact.
inline void enforce_conjugate_pairs(std::vector<Complex>& roots, const std::string& where) {
    std::vector<Complex> out;
    std::vector<std::size_t> upper, lower;
    for (std::size_t i = 0; i < roots.size(); ++i) {
        const Complex z = roots[i];
        const double tol = 1e-9 * std::max(1.0, std::abs(z));
        if (std::abs(z.imag()) <= tol)
            out.emplace_back(z.real(), 0.0);
        else if (z.imag() > 0)
            upper.push_back(i);
        else
            lower.push_back(i);
    }
    if (upper.size() != lower.size()) throw NumericalError("root conjugate pairing failed for " + where);
    std::vector<bool> used(lower.size(), false);
    for (std::size_t ui : upper) {
        const Complex z = roots[ui];
        std::size_t best = lower.size();
        double bd = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < lower.size(); ++k) {
            if (used[k]) continue;
            const double d = std::abs(std::conj(roots[lower[k]]) - z);
            if (d < bd) {
                bd = d;
                best = k;
            }
        }
        if (best == lower.size() || bd > 1e-6 * std::max(1.0, std::abs(z)))
            throw NumericalError("root conjugate pairing failed for " + where);
        used[best] = true;
        const Complex avg = 0.5 * (z + std::conj(roots[lower[best]]));
        out.push_back(avg);
        out.push_back(std::conj(avg));
    }
    roots.swap(out);
}

}  // namespace detail

struct RootOptions {
    std::size_t max_sweeps = 1000;
};

/**
 * All n roots of x^n - c_1 x^{n-1} - ... - c_n with multiplicity, ordered by
 * descending modulus then ascending argument.
 */
inline std::vector<Complex> eigenvalues(const CompanionSpec& spec, const RootOptions& opt = {}) {
    const std::size_t n = spec.n();
    const std::string where = "family " + spec.family + ", n=" + std::to_string(n);
    if (n < 1) throw PreconditionError("companion size must be >= 1");
    for (double ck : spec.coefficients)
        if (!std::isfinite(ck)) throw PreconditionError("non-finite recurrence coefficient for " + where);

    // exact zero roots: trailing zero coefficients
    std::size_t zeros = 0;
    while (zeros < n && spec.coefficients[n - 1 - zeros] == 0.0) ++zeros;
    const std::size_t m = n - zeros;
    std::vector<Complex> roots;
    roots.reserve(n);

    if (m == 1) {
        roots.emplace_back(spec.coefficients[0], 0.0);
    } else if (m > 1) {
        std::vector<double> a(m + 1);
        a[0] = 1.0;
        for (std::size_t k = 1; k <= m; ++k) a[k] = -spec.coefficients[k - 1];

        // Cauchy bound: unique positive root of x^m - sum |a_k| x^{m-k}
        double lo = 0.0, hi = 1.0;
        auto cauchy = [&](double x) {
            double s = 1.0;
            for (std::size_t k = 1; k <= m; ++k) s = s * x - std::abs(a[k]);
            return s;
        };
        while (cauchy(hi) <= 0.0) hi *= 2.0;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            (cauchy(mid) > 0.0 ? hi : lo) = mid;
        }
        const double radius = hi;

        std::vector<Complex> z(m);
        const double offset = 0.4;  // keeps initial points off the real axis
        for (std::size_t k = 0; k < m; ++k) {
            const double t = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(m) + offset;
            z[k] = std::polar(radius, t);
        }
        std::vector<bool> done(m, false);
        std::size_t remaining = m;
        std::size_t sweep = 0;
        for (; sweep < opt.max_sweeps && remaining > 0; ++sweep) {
            for (std::size_t i = 0; i < m; ++i) {
                if (done[i]) continue;
                const auto ev = detail::newton_ratio(a, z[i]);
                if (ev.small) {
                    done[i] = true;
                    --remaining;
                    continue;
                }
                Complex s{0.0, 0.0};
                for (std::size_t j = 0; j < m; ++j)
                    if (j != i) s += 1.0 / (z[i] - z[j]);
                const Complex corr = ev.ratio / (1.0 - ev.ratio * s);
                z[i] -= corr;
                if (std::abs(corr) <= 4.0 * std::numeric_limits<double>::epsilon() * std::abs(z[i])) {
                    done[i] = true;
                    --remaining;
                }
            }
        }
        for (const auto& zi : z)
            if (!is_finite(zi)) throw NumericalError("root iteration diverged for " + where);
        if (remaining > 0) {
            // Not every root met the stopping rule; accept only if residuals are already fine.
            for (std::size_t i = 0; i < m; ++i)
                if (!done[i] && characteristic_residual(spec.coefficients, z[i]) >
                                    1e-8 * std::max(1.0, std::pow(std::abs(z[i]), static_cast<double>(n))))
                    throw NumericalError("root iteration did not converge within " + std::to_string(opt.max_sweeps) +
                                         " sweeps for " + where);
        }
        roots = std::move(z);
        detail::enforce_conjugate_pairs(roots, where);
    }
    for (std::size_t k = 0; k < zeros; ++k) roots.emplace_back(0.0, 0.0);

    for (const auto& r : roots) {
        const double bound = 1e-8 * std::max(1.0, std::pow(std::abs(r), static_cast<double>(n)));
        if (!(characteristic_residual(spec.coefficients, r) <= bound))
            throw NumericalError("root residual check failed for " + where);
    }
    detail::sort_roots(roots);
    return roots;
}

/**
 * @brief Union over sizes of reciprocal eigenvalues (multiplicity kept).
 */
struct InverseLocus {
    PointCloud cloud;
    std::vector<std::size_t> sizes;
    std::vector<std::size_t> source_n;  ///< matrix size that produced each point
    double threshold = 1e-10;
    std::size_t dropped = 0;
    bool empty_sizes = false;  ///< flagged (not fatal) when no sizes were requested
};

inline InverseLocus inverse_locus(FamilyKind family, const std::vector<std::size_t>& sizes, double threshold = 1e-10) {
    if (!(threshold > 0.0)) throw ConfigError("eigenvalue threshold must be > 0");
    for (auto n : sizes)
        if (n < 2) throw ConfigError("matrix sizes must be >= 2");
    InverseLocus out;
    out.cloud.label = family_name(family);
    out.sizes = sizes;
    out.threshold = threshold;
    out.empty_sizes = sizes.empty();

    std::vector<std::vector<Complex>> spectra(sizes.size());
    parallel_for(sizes.size(), 1, [&](std::size_t k) { spectra[k] = eigenvalues(CompanionSpec::of(family, sizes[k])); });
    for (std::size_t k = 0; k < sizes.size(); ++k) {
        for (const auto& lam : spectra[k]) {
            if (std::abs(lam) < threshold) {
                ++out.dropped;
                continue;
            }
            out.cloud.points.push_back(1.0 / lam);
            out.source_n.push_back(sizes[k]);
        }
    }
    return out;
}

}  // namespace eigloci
