// Entropic matching of the Lucas locus against a sampled boundary band, then
// a rigid Procrustes fit. Small grid so it runs in a few seconds.

#include <cstdio>
#include <set>

#include "eigloci/align.hpp"
#include "eigloci/mandelbrot.hpp"
#include "eigloci/spectra.hpp"

using namespace eigloci;

int main() {
    const auto locus = inverse_locus(FamilyKind::lucas_all_ones, {10, 20, 50, 100}).cloud;
    const auto band = sample_boundary(default_mandelbrot_window(512, 512), 1e-2, 2000, Seed{42});
    std::printf("locus %zu points, band %zu of %zu candidates\n", locus.size(), band.cloud.size(), band.n_band);

    const auto plan = sinkhorn_plan(locus, band.cloud);
    std::printf("sinkhorn: eps %.4g, %zu iterations, marginal error %.2e%s\n", plan.epsilon, plan.iterations_used,
                plan.marginal_error, plan.converged ? "" : " (not converged)");

    const auto pi = argmax_matching(plan);
    const auto m = procrustes_align(locus, band.cloud, pi);
    const auto d = pointwise_distances(m.aligned, band.cloud, pi);
    std::printf("rotation [%.4f %.4f; %.4f %.4f], translation (%.4f, %.4f)\n", m.rotation.a, m.rotation.b, m.rotation.c,
                m.rotation.d, m.translation.real(), m.translation.imag());
    std::printf("distance mean %.4f median %.4f q90 %.4f max %.4f\n", d.mean, d.median, d.q90, d.max);
    std::printf("hausdorff %.4f, distinct targets %zu\n", hausdorff(m.aligned, band.cloud),
                std::set<std::size_t>(pi.begin(), pi.end()).size());
    return 0;
}
