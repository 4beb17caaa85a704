/**
 * @brief Stage runner: loci -> boundary -> align -> diagnostics, writing
 * report.json, CSV sidecars and manifest.json into the output directory.
 */
#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <fftw3.h>

#include "../align.hpp"
#include "../csv.hpp"
#include "../geometry.hpp"
#include "../greenstats.hpp"
#include "../infoflow.hpp"
#include "../mandelbrot.hpp"
#include "../model.hpp"
#include "../parallel.hpp"
#include "../potentials.hpp"
#include "../qcdiag.hpp"
#include "../random.hpp"
#include "../report.hpp"
#include "../spectra.hpp"
#include "../statistics.hpp"
#include "config.hpp"

namespace eigloci::pipeline {

inline constexpr const char* kVersion = "0.1.0";

/// Carries the failing stage name; the CLI maps it to exit code 3.
class StageError : public Error {
public:
    StageError(std::string stage, const std::string& what) : Error("stage '" + stage + "': " + what), stage_(std::move(stage)) {}
    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

struct StageTiming {
    std::string name;
    double seconds = 0.0;
    std::string status;
};

struct RunResult {
    std::filesystem::path dir;
    DiagnosticsReport report;
    std::vector<StageTiming> timings;
    bool boundary_cache_hit = false;
};

namespace detail {

// one RNG stream per stage keeps stages isolated from each other
inline std::uint64_t stage_stream(const std::string& stage) {
    const auto& s = stage_names();
    return 100 + static_cast<std::uint64_t>(std::find(s.begin(), s.end(), stage) - s.begin());
}

inline json window_json(const GridWindow& w) {
    return json{{"x_min", w.x_min}, {"x_max", w.x_max}, {"y_min", w.y_min}, {"y_max", w.y_max}, {"nx", w.nx}, {"ny", w.ny}};
}

inline ScalarField as_field(const SimplexHistogram& h) {
    ScalarField f(h.window);
    f.values = h.mass;
    return f;
}

inline void summarize_into(ReportSection& s, const std::string& prefix, std::vector<double> v) {
    std::erase_if(v, [](double x) { return !std::isfinite(x); });
    s.set(prefix + ".n", static_cast<double>(v.size()));
    if (v.empty()) return;
    std::sort(v.begin(), v.end());
    s.set(prefix + ".median", quantile_sorted(v, 0.5));
    s.set(prefix + ".q90", quantile_sorted(v, 0.9));
    s.set(prefix + ".q99", quantile_sorted(v, 0.99));
    s.set(prefix + ".max", v.back());
}

/// Union bounding box of two clouds as a window (bins set by the caller).
inline GridWindow joint_window(const PointCloud& a, const PointCloud& b) {
    std::vector<Complex> all = a.points;
    all.insert(all.end(), b.points.begin(), b.points.end());
    const Bounds bb = bounding_box(all);
    return {bb.x_min, bb.x_max, bb.y_min, bb.y_max, 1, 1};
}

inline std::vector<double> linear_grid(double hi, std::size_t n) {
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n; ++i) r[i] = hi * static_cast<double>(i + 1) / static_cast<double>(n);
    return r;
}

}  // namespace detail

class Pipeline {
public:
    explicit Pipeline(PipelineConfig cfg) : cfg_(std::move(cfg)) {
        cfg_.validate();
        dir_ = cfg_.out;
    }

    RunResult run() {
        std::filesystem::create_directories(dir_);
        std::filesystem::remove(dir_ / "PARTIAL");
        report_.config = cfg_.to_json();
        report_.config["config_hash"] = hex64(cfg_.hash());

        const auto plan = execution_plan();
        report_.config["stages_run"] = plan;
        for (const auto& stage : plan) {
            const auto t0 = std::chrono::steady_clock::now();
            try {
                dispatch(stage);
            } catch (const std::exception& e) {
                timings_.push_back({stage, seconds_since(t0), "error"});
                report_.write(dir_ / "report.json");
                write_manifest();
                std::ofstream(dir_ / "PARTIAL") << "stage " << stage << ": " << e.what() << "\n";
                throw StageError(stage, e.what());
            }
            timings_.push_back({stage, seconds_since(t0), "ok"});
        }
        report_.write(dir_ / "report.json");
        write_manifest();
        return {dir_, report_, timings_, cache_hit_};
    }

    /// Requested stages plus the core stages they depend on, in canonical order.
    std::vector<std::string> execution_plan() const {
        std::set<std::string> need(cfg_.stages.begin(), cfg_.stages.end());
        for (const auto& s : cfg_.stages) {
            if (s == "boundary" || s == "green") need.insert("loci");
            if (s != "loci" && s != "boundary" && s != "green") need.insert({"loci", "boundary", "align"});
        }
        std::vector<std::string> out;
        for (const auto& s : stage_names())
            if (need.count(s)) out.push_back(s);
        return out;
    }

private:
    PipelineConfig cfg_;
    std::filesystem::path dir_;
    DiagnosticsReport report_;
    std::vector<StageTiming> timings_;
    bool cache_hit_ = false;

    std::map<FamilyKind, InverseLocus> loci_;
    BoundaryBand band_;
    std::optional<TransportPlan> plan_;
    std::vector<std::size_t> pi_;
    MatchResult match_;
    std::vector<OrderedCurve> curves_;  // locus, boundary (filled by geometry or statistics)

    static double seconds_since(std::chrono::steady_clock::time_point t0) {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }

    Seed seed() const { return Seed{cfg_.seed}; }
    Rng stage_rng(const std::string& stage) const { return Rng(seed(), detail::stage_stream(stage)); }
    EscapeParams escape() const { return {cfg_.max_iter, cfg_.bailout}; }
    const PointCloud& locus_aligned() const { return match_.aligned; }
    const PointCloud& boundary() const { return band_.cloud; }

    void dispatch(const std::string& s) {
        if (s == "loci") return stage_loci();
        if (s == "boundary") return stage_boundary();
        if (s == "align") return stage_align();
        if (s == "geometry") return stage_geometry();
        if (s == "statistics") return stage_statistics();
        if (s == "potentials") return stage_potentials();
        if (s == "infoflow") return stage_infoflow();
        if (s == "qc") return stage_qc();
        if (s == "green") return stage_green();
        throw ConfigError("unknown stage " + s);
    }

    // ---- (1) inverse eigenvalue loci ---------------------------------------
    void stage_loci() {
        auto& sec = report_.section("loci");
        sec.config = json{{"sizes", cfg_.sizes}, {"threshold", cfg_.threshold}};
        auto fams = cfg_.families();
        const auto af = parse_family(cfg_.align_family);
        if (std::find(fams.begin(), fams.end(), af) == fams.end()) fams.push_back(af);
        for (auto f : fams) {
            auto L = inverse_locus(f, cfg_.sizes, cfg_.threshold);
            if (L.cloud.empty()) throw PreconditionError("empty inverse locus for " + family_name(f) + " (no usable matrix sizes)");
            const auto name = family_name(f);
            sec.set(name + ".n_points", static_cast<double>(L.cloud.size()));
            sec.set(name + ".dropped", static_cast<double>(L.dropped));
            CsvTable t({"re", "im", "source_n"});
            for (std::size_t i = 0; i < L.cloud.size(); ++i) t.add(L.cloud.points[i].real(), L.cloud.points[i].imag(), L.source_n[i]);
            t.write(dir_ / ("loci_" + name + ".csv"));
            loci_[f] = std::move(L);
        }
    }

    // ---- (2) boundary band, cached by its own parameter hash -----------------
    void stage_boundary() {
        const auto w = cfg_.boundary_window();
        const json key{{"window", detail::window_json(w)}, {"tau", cfg_.tau},         {"n", cfg_.n_boundary},
                       {"max_iter", cfg_.max_iter},        {"bailout", cfg_.bailout}, {"seed", cfg_.seed}};
        const auto cache_dir = dir_ / ".cache";
        const auto cache = cache_dir / ("boundary-" + hex64(fnv1a(key.dump())) + ".csv");
        const auto cache_meta = cache_dir / ("boundary-" + hex64(fnv1a(key.dump())) + ".json");
        band_ = BoundaryBand{};
        band_.grid = w;
        band_.tau = cfg_.tau;
        cache_hit_ = false;
        if (std::filesystem::exists(cache) && std::filesystem::exists(cache_meta)) {
            try {
                const auto t = CsvTable::read(cache);
                const auto re = t.column("re"), im = t.column("im"), D = t.column("D");
                std::ifstream mf(cache_meta);
                const auto meta = json::parse(mf);
                band_.n_band = meta.at("n_band").get<std::size_t>();
                band_.shortfall = meta.at("shortfall").get<bool>();
                for (std::size_t i = 0; i < re.size(); ++i) band_.cloud.points.emplace_back(re[i], im[i]);
                band_.distance = D;
                band_.n_subsampled = re.size();
                band_.cloud.label = "mandelbrot_boundary";
                cache_hit_ = true;
            } catch (const std::exception&) {
                band_ = BoundaryBand{};
            }
        }
        if (!cache_hit_) {
            band_ = sample_boundary(w, cfg_.tau, cfg_.n_boundary, seed(), escape(), detail::stage_stream("boundary"));
        }
        CsvTable t({"re", "im", "D"});
        for (std::size_t i = 0; i < band_.cloud.size(); ++i)
            t.add(band_.cloud.points[i].real(), band_.cloud.points[i].imag(), band_.distance[i]);
        t.write(dir_ / "boundary.csv");
        if (!cache_hit_) {
            std::filesystem::create_directories(cache_dir);
            t.write(cache);
            std::ofstream(cache_meta) << json{{"n_band", band_.n_band}, {"shortfall", band_.shortfall}}.dump() << "\n";
        }
        auto& sec = report_.section("boundary");
        sec.config = key;
        sec.set("n_band", static_cast<double>(band_.n_band));
        sec.set("n_points", static_cast<double>(band_.cloud.size()));
        sec.set_flag("shortfall", band_.shortfall);
        detail::summarize_into(sec, "D", band_.distance);
    }

    // ---- (3) entropic OT + Procrustes -----------------------------------------
    void stage_align() {
        const auto& X = loci_.at(parse_family(cfg_.align_family)).cloud;
        const auto& Y = boundary();
        SinkhornOptions opt;
        opt.epsilon = cfg_.sinkhorn_eps;
        opt.epsilon_factor = cfg_.sinkhorn_eps_factor;
        opt.tol = cfg_.sinkhorn_tol;
        opt.max_iter = cfg_.sinkhorn_max_iter;
        plan_ = sinkhorn_plan(X, Y, opt);
        pi_ = argmax_matching(*plan_);
        match_ = procrustes_align(X, Y, pi_, cfg_.allow_scale);
        const auto ds = pointwise_distances(locus_aligned(), Y, pi_);
        PointCloud matched;
        for (auto j : pi_) matched.points.push_back(Y.points[j]);
        std::set<std::size_t> uniq(pi_.begin(), pi_.end());

        auto& sec = report_.section("align");
        sec.config = json{{"family", cfg_.align_family},
                          {"sinkhorn_eps", cfg_.sinkhorn_eps},
                          {"sinkhorn_eps_factor", cfg_.sinkhorn_eps_factor},
                          {"sinkhorn_tol", cfg_.sinkhorn_tol},
                          {"sinkhorn_max_iter", cfg_.sinkhorn_max_iter},
                          {"allow_scale", cfg_.allow_scale}};
        sec.set("n_locus", static_cast<double>(X.size()));
        sec.set("n_boundary", static_cast<double>(Y.size()));
        sec.set("epsilon", plan_->epsilon);
        sec.set("iterations", static_cast<double>(plan_->iterations_used));
        sec.set("marginal_error", plan_->marginal_error);
        sec.set_flag("converged", plan_->converged);
        sec.set("unique_targets", static_cast<double>(uniq.size()));
        sec.set("R.a", match_.rotation.a);
        sec.set("R.b", match_.rotation.b);
        sec.set("R.c", match_.rotation.c);
        sec.set("R.d", match_.rotation.d);
        sec.set("t.re", match_.translation.real());
        sec.set("t.im", match_.translation.imag());
        sec.set("scale", match_.scale);
        sec.set("residual", match_.residual);
        sec.set("distance.mean", ds.mean);
        sec.set("distance.median", ds.median);
        sec.set("distance.q10", ds.q10);
        sec.set("distance.q90", ds.q90);
        sec.set("distance.max", ds.max);
        sec.set("hausdorff", hausdorff(locus_aligned(), Y));
        sec.set("hausdorff_matched", hausdorff(locus_aligned(), matched));
        sec.set_array("hist_edges", ds.hist_edges);
        std::vector<double> hc(ds.hist_counts.begin(), ds.hist_counts.end());
        sec.set_array("hist_counts", hc);

        CsvTable m({"i", "re_src", "im_src", "j", "re_dst", "im_dst", "d"});
        for (std::size_t i = 0; i < pi_.size(); ++i) {
            const Complex a = locus_aligned().points[i], b = Y.points[pi_[i]];
            m.add(i, a.real(), a.imag(), pi_[i], b.real(), b.imag(), ds.distances[i]);
        }
        m.write(dir_ / "matches.csv");
        const json tr{{"R", {match_.rotation.a, match_.rotation.b, match_.rotation.c, match_.rotation.d}},
                      {"t", {match_.translation.real(), match_.translation.imag()}},
                      {"s", match_.scale},
                      {"residual", match_.residual}};
        std::ofstream(dir_ / "transform.json") << tr.dump(2) << "\n";
    }

    // ---- (4) geometry ---------------------------------------------------------
    void ensure_curves() {
        if (!curves_.empty()) return;
        curves_.push_back(order_curve(locus_aligned()));
        curves_.push_back(order_curve(boundary()));
    }

    void stage_geometry() {
        ensure_curves();
        auto& sec = report_.section("geometry");
        sec.config = json{{"polyfit_k", 7}, {"box_scales", 10}, {"theta_step_deg", 0.2}, {"jump_factor", 10.0}};
        const std::array<const PointCloud*, 2> sets = {&locus_aligned(), &boundary()};
        const std::array<std::string, 2> names = {"locus", "boundary"};
        std::array<SymmetryScan, 2> scans;
        for (std::size_t s = 0; s < 2; ++s) {
            const auto& cloud = *sets[s];
            const auto& curve = curves_[s];
            const auto& nm = names[s];
            sec.set_flag(nm + ".curve_closed", curve.closed);
            sec.set_flag(nm + ".angular_fallback", curve.angular_fallback);
            sec.set(nm + ".duplicates_removed", static_cast<double>(curve.duplicates_removed));
            const auto kt = curvature_turning(curve);
            const auto pf = curvature_polyfit(curve, 7);
            std::vector<double> akt, apf;
            for (double k : kt) akt.push_back(std::abs(k));
            for (double k : pf.kappa) apf.push_back(std::abs(k));
            detail::summarize_into(sec, nm + ".kappa_turning", akt);
            detail::summarize_into(sec, nm + ".kappa_polyfit", apf);
            for (double thr : {10.0, 100.0}) {
                std::size_t above = 0;
                for (double k : apf) above += (std::isfinite(k) && k > thr);
                sec.set(nm + ".kappa_polyfit.tail_above_" + std::to_string(static_cast<int>(thr)),
                        apf.empty() ? 0.0 : static_cast<double>(above) / static_cast<double>(apf.size()));
            }
            CsvTable ct({"index", "kappa_turning"});
            for (std::size_t i = 0; i < kt.size(); ++i) ct.add(i, kt[i]);
            ct.write(dir_ / ("curvature_" + nm + ".csv"));
            CsvTable cp({"index", "kappa_polyfit"});
            for (std::size_t i = 0; i < pf.kappa.size(); ++i) cp.add(pf.centers[i], pf.kappa[i]);
            cp.write(dir_ / ("curvature_polyfit_" + nm + ".csv"));

            const auto bd = box_dimension(cloud);
            sec.set(nm + ".box_dimension", bd.dimension);
            sec.set(nm + ".box_r2", bd.r2);
            CsvTable bt({"eps", "count"});
            for (std::size_t i = 0; i < bd.eps.size(); ++i) bt.add(bd.eps[i], bd.counts[i]);
            bt.write(dir_ / ("boxdim_" + nm + ".csv"));

            scans[s] = symmetry_scan(cloud);
            sec.set(nm + ".theta_star_rho", scans[s].theta_star_rho);
            sec.set(nm + ".theta_star_E", scans[s].theta_star_E);
            sec.set(nm + ".theta_star_rho_deg", scans[s].theta_star_rho * 180.0 / std::numbers::pi);
            sec.set(nm + ".axis_offset_deg", axial_angle_difference(scans[s].theta_star_rho, 0.0) * 180.0 / std::numbers::pi);
            sec.set(nm + ".symmetry_epsilon", scans[s].epsilon);
        }
        // the combined score is the plain mean of the two per-set scores
        CsvTable st({"theta", "rho_locus", "misfit_locus", "rho_boundary", "misfit_boundary", "rho_mean"});
        std::size_t best = 0;
        double best_rho = -1.0;
        for (std::size_t i = 0; i < scans[0].thetas.size(); ++i) {
            const double mean = 0.5 * (scans[0].rho[i] + scans[1].rho[i]);
            if (mean > best_rho) {
                best_rho = mean;
                best = i;
            }
            st.add(scans[0].thetas[i], scans[0].rho[i], scans[0].misfit[i], scans[1].rho[i], scans[1].misfit[i], mean);
        }
        st.write(dir_ / "symmetry.csv");
        sec.set("combined.theta_star_rho", scans[0].thetas[best]);
        sec.note("combined_rule", "mean of the per-set matching fractions");
    }

    // ---- (5) statistics -------------------------------------------------------
    void stage_statistics() {
        ensure_curves();
        const Rng rng = stage_rng("statistics");
        auto& sec = report_.section("statistics");
        sec.config = json{{"bootstrap", cfg_.bootstrap},
                          {"variogram_bootstrap", cfg_.variogram_bootstrap},
                          {"variogram_points", cfg_.variogram_points},
                          {"diffusion_points", cfg_.diffusion_points},
                          {"band", "middle two decades"}};
        const std::array<const PointCloud*, 2> sets = {&locus_aligned(), &boundary()};
        const std::array<std::string, 2> names = {"locus", "boundary"};

        // spectral slopes
        for (std::size_t s = 0; s < 2; ++s) {
            const auto spec = power_spectrum(curves_[s]);
            const auto fit = spectral_slope(spec, {0.0, 0.0}, cfg_.bootstrap, seed(), detail::stage_stream("statistics") * 16 + s);
            const auto& nm = names[s];
            sec.set(nm + ".alpha", fit.alpha);
            sec.set(nm + ".alpha_ci_low", fit.ci_low);
            sec.set(nm + ".alpha_ci_high", fit.ci_high);
            sec.set(nm + ".f_lo", fit.f_lo);
            sec.set(nm + ".f_hi", fit.f_hi);
            sec.set(nm + ".n_band", static_cast<double>(fit.n_band));
            CsvTable t({"f", "P"});
            for (std::size_t i = 0; i < spec.freqs.size(); ++i) t.add(spec.freqs[i], spec.power[i]);
            t.write(dir_ / ("spectrum_" + nm + ".csv"));
        }
        sec.set_flag("alpha_ci_disjoint", sec.get("locus.alpha_ci_low") > sec.get("boundary.alpha_ci_high") ||
                                              sec.get("boundary.alpha_ci_low") > sec.get("locus.alpha_ci_high"));

        // Ripley K / pair correlation, no edge correction
        for (std::size_t s = 0; s < 2; ++s) {
            const auto r = detail::linear_grid(0.1 * bounding_box(sets[s]->points).diagonal(), 20);
            const auto rk = ripley_k(*sets[s], r);
            const auto g = pair_correlation(rk.K, rk.r);
            CsvTable t({"r", "K", "L", "g"});
            for (std::size_t i = 0; i < r.size(); ++i) t.add(rk.r[i], rk.K[i], rk.L[i], g[i]);
            t.write(dir_ / ("ripley_" + names[s] + ".csv"));
            sec.set(names[s] + ".ripley_area", rk.area);
        }

        // variograms: Z_locus = locus log-potential at locus points, Z_M = Green function
        {
            const auto& X = locus_aligned();
            const auto& Y = boundary();
            Rng vr = rng.split(1);
            const auto xi = sample_without_replacement(X.size(), std::min(cfg_.variogram_points, X.size()), vr);
            const auto yi = sample_without_replacement(Y.size(), std::min(cfg_.variogram_points, Y.size()), vr);
            std::vector<Complex> xl, yl;
            for (auto i : xi) xl.push_back(X.points[i]);
            for (auto i : yi) yl.push_back(Y.points[i]);
            const double core = default_core_radius(cfg_.potential_grid_window());
            auto zx = log_potential_at(X, xl, core);
            auto zy_all = green_values(Y.points, escape());
            auto standardize_vec = [](std::vector<double>& v) {
                double m = 0, s2 = 0;
                for (double x : v) m += x;
                m /= static_cast<double>(v.size());
                for (double x : v) s2 += (x - m) * (x - m);
                const double sd = std::sqrt(s2 / static_cast<double>(v.size()));
                if (!(sd > 0.0)) throw NumericalError("variogram field is constant");
                for (double& x : v) x = (x - m) / sd;
            };
            standardize_vec(zx);
            standardize_vec(zy_all);
            std::vector<double> zy;
            for (auto i : yi) zy.push_back(zy_all[i]);
            std::vector<std::size_t> pi_sub;
            for (auto i : xi) pi_sub.push_back(pi_[i]);
            const double r_max = 0.25 * bounding_box(X.points).diagonal();
            const double dr = r_max / 20.0;
            const auto stream = detail::stage_stream("statistics") * 16 + 8;
            const auto vx = semivariogram(xl, zx, dr, r_max, cfg_.variogram_bootstrap, seed(), true, stream);
            const auto vy = semivariogram(yl, zy, dr, r_max, cfg_.variogram_bootstrap, seed(), true, stream + 1);
            const auto vc = cross_variogram(xl, zx, zy_all, pi_sub, dr, r_max, cfg_.variogram_bootstrap, seed(), stream + 2);
            auto dump = [&](const VariogramEstimate& v, const std::string& file) {
                CsvTable t({"r", "gamma", "lo", "hi", "count"});
                for (std::size_t i = 0; i < v.r.size(); ++i) t.add(v.r[i], v.gamma[i], v.lo[i], v.hi[i], v.counts[i]);
                t.write(dir_ / file);
            };
            dump(vx, "variogram_locus.csv");
            dump(vy, "variogram_boundary.csv");
            dump(vc, "variogram_cross.csv");
            sec.note("variogram_fields", "locus: log-potential of the aligned locus; boundary: Green function g_M; both standardized");
            sec.set("variogram.r_max", r_max);
            sec.set("variogram.dr", dr);
        }

        // multifractal spectra on the box ladder of each set
        std::vector<double> q;
        for (int i = -4; i <= 8; ++i) q.push_back(0.5 * i);
        for (std::size_t s = 0; s < 2; ++s) {
            const auto mf = renyi_dimensions(*sets[s], q);
            CsvTable t({"q", "Dq", "tau", "alpha", "f_alpha"});
            for (std::size_t i = 0; i < mf.q.size(); ++i) t.add(mf.q[i], mf.Dq[i], mf.tau[i], mf.alpha[i], mf.f_alpha[i]);
            t.write(dir_ / ("multifractal_" + names[s] + ".csv"));
            sec.set_array(names[s] + ".Dq", mf.Dq);
        }

        // diffusion spectra on subsamples
        std::array<std::vector<double>, 2> lam;
        for (std::size_t s = 0; s < 2; ++s) {
            Rng dr = rng.split(10 + s);
            const auto sub = subsample(*sets[s], std::min(cfg_.diffusion_points, sets[s]->size()), dr);
            const auto emb = diffusion_embedding(sub, 0.0, 11);
            lam[s] = emb.eigenvalues;
            sec.set_array(names[s] + ".diffusion_eigenvalues", emb.eigenvalues);
            sec.set(names[s] + ".diffusion_sigma", emb.sigma);
        }
        sec.set("spectral_distance", spectral_distance(lam[0], lam[1], 10));
    }

    // ---- (6) potentials -------------------------------------------------------
    void stage_potentials() {
        const auto w = cfg_.potential_grid_window();
        const auto UL = log_potential(locus_aligned(), w);
        const auto UM = log_potential(boundary(), w);
        const auto pair = potential_difference(UL, UM);
        const auto SL = standardize(UL), SM = standardize(UM);
        const double r_pot = pearson_correlation(SL, SM, pair.mask);
        const auto LL = laplacian_field(UL), LM = laplacian_field(UM);
        const double r_lap = pearson_correlation(LL, LM);
        const auto slide = sliding_correlation(SL, SM, std::max<std::size_t>(8, w.nx / 16));

        auto& sec = report_.section("potentials");
        sec.config = json{{"window", detail::window_json(w)}, {"core_radius", default_core_radius(w)}};
        sec.set("r_potential", r_pot);
        sec.set("r_laplacian", r_lap);
        std::size_t masked = 0;
        for (auto m : pair.mask) masked += m;
        sec.set("masked_cells", static_cast<double>(masked));
        sec.set("cells", static_cast<double>(w.cells()));
        write_field(UL, dir_ / "potential_locus.csv");
        write_field(UM, dir_ / "potential_boundary.csv");
        write_field(pair.delta, dir_ / "potential_delta.csv");
        write_field(LL, dir_ / "laplacian_locus.csv");
        write_field(LM, dir_ / "laplacian_boundary.csv");
        write_field(slide, dir_ / "sliding_correlation.csv");
    }

    // ---- (7) KL-monotone interpolation table ----------------------------------
    void stage_infoflow() {
        const auto base = detail::joint_window(locus_aligned(), boundary());
        auto& sec = report_.section("infoflow");
        sec.config = json{{"alpha", cfg_.alpha},
                          {"T", cfg_.flow_T},
                          {"bins", cfg_.bins},
                          {"floor_eps", cfg_.floor_eps},
                          {"mollify_sigma_bins", cfg_.gi_mollify},
                          {"window", detail::window_json(base)}};
        CsvTable table({"bins", "inv_n", "T", "KL", "delta", "TV", "overlap", "outside"});
        for (auto b : cfg_.bins) {
            auto C = histogram_law(locus_aligned(), base, b, cfg_.floor_eps);
            auto M = histogram_law(boundary(), base, b, cfg_.floor_eps);
            if (cfg_.gi_mollify > 0.0) {
                C.hist = mollify(C.hist, cfg_.gi_mollify);
                M.hist = mollify(M.hist, cfg_.gi_mollify);
            }
            const double outside = std::max(C.outside_mass, M.outside_mass);
            const auto row = gi_diagnostics(C.hist, M.hist, cfg_.alpha, cfg_.flow_T, outside);
            table.add(row.bins, row.inv_n, row.T, row.kl, row.delta, row.tv, row.overlap, row.outside);
            const auto p = "bins_" + std::to_string(b);
            sec.set(p + ".KL", row.kl);
            sec.set(p + ".delta", row.delta);
            sec.set(p + ".TV", row.tv);
            sec.set(p + ".overlap", row.overlap);
            sec.set(p + ".outside", row.outside);
            sec.set(p + ".closed_form_error", row.trace.closed_form_error);
            sec.set(p + ".contraction_violations", static_cast<double>(row.trace.contraction_violations));
            sec.set(p + ".pinsker_slack", pinsker_slack(M.hist.mass, C.hist.mass));
            CsvTable fl({"t", "kl", "l1"});
            for (std::size_t t = 0; t < row.trace.kl_series.size(); ++t) fl.add(t, row.trace.kl_series[t], row.trace.l1_series[t]);
            fl.write(dir_ / ("gi_flow_" + std::to_string(b) + ".csv"));
            write_field(detail::as_field(C.hist), dir_ / ("hist_locus_" + std::to_string(b) + ".csv"));
            write_field(detail::as_field(M.hist), dir_ / ("hist_boundary_" + std::to_string(b) + ".csv"));
        }
        table.write(dir_ / "gi_table.csv");
    }

    // ---- (8) quasi-conformal diagnostics --------------------------------------
    void stage_qc() {
        auto& sec = report_.section("qc");
        sec.config = json{{"k", cfg_.k_neighbors}, {"qc_sizes", cfg_.qc_sizes}, {"qc_k", cfg_.qc_k}, {"locus_sizes", paper_sizes()}};
        GridWindow heat = detail::joint_window(locus_aligned(), boundary());
        heat.nx = heat.ny = 32;

        const auto rec = distortion_records(locus_aligned(), boundary(), pi_, cfg_.k_neighbors);
        const auto sm = distortion_summary(rec, heat);
        put_summary(sec, "main", sm);
        CsvTable rt({"i", "re", "im", "K", "cr", "angle"});
        for (const auto& r : rec) rt.add(r.index, r.location.real(), r.location.imag(), r.K, r.cr, r.angle);
        rt.write(dir_ / "qc_records.csv");
        write_field(sm.heat, dir_ / "qc_heat.csv");

        CsvTable kt({"k", "median_K", "K95", "Kmax", "median_cr"});
        for (auto k : cfg_.qc_k) {
            const auto s = distortion_summary(distortion_records(locus_aligned(), boundary(), pi_, k), heat);
            kt.add(k, s.K.median, s.K.q95, s.K.max, s.cr.median);
            sec.set("k_" + std::to_string(k) + ".median_K", s.K.median);
        }
        kt.write(dir_ / "qc_k_sensitivity.csv");

        // matched-size table: full-size locus and the boundary band, each subsampled to N
        const auto full = inverse_locus(parse_family(cfg_.align_family), paper_sizes(), cfg_.threshold).cloud;
        const Rng rng = stage_rng("qc");
        SinkhornOptions opt;
        opt.epsilon = cfg_.sinkhorn_eps;
        opt.epsilon_factor = cfg_.sinkhorn_eps_factor;
        opt.tol = cfg_.sinkhorn_tol;
        opt.max_iter = cfg_.sinkhorn_max_iter;
        CsvTable nt({"N", "n_locus", "n_boundary", "median_K", "K95", "Kmax", "median_cr", "unique_targets", "degenerate", "infinite_K"});
        for (std::size_t r = 0; r < cfg_.qc_sizes.size(); ++r) {
            const auto N = cfg_.qc_sizes[r];
            Rng sr = rng.split(r);
            const auto Xn = subsample(full, std::min(N, full.size()), sr);
            const auto Yn = subsample(boundary(), std::min(N, boundary().size()), sr);
            const auto plan = sinkhorn_plan(Xn, Yn, opt);
            const auto pin = argmax_matching(plan);
            const auto mn = procrustes_align(Xn, Yn, pin, cfg_.allow_scale);
            const auto s = distortion_summary(distortion_records(mn.aligned, Yn, pin, cfg_.k_neighbors), heat);
            const std::set<std::size_t> uniq(pin.begin(), pin.end());
            nt.add(N, Xn.size(), Yn.size(), s.K.median, s.K.q95, s.K.max, s.cr.median, uniq.size(), s.degenerate, s.infinite_K);
            const auto p = "N_" + std::to_string(N);
            sec.set(p + ".median_K", s.K.median);
            sec.set(p + ".K95", s.K.q95);
            sec.set(p + ".Kmax", s.K.max);
            sec.set(p + ".unique_targets", static_cast<double>(uniq.size()));
        }
        nt.write(dir_ / "qc_table.csv");
    }

    static void put_summary(ReportSection& sec, const std::string& p, const DistortionSummary& s) {
        auto q = [&](const std::string& name, const QuantileSummary& v) {
            sec.set(p + "." + name + ".median", v.median);
            sec.set(p + "." + name + ".q90", v.q90);
            sec.set(p + "." + name + ".q95", v.q95);
            sec.set(p + "." + name + ".q99", v.q99);
            sec.set(p + "." + name + ".max", v.max);
        };
        q("K", s.K);
        q("cr", s.cr);
        q("cr_normalized", s.cr_normalized);
        q("angle", s.angle);
        q("angle_mapped", s.angle_mapped);
        sec.set(p + ".valid", static_cast<double>(s.valid));
        sec.set(p + ".degenerate", static_cast<double>(s.degenerate));
        sec.set(p + ".infinite_K", static_cast<double>(s.infinite_K));
        sec.set(p + ".reflections", static_cast<double>(s.reflections));
    }

    // ---- (9) Green statistics and equipotential profile ------------------------
    void stage_green() {
        auto& sec = report_.section("green");
        sec.config = json{{"sizes", cfg_.sizes},
                          {"ladder", cfg_.green_ladder},
                          {"mass_eps", cfg_.green_mass_eps},
                          {"tolerance", cfg_.green_tolerance},
                          {"max_iter", cfg_.max_iter},
                          {"bailout", cfg_.bailout}};
        std::vector<GreenFamilyStats> rows;
        for (auto f : cfg_.families()) {
            const auto s = green_statistics(loci_.at(f).cloud, escape());
            rows.push_back(s);
            const auto nm = family_name(f);
            sec.set(nm + ".escaped_frac", s.escaped_fraction);
            sec.set(nm + ".median_g", s.median_g);
            sec.set(nm + ".median_phi", s.median_phi);
            sec.set(nm + ".delta_g", s.delta_g);

            const auto prof = equipotential_profile(f, cfg_.green_ladder, cfg_.green_mass_eps, paper_sizes(), escape(), cfg_.green_tolerance);
            CsvTable t({"N", "n_points", "n_escaped", "g10", "median", "g90", "mass_outside"});
            for (const auto& l : prof.levels) t.add(l.N, l.n_points, l.n_escaped, l.g10, l.median, l.g90, l.mass_outside);
            t.write(dir_ / ("equipotential_" + nm + ".csv"));
            sec.set(nm + ".annulus_a", prof.a);
            sec.set(nm + ".annulus_b", prof.b);
            sec.set(nm + ".annulus_inner", prof.annulus_inner);
            sec.set(nm + ".annulus_outer", prof.annulus_outer);
            sec.set_flag(nm + ".median_stable", prof.median_stable);
            sec.set_flag(nm + ".outside_nonincreasing", prof.outside_nonincreasing);
        }
        green_table(rows).write(dir_ / "green_table.csv");
    }

    void write_manifest() const {
        json st = json::array();
        for (const auto& t : timings_) st.push_back(json{{"stage", t.name}, {"seconds", t.seconds}, {"status", t.status}});
        const json m{{"config_hash", hex64(cfg_.hash())},
                     {"preset", cfg_.preset},
                     {"workers", worker_count()},
                     {"boundary_cache_hit", cache_hit_},
                     {"stages", st},
                     {"versions",
                      {{"eigloci", kVersion},
                       {"compiler", __VERSION__},
                       {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                     std::to_string(EIGEN_MINOR_VERSION)},
                       {"fftw", std::string(fftw_version)}}},
                     {"config", cfg_.to_json()}};
        std::ofstream(dir_ / "manifest.json") << m.dump(2) << "\n";
    }
};

inline RunResult run_pipeline(const PipelineConfig& cfg) { return Pipeline(cfg).run(); }

}  // namespace eigloci::pipeline
