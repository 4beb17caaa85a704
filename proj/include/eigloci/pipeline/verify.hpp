/**
 * @brief Re-checks a written report tree: schema completeness, cross-stage
 * identities and the flow closed form recomputed from the stored histograms.
 */
#pragma once

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "../csv.hpp"
#include "../infoflow.hpp"
#include "../report.hpp"
#include "config.hpp"

namespace eigloci::pipeline {

struct Finding {
    std::string check;
    bool ok = true;
    std::string detail;
};

struct Verification {
    std::vector<Finding> findings;
    bool ok() const {
        for (const auto& f : findings)
            if (!f.ok) return false;
        return true;
    }
};

namespace detail {

struct SchemaEntry {
    const char* section;
    std::vector<std::string> scalars;
    std::vector<std::pair<std::string, std::vector<std::string>>> csv;  // file, header
};

inline std::vector<SchemaEntry> schema(const json& cfg) {
    std::vector<std::string> bins_files;
    std::vector<SchemaEntry> s = {
        {"boundary", {"n_band", "n_points", "shortfall"}, {{"boundary.csv", {"re", "im", "D"}}}},
        {"align",
         {"epsilon", "marginal_error", "distance.mean", "hausdorff", "residual"},
         {{"matches.csv", {"i", "re_src", "im_src", "j", "re_dst", "im_dst", "d"}}}},
        {"geometry",
         {"locus.box_dimension", "boundary.box_dimension", "locus.theta_star_rho", "boundary.theta_star_rho"},
         {{"symmetry.csv", {"theta", "rho_locus", "misfit_locus", "rho_boundary", "misfit_boundary", "rho_mean"}}}},
        {"statistics",
         {"locus.alpha", "boundary.alpha", "spectral_distance"},
         {{"variogram_cross.csv", {"r", "gamma", "lo", "hi", "count"}}, {"ripley_locus.csv", {"r", "K", "L", "g"}}}},
        {"potentials", {"r_potential", "r_laplacian"}, {}},
        {"infoflow", {}, {{"gi_table.csv", {"bins", "inv_n", "T", "KL", "delta", "TV", "overlap", "outside"}}}},
        {"qc",
         {"main.K.median"},
         {{"qc_records.csv", {"i", "re", "im", "K", "cr", "angle"}},
          {"qc_table.csv", {"N", "n_locus", "n_boundary", "median_K", "K95", "Kmax", "median_cr", "unique_targets", "degenerate", "infinite_K"}}}},
        {"green", {}, {{"green_table.csv", {"family", "escaped_frac", "median_g", "median_phi", "g10", "g90", "delta_g"}}}},
    };
    (void)cfg;
    return s;
}

}  // namespace detail

/// Pass/fail listing; never throws for content problems (only findings).
inline Verification verify_report(const std::filesystem::path& dir) {
    Verification v;
    auto add = [&](std::string check, bool ok, std::string detail = {}) { v.findings.push_back({std::move(check), ok, std::move(detail)}); };

    DiagnosticsReport rep;
    try {
        rep = DiagnosticsReport::read(dir / "report.json");
        add("report.json parses", true);
    } catch (const std::exception& e) {
        add("report.json parses", false, e.what());
        return v;
    }
    if (std::filesystem::exists(dir / "PARTIAL")) add("run complete (no PARTIAL marker)", false, "PARTIAL marker present");

    std::vector<std::string> stages;
    try {
        for (const auto& s : rep.config.at("stages_run")) stages.push_back(s.get<std::string>());
    } catch (const std::exception&) {
        for (const auto& [k, _] : rep.sections) stages.push_back(k);
    }
    auto ran = [&](const std::string& s) { return std::find(stages.begin(), stages.end(), s) != stages.end(); };

    // schema
    for (const auto& e : detail::schema(rep.config)) {
        if (!ran(e.section)) continue;
        if (!rep.has_section(e.section)) {
            add(std::string("section ") + e.section, false, "missing");
            continue;
        }
        const auto& sec = rep.section(e.section);
        for (const auto& k : e.scalars)
            if (!sec.has(k)) add(std::string("section ") + e.section, false, "missing scalar " + k);
        for (const auto& [file, header] : e.csv) {
            try {
                const auto t = CsvTable::read(dir / file);
                if (t.header() != header) {
                    add("schema " + file, false, "unexpected header");
                } else {
                    add("schema " + file, true);
                }
            } catch (const std::exception& ex) {
                add("schema " + file, false, ex.what());
            }
        }
    }
    if (ran("loci")) {
        for (const auto& [k, _] : rep.section("loci").scalars) {
            if (k.size() < 9 || k.substr(k.size() - 9) != ".n_points") continue;
            const auto fam = k.substr(0, k.size() - 9);
            try {
                const auto t = CsvTable::read(dir / ("loci_" + fam + ".csv"));
                const bool ok = static_cast<double>(t.rows()) == rep.section("loci").get(k);
                add("schema loci_" + fam + ".csv", ok, ok ? "" : "row count differs from report");
            } catch (const std::exception& ex) {
                add("schema loci_" + fam + ".csv", false, ex.what());
            }
        }
    }

    // overlap = 1 - TV and the flow checks
    if (ran("infoflow")) {
        try {
            const auto t = CsvTable::read(dir / "gi_table.csv");
            const auto bins = t.column("bins"), tv = t.column("TV"), ov = t.column("overlap"), delta = t.column("delta"),
                       T = t.column("T");
            const double alpha = rep.section("infoflow").config.at("alpha").get<double>();
            for (std::size_t r = 0; r < bins.size(); ++r) {
                const auto b = std::to_string(static_cast<std::size_t>(bins[r]));
                add("overlap = 1 - TV (bins " + b + ")", std::abs(ov[r] - (1.0 - tv[r])) <= 1e-12);
                const auto fl = CsvTable::read(dir / ("gi_flow_" + b + ".csv"));
                const auto kl = fl.column("kl");
                std::size_t bad = 0;
                for (std::size_t i = 1; i < kl.size(); ++i)
                    if (kl[i] > (1.0 - alpha) * kl[i - 1] + 1e-12) ++bad;
                add("KL contraction (bins " + b + ")", bad == 0, bad ? std::to_string(bad) + " steps violate the (1-alpha) bound" : "");

                // closed form from the stored laws
                const auto C = read_field(dir / ("hist_locus_" + b + ".csv"));
                const auto M = read_field(dir / ("hist_boundary_" + b + ".csv"));
                double worst = 0.0;
                std::vector<double> X(C.values.size());
                for (std::size_t t2 = 0; t2 < kl.size(); ++t2) {
                    const double decay = std::pow(1.0 - alpha, static_cast<double>(t2));
                    for (std::size_t i = 0; i < X.size(); ++i) X[i] = M.values[i] + decay * (C.values[i] - M.values[i]);
                    const double k = kl_divergence(M.values, X);
                    worst = std::max(worst, std::abs(k - kl[t2]) / std::max(1e-300, std::max(std::abs(k), 1e-12)));
                }
                add("flow closed form (bins " + b + ")", worst <= 1e-6, "max relative KL deviation " + format_double(worst));
                add("delta = final KL (bins " + b + ")",
                    static_cast<std::size_t>(T[r]) + 1 == kl.size() && std::abs(delta[r] - kl.back()) <= 1e-15 * std::max(1.0, kl.back()));
            }
        } catch (const std::exception& e) {
            add("infoflow tables", false, e.what());
        }
    }
    if (ran("green")) {
        try {
            const auto t = CsvTable::read(dir / "green_table.csv");
            const auto g = t.column("median_g"), phi = t.column("median_phi"), g10 = t.column("g10"), g90 = t.column("g90"),
                       dg = t.column("delta_g");
            for (std::size_t r = 0; r < g.size(); ++r) {
                const auto fam = t.row(r)[0];
                add("median_phi = exp(median_g) (" + fam + ")", std::abs(phi[r] - std::exp(g[r])) <= 1e-12);
                add("quantile order (" + fam + ")", g10[r] <= g[r] && g[r] <= g90[r] && std::abs(dg[r] - (g90[r] - g10[r])) <= 1e-15);
            }
        } catch (const std::exception& e) {
            add("green table", false, e.what());
        }
    }
    return v;
}

}  // namespace eigloci::pipeline
