/**
 * @brief Flat key = value pipeline configuration with the paper and desk presets.
 */
#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "../csv.hpp"
#include "../mandelbrot.hpp"
#include "../model.hpp"
#include "../report.hpp"
#include "../spectra.hpp"

namespace eigloci::pipeline {

inline const std::vector<std::string>& stage_names() {
    static const std::vector<std::string> s = {"loci",       "boundary", "align", "geometry", "statistics",
                                               "potentials", "infoflow", "qc",    "green"};
    return s;
}

struct PipelineConfig {
    // spectra
    std::string family = "all";                 ///< loci written for these families
    std::string align_family = "lucas_all_ones";
    std::vector<std::size_t> sizes = paper_sizes();
    double threshold = 1e-10;
    // boundary
    std::vector<double> window = {-2.2, 0.8, -1.4, 1.4};
    std::size_t grid = 2048;
    double tau = 1e-3;
    std::size_t n_boundary = 20000;
    std::size_t max_iter = 200;
    double bailout = 1e6;
    // transport
    double sinkhorn_eps = 0.0;  ///< 0: factor * median cost
    double sinkhorn_eps_factor = 0.01;
    double sinkhorn_tol = 1e-6;
    std::size_t sinkhorn_max_iter = 5000;
    bool allow_scale = false;
    // diagnostics
    std::size_t k_neighbors = 12;
    std::size_t bootstrap = 1000;
    std::size_t variogram_bootstrap = 500;
    std::size_t variogram_points = 1000;
    std::size_t diffusion_points = 800;
    std::vector<double> potential_window = {-2.2, 0.8, -1.5, 1.5};
    std::size_t potential_grid = 512;
    std::vector<std::size_t> bins = {64, 128, 256, 512};
    double alpha = 0.1;
    std::size_t flow_T = 25;
    double floor_eps = 1e-12;
    double gi_mollify = 0.0;  ///< Gaussian sigma in bins; 0 = raw histograms
    std::vector<std::size_t> qc_sizes = {500, 1000, 1500, 2000, 2400};
    std::vector<std::size_t> qc_k = {8, 12, 20};
    std::vector<std::size_t> green_ladder = {100, 300, 500};
    double green_mass_eps = 0.05;
    double green_tolerance = 0.002;
    // run
    std::uint64_t seed = 42;
    std::string out = "out";
    std::vector<std::string> stages = stage_names();
    std::string preset = "paper";

    void set(const std::string& key, const std::string& value);
    void validate() const;
    json to_json() const;
    std::uint64_t hash() const;

    std::vector<FamilyKind> families() const {
        if (family == "all") return all_families();
        return {parse_family(family)};
    }
    bool wants(const std::string& stage) const { return std::find(stages.begin(), stages.end(), stage) != stages.end(); }
    GridWindow boundary_window() const { return {window[0], window[1], window[2], window[3], grid, grid}; }
    GridWindow potential_grid_window() const {
        return {potential_window[0], potential_window[1], potential_window[2], potential_window[3], potential_grid, potential_grid};
    }
};

namespace detail {

inline std::string trim(std::string_view s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string_view::npos) return {};
    const auto b = s.find_last_not_of(" \t\r");
    return std::string(s.substr(a, b - a + 1));
}

inline std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(v);
    while (std::getline(in, cur, ',')) {
        cur = trim(cur);
        if (!cur.empty()) out.push_back(cur);
    }
    return out;
}

inline std::uint64_t to_u64(const std::string& key, const std::string& v) {
    std::uint64_t x = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError("config key '" + key + "': not an integer: '" + v + "'");
    return x;
}

inline double to_double(const std::string& key, const std::string& v) {
    try {
        return parse_double(v);
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': not a number: '" + v + "'");
    }
}

inline bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("config key '" + key + "': not a boolean: '" + v + "'");
}

template <class T, class F>
std::vector<T> to_list(const std::string& v, F conv) {
    std::vector<T> out;
    for (const auto& s : split_list(v)) out.push_back(conv(s));
    return out;
}

}  // namespace detail

inline void PipelineConfig::set(const std::string& key, const std::string& raw) {
    using namespace detail;
    const std::string v = trim(raw);
    auto u = [&](const std::string& s) { return static_cast<std::size_t>(to_u64(key, s)); };
    auto d = [&](const std::string& s) { return to_double(key, s); };
    using Setter = std::function<void()>;
    const std::map<std::string, Setter> table = {
        {"family", [&] { family = v; }},
        {"align_family", [&] { align_family = v; }},
        {"sizes", [&] { sizes = to_list<std::size_t>(v, u); }},
        {"threshold", [&] { threshold = d(v); }},
        {"window", [&] { window = to_list<double>(v, d); }},
        {"grid", [&] { grid = u(v); }},
        {"tau", [&] { tau = d(v); }},
        {"n_boundary", [&] { n_boundary = u(v); }},
        {"max_iter", [&] { max_iter = u(v); }},
        {"bailout", [&] { bailout = d(v); }},
        {"sinkhorn_eps", [&] { sinkhorn_eps = d(v); }},
        {"sinkhorn_eps_factor", [&] { sinkhorn_eps_factor = d(v); }},
        {"sinkhorn_tol", [&] { sinkhorn_tol = d(v); }},
        {"sinkhorn_max_iter", [&] { sinkhorn_max_iter = u(v); }},
        {"allow_scale", [&] { allow_scale = to_bool(key, v); }},
        {"k_neighbors", [&] { k_neighbors = u(v); }},
        {"bootstrap", [&] { bootstrap = u(v); }},
        {"variogram_bootstrap", [&] { variogram_bootstrap = u(v); }},
        {"variogram_points", [&] { variogram_points = u(v); }},
        {"diffusion_points", [&] { diffusion_points = u(v); }},
        {"potential_window", [&] { potential_window = to_list<double>(v, d); }},
        {"potential_grid", [&] { potential_grid = u(v); }},
        {"bins", [&] { bins = to_list<std::size_t>(v, u); }},
        {"alpha", [&] { alpha = d(v); }},
        {"flow_T", [&] { flow_T = u(v); }},
        {"floor_eps", [&] { floor_eps = d(v); }},
        {"gi_mollify", [&] { gi_mollify = d(v); }},
        {"qc_sizes", [&] { qc_sizes = to_list<std::size_t>(v, u); }},
        {"qc_k", [&] { qc_k = to_list<std::size_t>(v, u); }},
        {"green_ladder", [&] { green_ladder = to_list<std::size_t>(v, u); }},
        {"green_mass_eps", [&] { green_mass_eps = d(v); }},
        {"green_tolerance", [&] { green_tolerance = d(v); }},
        {"seed", [&] { seed = to_u64(key, v); }},
        {"out", [&] { out = v; }},
        {"stages", [&] { stages = v == "all" ? stage_names() : split_list(v); }},
    };
    auto it = table.find(key);
    if (it == table.end()) throw ConfigError("unknown config key '" + key + "'");
    it->second();
}

inline void PipelineConfig::validate() const {
    if (family != "all") parse_family(family);
    parse_family(align_family);
    for (auto n : sizes)
        if (n < 2) throw ConfigError("sizes: matrix sizes must be >= 2");
    if (!(threshold > 0.0)) throw ConfigError("threshold must be > 0");
    if (window.size() != 4) throw ConfigError("window needs 4 values: x_min,x_max,y_min,y_max");
    boundary_window().validate();
    if (!(tau > 0.0)) throw ConfigError("tau must be > 0");
    if (n_boundary < 10) throw ConfigError("n_boundary must be >= 10");
    EscapeParams{max_iter, bailout}.validate();
    if (!(sinkhorn_eps >= 0.0) || !(sinkhorn_eps_factor > 0.0)) throw ConfigError("sinkhorn epsilon settings must be positive");
    if (!(sinkhorn_tol > 0.0) || sinkhorn_max_iter < 1) throw ConfigError("sinkhorn tolerance/iterations invalid");
    if (k_neighbors < 3) throw ConfigError("k_neighbors must be >= 3");
    if (bootstrap < 200) throw ConfigError("bootstrap must be >= 200");
    if (variogram_bootstrap < 1) throw ConfigError("variogram_bootstrap must be >= 1");
    if (variogram_points < 30 || diffusion_points < 20) throw ConfigError("variogram/diffusion subsample too small");
    if (potential_window.size() != 4) throw ConfigError("potential_window needs 4 values");
    const auto pw = potential_grid_window();
    pw.validate();
    if (std::abs(pw.dx() - pw.dy()) > 1e-12 * pw.dx()) throw ConfigError("potential grid cells must be square (dx == dy)");
    if (bins.empty()) throw ConfigError("bins ladder is empty");
    for (auto b : bins)
        if (b != 64 && b != 128 && b != 256 && b != 512) throw ConfigError("bins must be drawn from {64,128,256,512}");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in (0, 1]");
    if (flow_T < 1) throw ConfigError("flow_T must be >= 1");
    if (!(floor_eps >= 0.0) || !(gi_mollify >= 0.0)) throw ConfigError("floor_eps and gi_mollify must be >= 0");
    if (qc_sizes.empty() || qc_k.empty()) throw ConfigError("qc ladders must be non-empty");
    for (auto k : qc_k)
        if (k < 3) throw ConfigError("qc_k entries must be >= 3");
    if (green_ladder.size() < 3) throw ConfigError("green_ladder needs at least 3 sizes");
    if (!(green_mass_eps > 0.0 && green_mass_eps <= 0.1)) throw ConfigError("green_mass_eps must lie in (0, 0.1]");
    for (const auto& s : stages)
        if (std::find(stage_names().begin(), stage_names().end(), s) == stage_names().end())
            throw ConfigError("unknown stage '" + s + "'");
}

inline json PipelineConfig::to_json() const {
    auto dl = [](const std::vector<double>& v) {
        json a = json::array();
        for (double x : v) a.push_back(number_to_json(x));
        return a;
    };
    return json{{"preset", preset},
                {"family", family},
                {"align_family", align_family},
                {"sizes", sizes},
                {"threshold", threshold},
                {"window", dl(window)},
                {"grid", grid},
                {"tau", tau},
                {"n_boundary", n_boundary},
                {"max_iter", max_iter},
                {"bailout", bailout},
                {"sinkhorn_eps", sinkhorn_eps},
                {"sinkhorn_eps_factor", sinkhorn_eps_factor},
                {"sinkhorn_tol", sinkhorn_tol},
                {"sinkhorn_max_iter", sinkhorn_max_iter},
                {"allow_scale", allow_scale},
                {"k_neighbors", k_neighbors},
                {"bootstrap", bootstrap},
                {"variogram_bootstrap", variogram_bootstrap},
                {"variogram_points", variogram_points},
                {"diffusion_points", diffusion_points},
                {"potential_window", dl(potential_window)},
                {"potential_grid", potential_grid},
                {"bins", bins},
                {"alpha", alpha},
                {"flow_T", flow_T},
                {"floor_eps", floor_eps},
                {"gi_mollify", gi_mollify},
                {"qc_sizes", qc_sizes},
                {"qc_k", qc_k},
                {"green_ladder", green_ladder},
                {"green_mass_eps", green_mass_eps},
                {"green_tolerance", green_tolerance},
                {"seed", seed}};
}

/// FNV-1a over the canonical JSON (output directory and stage list excluded).
inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t PipelineConfig::hash() const { return fnv1a(to_json().dump()); }

inline std::string hex64(std::uint64_t h) {
    static const char* d = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i, h >>= 4) s[static_cast<std::size_t>(i)] = d[h & 15];
    return s;
}

/// Presets: "paper" = printed values plus full sizes; "desk" = sizes <= 200, 256^2 potentials, B = 500.
inline PipelineConfig preset_config(const std::string& name) {
    PipelineConfig c;
    c.preset = name;
    if (name == "paper") return c;
    if (name == "desk") {
        c.sizes = {10, 20, 50, 100, 150, 200};
        c.potential_grid = 256;
        c.bootstrap = 500;
        return c;
    }
    throw ConfigError("unknown preset '" + name + "' (expected paper or desk)");
}

/// Applies `key = value` lines; '#' starts a comment, blank lines are skipped.
inline void apply_config_text(PipelineConfig& c, const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        const auto key = detail::trim(std::string_view(line).substr(0, eq));
        if (key == "preset") throw ConfigError("config line " + std::to_string(lineno) + ": 'preset' is selected on the command line");
        c.set(key, line.substr(eq + 1));
    }
}

inline void apply_config_file(PipelineConfig& c, const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot read config file " + path.string());
    std::stringstream ss;
    ss << f.rdbuf();
    apply_config_text(c, ss.str());
}

}  // namespace eigloci::pipeline
