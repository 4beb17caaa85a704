/**
 * @brief DiagnosticsReport: nested, serializable record of every emitted statistic.
 *
 * Layout: {"config": {...}, "sections": {name: {"config", "scalars", "arrays", "notes"}}}.
 * Non-finite numbers are stored as the strings "nan", "inf", "-inf" so the JSON stays valid.
 */
#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "model.hpp"

namespace eigloci {

using json = nlohmann::ordered_json;

inline json number_to_json(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

inline double number_from_json(const json& j) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "nan") return std::nan("");
        if (s == "inf") return HUGE_VAL;
        if (s == "-inf") return -HUGE_VAL;
    }
    throw PreconditionError("report value is not a number: " + j.dump());
}

/// NaN compares equal to NaN so that round-trips of undefined statistics hold.
inline bool same_number(double a, double b) noexcept { return (std::isnan(a) && std::isnan(b)) || a == b; }

struct ReportSection {
    json config = json::object();  ///< parameters that produced this section
    std::map<std::string, double> scalars;
    std::map<std::string, std::vector<double>> arrays;
    std::map<std::string, std::string> notes;

    void set(const std::string& key, double v) { scalars[key] = v; }
    void set_flag(const std::string& key, bool v) { scalars[key] = v ? 1.0 : 0.0; }
    void set_array(const std::string& key, std::vector<double> v) { arrays[key] = std::move(v); }
    void note(const std::string& key, std::string v) { notes[key] = std::move(v); }

    double get(const std::string& key) const {
        auto it = scalars.find(key);
        if (it == scalars.end()) throw PreconditionError("report section has no scalar '" + key + "'");
        return it->second;
    }
    bool has(const std::string& key) const { return scalars.count(key) != 0; }

    json to_json() const {
        json s = json::object();
        for (const auto& [k, v] : scalars) s[k] = number_to_json(v);
        json a = json::object();
        for (const auto& [k, v] : arrays) {
            json arr = json::array();
            for (double x : v) arr.push_back(number_to_json(x));
            a[k] = std::move(arr);
        }
        json n = json::object();
        for (const auto& [k, v] : notes) n[k] = v;
        return json{{"config", config}, {"scalars", s}, {"arrays", a}, {"notes", n}};
    }

    static ReportSection from_json(const json& j) {
        ReportSection r;
        r.config = j.at("config");
        for (const auto& [k, v] : j.at("scalars").items()) r.scalars[k] = number_from_json(v);
        for (const auto& [k, v] : j.at("arrays").items()) {
            std::vector<double> arr;
            for (const auto& x : v) arr.push_back(number_from_json(x));
            r.arrays[k] = std::move(arr);
        }
        for (const auto& [k, v] : j.at("notes").items()) r.notes[k] = v.get<std::string>();
        return r;
    }

    friend bool operator==(const ReportSection& a, const ReportSection& b) {
        if (a.config != b.config || a.notes != b.notes) return false;
        if (a.scalars.size() != b.scalars.size() || a.arrays.size() != b.arrays.size()) return false;
        for (const auto& [k, v] : a.scalars) {
            auto it = b.scalars.find(k);
            if (it == b.scalars.end() || !same_number(v, it->second)) return false;
        }
        for (const auto& [k, v] : a.arrays) {
            auto it = b.arrays.find(k);
            if (it == b.arrays.end() || it->second.size() != v.size()) return false;
            for (std::size_t i = 0; i < v.size(); ++i)
                if (!same_number(v[i], it->second[i])) return false;
        }
        return true;
    }
};

struct DiagnosticsReport {
    json config = json::object();
    std::map<std::string, ReportSection> sections;

    ReportSection& section(const std::string& name) { return sections[name]; }
    const ReportSection& section(const std::string& name) const {
        auto it = sections.find(name);
        if (it == sections.end()) throw PreconditionError("report has no section '" + name + "'");
        return it->second;
    }
    bool has_section(const std::string& name) const { return sections.count(name) != 0; }

    json to_json() const {
        json s = json::object();
        for (const auto& [k, v] : sections) s[k] = v.to_json();
        return json{{"config", config}, {"sections", s}};
    }

    std::string serialize() const { return to_json().dump(2) + "\n"; }

    static DiagnosticsReport from_json(const json& j) {
        DiagnosticsReport r;
        r.config = j.at("config");
        for (const auto& [k, v] : j.at("sections").items()) r.sections[k] = ReportSection::from_json(v);
        return r;
    }

    static DiagnosticsReport deserialize(const std::string& text) { return from_json(json::parse(text)); }

    void write(const std::filesystem::path& path) const {
        std::ofstream f(path, std::ios::binary);
        if (!f) throw Error("cannot open " + path.string() + " for writing");
        f << serialize();
    }

    static DiagnosticsReport read(const std::filesystem::path& path) {
        std::ifstream f(path, std::ios::binary);
        if (!f) throw PreconditionError("cannot open " + path.string());
        std::stringstream ss;
        ss << f.rdbuf();
        return deserialize(ss.str());
    }

    friend bool operator==(const DiagnosticsReport& a, const DiagnosticsReport& b) {
        return a.config == b.config && a.sections == b.sections;
    }
};

}  // namespace eigloci
