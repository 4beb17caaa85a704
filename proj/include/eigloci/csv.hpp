/**
 * @brief Headered CSV I/O with shortest round-trip number formatting.
 */
#pragma once

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "model.hpp"

namespace eigloci {

/// Shortest decimal that parses back to exactly `v`; "nan", "inf", "-inf" for non-finite values.
inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    if (s == "nan" || s == "-nan") return std::nan("");
    if (s == "inf" || s == "+inf") return HUGE_VAL;
    if (s == "-inf") return -HUGE_VAL;
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw PreconditionError("malformed number in CSV: '" + std::string(s) + "'");
    return v;
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

/**
 * @brief In-memory table: a header and rows of already formatted cells.
 */
class CsvTable {
  public:
    explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

    const std::vector<std::string>& header() const noexcept { return header_; }
    std::size_t rows() const noexcept { return rows_.size(); }
    const std::vector<std::string>& row(std::size_t i) const { return rows_.at(i); }

    /// Append a row; numbers are formatted round-trip, strings verbatim.
    template <class... Cells>
    void add(const Cells&... cells) {
        std::vector<std::string> r;
        r.reserve(sizeof...(cells));
        (r.push_back(cell(cells)), ...);
        add_row(std::move(r));
    }

    void add_row(std::vector<std::string> r) {
        if (r.size() != header_.size()) throw PreconditionError("CSV row width does not match header");
        rows_.push_back(std::move(r));
    }

    std::string str() const {
        std::string s = join(header_);
        for (const auto& r : rows_) s += join(r);
        return s;
    }

    void write(const std::filesystem::path& path) const {
        std::ofstream f(path, std::ios::binary);
        if (!f) throw Error("cannot open " + path.string() + " for writing");
        f << str();
        if (!f) throw Error("write failed for " + path.string());
    }

    /// Column `name` parsed as numbers.
    std::vector<double> column(const std::string& name) const {
        std::size_t k = column_index(name);
        std::vector<double> out;
        out.reserve(rows_.size());
        for (const auto& r : rows_) out.push_back(parse_double(r[k]));
        return out;
    }

    std::size_t column_index(const std::string& name) const {
        for (std::size_t k = 0; k < header_.size(); ++k)
            if (header_[k] == name) return k;
        throw PreconditionError("CSV has no column '" + name + "'");
    }

    static CsvTable read(const std::filesystem::path& path) {
        std::ifstream f(path, std::ios::binary);
        if (!f) throw PreconditionError("cannot open " + path.string());
        std::string line;
        if (!std::getline(f, line)) throw PreconditionError(path.string() + ": missing CSV header");
        std::vector<std::string> header;
        for (auto v : split_fields(strip_cr(line))) header.emplace_back(v);
        CsvTable t(header);
        std::size_t lineno = 1;
        while (std::getline(f, line)) {
            ++lineno;
            if (strip_cr(line).empty()) continue;
            std::vector<std::string> r;
            for (auto v : split_fields(strip_cr(line))) r.emplace_back(v);
            if (r.size() != header.size())
                throw PreconditionError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                                        std::to_string(header.size()) + " fields, found " + std::to_string(r.size()));
            t.rows_.push_back(std::move(r));
        }
        return t;
    }

  private:
    static std::string_view strip_cr(const std::string& s) {
        std::string_view v(s);
        if (!v.empty() && v.back() == '\r') v.remove_suffix(1);
        return v;
    }
    static std::string cell(double v) { return format_double(v); }
    static std::string cell(float v) { return format_double(v); }
    static std::string cell(const std::string& v) { return v; }
    static std::string cell(const char* v) { return v; }
    template <class I>
        requires std::is_integral_v<I>
    static std::string cell(I v) { return std::to_string(v); }

    static std::string join(const std::vector<std::string>& r) {
        std::string s;
        for (std::size_t k = 0; k < r.size(); ++k) {
            if (k) s += ',';
            s += r[k];
        }
        s += '\n';
        return s;
    }

    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

/// Cloud as `re,im` (plus optional extra numeric column).
inline CsvTable cloud_table(const PointCloud& cloud) {
    CsvTable t({"re", "im"});
    for (const auto& p : cloud.points) t.add(p.real(), p.imag());
    return t;
}

// Field files: first line `x_min,x_max,y_min,y_max,nx,ny`, second the values,
// then ny rows of nx values (y-outer); masked cells are written as nan.
inline void write_field(const ScalarField& f, const std::filesystem::path& path) {
    std::ostringstream os;
    const auto& w = f.window;
    os << "x_min,x_max,y_min,y_max,nx,ny\n"
       << format_double(w.x_min) << ',' << format_double(w.x_max) << ',' << format_double(w.y_min) << ','
       << format_double(w.y_max) << ',' << w.nx << ',' << w.ny << '\n';
    for (std::size_t iy = 0; iy < w.ny; ++iy) {
        for (std::size_t ix = 0; ix < w.nx; ++ix) {
            const std::size_t i = iy * w.nx + ix;
            if (ix) os << ',';
            os << (f.mask[i] ? std::string("nan") : format_double(f.values[i]));
        }
        os << '\n';
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out << os.str();
}

inline ScalarField read_field(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw PreconditionError("cannot open " + path.string());
    std::string line;
    std::getline(in, line);
    if (line.rfind("x_min,x_max,y_min,y_max,nx,ny", 0) != 0) throw PreconditionError(path.string() + ": missing field header");
    std::getline(in, line);
    auto meta = split_fields(line);
    if (meta.size() != 6) throw PreconditionError(path.string() + ": malformed field metadata");
    GridWindow w{parse_double(meta[0]), parse_double(meta[1]), parse_double(meta[2]), parse_double(meta[3]),
                 static_cast<std::size_t>(parse_double(meta[4])), static_cast<std::size_t>(parse_double(meta[5]))};
    w.validate();
    ScalarField f(w);
    for (std::size_t iy = 0; iy < w.ny; ++iy) {
        if (!std::getline(in, line)) throw PreconditionError(path.string() + ": truncated field");
        auto cells = split_fields(line);
        if (cells.size() != w.nx) throw PreconditionError(path.string() + ": field row has the wrong width");
        for (std::size_t ix = 0; ix < w.nx; ++ix) {
            const double v = parse_double(cells[ix]);
            f.values[iy * w.nx + ix] = v;
            f.mask[iy * w.nx + ix] = std::isnan(v) ? 1 : 0;
        }
    }
    return f;
}

}  // namespace eigloci
