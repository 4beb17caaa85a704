/**
 * @brief Shared domain types: points, clouds, grid windows, fields, histograms.
 */
#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace eigloci {

using Complex = std::complex<double>;

/// Base of every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration or parameter value.
class ConfigError : public Error {
  public:
    using Error::Error;
};

/// Input violates an operation's precondition (empty cloud, size mismatch, ...).
class PreconditionError : public Error {
  public:
    using Error::Error;
};

/// An iterative method failed or a quantity is numerically undefined.
class NumericalError : public Error {
  public:
    using Error::Error;
};

struct Seed {
    std::uint64_t value = 0;
};

inline bool is_finite(Complex z) noexcept { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

/**
 * @brief Ordered set of plane points with a provenance label.
 */
struct PointCloud {
    std::vector<Complex> points;
    std::string label;
    std::uint64_t seed = 0;

    std::size_t size() const noexcept { return points.size(); }
    bool empty() const noexcept { return points.empty(); }

    /// Throws PreconditionError when a point is non-finite, or when empty and `require_non_empty`.
    void validate(bool require_non_empty = true) const {
        if (require_non_empty && points.empty())
            throw PreconditionError("point cloud '" + label + "' is empty");
        for (const auto& p : points)
            if (!is_finite(p)) throw PreconditionError("point cloud '" + label + "' contains a non-finite point");
    }
};

inline Complex centroid(const std::vector<Complex>& pts) {
    Complex s{0.0, 0.0};
    for (const auto& p : pts) s += p;
    return pts.empty() ? s : s / static_cast<double>(pts.size());
}

struct Bounds {
    double x_min, x_max, y_min, y_max;
    double width() const noexcept { return x_max - x_min; }
    double height() const noexcept { return y_max - y_min; }
    double area() const noexcept { return width() * height(); }
    double diagonal() const noexcept { return std::hypot(width(), height()); }
};

inline Bounds bounding_box(const std::vector<Complex>& pts) {
    if (pts.empty()) throw PreconditionError("bounding box of an empty point set");
    Bounds b{pts[0].real(), pts[0].real(), pts[0].imag(), pts[0].imag()};
    for (const auto& p : pts) {
        b.x_min = std::min(b.x_min, p.real());
        b.x_max = std::max(b.x_max, p.real());
        b.y_min = std::min(b.y_min, p.imag());
        b.y_max = std::max(b.y_max, p.imag());
    }
    return b;
}

/**
 * @brief Rectangular window split into nx by ny equal cells.
 *
 * Cells are half-open [x_i, x_{i+1}) x [y_j, y_{j+1}); the right and top
 * edges of the window belong to the last column and row.
 */
struct GridWindow {
    double x_min = 0.0, x_max = 1.0, y_min = 0.0, y_max = 1.0;
    std::size_t nx = 2, ny = 2;

    double dx() const noexcept { return (x_max - x_min) / static_cast<double>(nx); }
    double dy() const noexcept { return (y_max - y_min) / static_cast<double>(ny); }
    std::size_t cells() const noexcept { return nx * ny; }
    double area() const noexcept { return (x_max - x_min) * (y_max - y_min); }

    Complex cell_center(std::size_t ix, std::size_t iy) const noexcept {
        return {x_min + (static_cast<double>(ix) + 0.5) * dx(), y_min + (static_cast<double>(iy) + 0.5) * dy()};
    }

    void validate() const {
        if (!(std::isfinite(x_min) && std::isfinite(x_max) && std::isfinite(y_min) && std::isfinite(y_max)))
            throw ConfigError("grid window bounds must be finite");
        if (!(x_min < x_max) || !(y_min < y_max)) throw ConfigError("grid window requires x_min < x_max and y_min < y_max");
        if (nx < 2 || ny < 2) throw ConfigError("grid window requires nx, ny >= 2");
        if (!(dx() > 0.0) || !(dy() > 0.0) || !std::isfinite(dx()) || !std::isfinite(dy()))
            throw ConfigError("grid window cell sizes must be finite and positive");
    }

    bool operator==(const GridWindow&) const = default;
};

struct CellIndex {
    std::size_t ix = 0, iy = 0;
    std::size_t flat(std::size_t nx) const noexcept { return iy * nx + ix; }
    bool operator==(const CellIndex&) const = default;
};

/// Cell containing `p`, or nullopt when `p` lies outside the closed window.
inline std::optional<CellIndex> grid_index(const GridWindow& w, Complex p) noexcept {
    const double x = p.real(), y = p.imag();
    if (!(x >= w.x_min && x <= w.x_max && y >= w.y_min && y <= w.y_max)) return std::nullopt;
    auto axis = [](double v, double lo, double hi, std::size_t n) {
        const double t = (v - lo) / (hi - lo) * static_cast<double>(n);
        auto i = static_cast<std::size_t>(std::floor(t));
        return i >= n ? n - 1 : i;
    };
    return CellIndex{axis(x, w.x_min, w.x_max, w.nx), axis(y, w.y_min, w.y_max, w.ny)};
}

/**
 * @brief Per-cell real values on a GridWindow, row-major with y as the outer index.
 *
 * `mask[i] != 0` marks a cell excluded from statistics (its value may be non-finite).
 */
struct ScalarField {
    GridWindow window;
    std::vector<double> values;
    std::vector<std::uint8_t> mask;

    ScalarField() = default;
    explicit ScalarField(const GridWindow& w, double fill = 0.0)
        : window(w), values(w.cells(), fill), mask(w.cells(), 0) {}

    double& at(std::size_t ix, std::size_t iy) { return values[iy * window.nx + ix]; }
    double at(std::size_t ix, std::size_t iy) const { return values[iy * window.nx + ix]; }
    bool masked(std::size_t i) const { return mask[i] != 0; }
    std::size_t unmasked_count() const {
        std::size_t n = 0;
        for (auto m : mask) n += (m == 0);
        return n;
    }

    void validate() const {
        window.validate();
        if (values.size() != window.cells() || mask.size() != window.cells())
            throw PreconditionError("scalar field size does not match its window");
        for (std::size_t i = 0; i < values.size(); ++i)
            if (!mask[i] && !std::isfinite(values[i])) throw PreconditionError("scalar field has a non-finite unmasked cell");
    }
};

/**
 * @brief Probability vector over the cells of a GridWindow.
 */
struct SimplexHistogram {
    GridWindow window;
    std::vector<double> mass;

    std::size_t size() const noexcept { return mass.size(); }

    void validate(bool strictly_positive = false) const {
        if (mass.size() != window.cells()) throw PreconditionError("histogram size does not match its window");
        double s = 0.0;
        for (double m : mass) {
            if (!(m >= 0.0) || !std::isfinite(m)) throw PreconditionError("histogram has a negative or non-finite bin");
            if (strictly_positive && !(m > 0.0)) throw PreconditionError("histogram has a non-positive bin");
            s += m;
        }
        if (std::abs(s - 1.0) > 1e-12) throw PreconditionError("histogram mass does not sum to one");
    }
};

/// Row-major 2x2 real matrix acting on column vectors (x, y).
struct Mat2 {
    double a = 1.0, b = 0.0, c = 0.0, d = 1.0;

    double det() const noexcept { return a * d - b * c; }
    double trace() const noexcept { return a + d; }
    double frobenius() const noexcept { return std::sqrt(a * a + b * b + c * c + d * d); }
    Mat2 transpose() const noexcept { return {a, c, b, d}; }
    Complex apply(Complex v) const noexcept {
        return {a * v.real() + b * v.imag(), c * v.real() + d * v.imag()};
    }
    friend Mat2 operator*(const Mat2& x, const Mat2& y) noexcept {
        return {x.a * y.a + x.b * y.c, x.a * y.b + x.b * y.d, x.c * y.a + x.d * y.c, x.c * y.b + x.d * y.d};
    }
    friend Mat2 operator-(const Mat2& x, const Mat2& y) noexcept { return {x.a - y.a, x.b - y.b, x.c - y.c, x.d - y.d}; }
    friend Mat2 operator*(double s, const Mat2& x) noexcept { return {s * x.a, s * x.b, s * x.c, s * x.d}; }
    bool operator==(const Mat2&) const = default;

    static Mat2 rotation(double theta) noexcept {
        const double c = std::cos(theta), s = std::sin(theta);
        return {c, -s, s, c};
    }
};

/**
 * @brief Outcome of transport matching followed by rigid alignment.
 */
struct MatchResult {
    std::vector<std::size_t> matching;  ///< matching[i] = target index receiving most mass from source i
    Mat2 rotation;
    Complex translation{0.0, 0.0};
    double scale = 1.0;
    double residual = 0.0;
    PointCloud aligned;
    std::vector<double> distances;
};

}  // namespace eigloci
