/**
 * @brief Uniform-grid spatial index over a fixed point set.
 *
 * Points are bucketed into square cells (CSR layout). Queries expand rings of
 * cells around the query and stop once the closest unvisited cell cannot beat
 * the current answer, so results equal brute force exactly.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "model.hpp"

namespace eigloci {

/// Euclidean distance used everywhere distances are compared against brute force.
inline double dist(Complex a, Complex b) noexcept {
    const double dx = a.real() - b.real(), dy = a.imag() - b.imag();
    return std::sqrt(dx * dx + dy * dy);
}

inline double dist2(Complex a, Complex b) noexcept {
    const double dx = a.real() - b.real(), dy = a.imag() - b.imag();
    return dx * dx + dy * dy;
}

struct Neighbor {
    std::size_t index = 0;
    double d2 = 0.0;  ///< squared distance
    bool operator<(const Neighbor& o) const noexcept { return d2 < o.d2 || (d2 == o.d2 && index < o.index); }
};

class PointIndex {
  public:
    explicit PointIndex(std::vector<Complex> pts, double points_per_cell = 2.0) : pts_(std::move(pts)) {
        if (pts_.empty()) throw PreconditionError("spatial index over an empty point set");
        const Bounds b = bounding_box(pts_);
        double span = std::max(b.width(), b.height());
        if (!(span > 0.0)) span = 1.0;
        const double n = static_cast<double>(pts_.size());
        double area = std::max(b.width(), span * 1e-3) * std::max(b.height(), span * 1e-3);
        cell_ = std::sqrt(area * points_per_cell / n);
        cell_ = std::max(cell_, span * 1e-6);
        x0_ = b.x_min;
        y0_ = b.y_min;
        nx_ = static_cast<long>(std::floor(b.width() / cell_)) + 1;
        ny_ = static_cast<long>(std::floor(b.height() / cell_)) + 1;
        const std::size_t cells = static_cast<std::size_t>(nx_ * ny_);
        start_.assign(cells + 1, 0);
        std::vector<std::size_t> cell_of(pts_.size());
        for (std::size_t i = 0; i < pts_.size(); ++i) {
            cell_of[i] = flat(cx(pts_[i].real()), cy(pts_[i].imag()));
            ++start_[cell_of[i] + 1];
        }
        for (std::size_t c = 0; c < cells; ++c) start_[c + 1] += start_[c];
        items_.resize(pts_.size());
        std::vector<std::size_t> fill(start_.begin(), start_.end() - 1);
        for (std::size_t i = 0; i < pts_.size(); ++i) items_[fill[cell_of[i]]++] = i;  // ascending index within a cell
    }

    const std::vector<Complex>& points() const noexcept { return pts_; }
    std::size_t size() const noexcept { return pts_.size(); }

    /// Closest point to q (smallest index on ties).
    Neighbor nearest(Complex q) const {
        return nearest_if(q, [](std::size_t) { return true; }, std::numeric_limits<double>::infinity()).value();
    }

    /// Closest point satisfying `pred` within `max_radius`, if any.
    template <class Pred>
    std::optional<Neighbor> nearest_if(Complex q, Pred&& pred, double max_radius) const {
        Neighbor best{0, std::numeric_limits<double>::infinity()};
        bool found = false;
        const long qx = clampx(cx(q.real())), qy = clampy(cy(q.imag()));
        const double max_r2 = max_radius * max_radius;
        for (long r = 0;; ++r) {
            visit_ring(qx, qy, r, [&](std::size_t i) {
                if (!pred(i)) return;
                Neighbor c{i, dist2(q, pts_[i])};
                if (c < best) {
                    best = c;
                    found = true;
                }
            });
            const double lb = ring_lower_bound(q, qx, qy, r);
            if (found && best.d2 <= lb * lb) break;
            if (lb > max_radius || lb == std::numeric_limits<double>::infinity()) break;
        }
        if (!found || best.d2 > max_r2) return std::nullopt;
        return best;
    }

    /// k nearest points to q ordered by (distance, index); includes q itself when q is a member.
    std::vector<Neighbor> knn(Complex q, std::size_t k) const {
        k = std::min(k, pts_.size());
        std::vector<Neighbor> cand;
        if (k == 0) return cand;
        const long qx = clampx(cx(q.real())), qy = clampy(cy(q.imag()));
        for (long r = 0;; ++r) {
            visit_ring(qx, qy, r, [&](std::size_t i) { cand.push_back({i, dist2(q, pts_[i])}); });
            const double lb = ring_lower_bound(q, qx, qy, r);
            if (cand.size() >= k) {
                std::nth_element(cand.begin(), cand.begin() + static_cast<long>(k - 1), cand.end());
                if (cand[k - 1].d2 <= lb * lb || lb == std::numeric_limits<double>::infinity()) break;
            } else if (lb == std::numeric_limits<double>::infinity()) {
                break;
            }
        }
        std::sort(cand.begin(), cand.end());
        cand.resize(k);
        return cand;
    }

    /// All points within distance r of q (inclusive), ascending index.
    std::vector<std::size_t> radius(Complex q, double r) const {
        std::vector<std::size_t> out;
        const double r2 = r * r;
        const long x_lo = clampx(cx(q.real() - r)), x_hi = clampx(cx(q.real() + r));
        const long y_lo = clampy(cy(q.imag() - r)), y_hi = clampy(cy(q.imag() + r));
        for (long y = y_lo; y <= y_hi; ++y)
            for (long x = x_lo; x <= x_hi; ++x) {
                const std::size_t c = flat(x, y);
                for (std::size_t s = start_[c]; s < start_[c + 1]; ++s)
                    if (dist2(q, pts_[items_[s]]) <= r2) out.push_back(items_[s]);
            }
        std::sort(out.begin(), out.end());
        return out;
    }

    /// Number of points within distance r of q (inclusive).
    std::size_t count_within(Complex q, double r) const {
        std::size_t n = 0;
        const double r2 = r * r;
        const long x_lo = clampx(cx(q.real() - r)), x_hi = clampx(cx(q.real() + r));
        const long y_lo = clampy(cy(q.imag() - r)), y_hi = clampy(cy(q.imag() + r));
        for (long y = y_lo; y <= y_hi; ++y)
            for (long x = x_lo; x <= x_hi; ++x) {
                const std::size_t c = flat(x, y);
                for (std::size_t s = start_[c]; s < start_[c + 1]; ++s) n += dist2(q, pts_[items_[s]]) <= r2;
            }
        return n;
    }

  private:
    long cx(double x) const noexcept {
        const double t = std::floor((x - x0_) / cell_);
        return t < -1e15 ? -1000000000L : (t > 1e15 ? 1000000000L : static_cast<long>(t));
    }
    long cy(double y) const noexcept {
        const double t = std::floor((y - y0_) / cell_);
        return t < -1e15 ? -1000000000L : (t > 1e15 ? 1000000000L : static_cast<long>(t));
    }
    long clampx(long x) const noexcept { return std::clamp(x, 0L, nx_ - 1); }
    long clampy(long y) const noexcept { return std::clamp(y, 0L, ny_ - 1); }
    std::size_t flat(long x, long y) const noexcept {
        return static_cast<std::size_t>(std::clamp(y, 0L, ny_ - 1) * nx_ + std::clamp(x, 0L, nx_ - 1));
    }

    template <class F>
    void visit_ring(long qx, long qy, long r, F&& f) const {
        auto cell = [&](long x, long y) {
            if (x < 0 || y < 0 || x >= nx_ || y >= ny_) return;
            const std::size_t c = static_cast<std::size_t>(y * nx_ + x);
            for (std::size_t s = start_[c]; s < start_[c + 1]; ++s) f(items_[s]);
        };
        if (r == 0) {
            cell(qx, qy);
            return;
        }
        for (long x = qx - r; x <= qx + r; ++x) {
            cell(x, qy - r);
            cell(x, qy + r);
        }
        for (long y = qy - r + 1; y <= qy + r - 1; ++y) {
            cell(qx - r, y);
            cell(qx + r, y);
        }
    }

    // Distance from q to the nearest cell outside the (2r+1)^2 block; +inf once the block covers the grid.
    double ring_lower_bound(Complex q, long qx, long qy, long r) const noexcept {
        constexpr double inf = std::numeric_limits<double>::infinity();
        double lb = inf;
        if (qx - r > 0) lb = std::min(lb, q.real() - (x0_ + static_cast<double>(qx - r) * cell_));
        if (qx + r < nx_ - 1) lb = std::min(lb, (x0_ + static_cast<double>(qx + r + 1) * cell_) - q.real());
        if (qy - r > 0) lb = std::min(lb, q.imag() - (y0_ + static_cast<double>(qy - r) * cell_));
        if (qy + r < ny_ - 1) lb = std::min(lb, (y0_ + static_cast<double>(qy + r + 1) * cell_) - q.imag());
        return lb == inf ? inf : std::max(lb, 0.0);
    }

    std::vector<Complex> pts_;
    double cell_ = 1.0, x0_ = 0.0, y0_ = 0.0;
    long nx_ = 1, ny_ = 1;
    std::vector<std::size_t> start_;
    std::vector<std::size_t> items_;
};

/**
 * Static 2-d tree for exact nearest-neighbor queries. Unlike the uniform grid it
 * stays fast for clouds concentrated on curves and for queries far from the data.
 */
class KdTree {
  public:
    explicit KdTree(std::vector<Complex> pts, std::size_t leaf_size = 8) : pts_(std::move(pts)), leaf_(std::max<std::size_t>(1, leaf_size)) {
        if (pts_.empty()) throw PreconditionError("kd-tree over an empty point set");
        perm_.resize(pts_.size());
        for (std::size_t i = 0; i < perm_.size(); ++i) perm_[i] = i;
        nodes_.reserve(2 * pts_.size() / leaf_ + 2);
        build(0, perm_.size());
    }

    const std::vector<Complex>& points() const noexcept { return pts_; }

    /// Closest point to q (smallest index on ties).
    Neighbor nearest(Complex q) const {
        Neighbor best{0, std::numeric_limits<double>::infinity()};
        std::size_t stack[128];
        std::size_t top = 0;
        stack[top++] = 0;
        while (top) {
            const Node& n = nodes_[stack[--top]];
            if (box_d2(n, q) > best.d2) continue;
            if (n.left == kNone) {
                for (std::size_t s = n.lo; s < n.hi; ++s) {
                    const Neighbor c{perm_[s], dist2(q, pts_[perm_[s]])};
                    if (c < best) best = c;
                }
                continue;
            }
            const Node& l = nodes_[n.left];
            const Node& r = nodes_[n.right];
            // push the farther child first so the nearer one is explored next
            if (box_d2(l, q) <= box_d2(r, q)) {
                stack[top++] = n.right;
                stack[top++] = n.left;
            } else {
                stack[top++] = n.left;
                stack[top++] = n.right;
            }
        }
        return best;
    }

  private:
    static constexpr std::size_t kNone = static_cast<std::size_t>(-1);
    struct Node {
        std::size_t lo, hi, left = kNone, right = kNone;
        double x0, x1, y0, y1;
    };
    std::vector<Complex> pts_;
    std::size_t leaf_;
    std::vector<std::size_t> perm_;
    std::vector<Node> nodes_;

    static double box_d2(const Node& n, Complex q) noexcept {
        const double dx = std::max({n.x0 - q.real(), 0.0, q.real() - n.x1});
        const double dy = std::max({n.y0 - q.imag(), 0.0, q.imag() - n.y1});
        return dx * dx + dy * dy;
    }

    std::size_t build(std::size_t lo, std::size_t hi) {
        Node n{lo, hi, kNone, kNone, std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
               std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
        for (std::size_t s = lo; s < hi; ++s) {
            const Complex p = pts_[perm_[s]];
            n.x0 = std::min(n.x0, p.real());
            n.x1 = std::max(n.x1, p.real());
            n.y0 = std::min(n.y0, p.imag());
            n.y1 = std::max(n.y1, p.imag());
        }
        const std::size_t id = nodes_.size();
        nodes_.push_back(n);
        if (hi - lo <= leaf_) return id;
        const bool by_x = (n.x1 - n.x0) >= (n.y1 - n.y0);
        const std::size_t mid = lo + (hi - lo) / 2;
        std::nth_element(perm_.begin() + static_cast<long>(lo), perm_.begin() + static_cast<long>(mid), perm_.begin() + static_cast<long>(hi),
                         [&](std::size_t a, std::size_t b) {
                             const double ka = by_x ? pts_[a].real() : pts_[a].imag();
                             const double kb = by_x ? pts_[b].real() : pts_[b].imag();
                             return ka < kb || (ka == kb && a < b);
                         });
        const std::size_t l = build(lo, mid);
        const std::size_t r = build(mid, hi);
        nodes_[id].left = l;
        nodes_[id].right = r;
        return id;
    }
};

/// Distance from each point to its nearest *other* point (0 for exact duplicates).
inline std::vector<double> nn_distances(const PointIndex& index) {
    const auto& pts = index.points();
    std::vector<double> out(pts.size(), 0.0);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        auto nb = index.nearest_if(pts[i], [i](std::size_t j) { return j != i; }, std::numeric_limits<double>::infinity());
        out[i] = nb ? std::sqrt(nb->d2) : 0.0;
    }
    return out;
}

inline double median_of(std::vector<double> v) {
    if (v.empty()) throw PreconditionError("median of an empty list");
    const std::size_t m = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<long>(m), v.end());
    const double hi = v[m];
    if (v.size() % 2) return hi;
    const double lo = *std::max_element(v.begin(), v.begin() + static_cast<long>(m));
    return 0.5 * (lo + hi);
}

}  // namespace eigloci
