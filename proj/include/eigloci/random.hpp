#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "model.hpp"

namespace eigloci {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/**
 * @brief Counter-based generator: draw k of stream (seed, stream_id) is a pure
 * function of (seed, stream_id, k).
 *
 * Streams are split by task id so that results never depend on which worker
 * executes a task or in which order tasks run.
 */
class Rng {
  public:
    Rng(Seed seed, std::uint64_t stream_id) noexcept
        : key_(splitmix64(seed.value ^ splitmix64(stream_id * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL))) {}

    /// Independent child stream, e.g. one per bootstrap replicate.
    Rng split(std::uint64_t child) const noexcept { return Rng(key_, child); }

    std::uint64_t next_u64() noexcept { return splitmix64(key_ + 0x9E3779B97F4A7C15ULL * (counter_++)); }

    /// Uniform in [0, 1).
    double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n), unbiased (Lemire's multiply-and-reject).
    std::uint64_t index(std::uint64_t n) noexcept {
        if (n == 0) return 0;
        unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * n;
        auto low = static_cast<std::uint64_t>(m);
        if (low < n) {
            const std::uint64_t threshold = (0 - n) % n;
            while (low < threshold) {
                m = static_cast<unsigned __int128>(next_u64()) * n;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    /// Standard normal (Box-Muller, both variates used).
    double normal() noexcept {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * M_PI * u2);
        has_spare_ = true;
        return r * std::cos(2.0 * M_PI * u2);
    }

  private:
    Rng(std::uint64_t parent_key, std::uint64_t child) noexcept
        : key_(splitmix64(parent_key ^ splitmix64(child + 0x2545F4914F6CDD1DULL))) {}

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// k distinct indices from [0, n), returned in ascending order.
inline std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k, Rng& rng) {
    if (k > n) k = n;
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.index(n - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    std::sort(idx.begin(), idx.end());
    return idx;
}

/// Subsample a cloud to at most `k` points (ascending original order); returns the cloud unchanged if smaller.
inline PointCloud subsample(const PointCloud& cloud, std::size_t k, Rng& rng) {
    if (cloud.size() <= k) return cloud;
    PointCloud out{{}, cloud.label, cloud.seed};
    for (auto i : sample_without_replacement(cloud.size(), k, rng)) out.points.push_back(cloud.points[i]);
    return out;
}

}  // namespace eigloci
