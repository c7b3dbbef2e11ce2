#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace slotcast {

// splitmix64 mixing step. Used to derive independent sub-seeds so ensemble
// members can be fit in any order (or concurrently) without changing results.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
    return splitmix64(seed ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

// mt19937_64 bit source with hand-rolled variate transforms. The std::*
// distributions are implementation-defined, which would break byte-identical
// reruns across standard libraries; these transforms are pinned here instead.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Unbiased integer in [0, n). Rejection sampling on the top bits.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n + 1) % n;
        std::uint64_t v = engine_();
        while (v > limit) v = engine_();
        return v % n;
    }

    // 53-bit uniform in [0, 1).
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Box-Muller, cacheless: one normal per call, two uniforms consumed.
    double normal() {
        double u1 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    // Fisher-Yates partial shuffle: writes a random k-subset of 0..n-1 into out.
    template <typename Vec>
    void sample_indices(std::size_t n, std::size_t k, Vec& out) {
        out.resize(n);
        for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<int>(i);
        for (std::size_t i = 0; i < k && i + 1 < n; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(below(n - i));
            std::swap(out[i], out[j]);
        }
        out.resize(k);
    }

    template <typename Vec>
    void shuffle(Vec& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

} // namespace slotcast
