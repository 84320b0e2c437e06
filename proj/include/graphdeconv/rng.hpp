#ifndef GRAPHDECONV_RNG_HPP
#define GRAPHDECONV_RNG_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace graphdeconv {

// splitmix64 step; used both as a seed mixer and to derive child seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Counter-based child seed: hash of (parent, salt). Deterministic and
// platform independent, so experiment streams never depend on call order.
inline std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t salt) {
    std::uint64_t s = parent ^ (0x9e3779b97f4a7c15ULL + (salt << 1));
    std::uint64_t a = splitmix64(s);
    std::uint64_t b = splitmix64(s);
    return a ^ (b >> 1);
}

inline std::uint64_t fnv1a64(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Deterministic random stream. std::mt19937_64 is bit-exact across
// implementations; the distributions below are hand-rolled because the
// std::* distributions are not.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(mix(seed)) {}

    std::uint64_t bits() { return engine_(); }

    // uniform on [0, 1) with 53-bit resolution
    double uniform() { return static_cast<double>(bits() >> 11) * 0x1.0p-53; }

    // uniform integer in [0, n), n >= 1 (rejection-free would bias; use rejection)
    std::uint64_t uniform_index(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t draw;
        do {
            draw = bits();
        } while (draw >= limit);
        return draw % n;
    }

    // standard normal via Box-Muller (deterministic, no cached spare)
    double gaussian() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    // k distinct indices from [0, n), returned sorted ascending
    std::vector<int> sample_without_replacement(int n, int k) {
        std::vector<int> pool(n);
        for (int i = 0; i < n; ++i) pool[i] = i;
        // partial Fisher-Yates
        for (int i = 0; i < k; ++i) {
            const int j = i + static_cast<int>(uniform_index(static_cast<std::uint64_t>(n - i)));
            std::swap(pool[i], pool[j]);
        }
        pool.resize(k);
        std::sort(pool.begin(), pool.end());
        return pool;
    }

private:
    static std::uint64_t mix(std::uint64_t seed) {
        std::uint64_t s = seed;
        return splitmix64(s);
    }
    std::mt19937_64 engine_;
};

}  // namespace graphdeconv

#endif
