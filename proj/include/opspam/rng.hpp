#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

namespace opspam {

// Deterministic PRNG with a portable bit stream. std::shuffle and
// std::uniform_int_distribution are implementation-defined, so all
// randomness that feeds results goes through this instead.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1), 53-bit resolution.
    double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Uniform in [0, n). Lemire multiply-shift with rejection.
    std::uint64_t bounded(std::uint64_t n) {
        if (n == 0) return 0;
        std::uint64_t threshold = (0 - n) % n;
        for (;;) {
            std::uint64_t r = next();
            __uint128_t m = static_cast<__uint128_t>(r) * n;
            if (static_cast<std::uint64_t>(m) >= threshold)
                return static_cast<std::uint64_t>(m >> 64);
        }
    }

    double normal() {
        // Box-Muller, one value per call (the twin is discarded to keep
        // the stream position independent of call parity).
        double u1 = next_double();
        double u2 = next_double();
        while (u1 <= 0.0) u1 = next_double();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

private:
    std::uint64_t state_;
};

// Splits one root seed into independent per-component streams by label.
inline std::uint64_t derive_seed(std::uint64_t root, std::string_view label) {
    std::uint64_t h = 0xcbf29ce484222325ULL ^ root;
    for (unsigned char c : label) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    h ^= root >> 32;
    return SplitMix64(h).next();
}

template <typename T>
void fisher_yates_shuffle(std::vector<T>& v, SplitMix64& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rng.bounded(i));
        using std::swap;
        swap(v[i - 1], v[j]);
    }
}

}  // namespace opspam
