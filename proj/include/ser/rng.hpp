#ifndef SER_RNG_HPP
#define SER_RNG_HPP

#include <cstdint>
#include <vector>

namespace ser {

// xorshift64* generator. This is the project's single source of randomness
// so that dataset splits, weight initialization and dropout masks are
// reproducible across platforms and across reimplementations.
//
// State transition (Marsaglia xorshift with the * output scramble):
//   x ^= x >> 12;  x ^= x << 25;  x ^= x >> 27;  output = x * 0x2545F4914F6CDD1D
//
// A zero seed is remapped to 0x9E3779B97F4A7C15 (the state must be nonzero).
class XorShift64 {
public:
    explicit XorShift64(std::uint64_t seed)
        : state_(seed == 0 ? 0x9E3779B97F4A7C15ULL : seed) {}

    std::uint64_t next() {
        std::uint64_t x = state_;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        state_ = x;
        return x * 0x2545F4914F6CDD1DULL;
    }

    // Uniform double in [0, 1): top 53 bits scaled by 2^-53.
    double uniform01() {
        return static_cast<double>(next() >> 11) * (1.0 / 9007199254740992.0);
    }

    // Uniform double in [lo, hi).
    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform01();
    }

    // Uniform integer in [0, n). n must be > 0. Uses modulo reduction; the
    // bias is negligible for the small n used here and keeping the mapping
    // trivial makes it easy to reproduce elsewhere.
    std::uint64_t uniform_int(std::uint64_t n) {
        return next() % n;
    }

    // In-place Fisher-Yates shuffle, iterating i = n-1 .. 1 and swapping
    // element i with uniform_int(i + 1).
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_int(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    std::uint64_t state() const { return state_; }

private:
    std::uint64_t state_;
};

// splitmix64 finalizer; used to derive independent stream seeds from a run
// seed plus context words (epoch, sample index) without correlating streams.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
    return mix64(mix64(mix64(seed) ^ a) ^ b);
}

} // namespace ser

#endif
