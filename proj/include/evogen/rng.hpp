#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace evogen::rng {

// SplitMix64 finalizer; used to derive well-mixed seeds from structured inputs.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline std::uint64_t mix(std::uint64_t seed) { return splitmix64(seed); }

// Order-sensitive seed derivation: mix(s, a, b) != mix(s, b, a).
template <typename... Rest>
std::uint64_t mix(std::uint64_t seed, std::uint64_t next, Rest... rest) {
    return mix(splitmix64(seed ^ splitmix64(next)), rest...);
}

// Stream tags keep independently derived substreams from colliding.
enum StreamTag : std::uint64_t {
    kTagSplit = 0x5350u,       // dataset splitting
    kTagWeightInit = 0x5749u,  // MLP weight initialization
    kTagDropout = 0x4452u,
    kTagHoldout = 0x484Fu,     // early-stopping holdout selection
    kTagInitPop = 0x4950u,     // GA initial population
    kTagMutate = 0x4D55u,
    kTagSelect = 0x5345u,      // GA parent selection
    kTagFitness = 0x4649u,     // per-individual fitness evaluation
    kTagResample = 0x5245u,    // harness real-data resample
    kTagEvolve = 0x4556u,      // harness evolve run
    kTagEvalGen = 0x4547u,     // harness model run on generated data
    kTagEvalReal = 0x4552u,
    kTagBaseline = 0x4241u,    // harness random-baseline genome
    kTagEvalBase = 0x4542u,
};

// Deterministic uniform stream. mt19937_64 output is fully specified by the
// standard, and doubles are formed from the top 53 bits, so sequences are
// reproducible across platforms and toolchains.
class Stream {
public:
    explicit Stream(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    // uniform on [0, 1)
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    // uniform on [lo, hi)
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // uniform integer on [0, n), rejection-sampled to avoid modulo bias
    std::uint64_t uniform_int(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = eng_();
        } while (x >= limit);
        return x % n;
    }

    // Fisher-Yates; std::shuffle is implementation-defined, this is not.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[uniform_int(i)]);
        }
    }

private:
    std::mt19937_64 eng_;
};

}  // namespace evogen::rng
