#pragma once

#include <cstdint>
#include <vector>

namespace gfsl {

// Deterministic PRNG used everywhere randomness is needed.
//
// The algorithm is SplitMix64 (Steele/Lea/Flood): one 64-bit state word,
// advanced by a Weyl increment and finalized with a two-round mixer. It is
// fixed here so that a given seed produces the same stream on every platform
// this library builds on. Substreams come from derive(), which hashes
// (seed, stream) into a fresh state; this is how per-item and per-run
// generators stay independent of iteration order.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    // Independent generator for substream `stream` of `seed`.
    static Rng derive(std::uint64_t seed, std::uint64_t stream);

    std::uint64_t next_u64();

    // Uniform in [0, 1), 53-bit resolution.
    double uniform();

    // Uniform in [lo, hi).
    float uniform(float lo, float hi);

    // Uniform integer in [0, n). n must be positive.
    int uniform_int(int n);

    bool bernoulli(double p) { return uniform() < p; }

    // Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(uniform_int(static_cast<int>(i)));
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::uint64_t state_;
};

}  // namespace gfsl
