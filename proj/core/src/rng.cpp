#include "gfsl/rng.hpp"

#include <stdexcept>

namespace gfsl {

namespace {

std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace

std::uint64_t Rng::next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix64(state_);
}

Rng Rng::derive(std::uint64_t seed, std::uint64_t stream) {
    // Finalize both words so adjacent (seed, stream) pairs land far apart.
    return Rng(mix64(seed + 0x9E3779B97F4A7C15ULL) ^ mix64(stream * 0xD1B54A32D192ED03ULL + 1));
}

double Rng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

float Rng::uniform(float lo, float hi) {
    return lo + static_cast<float>(uniform()) * (hi - lo);
}

int Rng::uniform_int(int n) {
    if (n <= 0) {
        throw std::invalid_argument("Rng::uniform_int: n must be positive");
    }
    // Multiply-shift mapping of the full 64-bit word onto [0, n).
    const unsigned __int128 wide =
        static_cast<unsigned __int128>(next_u64()) * static_cast<unsigned __int128>(n);
    return static_cast<int>(wide >> 64);
}

}  // namespace gfsl
