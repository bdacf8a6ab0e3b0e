#include "ijflow/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace ijflow {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

inline std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
} // namespace

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += kGolden);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

void RngState::reseed(std::uint64_t sd) {
    seed = sd;
    std::uint64_t sm = sd;
    for (auto& w : s) w = splitmix64(sm);
    if ((s[0] | s[1] | s[2] | s[3]) == 0) s[0] = 1; // all-zero state is invalid
    has_spare = false;
    spare = 0.0;
}

RngState RngState::split(std::uint64_t index) const {
    std::uint64_t sm = seed ^ (kGolden * (index + 1));
    return RngState(splitmix64(sm));
}

std::uint64_t RngState::next_u64() {
    const std::uint64_t result = rotl(s[1] * 5ULL, 7) * 9ULL;
    const std::uint64_t t = s[1] << 17;
    s[2] ^= s[0];
    s[3] ^= s[1];
    s[1] ^= s[2];
    s[0] ^= s[3];
    s[2] ^= t;
    s[3] = rotl(s[3], 45);
    return result;
}

double RngState::uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t RngState::uniform_below(std::uint64_t bound) {
    if (bound == 0) throw std::invalid_argument("uniform_below: bound must be positive");
    const std::uint64_t threshold = -bound % bound; // rejection for unbiased draws
    for (;;) {
        const std::uint64_t x = next_u64();
        if (x >= threshold) return x % bound;
    }
}

double RngState::gauss() {
    if (has_spare) {
        has_spare = false;
        return spare;
    }
    const double u1 = 1.0 - uniform01(); // (0,1], keeps log finite
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare = r * std::sin(theta);
    has_spare = true;
    return r * std::cos(theta);
}

std::vector<double> gauss_sample(RngState& rng, int n) {
    if (n < 1) throw std::invalid_argument("gauss_sample: n must be >= 1");
    std::vector<double> out(n);
    for (int i = 0; i < n; ++i) out[i] = rng.gauss();
    return out;
}

} // namespace ijflow
