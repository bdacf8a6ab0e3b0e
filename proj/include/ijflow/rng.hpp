#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace ijflow {

// Deterministic xoshiro256** stream seeded through SplitMix64, with Box-Muller
// for Gaussian draws. Identical seed gives an identical stream; split(index)
// derives pairwise-distinct child streams.
struct RngState {
    std::uint64_t seed = 0;
    std::array<std::uint64_t, 4> s{};
    bool has_spare = false;
    double spare = 0.0;

    RngState() { reseed(0); }
    explicit RngState(std::uint64_t sd) { reseed(sd); }

    void reseed(std::uint64_t sd);
    RngState split(std::uint64_t index) const;

    std::uint64_t next_u64();

    // 53-bit uniform in [0,1)
    double uniform01();

    // uniform integer in [0, bound)
    std::uint64_t uniform_below(std::uint64_t bound);

    // standard normal via Box-Muller; second variate cached in-state
    double gauss();
};

std::uint64_t splitmix64(std::uint64_t& state);

std::vector<double> gauss_sample(RngState& rng, int n);

} // namespace ijflow
