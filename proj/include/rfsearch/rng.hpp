#pragma once

#include <array>
#include <cstddef>
#include <cstdint>

namespace rfsearch {

/// xoshiro256** seeded through splitmix64. Every draw used by the search is
/// derived from this generator, so runs are bit-reproducible across
/// standard libraries and the state can be checkpointed.
class Rng {
public:
    using State = std::array<std::uint64_t, 4>;

    explicit Rng(std::uint64_t seed = 0);

    std::uint64_t next();

    /// Uniform in [0, 1) with 53 bits of resolution.
    double uniform();
    double uniform(double lo, double hi);

    /// Uniform integer in [0, n). n must be positive.
    std::size_t below(std::size_t n);

    /// Standard normal via Box-Muller (cosine branch only, no cached value).
    double normal();

    const State& state() const { return state_; }
    void set_state(const State& s) { state_ = s; }

    bool operator==(const Rng&) const = default;

private:
    State state_{};
};

std::uint64_t splitmix64(std::uint64_t& x);

/// Order-sensitive seed combination; used to derive per-job streams.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

}  // namespace rfsearch
