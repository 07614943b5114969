#pragma once

#include <cstdint>
#include <random>

namespace fairsel {

/// Purpose tags used when deriving independent streams from one seed.
enum class StreamPurpose : std::uint64_t {
    Dgp = 1,
    History = 2,
    Pool = 3,
    Bootstrap = 4,
    MonteCarlo = 5,
    Test = 99,
};

/// SplitMix64 finalizer; bijective mixing of a 64-bit word.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Random stream keyed by (seed, replication, purpose, sub-index).
///
/// The key is hashed into the seed of a 64-bit Mersenne twister, so a stream
/// depends only on its key and never on how many other streams exist or the
/// order in which they are consumed. Replications can therefore run on any
/// thread in any order and still produce identical draws.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t replication, StreamPurpose purpose,
              std::uint64_t sub_index = 0)
        : engine_(derive_key(seed, replication, purpose, sub_index)) {}

    static std::uint64_t derive_key(std::uint64_t seed, std::uint64_t replication,
                                    StreamPurpose purpose, std::uint64_t sub_index) noexcept {
        std::uint64_t h = splitmix64(seed);
        h = splitmix64(h ^ replication);
        h = splitmix64(h ^ static_cast<std::uint64_t>(purpose));
        return splitmix64(h ^ sub_index);
    }

    /// Uniform on [0, 1).
    double uniform() { return std::generate_canonical<double, 53>(engine_); }

    double normal() { return normal_(engine_); }

    bool bernoulli(double p) { return uniform() < p; }

    /// Uniform index in [0, n). n must be positive.
    std::size_t index(std::size_t n) {
        return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
    }

    std::mt19937_64& engine() noexcept { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace fairsel
