#pragma once

#include <cstdint>
#include <random>

namespace drift {

// splitmix64 step; used both as a stand-alone mixer and to expand seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Seeded random stream.  Streams are derived from a (master seed, stream id)
// pair by hashing both through splitmix64, so walker k of a run always sees
// the same sequence no matter how many walkers run or in what order.
struct RngStream {
    std::mt19937_64 engine;

    explicit RngStream(std::uint64_t seed) : engine(seed) {}

    static RngStream derived(std::uint64_t master_seed, std::uint64_t stream_id) {
        std::uint64_t s = master_seed;
        std::uint64_t a = splitmix64(s);
        s = a ^ (stream_id + 0x632BE59BD9B4E019ULL);
        std::uint64_t b = splitmix64(s);
        return RngStream(b);
    }

    // uniform in [0,1)
    double u01() {
        return std::uniform_real_distribution<double>(0.0, 1.0)(engine);
    }

    // uniform integer in [0, n)
    std::uint64_t below(std::uint64_t n) {
        return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(engine);
    }

    double exponential(double rate) {
        return std::exponential_distribution<double>(rate)(engine);
    }
};

} // namespace drift
